import os
import logging
import requests

from lab import APP_NAME

PUSHOVER_URL = 'https://api.pushover.net/1/messages.json'
HIGH_PRIORITY = 1


def send_pushover_notification(title, message, url=None, url_title='Open run output', priority=0):
    """Send a push notification via Pushover. Returns True on success."""
    user_key = os.environ.get('PUSHOVER_USER_KEY')
    app_token = os.environ.get('PUSHOVER_APP_TOKEN')
    if not user_key or not app_token:
        logging.warning('Pushover not configured (PUSHOVER_USER_KEY/PUSHOVER_APP_TOKEN), skipping run notification')
        return False

    payload = {'token': app_token, 'user': user_key, 'title': title, 'message': message}
    if url:
        payload.update(url=url, url_title=url_title)
    if priority:
        payload['priority'] = priority

    try:
        response = requests.post(PUSHOVER_URL, data=payload, timeout=10)
        result = response.json()
    except Exception:
        logging.warning('Pushover notification for %r failed', title, exc_info=True)
        return False
    if result.get('status') != 1:
        logging.warning('Pushover rejected the notification: %s', result.get('errors') or response.text)
        return False
    return True


def run_summary(name, manifest):
    """(title, message) summarizing a finished run's verdicts."""
    verdicts = manifest.verdicts
    failed = [v['name'] for v in verdicts if not v['passed']]
    status = 'passed' if not failed else 'FAILED'
    title = f'{APP_NAME} {name}: {status}'
    lines = [f'{len(verdicts) - len(failed)}/{len(verdicts)} checks passed']
    if failed:
        lines.append('failed: ' + ', '.join(failed))
    if manifest.wall_clock is not None:
        lines.append(f'wall clock {manifest.wall_clock:.1f}s')
    return title, '\n'.join(lines)


def notify_run(name, manifest, out_dir=None):
    """Failed runs go out at high priority."""
    title, message = run_summary(name, manifest)
    url = f'file://{os.path.abspath(out_dir)}' if out_dir else None
    return send_pushover_notification(title, message, url, priority=0 if manifest.passed else HIGH_PRIORITY)
