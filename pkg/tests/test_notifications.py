import notifications
from lab import APP_NAME
import reports


class _Response:
    def __init__(self, payload):
        self._payload = payload
        self.text = str(payload)

    def json(self):
        return self._payload


def _manifest(*results):
    manifest = reports.RunManifest(config_digest='0' * 64, app_version='1.0.0')
    manifest.verdicts = [{'name': name, 'passed': passed} for name, passed in results]
    manifest.wall_clock = 12.34
    return manifest


def test_summary_lists_failures():
    title, message = notifications.run_summary('cp1', _manifest(('exponent', True), ('counting', False)))
    assert title == f'{APP_NAME} cp1: FAILED'
    assert message.splitlines() == ['1/2 checks passed', 'failed: counting', 'wall clock 12.3s']


def test_summary_all_passed():
    title, message = notifications.run_summary('cp1', _manifest(('exponent', True)))
    assert title.endswith('passed')
    assert 'failed' not in message


def test_skips_without_credentials(monkeypatch):
    monkeypatch.delenv('PUSHOVER_USER_KEY', raising=False)
    monkeypatch.delenv('PUSHOVER_APP_TOKEN', raising=False)

    def fail(*args, **kwargs):
        raise AssertionError('should not post')

    monkeypatch.setattr(notifications.requests, 'post', fail)
    assert notifications.send_pushover_notification('t', 'm') is False


def test_posts_payload(monkeypatch, tmp_path):
    monkeypatch.setenv('PUSHOVER_USER_KEY', 'user')
    monkeypatch.setenv('PUSHOVER_APP_TOKEN', 'token')
    sent = {}

    def post(url, data, timeout):
        sent.update(url=url, data=data)
        return _Response({'status': 1})

    monkeypatch.setattr(notifications.requests, 'post', post)
    assert notifications.notify_run('cp1', _manifest(('exponent', True)), str(tmp_path))
    assert sent['url'] == notifications.PUSHOVER_URL
    assert sent['data']['token'] == 'token'
    assert sent['data']['url'].startswith('file://')
    assert sent['data']['url_title'] == 'Open run output'


def test_rejected_notification(monkeypatch):
    monkeypatch.setenv('PUSHOVER_USER_KEY', 'user')
    monkeypatch.setenv('PUSHOVER_APP_TOKEN', 'token')
    monkeypatch.setattr(notifications.requests, 'post',
                        lambda url, data, timeout: _Response({'status': 0, 'errors': ['bad token']}))
    assert notifications.send_pushover_notification('t', 'm') is False


def test_network_error_is_swallowed(monkeypatch):
    monkeypatch.setenv('PUSHOVER_USER_KEY', 'user')
    monkeypatch.setenv('PUSHOVER_APP_TOKEN', 'token')

    def boom(url, data, timeout):
        raise notifications.requests.ConnectionError('offline')

    monkeypatch.setattr(notifications.requests, 'post', boom)
    assert notifications.send_pushover_notification('t', 'm') is False


def test_failed_run_is_high_priority(monkeypatch):
    monkeypatch.setenv('PUSHOVER_USER_KEY', 'user')
    monkeypatch.setenv('PUSHOVER_APP_TOKEN', 'token')
    sent = {}

    def post(url, data, timeout):
        sent.update(data)
        return _Response({'status': 1})

    monkeypatch.setattr(notifications.requests, 'post', post)
    assert notifications.notify_run('cp1', _manifest(('exponent', False)))
    assert sent['priority'] == notifications.HIGH_PRIORITY
    assert 'url' not in sent
