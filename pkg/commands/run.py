import os
import time
import logging

import click

import reports
from checks import CheckFailure, run_check
from lab import APP_VERSION
from commands import run_context, threads_option, tol_option
from notifications import notify_run
from scenario import load_scenario


def _series_name(name, taken):
    filename = f'{name}.csv'
    index = 2
    while filename in taken:
        filename = f'{name}_{index}.csv'
        index += 1
    taken.add(filename)
    return filename


def run_scenario(config_path, out_dir, ctx):
    """Execute every configured check and write its artifacts; returns (manifest, scenario, verdicts)."""
    scenario = load_scenario(config_path)
    os.makedirs(out_dir, exist_ok=True)
    manifest = reports.RunManifest(scenario.digest, APP_VERSION)
    started = time.monotonic()

    verdicts = []
    taken = set()
    for entry in scenario.checks:
        verdict, series = run_check(scenario, entry, ctx)
        verdicts.append(verdict)
        if series is not None:
            path = os.path.join(out_dir, _series_name(entry['name'], taken))
            reports.write_csv(path, series.header, series.rows)
            manifest.add_file(path)

    verdict_path = reports.write_verdicts(os.path.join(out_dir, 'verdicts.json'), verdicts)
    manifest.add_file(verdict_path)
    manifest.verdicts = [v.to_dict() for v in verdicts]
    manifest.wall_clock = time.monotonic() - started
    manifest.write(out_dir)
    logging.info('Run of %s finished in %.1fs: %d/%d checks passed', config_path, manifest.wall_clock,
                 sum(v.passed for v in verdicts), len(verdicts))
    return manifest, scenario, verdicts


@click.command('run')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False), help='Output directory.')
@threads_option
@tol_option
@click.option('--notify', is_flag=True, help='Send the verdict summary via Pushover.')
def run_cmd(config_path, out_dir, threads, tol, notify):
    """Run every check a scenario requests and write CSV, verdicts and manifest."""
    manifest, scenario, verdicts = run_scenario(config_path, out_dir, run_context(threads, tol))
    if notify:
        notify_run(scenario.name or os.path.basename(config_path), manifest, out_dir)
    for v in verdicts:
        click.echo(f'{"PASS" if v.passed else "FAIL"}  {v.name}  measured={v.to_dict()["measured"]}')
    if not manifest.passed:
        raise CheckFailure(verdicts)
