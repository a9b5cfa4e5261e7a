import click

import reports
from checks import CheckFailure, run_check
from commands import run_context, threads_option, tol_option
from scenario import load_scenario


@click.command('verify')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='Verdict JSON to write.')
@click.option('--check', 'only', multiple=True, help='Run only the named checks (repeatable).')
@threads_option
@tol_option
def verify_cmd(config_path, out_path, only, threads, tol):
    """Run the scenario's checks and write the verdict JSON only."""
    scenario = load_scenario(config_path)
    ctx = run_context(threads, tol)
    entries = [e for e in scenario.checks if not only or e['name'] in only]
    verdicts = [run_check(scenario, entry, ctx)[0] for entry in entries]
    reports.write_verdicts(out_path, verdicts)
    for v in verdicts:
        click.echo(f'{"PASS" if v.passed else "FAIL"}  {v.name}')
    if not all(v.passed for v in verdicts):
        raise CheckFailure(verdicts)
