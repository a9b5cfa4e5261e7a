import logging

import click

import reports
from commands import run_context, threads_option, tol_option
from kernels import smoothed_projector_diag
from scenario import ConfigError, load_scenario


@click.command('project')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='CSV file to write.')
@threads_option
@tol_option
def project_cmd(config_path, out_path, threads, tol):
    """Smoothed projector diagonal at every scenario point over the lambda grid."""
    scenario = load_scenario(config_path)
    ctx = run_context(threads, tol)
    if not scenario.points:
        raise ConfigError('/points', 'the scenario lists no points to evaluate at')
    model = scenario.model
    tol = ctx.tol if ctx.tol is not None else scenario.tol

    header = ['lam', 'point'] + [f's{i}' for i in range(model.n_factors)] + \
             ['re', 'im', 'radius', 'tail_bound', 'terms', 'abs_sum', 'rounding_floor']
    rows = []
    for lam in scenario.lambda_values():
        for index, point in enumerate(scenario.points):
            value, cert = smoothed_projector_diag(model, scenario.cutoff, scenario.beta, scenario.s0, lam,
                                                  point, tol, ctx.workers)
            rows.append([lam, index, *point, value.real, value.imag, cert.radius, cert.tail_bound,
                         cert.terms, cert.abs_sum, cert.rounding_floor])
        logging.info('lam=%.6g done', lam)
    reports.write_csv(out_path, header, rows)
    click.echo(f'{len(rows)} rows written to {out_path}')
