import logging

import click

import reports
from asymptotics import decay_verdict
from commands import run_context, threads_option, tol_option
from kernels import trace_ft
from scenario import load_scenario


@click.command('trace')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='CSV file to write.')
@threads_option
@tol_option
def trace_cmd(config_path, out_path, threads, tol):
    """Directional Fourier transform of the trace over the lambda grid.

    The last column flags samples lying under the lam^-5 decay envelope
    started at the first sample (or under their rounding floor).
    """
    scenario = load_scenario(config_path)
    ctx = run_context(threads, tol)
    model = scenario.model
    tol = ctx.tol if ctx.tol is not None else scenario.tol

    lams = scenario.lambda_values()
    values, rows, floors = [], [], []
    for lam in lams:
        value, cert = trace_ft(model, scenario.cutoff, scenario.beta, scenario.s0, lam, tol, ctx.workers)
        values.append(value)
        floors.append(cert.rounding_floor)
        rows.append([lam, value.real, value.imag, cert.radius, cert.tail_bound, cert.terms, cert.abs_sum,
                     cert.rounding_floor])
        logging.info('lam=%.6g |trace|=%.6g', lam, abs(value))
    verdict = decay_verdict(lams, values, floors)
    for row, under in zip(rows, verdict['under_envelope']):
        row.append(int(under))
    header = ['lam', 're', 'im', 'radius', 'tail_bound', 'terms', 'abs_sum', 'rounding_floor', 'under_envelope']
    reports.write_csv(out_path, header, rows)
    click.echo(f'{len(rows)} rows written to {out_path}')
