import logging

import click

import reports
from kernels import eigenvalue_cluster
from scenario import load_scenario


@click.command('spectrum')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--lam', type=click.FloatRange(min=0, min_open=True), required=True, help='Ray parameter lambda.')
@click.option('--radius', type=click.FloatRange(min=0), required=True, help='Cluster radius around lambda beta.')
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='CSV file to write.')
def spectrum_cmd(config_path, lam, radius, out_path):
    """Write the eigenvalue cluster around lambda beta with its cutoff weights."""
    scenario = load_scenario(config_path)
    model = scenario.model
    cluster = eigenvalue_cluster(model, scenario.beta, lam, radius, scenario.cutoff)
    header, rows = reports.cluster_rows(model, cluster)
    reports.write_csv(out_path, header, rows)
    logging.info('Wrote %d spectral points to %s', len(rows), out_path)
    click.echo(f'{len(rows)} points within {radius} of lambda beta')
