import json
import math

import click

import reports
from asymptotics import fit_power_law


@click.command('fit')
@click.argument('csv_path', type=click.Path(dir_okay=False))
@click.option('--x', 'x_column', default='lam', show_default=True, help='Abscissa column.')
@click.option('--y', 'y_column', default=None,
              help='Value column; defaults to "abs", or |re + i im| when the CSV has re/im columns.')
@click.option('--correction', is_flag=True, help='Fit an extra b/x term.')
@click.option('--out', 'out_path', default=None, type=click.Path(dir_okay=False), help='Write the report here.')
def fit_cmd(csv_path, x_column, y_column, correction, out_path):
    """Fit a power law to a CSV series and print the FitReport as JSON."""
    header, rows = reports.read_csv(csv_path)
    xs = reports.column(header, rows, x_column, csv_path)
    if y_column is None and 'abs' not in header and {'re', 'im'} <= set(header):
        ys = [math.hypot(re, im) for re, im in zip(reports.column(header, rows, 're', csv_path),
                                                   reports.column(header, rows, 'im', csv_path))]
    else:
        ys = reports.column(header, rows, y_column or 'abs', csv_path)
    report = fit_power_law(zip(xs, ys), correction=correction)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if out_path:
        reports.write_json(out_path, report.to_dict())
    click.echo(text)
