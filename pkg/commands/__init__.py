import os

import click

from checks import RunContext
from utils import TOL_ENV, resolve_tol, resolve_workers

threads_option = click.option('--threads', type=click.IntRange(min=1), default=None,
                              help='Worker threads (falls back to LAB_THREADS, then 1).')
tol_option = click.option('--tol', type=click.FloatRange(min=0, min_open=True, max=1e-2), default=None,
                          help='Certificate tolerance (falls back to LAB_TOL, then the scenario).')


def run_context(threads, tol):
    """RunContext from the command-line options and the environment.

    An explicit --tol or LAB_TOL overrides the scenario's tol; otherwise the
    scenario's own value is used.
    """
    override = tol if tol is not None else (resolve_tol() if os.environ.get(TOL_ENV) else None)
    return RunContext(workers=resolve_workers(threads), tol=override)
