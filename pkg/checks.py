"""Named checks a scenario can request, each returning a Verdict and an optional series."""
import math
import logging
from dataclasses import dataclass, field

import numpy as np

import asymptotics
import geometry
import kernels
import toric_models
from utils import log_grid


class CheckFailure(RuntimeError):
    """One or more checks did not pass."""

    def __init__(self, verdicts):
        failed = [v.name for v in verdicts if not v.passed]
        super().__init__(f'{len(failed)} check(s) failed: {", ".join(failed)}')
        self.verdicts = verdicts


@dataclass
class Verdict:
    name: str
    scenario_digest: str
    measured: object
    predicted: object
    tolerance: object
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'name': self.name,
            'scenario_digest': self.scenario_digest,
            'measured': _plain(self.measured),
            'predicted': _plain(self.predicted),
            'tolerance': _plain(self.tolerance),
            'passed': bool(self.passed),
            'details': _plain(self.details),
        }


@dataclass
class Series:
    header: list
    rows: list


def _plain(value):
    """JSON-friendly copy: numpy scalars and arrays to Python, complex to [re, im]."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


@dataclass
class RunContext:
    workers: int = 1
    tol: float = None


def _point(scenario, params):
    index = params.get('point', 0)
    if not scenario.points:
        raise ValueError('this check needs at least one entry in "points"')
    return np.asarray(scenario.points[index], dtype=float)


def _tol(scenario, ctx):
    return ctx.tol if ctx.tol is not None else scenario.tol


def _grid(scenario, params):
    if 'lam_min' in params or 'lam_max' in params:
        return log_grid(params.get('lam_min', scenario.lambda_grid['min']),
                        params.get('lam_max', scenario.lambda_grid['max']),
                        params.get('points_per_decade', scenario.points_per_decade))
    return scenario.lambda_values()


def _diag_series(scenario, ctx, point, lams):
    model = scenario.model
    values, rows = [], []
    for lam in lams:
        value, cert = kernels.smoothed_projector_diag(model, scenario.cutoff, scenario.beta, scenario.s0, lam,
                                                      point, _tol(scenario, ctx), ctx.workers)
        values.append(value)
        rows.append([lam, value.real, value.imag, abs(value), cert.radius, cert.tail_bound, cert.rounding_floor])
        logging.debug('diag lam=%.6g value=%r', lam, value)
    return values, rows


DIAG_HEADER = ['lam', 're', 'im', 'abs', 'radius', 'tail_bound', 'rounding_floor']


def check_exponent(scenario, params, ctx):
    model = scenario.model
    point = _point(scenario, params)
    lams = _grid(scenario, params)
    values, rows = _diag_series(scenario, ctx, point, lams)
    fit = asymptotics.fit_power_law(zip(lams, values))
    expected = model.d + (1 - model.r) / 2
    tolerance = params.get('tolerance', 0.02)
    return (abs(fit.exponent - expected) <= tolerance, fit.exponent, expected, tolerance,
            {'fit': fit.to_dict(), 'point': point.tolist()}, Series(DIAG_HEADER, rows))


def check_coefficient(scenario, params, ctx):
    model = scenario.model
    point = _point(scenario, params)
    lam = params.get('lam', 1e4)
    prediction = asymptotics.predict_diag_leading(model, point, scenario.s0, scenario.beta, scenario.cutoff)
    value, cert = kernels.smoothed_projector_diag(model, scenario.cutoff, scenario.beta, scenario.s0, lam,
                                                  point, _tol(scenario, ctx), ctx.workers)
    ratio = value / prediction.value(lam)
    tolerance = params.get('tolerance', 0.03)
    details = {
        'lam': lam,
        'measured_value': value,
        'predicted_value': prediction.value(lam),
        'norm_phi': prediction.norm_phi,
        'calD': geometry.calD(model, point),
        'certificate': cert.to_dict(),
    }
    return abs(ratio - 1) <= tolerance, abs(ratio), 1.0, tolerance, details, None


def check_parity(scenario, params, ctx):
    """Relative deviation from the leading diagonal term decays like 1/lam."""
    model = scenario.model
    point = _point(scenario, params)
    lams = _grid(scenario, params)
    prediction = asymptotics.predict_diag_leading(model, point, scenario.s0, scenario.beta, scenario.cutoff)
    values, rows = _diag_series(scenario, ctx, point, lams)
    deviations = [abs(v / prediction.value(lam) - 1) for lam, v in zip(lams, values)]
    for row, dev in zip(rows, deviations):
        row.append(dev)
    fit = asymptotics.fit_power_law(zip(lams, deviations))
    expected = params.get('expected', -1.0)
    tolerance = params.get('tolerance', 0.2)
    return (abs(fit.exponent - expected) <= tolerance, fit.exponent, expected, tolerance,
            {'fit': fit.to_dict()}, Series(DIAG_HEADER + ['rel_deviation'], rows))


def _from_report(report):
    series = Series(report.header, report.rows) if report.rows is not None else None
    return report.passed, report.measured, report.predicted, report.tolerance, report.details, series


def check_profile(scenario, params, ctx):
    direction = params.get('direction', 'normal')
    default_tol = 0.05 if direction == 'normal' else 0.08
    report = asymptotics.verify_profile(
        scenario.model, scenario,
        direction=direction,
        grid=params.get('grid'),
        lam=params.get('lam', 1e4),
        tolerance=params.get('tolerance', default_tol),
        workers=ctx.workers,
    )
    return _from_report(report)


def check_rapid_decay(scenario, params, ctx):
    report = asymptotics.verify_rapid_decay(
        scenario.model, scenario,
        D=params.get('D', 1.0),
        delta=params.get('delta', 0.25),
        h0=params.get('h0', 0.3),
        lam_min=params.get('lam_min', scenario.lambda_grid['min']),
        lam_max=params.get('lam_max', scenario.lambda_grid['max']),
        workers=ctx.workers,
    )
    return _from_report(report)


def check_trace_leading(scenario, params, ctx):
    """Trace exponent over the grid and leading coefficient at one lam."""
    model = scenario.model
    cutoff = scenario.cutoff
    predictions = asymptotics.predict_trace_leading(model, scenario.s0, scenario.beta, cutoff)
    lams = _grid(scenario, params)
    tol = _tol(scenario, ctx)
    values, rows = [], []
    for lam in lams:
        value, cert = kernels.trace_ft(model, cutoff, scenario.beta, scenario.s0, lam, tol, ctx.workers)
        values.append(value)
        rows.append([lam, value.real, value.imag, abs(value), cert.radius, cert.tail_bound, cert.rounding_floor])
    fit = asymptotics.fit_power_law(zip(lams, values))
    expected = max(p.exponent for p in predictions)
    exponent_tol = params.get('exponent_tolerance', 0.02)

    lam = params.get('lam', 1e4)
    measured, _ = kernels.trace_ft(model, cutoff, scenario.beta, scenario.s0, lam, tol, ctx.workers)
    predicted = asymptotics.total_trace_prediction(predictions, lam)
    ratio = measured / predicted
    coefficient_tol = params.get('tolerance', 0.03)
    passed = abs(fit.exponent - expected) <= exponent_tol and abs(ratio - 1) <= coefficient_tol

    details = {
        'fit': fit.to_dict(),
        'lam': lam,
        'measured_value': measured,
        'predicted_value': predicted,
        'ratio': ratio,
        'components': [{'poles': list(p.component.poles), 'exponent': p.exponent,
                        'coefficient': p.coefficient, 'locus_integral': p.locus_integral}
                       for p in predictions],
    }
    if len(model.polytope.constants) == 1 and not np.any(scenario.s0) and expected == 0:
        poisson = kernels.poisson_trace_constant(model, cutoff)
        agreement = abs(predictions[0].coefficient / poisson - 1)
        details.update(poisson_constant=poisson, poisson_agreement=agreement)
        passed = passed and agreement <= params.get('poisson_tolerance', 0.01)
    return passed, fit.exponent, expected, exponent_tol, details, Series(DIAG_HEADER, rows)


def check_nonperiod_decay(scenario, params, ctx):
    lams = log_grid(params.get('lam_min', 1e2), params.get('lam_max', 1e4),
                    params.get('points_per_decade', scenario.points_per_decade))
    report = asymptotics.verify_nonperiod_decay(scenario.model, scenario.beta, scenario.s0, scenario.cutoff,
                                                lams, _tol(scenario, ctx), ctx.workers)
    return _from_report(report)


def check_counting(scenario, params, ctx):
    """Eigenvalue count in a ball of radius R grows like R^(d + 1)."""
    model = scenario.model
    radii = log_grid(params.get('r_min', 50.0), params.get('r_max', 500.0), params.get('points_per_decade', 8))
    counts = [toric_models.count_eigenvalues(model, R) for R in radii]
    fit = asymptotics.fit_power_law(zip(radii, counts), correction=True)
    expected = model.d + 1
    tolerance = params.get('tolerance', 0.05)
    return (abs(fit.exponent - expected) <= tolerance, fit.exponent, float(expected), tolerance,
            {'fit': fit.to_dict()}, Series(['radius', 'count'], [[R, c] for R, c in zip(radii, counts)]))


def check_cluster_growth(scenario, params, ctx):
    lams = log_grid(params.get('lam_min', 1e3), params.get('lam_max', 1e5), params.get('points_per_decade', 4))
    report = asymptotics.verify_cluster_growth(scenario.model, scenario.beta, params.get('radius', 10.0),
                                               lams, params.get('tolerance', 0.05))
    return _from_report(report)


def check_period_scan(scenario, params, ctx):
    direction = np.asarray(params.get('direction', scenario.beta), dtype=float)
    ts = np.linspace(params.get('t_min', 0.0), params.get('t_max', 2 * math.pi), params.get('samples', 64))
    report = asymptotics.scan_periods(scenario.model, scenario.beta, scenario.cutoff, params.get('lam', 1e3),
                                      direction, ts, params.get('gap', 0.3), params.get('threshold', 1e-6),
                                      _tol(scenario, ctx), ctx.workers)
    return _from_report(report)


def _lattice_period(model, rng):
    """A random period all of whose phases vanish: 2 pi Z per factor, 2 pi Z / c per constant."""
    n = model.n_factors
    s0 = np.empty(model.r)
    s0[:n] = 2 * math.pi * rng.integers(-3, 4, size=n)
    s0[n:] = 2 * math.pi * rng.integers(-3, 4, size=model.r - n) / model.constants
    return s0


def check_identities(scenario, params, ctx):
    """Level normalization, the period identity and worker-count determinism."""
    model = scenario.model
    rng = np.random.default_rng(scenario.seed)
    max_level = params.get('max_level', 200 if model.n_factors == 1 else 40)

    worst_level = 0.0
    for level in sorted({0, 1, 2, max_level, *rng.integers(0, max_level + 1, size=6).tolist()}):
        point = rng.uniform(0, 1, size=model.n_factors)
        brute = toric_models.level_diagonal_sum(model, level, point, brute=True)
        exact = toric_models.level_diagonal_sum(model, level)
        worst_level = max(worst_level, abs(brute / exact - 1))

    lam = params.get('lam', 1e2)
    tol = _tol(scenario, ctx)
    base, _ = kernels.trace_ft(model, scenario.cutoff, scenario.beta, np.zeros(model.r), lam, tol, ctx.workers)
    s0 = _lattice_period(model, rng)
    shifted, _ = kernels.trace_ft(model, scenario.cutoff, scenario.beta, s0, lam, tol, ctx.workers)
    expected = np.exp(-1j * lam * float(np.dot(scenario.beta, s0))) * base
    worst_period = abs(shifted - expected) / abs(base)

    point = _point(scenario, params) if scenario.points else np.full(model.n_factors, 0.5)
    threads = params.get('threads', 4)
    serial, _ = kernels.smoothed_projector_diag(model, scenario.cutoff, scenario.beta, scenario.s0, lam, point, tol, 1)
    threaded, _ = kernels.smoothed_projector_diag(model, scenario.cutoff, scenario.beta, scenario.s0, lam, point,
                                                  tol, threads)
    deterministic = serial == threaded

    level_tol = params.get('level_tolerance', 1e-12)
    period_tol = params.get('period_tolerance', 1e-12)
    passed = worst_level <= level_tol and worst_period <= period_tol and deterministic
    details = {
        'level_normalization_error': worst_level,
        'period_identity_error': worst_period,
        'period': s0,
        'deterministic': deterministic,
        'threads': threads,
    }
    return passed, max(worst_level, worst_period), 0.0, max(level_tol, period_tol), details, None


CHECKS = {
    'exponent': check_exponent,
    'coefficient': check_coefficient,
    'parity': check_parity,
    'profile': check_profile,
    'rapid_decay': check_rapid_decay,
    'trace_leading': check_trace_leading,
    'nonperiod_decay': check_nonperiod_decay,
    'counting': check_counting,
    'cluster_growth': check_cluster_growth,
    'period_scan': check_period_scan,
    'identities': check_identities,
}


def run_check(scenario, entry, ctx=None):
    """Run one configured check; returns (Verdict, Series or None)."""
    ctx = ctx or RunContext()
    name = entry['name']
    params = entry.get('params', {})
    logging.info('Running check %s', name)
    passed, measured, predicted, tolerance, details, series = CHECKS[name](scenario, params, ctx)
    verdict = Verdict(name, scenario.digest, measured, predicted, tolerance, bool(passed), details)
    if verdict.passed:
        logging.info('Check %s passed (measured %s, predicted %s)', name, measured, predicted)
    else:
        logging.warning('Check %s FAILED (measured %s, predicted %s, tolerance %s)',
                        name, measured, predicted, tolerance)
    return verdict, series


def run_checks(scenario, ctx=None):
    """All configured checks in config order."""
    return [run_check(scenario, entry, ctx) for entry in scenario.checks]
