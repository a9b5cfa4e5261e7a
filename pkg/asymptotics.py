"""Leading-term predictions, power-law fits and decay verdicts."""
import math
import logging
from dataclasses import dataclass, field

import numpy as np

import geometry
import kernels
import toric_models
from utils import log_grid

DECAY_EXPONENT = -5.0
SIMPSON_RTOL = 1e-8


class DegenerateFit(ValueError):
    """Too few samples, or magnitudes that are zero, negative or not finite."""


class IsAPeriod(ValueError):
    """s0 has a fixed component that lifts, so the trace does not decay there."""


@dataclass
class Prediction:
    exponent: float
    coefficient: complex
    phase_rate: float = 0.0                      # <beta, s0>
    norm_phi: float = None
    rotation_angles: dict = field(default_factory=dict)
    normal_fraction: np.ndarray = None
    component: object = None
    locus_integral: float = None
    profile_value: complex = 1.0

    def value(self, lam):
        return complex(np.exp(-1j * lam * self.phase_rate) * self.coefficient * lam ** self.exponent)

    def profile(self, w=None, n=0.0):
        """exp([psi2(Aw, w) - 2 |n|^2] / |Phi|) for w over the rotated pole planes."""
        thetas = list(self.rotation_angles.values())
        exponent = -2.0 * n * n
        if w is not None and len(w):
            w = np.asarray(w, dtype=float)
            a = geometry.rotation_matrix(thetas)
            exponent = exponent + geometry.psi2(a @ w, w)
        return complex(np.exp(exponent / self.norm_phi))

    def meridian_profile(self, factor, h):
        """Profile for a meridian step of rescaled length h along one factor."""
        if factor in self.rotation_angles:
            w = np.zeros(2 * len(self.rotation_angles))
            w[list(self.rotation_angles).index(factor)] = h
            return self.profile(w, 0.0)
        return self.profile(None, h * float(self.normal_fraction[factor]))


@dataclass
class FitReport:
    exponent: float
    coefficient: float
    r_squared: float
    stability: float
    samples: int
    correction: float = None

    def to_dict(self):
        return {
            'exponent': self.exponent,
            'coefficient': self.coefficient,
            'r_squared': self.r_squared,
            'stability': self.stability,
            'samples': self.samples,
            'correction': self.correction,
        }


@dataclass
class CheckReport:
    passed: bool
    measured: object
    predicted: object
    tolerance: object
    details: dict = field(default_factory=dict)
    header: list = None
    rows: list = None


def _locate(model, point, s0, beta):
    """Fixed component of the locus point, with its Poincare data."""
    moment = geometry.moment_map(model, point)
    if np.linalg.norm(moment.phi_unit - np.asarray(beta, dtype=float)) > 1e-9:
        raise geometry.EmptyLocus(f'point {np.asarray(point).tolist()} is not on M_beta')
    info = geometry.fixed_locus(model, s0)
    component = geometry.component_at(model, info, point)
    if component is None:
        raise geometry.NotAPeriod(f'point {np.asarray(point).tolist()} is not fixed by s0={np.asarray(s0).tolist()}')
    angles, poincare = geometry.linearization(model, component, s0)
    return moment, component, angles, poincare


def predict_diag_leading(model, point, s0, beta, cutoff, w=None, n_arclength=0.0, n_factor=None):
    """Leading term of S(lam beta, s0, x, x) at a point of M_beta(s0).

    With w or a normal meridian displacement, `profile_value` holds the
    Gaussian factor at that rescaled displacement.
    """
    moment, component, angles, _ = _locate(model, point, s0, beta)
    norm = moment.norm
    exponent = model.d + (1 - model.r) / 2
    dval = geometry.calD(model, point)
    coefficient = (2 ** ((model.r + 1) / 2) * math.pi / norm
                   * (1 / (math.pi * norm)) ** exponent * cutoff.chi0 / dval)
    prediction = Prediction(
        exponent=exponent,
        coefficient=complex(coefficient),
        phase_rate=float(np.dot(beta, s0)),
        norm_phi=norm,
        rotation_angles=angles,
        normal_fraction=geometry.normal_fractions(model, point),
        component=component,
    )
    n = 0.0
    if n_factor is not None:
        n = n_arclength * float(prediction.normal_fraction[n_factor])
    prediction.profile_value = prediction.profile(w, n)
    return prediction


def _component_segment(model, component, beta):
    """Range of the ray parameter mu over which mu beta lies on the component."""
    b = np.asarray(beta, dtype=float)
    segment = geometry.ray_segment(model, b)
    if segment is None:
        return None
    n = model.n_factors
    pins = [(model.polytope.shifts[i] + pole) / b[i] for i, pole in component.poles]
    pins += list(model.constants / b[n:])
    if not pins:
        return segment
    mu = pins[0]
    if any(abs(p - mu) > 1e-9 * mu for p in pins):
        return None
    lo, hi = segment
    if mu < lo - 1e-9 * mu or mu > hi + 1e-9 * mu:
        return None
    return mu, mu


def _locus_density(model, component, beta, mu, pinned):
    """|Phi|^-(f + 2 - r) / D times the volume density of M_beta(s0)_j at mu beta."""
    b = np.asarray(beta, dtype=float)
    n = model.n_factors
    s = np.clip(mu * b[:n] - model.shifts, 0.0, 1.0)
    g = s * (1 - s)
    f = component.f
    pole_factors = {i for i, _ in component.poles}
    interior = [i for i in range(n) if i not in pole_factors]
    if model.r == 1:
        dval = 1.0
    else:
        det = float(np.linalg.det(geometry.kernel_gram(model, s)))
        if det <= 0:
            raise geometry.DegenerateAt(f'kernel Gram degenerates at mu={mu}')
        dval = math.sqrt(det)
    if pinned:
        density = (2 * math.pi) ** f * math.prod(math.sqrt(g[i]) for i in interior)
    else:
        total = sum(b[i] ** 2 * math.prod(g[j] for j in range(n) if j != i) for i in range(n))
        density = (2 * math.pi) ** f * 0.5 * math.sqrt(total)
    return mu ** -(f + 2 - model.r) * density / dval


def _simpson(func, lo, hi):
    """Composite Simpson with interval doubling until the relative change drops below 1e-8."""
    # endpoints can sit on a box corner where the integrand is 0/0
    inset = 1e-12 * (hi - lo)
    lo, hi = lo + inset, hi - inset
    intervals = 16
    previous = None
    while intervals <= 1 << 14:
        x = np.linspace(lo, hi, intervals + 1)
        y = np.array([func(v) for v in x])
        h = (hi - lo) / intervals
        value = h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())
        if previous is not None and abs(value - previous) <= SIMPSON_RTOL * abs(value):
            return float(value)
        previous = value
        intervals *= 2
    logging.warning('Simpson quadrature stopped before reaching relative change %g', SIMPSON_RTOL)
    return float(previous)


def locus_integral(model, component, beta):
    """Integral of |Phi|^-(f + 2 - r) / D over M_beta(s0)_j; None if the component misses M_beta."""
    segment = _component_segment(model, component, beta)
    if segment is None:
        return None
    lo, hi = segment
    if hi - lo <= 1e-14 * hi:
        return _locus_density(model, component, beta, lo, pinned=True)
    return _simpson(lambda mu: _locus_density(model, component, beta, mu, pinned=False), lo, hi)


def predict_trace_leading(model, s0, beta, cutoff):
    """One leading term of the trace Fourier transform per lifted component meeting M_beta."""
    info = geometry.fixed_locus(model, s0)
    predictions = []
    for component in info.lifted:
        integral = locus_integral(model, component, beta)
        if integral is None:
            continue
        _, poincare = geometry.linearization(model, component, s0)
        exponent = component.f + 1 - model.r
        coefficient = (2 * math.pi / poincare) * math.pi ** -exponent * cutoff.chi0 * integral
        predictions.append(Prediction(
            exponent=float(exponent),
            coefficient=complex(coefficient),
            phase_rate=float(np.dot(beta, s0)),
            rotation_angles=dict(component.rotation_angles),
            component=component,
            locus_integral=integral,
        ))
    if not predictions:
        raise geometry.EmptyLocus(f'no lifted fixed component of s0={np.asarray(s0).tolist()} meets M_beta')
    return predictions


def total_trace_prediction(predictions, lam):
    return sum(p.value(lam) for p in predictions)


def _lstsq(design, y):
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef


def fit_power_law(samples, correction=False):
    """Least-squares fit of log|value| = log C + alpha log lam (+ b / lam).

    stability is the exponent difference between fits on the two halves of
    the grid.
    """
    samples = list(samples)
    if len(samples) < 6:
        raise DegenerateFit(f'need at least 6 samples, got {len(samples)}')
    lam = np.array([float(s[0]) for s in samples])
    mags = np.array([abs(s[1]) for s in samples], dtype=float)
    if np.any(lam <= 0) or np.any(~np.isfinite(mags)) or np.any(mags <= 0):
        raise DegenerateFit('power-law fit needs positive abscissae and non-zero finite magnitudes')
    x = np.log(lam)
    y = np.log(mags)

    def design(idx):
        cols = [np.ones(len(idx)), x[idx]]
        if correction:
            cols.append(1.0 / lam[idx])
        return np.column_stack(cols)

    every = np.arange(len(x))
    coef = _lstsq(design(every), y)
    residual = y - design(every) @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1 - float(np.sum(residual ** 2)) / ss_tot))

    half = len(x) // 2
    first, second = every[:half], every[half:]
    stability = abs(_lstsq(design(first), y[first])[1] - _lstsq(design(second), y[second])[1])
    return FitReport(
        exponent=float(coef[1]),
        coefficient=float(np.exp(coef[0])),
        r_squared=r_squared,
        stability=float(stability),
        samples=len(x),
        correction=float(coef[2]) if correction else None,
    )


def decay_verdict(lams, values, floors, max_exponent=DECAY_EXPONENT):
    """Floor-aware decay test of a series.

    Samples at or below their rounding floor (exact zeros included) count as
    decayed. With three or more samples above the floor their log-log slope
    must not exceed max_exponent; every sample must also sit under the
    envelope |v_0| (lam/lam_0)^max_exponent or under its floor.
    """
    lams = np.asarray(lams, dtype=float)
    mags = np.abs(np.asarray(values))
    floors = np.asarray(floors, dtype=float)
    above = (mags > floors) & (mags > 0)
    envelope = mags[0] * (lams / lams[0]) ** max_exponent
    under = (mags <= envelope * (1 + 1e-9)) | ~above
    result = {'samples_above_floor': int(above.sum()), 'under_envelope': under.tolist()}
    if above.sum() >= 3:
        slope = float(np.polyfit(np.log(lams[above]), np.log(mags[above]), 1)[0])
        result.update(exponent=slope, resolved_to_floor=False,
                      passed=bool(slope <= max_exponent and under.all()))
    else:
        result.update(exponent=None, resolved_to_floor=True, passed=bool(under.all()))
    return result


def _step_sign(point, factor):
    """Meridian direction pointing into the chart."""
    return 1.0 if point[factor] < 0.5 else -1.0


def _normal_factor(model, point):
    fractions = geometry.normal_fractions(model, point)
    factor = int(np.argmax(fractions))
    if fractions[factor] <= 0:
        raise ValueError('M_beta has no normal direction at this point (r = 1 or degenerate)')
    return factor, float(fractions[factor])


def verify_rapid_decay(model, scenario, D=1.0, delta=0.25, h0=0.3, lam_min=1e3, lam_max=1e5,
                       workers=1):
    """Decay of the diagonal at a fixed offset h0 from M_beta, envelope at offset D lam^(delta - 1/2)."""
    if not 0 < delta < 0.5:
        raise ValueError(f'delta must lie in (0, 1/2), got {delta}')
    point = scenario.points[0]
    beta, s0, cutoff, tol = scenario.beta, scenario.s0, scenario.cutoff, scenario.tol
    factor, _ = _normal_factor(model, point)
    sign = _step_sign(point, factor)
    lams = log_grid(lam_min, lam_max, scenario.points_per_decade)

    rows, fixed, fixed_floor, scaled, scaled_floor, control = [], [], [], [], [], []
    displaced = toric_models.meridian_point(model, factor, point, sign * h0)
    for lam in lams:
        offset = D * lam ** (delta - 0.5)
        near = toric_models.meridian_point(model, factor, point, sign * offset)
        v_fixed, c_fixed = kernels.smoothed_projector_diag(model, cutoff, beta, s0, lam, displaced, tol, workers)
        v_scaled, c_scaled = kernels.smoothed_projector_diag(model, cutoff, beta, s0, lam, near, tol, workers)
        v_zero, _ = kernels.smoothed_projector_diag(model, cutoff, beta, s0, lam, point, tol, workers)
        fixed.append(v_fixed)
        fixed_floor.append(c_fixed.rounding_floor)
        scaled.append(v_scaled)
        scaled_floor.append(c_scaled.rounding_floor)
        control.append(v_zero)
        rows.append([lam, abs(v_fixed), c_fixed.rounding_floor, c_fixed.radius, c_fixed.tail_bound, offset,
                     abs(v_scaled), c_scaled.rounding_floor, c_scaled.radius, c_scaled.tail_bound, abs(v_zero)])

    fixed_result = decay_verdict(lams, fixed, fixed_floor)

    mags = np.abs(np.array(scaled))
    usable = (mags > np.array(scaled_floor)) & (mags > 0)
    if usable.sum() >= 2:
        slope = float(np.polyfit(lams[usable] ** (2 * delta), np.log(mags[usable]), 1)[0])
        envelope_ok = slope < 0
    else:
        slope, envelope_ok = None, True

    control_fit = fit_power_law(zip(lams, control))
    expected = model.d + (1 - model.r) / 2
    control_ok = abs(control_fit.exponent - expected) <= 0.05

    logging.info('rapid decay: fixed exponent %s, envelope slope %s, control exponent %.4f',
                 fixed_result['exponent'], slope, control_fit.exponent)
    return CheckReport(
        passed=bool(fixed_result['passed'] and envelope_ok and control_ok),
        measured=fixed_result['exponent'],
        predicted=DECAY_EXPONENT,
        tolerance=None,
        details={
            'factor': factor,
            'h0': h0,
            'fixed_offset': fixed_result,
            'envelope_slope': slope,
            'envelope_ok': envelope_ok,
            'control_exponent': control_fit.exponent,
            'control_expected': expected,
        },
        header=['lam', 'abs_fixed', 'floor_fixed', 'radius_fixed', 'tail_fixed', 'offset_scaled',
                'abs_scaled', 'floor_scaled', 'radius_scaled', 'tail_scaled', 'abs_on_locus'],
        rows=rows,
    )


def verify_profile(model, scenario, direction='normal', grid=None, lam=1e4, tolerance=0.05, workers=1):
    """|S(y_lam)/S(x)| against the predicted Gaussian along a meridian step of h / sqrt(lam)."""
    grid = list(np.linspace(0.0, 2.0, 9) if grid is None else grid)
    point = scenario.points[0]
    beta, s0, cutoff, tol = scenario.beta, scenario.s0, scenario.cutoff, scenario.tol
    prediction = predict_diag_leading(model, point, s0, beta, cutoff)
    if direction == 'normal':
        factor, _ = _normal_factor(model, point)
    elif direction == 'rotation':
        if not prediction.rotation_angles:
            raise ValueError('no rotated pole factor at this point; use direction "normal"')
        factor = next(iter(prediction.rotation_angles))
    else:
        raise ValueError(f'unknown profile direction {direction!r}')
    sign = _step_sign(point, factor)

    base, _ = kernels.smoothed_projector_diag(model, cutoff, beta, s0, lam, point, tol, workers)
    rows = []
    worst = 0.0
    for h in grid:
        y = toric_models.meridian_point(model, factor, point, sign * h / math.sqrt(lam))
        value, cert = kernels.smoothed_projector_diag(model, cutoff, beta, s0, lam, y, tol, workers)
        ratio = abs(value / base)
        predicted = abs(prediction.meridian_profile(factor, h))
        error = abs(ratio / predicted - 1)
        worst = max(worst, error)
        rows.append([h, ratio, predicted, error, cert.radius, cert.tail_bound])
    return CheckReport(
        passed=bool(worst <= tolerance),
        measured=worst,
        predicted=0.0,
        tolerance=tolerance,
        details={'direction': direction, 'factor': factor, 'lam': lam},
        header=['h', 'ratio', 'predicted', 'rel_error', 'radius', 'tail_bound'],
        rows=rows,
    )


def verify_nonperiod_decay(model, beta, s0, cutoff, lams=None, tol=kernels.DEFAULT_TOL, workers=1):
    info = geometry.fixed_locus(model, s0)
    if info.lifted:
        raise IsAPeriod(f's0={np.asarray(s0).tolist()} has a lifted fixed component')
    lams = log_grid(1e2, 1e4, 12) if lams is None else np.asarray(lams, dtype=float)
    gap, nearest = geometry.period_gap(model, s0)
    mass = cutoff.chi(np.asarray(s0) - nearest)

    values, floors, rows = [], [], []
    for lam in lams:
        value, cert = kernels.trace_ft(model, cutoff, beta, s0, lam, tol, workers)
        values.append(value)
        floors.append(cert.rounding_floor)
        rows.append([lam, value.real, value.imag, abs(value), cert.radius, cert.tail_bound, cert.rounding_floor])
    result = decay_verdict(lams, values, floors)
    for row, under in zip(rows, result['under_envelope']):
        row.append(int(under))
    if mass > 1e-12:
        logging.warning('cutoff mass %.3e at the nearest period (gap %.3f): the trace will not decay', mass, gap)
    return CheckReport(
        passed=result['passed'],
        measured=result['exponent'],
        predicted=DECAY_EXPONENT,
        tolerance=None,
        details={'period_gap': gap, 'nearest_period': nearest.tolist(), 'cutoff_mass_at_gap': mass, **result},
        header=['lam', 're', 'im', 'abs', 'radius', 'tail_bound', 'rounding_floor', 'under_envelope'],
        rows=rows,
    )


def scan_periods(model, beta, cutoff, lam, direction, ts, gap=0.3, threshold=1e-6, tol=kernels.DEFAULT_TOL,
                 workers=1):
    """|trace_ft| along s0 = t u: suppressed wherever s0 is at least `gap` from every period."""
    u = np.asarray(direction, dtype=float)
    reference, _ = kernels.trace_ft(model, cutoff, beta, np.zeros(model.r), lam, tol, workers)
    scale = abs(reference)
    rows = []
    worst = 0.0
    for t in ts:
        s0 = t * u
        value, cert = kernels.trace_ft(model, cutoff, beta, s0, lam, tol, workers)
        distance, _ = geometry.period_gap(model, s0)
        relative = abs(value) / scale
        if distance >= gap:
            worst = max(worst, relative)
        rows.append([t, distance, value.real, value.imag, relative, cert.radius, cert.tail_bound])
    return CheckReport(
        passed=bool(worst <= threshold),
        measured=worst,
        predicted=0.0,
        tolerance=threshold,
        details={'lam': lam, 'gap': gap, 'reference': abs(reference)},
        header=['t', 'period_gap', 're', 'im', 'relative_abs', 'radius', 'tail_bound'],
        rows=rows,
    )


def verify_cluster_growth(model, beta, radius=10.0, lams=None, tolerance=0.05):
    """Spectral points within `radius` of lam beta grow like lam^(d + 1 - r)."""
    lams = log_grid(1e3, 1e5, 6) if lams is None else np.asarray(lams, dtype=float)
    b = np.asarray(beta, dtype=float)
    counts = [toric_models.count_in_ball(model, lam * b, radius) for lam in lams]
    expected = model.d + 1 - model.r
    fit = fit_power_law(zip(lams, counts))
    return CheckReport(
        passed=bool(abs(fit.exponent - expected) <= tolerance),
        measured=fit.exponent,
        predicted=float(expected),
        tolerance=tolerance,
        details={'fit': fit.to_dict(), 'radius': radius},
        header=['lam', 'count'],
        rows=[[lam, count] for lam, count in zip(lams, counts)],
    )
