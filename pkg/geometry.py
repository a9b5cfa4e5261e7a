"""Moment-map and fixed-locus geometry of the toric models.

Metric conventions: each factor carries the Kahler metric
ds^2 / (4 s (1 - s)) + s (1 - s) dtheta^2, so the Hamiltonian vector field
of the factor's moment coordinate has squared length s (1 - s) and the
constant Hamiltonians have none.
"""
import math
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

DEGENERACY_TOL = 1e-10
UNIT_TOL = 1e-12
PERIOD_TOL = 1e-9

INTERIOR_FIXED = 'InteriorFixed'
POLE_ONLY = 'PoleOnly'

BOTTOM = 0
TOP = 1


class DegenerateAt(ValueError):
    """The kernel Gram determinant vanishes: transversality fails at the point."""


class EmptyLocus(ValueError):
    """The ray R+ beta misses the moment polytope, or a component misses M_beta."""


class NotAPeriod(ValueError):
    """The fixed component does not lift into X(s0)."""


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Direction:
    beta: tuple
    in_cone: bool


@dataclass(frozen=True)
class MomentData:
    phi: np.ndarray
    phi_unit: np.ndarray
    xi: np.ndarray
    norm: float


@dataclass
class TransversalityReport:
    transverse: bool
    margin: float
    witnesses: list
    regular_value: bool
    segment: tuple


@dataclass(frozen=True)
class FixedComponent:
    poles: tuple           # ((factor, BOTTOM|TOP), ...) over PoleOnly factors
    f: int                 # complex dimension
    c: int                 # complex codimension
    phase_ok: bool
    rotation_angles: tuple  # ((factor, theta), ...)


@dataclass
class FixedLocusInfo:
    s0: np.ndarray
    factor_status: list
    components: list = field(default_factory=list)

    @property
    def lifted(self):
        return [comp for comp in self.components if comp.phase_ok]


def _vec(values, size, name):
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.shape != (size,):
        raise DimensionMismatch(f'{name} has {v.size} components, expected {size}')
    return v


def make_direction(model, beta):
    b = _vec(beta, model.r, 'beta')
    norm = float(np.linalg.norm(b))
    if norm == 0:
        raise ValueError('beta must be non-zero')
    b = b / norm
    return Direction(tuple(float(x) for x in b), ray_segment(model, b) is not None)


def _unit(model, beta):
    b = _vec(beta, model.r, 'beta')
    if abs(np.linalg.norm(b) - 1) > UNIT_TOL:
        raise ValueError(f'beta must be a unit vector, |beta| = {np.linalg.norm(b)!r}')
    return b


def moment_map(model, point):
    s = _vec(point, model.n_factors, 'point')
    phi = np.concatenate([model.shifts + s, model.constants])
    norm = float(np.linalg.norm(phi))
    unit = phi / norm
    # Xi is the dual of Phi_u under the standard inner product
    return MomentData(phi, unit, unit.copy(), norm)


def metric_gram(model, point):
    s = _vec(point, model.n_factors, 'point')
    diag = np.zeros(model.r)
    diag[:model.n_factors] = s * (1 - s)
    return np.diag(diag)


def kernel_basis(model, point):
    """Orthonormal basis (columns) of ker Phi(m); shape (r, r - 1)."""
    phi = moment_map(model, point).phi
    if model.r == 1:
        return np.zeros((1, 0))
    return null_space(phi[None, :])


def kernel_gram(model, point):
    basis = kernel_basis(model, point)
    return basis.T @ metric_gram(model, point) @ basis


def calD(model, point):
    """sqrt(det[v_k^T G v_l]) over an orthonormal basis of ker Phi(m)."""
    if model.r == 1:
        return 1.0
    det = float(np.linalg.det(kernel_gram(model, point)))
    if det <= DEGENERACY_TOL:
        raise DegenerateAt(f'kernel Gram determinant {det:.3e} at s={np.asarray(point).tolist()}')
    return math.sqrt(det)


def normal_fractions(model, point):
    """Per factor, the length of the normal part of a unit meridian step.

    The normal space of M_beta at m is J applied to the orbit directions of
    ker Phi(m); in the orthonormal frame of the factor meridians it is
    span(G^{1/2} B).
    """
    n = model.n_factors
    if model.r == 1:
        return np.zeros(n)
    g_half = np.sqrt(np.diag(metric_gram(model, point)))
    span = (g_half[:, None] * kernel_basis(model, point))[:n]
    q, sv, _ = np.linalg.svd(span, full_matrices=False)
    q = q[:, sv > 1e-14 * max(1.0, sv.max(initial=0.0))]
    return np.linalg.norm(q, axis=1)


def ray_segment(model, beta):
    """[mu_lo, mu_hi] with mu beta in P, or None when the ray misses P."""
    b = np.asarray(beta, dtype=float)
    n = model.n_factors
    if np.any(b <= 0):
        return None
    a = model.shifts.astype(float)
    lo = float(np.max(a / b[:n]))
    hi = float(np.min((a + 1) / b[:n]))
    if model.polytope.constants:
        pins = model.constants / b[n:]
        mu = float(pins[0])
        if np.any(np.abs(pins - mu) > 1e-12 * mu):
            return None
        lo, hi = max(lo, mu), min(hi, mu)
        if hi < lo - 1e-12 * mu:
            return None
        return mu, mu
    if hi < lo - 1e-12 * max(lo, 1.0):
        return None
    return lo, max(lo, hi)


def locus_points(model, beta, samples=33):
    """Moment coordinates of a uniform sample of M_beta (closed form: Phi is affine)."""
    b = np.asarray(beta, dtype=float)
    segment = ray_segment(model, b)
    if segment is None:
        raise EmptyLocus(f'the ray through beta={b.tolist()} misses the moment polytope')
    lo, hi = segment
    mus = np.array([lo]) if hi - lo <= 1e-14 * hi else np.linspace(lo, hi, samples)
    pts = np.clip(mus[:, None] * b[None, :model.n_factors] - model.shifts[None, :], 0.0, 1.0)
    # snap rounding residue onto the poles
    pts[pts < UNIT_TOL] = 0.0
    pts[pts > 1 - UNIT_TOL] = 1.0
    return pts


def _regular_value(model, point):
    """beta regular for Phi_u: rank of (I - u u^T) on the non-pole factor columns is r - 1."""
    if model.r == 1:
        return True
    s = np.asarray(point, dtype=float)
    u = moment_map(model, s).phi_unit
    proj = np.eye(model.r) - np.outer(u, u)
    free = [i for i in range(model.n_factors) if 0 < s[i] < 1]
    if not free:
        return False
    return int(np.linalg.matrix_rank(proj[:, free], tol=1e-10)) == model.r - 1


def check_transversality(model, beta, samples=33):
    b = _unit(model, beta)
    pts = locus_points(model, b, samples)
    margins = []
    regular = True
    for s in pts:
        if model.r == 1:
            margins.append(math.inf)
        else:
            lam_min = float(np.linalg.eigvalsh(kernel_gram(model, s))[0])
            margins.append(math.sqrt(max(lam_min, 0.0)))
        regular &= _regular_value(model, s)
    margin = min(margins)
    return TransversalityReport(margin > DEGENERACY_TOL, margin, [p.tolist() for p in pts],
                                bool(regular), ray_segment(model, b))


def _in_period_lattice(value, scale):
    return abs(math.remainder(value, 2 * math.pi)) <= PERIOD_TOL * max(1.0, scale)


def _wrap(angle):
    """Angle reduced to (-pi, pi]."""
    wrapped = math.remainder(angle, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def fixed_locus(model, s0):
    s0 = _vec(s0, model.r, 's0')
    n = model.n_factors
    scale = float(np.sum(np.abs(s0)))
    status = [INTERIOR_FIXED if _in_period_lattice(s0[i], abs(s0[i])) else POLE_ONLY for i in range(n)]
    pole_factors = [i for i in range(n) if status[i] == POLE_ONLY]
    constant_phase = float(np.dot(s0[n:], model.constants))

    info = FixedLocusInfo(s0, status)
    f = n - len(pole_factors)
    for choice in itertools.product((BOTTOM, TOP), repeat=len(pole_factors)):
        phase = constant_phase
        angles = []
        for i, pole in zip(pole_factors, choice):
            phase += s0[i] * (model.polytope.shifts[i] + pole)
            # weight +1 at the bottom pole, -1 at the top
            angles.append((i, _wrap(-s0[i] if pole == BOTTOM else s0[i])))
        info.components.append(FixedComponent(
            poles=tuple(zip(pole_factors, choice)),
            f=f,
            c=len(pole_factors),
            phase_ok=_in_period_lattice(phase, scale),
            rotation_angles=tuple(angles),
        ))
    return info


def component_at(model, info, point):
    """The fixed component containing a point, or None if the point is not fixed."""
    s = _vec(point, model.n_factors, 'point')
    poles = []
    for i, status in enumerate(info.factor_status):
        if status != POLE_ONLY:
            continue
        if s[i] == 0:
            poles.append((i, BOTTOM))
        elif s[i] == 1:
            poles.append((i, TOP))
        else:
            return None
    for comp in info.components:
        if comp.poles == tuple(poles):
            return comp
    return None


def linearization(model, component, s0=None):
    """(rotation angles, Poincare factor) of d phi_{-s0} normal to the component.

    The Poincare factor is the complex determinant prod (1 - e^{-i theta});
    the real determinant is its squared modulus.
    """
    if not component.phase_ok:
        raise NotAPeriod(f'component with poles {component.poles} does not lift into X(s0)')
    poincare = complex(1.0)
    for _, theta in component.rotation_angles:
        poincare *= 1 - np.exp(-1j * theta)
    return dict(component.rotation_angles), poincare


def real_poincare(poincare):
    return abs(poincare) ** 2


def rotation_matrix(thetas):
    """Block rotation on R^{2m} in (x_1..x_m, y_1..y_m) coordinates."""
    m = len(thetas)
    a = np.zeros((2 * m, 2 * m))
    for j, theta in enumerate(thetas):
        c, s = math.cos(theta), math.sin(theta)
        a[j, j], a[j, m + j] = c, -s
        a[m + j, j], a[m + j, m + j] = s, c
    return a


def omega0(v, w):
    m = len(v) // 2
    return float(np.dot(v[:m], w[m:]) - np.dot(v[m:], w[:m]))


def psi2(v, w):
    """psi_2(v, w) = -i omega_0(v, w) - |v - w|^2 / 2."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if v.shape != w.shape or v.ndim != 1 or len(v) % 2:
        raise DimensionMismatch(f'psi2 needs equal even dimensions, got {v.shape} and {w.shape}')
    return complex(-0.5 * float(np.sum((v - w) ** 2)), -omega0(v, w))


def period_gap(model, s0):
    """Distance from s0 to the nearest period, and that period.

    A period fixes some factors entirely (their s0_i in 2 pi Z) and sends the
    rest to poles p_i with sum (a_i + p_i) s0_i + sum c_j s0_j in 2 pi Z.
    For a fixed choice the two constraints act on disjoint coordinates, so
    the nearest point rounds each one separately.
    """
    s0 = _vec(s0, model.r, 's0')
    n = model.n_factors
    a = np.array(model.polytope.shifts, dtype=float)
    best, best_point = math.inf, None
    for interior in itertools.product((False, True), repeat=n):
        fixed = [i for i in range(n) if interior[i]]
        rest = [i for i in range(n) if not interior[i]]
        for poles in itertools.product((BOTTOM, TOP), repeat=len(rest)):
            point = s0.copy()
            for i in fixed:
                point[i] = 2 * math.pi * round(s0[i] / (2 * math.pi))
            u = np.zeros(model.r)
            for i, pole in zip(rest, poles):
                u[i] = a[i] + pole
            u[n:] = model.constants
            norm = float(np.linalg.norm(u))
            if norm > 0:
                value = float(np.dot(u, s0))
                target = 2 * math.pi * round(value / (2 * math.pi))
                point = point - (value - target) / norm ** 2 * u
            gap = float(np.linalg.norm(point - s0))
            if gap < best:
                best, best_point = gap, point
    return best, best_point
