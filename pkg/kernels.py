"""Certified spectral sums over the joint spectrum.

Fourier convention: chat(xi) = integral chi(s) exp(-i <xi, s>) ds. Every sum
runs over the spectral points inside a ball around lambda * beta whose radius
comes from tail_radius(); the omitted mass is bounded by shells of the ball
times a polynomial count of the points they can contain.

Summation order is fixed: points of one level are accumulated in
lexicographic offset order (np.bincount adds sequentially), then the
per-level partial sums are combined by utils.pairwise_sum. Splitting the
levels across workers therefore never changes a single bit of the result.

The Bump transform is integrated along the shifted contour
z = t - i(1 - t), 0 <= t <= 1, on which exp(-i rho z) carries the factor
exp(-rho (1 - t)). The same contour gives the rigorous envelope its
certificates are built from.
"""
import math
import logging
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.special import gamma, logsumexp

import toric_models
from geometry import DimensionMismatch
from utils import DEFAULT_TOL, pairwise_sum, parallel_map

GAUSSIAN = 'gaussian'
BUMP = 'bump'

BUMP_PANELS = 100          # 16-point Gauss-Legendre panels in log(1 - t)
BUMP_TAU_MIN = 1e-4        # the bump is below exp(-2500) closer to the boundary
BUMP_INNER_NODES = 200     # nodes of the marginal integral for r >= 2
BUMP_FINE_STEP = 0.025
BUMP_FINE_END = 64.0
BUMP_STEP = 0.1
BUMP_RANGE = 4096.0        # largest |xi| tabulated for the unit bump
BOUND_CELLS = 8000
BOUND_POINTS = 1400
BOUND_RHO_END = 1e6        # the unit-bump envelope underflows well before this


class ToleranceUnreachable(ValueError):
    """No radius inside the tabulated range brings the tail below the requested tolerance."""


@dataclass(frozen=True)
class Cutoff:
    kind: str
    width: float   # sigma for Gaussian, epsilon for Bump
    r: int

    @property
    def chi0(self):
        return 1.0 if self.kind == GAUSSIAN else math.exp(-1.0)

    def chi(self, s):
        s = np.asarray(s, dtype=float)
        q = float(np.dot(s, s))
        if self.kind == GAUSSIAN:
            return math.exp(-q / (2 * self.width ** 2))
        u = q / self.width ** 2
        return math.exp(-1.0 / (1.0 - u)) if u < 1 else 0.0

    def hat_radial(self, rho):
        """chat as a function of |xi| (both cutoffs are radial)."""
        rho = np.asarray(rho, dtype=float)
        if self.kind == GAUSSIAN:
            return (self.width * math.sqrt(2 * math.pi)) ** self.r * np.exp(-0.5 * (self.width * rho) ** 2)
        table = _bump_table(self.r)
        x = self.width * rho
        values = np.where(x <= BUMP_RANGE, table.spline(np.minimum(x, BUMP_RANGE)), 0.0)
        return self.width ** self.r * values

    def envelope(self, m):
        """A bound on |chat(xi)| over |xi| >= m."""
        m = np.asarray(m, dtype=float)
        if self.kind == GAUSSIAN:
            return self.hat_radial(np.maximum(m, 0.0))
        return self.width ** self.r * _bump_table(self.r).envelope(self.width * m)

    @property
    def table_end(self):
        """Largest |xi| with a tabulated chat (infinite for Gaussian)."""
        return math.inf if self.kind == GAUSSIAN else BUMP_RANGE / self.width

    def to_dict(self):
        key = 'sigma' if self.kind == GAUSSIAN else 'epsilon'
        return {'kind': self.kind, key: self.width}


def gaussian_cutoff(sigma, r):
    if sigma <= 0:
        raise ValueError(f'sigma must be positive, got {sigma}')
    return Cutoff(GAUSSIAN, float(sigma), int(r))


def bump_cutoff(epsilon, r):
    if epsilon <= 0:
        raise ValueError(f'epsilon must be positive, got {epsilon}')
    return Cutoff(BUMP, float(epsilon), int(r))


@dataclass
class _BumpTable:
    rho: np.ndarray
    values: np.ndarray
    spline: CubicSpline
    bound_rho: np.ndarray
    log_bound: np.ndarray

    def envelope(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        idx = np.searchsorted(self.bound_rho, x, side='right') - 1
        return np.exp(self.log_bound[idx])


def _ball_volume(dim):
    return math.pi ** (dim / 2) / gamma(dim / 2 + 1)


def _bump_marginal(z, r):
    """Integral of the unit bump over the hyperplane s_1 = z, continued to Re(1 - z^2) > 0.

    g(z) = |S^{r-2}| (1 - z^2)^{(r-1)/2} int_0^1 exp(-1/((1 - z^2)(1 - v^2))) v^{r-2} dv
    """
    q = 1.0 - z * z
    w = 1.0 / q
    if r == 1:
        return np.exp(-w)
    v, wv = leggauss(BUMP_INNER_NODES)
    v = 0.5 * (v + 1.0)
    wv = 0.5 * wv * v ** (r - 2)
    inner = np.exp(-w[:, None] / (1.0 - v * v)[None, :]) @ wv
    return (r - 1) * _ball_volume(r - 1) * q ** ((r - 1) / 2) * inner


def _panel_nodes(lo, hi, panels, order=16):
    x, w = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _bump_bound(r):
    """log B(rho) with B(rho) >= sup over |xi| >= rho of |chat| for the unit bump.

    With tau = 1 - t the contour has |1 - z^2| = 2 tau sqrt(1 + (1 - tau)^2) and
    Re 1/(1 - z^2) = 1 / (2 tau (1 + (1 - tau)^2)), so
    |g(z)| <= V_{r-1} |1 - z^2|^{(r-1)/2} exp(-Re 1/(1 - z^2)). Both factors grow
    with tau while exp(-rho tau) shrinks: every tau cell is bounded by taking
    each factor at its worse end. B decreases in rho.
    """
    edges = np.concatenate([[0.0], np.geomspace(1e-7, 1.0, BOUND_CELLS)])
    lo, hi = edges[:-1], edges[1:]
    spread = 1.0 + (1.0 - hi) ** 2
    cell = np.log(hi - lo) + 0.5 * (r - 1) * np.log(2 * hi * np.sqrt(spread)) - 1.0 / (2 * hi * spread)
    rho = np.concatenate([[0.0], np.geomspace(1.0, BOUND_RHO_END, BOUND_POINTS)])
    log_bound = np.empty_like(rho)
    for start in range(0, len(rho), 128):
        chunk = rho[start:start + 128, None]
        log_bound[start:start + 128] = logsumexp(cell - chunk * lo, axis=1)
    return rho, log_bound + math.log(2 * math.sqrt(2) * _ball_volume(r - 1))


@lru_cache(maxsize=None)
def _bump_table(r):
    """Radial Fourier transform of the unit bump exp(-1/(1 - |s|^2)).

    chat(rho) = 2 Re int g(z) exp(-i rho z) dz along z = t - i(1 - t); the
    segment from 0 to -i closing the contour only adds an imaginary part.
    """
    logging.info('Tabulating the %d-dimensional bump transform up to |xi| = %g', r, BUMP_RANGE)
    u, wu = _panel_nodes(math.log(BUMP_TAU_MIN), 0.0, BUMP_PANELS)
    tau = np.exp(u)
    t = 1.0 - tau
    h = 2 * (1 + 1j) * wu * tau * _bump_marginal(t - 1j * tau, r)

    rho = np.concatenate([np.arange(0.0, BUMP_FINE_END, BUMP_FINE_STEP),
                          np.arange(BUMP_FINE_END, BUMP_RANGE + 0.5 * BUMP_STEP, BUMP_STEP)])
    values = np.empty_like(rho)
    for start in range(0, len(rho), 512):
        chunk = rho[start:start + 512, None]
        damp = np.exp(-chunk * tau)
        phase = chunk * t
        values[start:start + 512] = (damp * np.cos(phase)) @ h.real + (damp * np.sin(phase)) @ h.imag

    bound_rho, log_bound = _bump_bound(r)
    return _BumpTable(rho, values, CubicSpline(rho, values), bound_rho, log_bound)


def cutoff_hat(cutoff, xi):
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (cutoff.r,):
        raise DimensionMismatch(f'xi has {xi.size} components, cutoff is {cutoff.r}-dimensional')
    return float(cutoff.hat_radial(np.linalg.norm(xi)))


@dataclass(frozen=True)
class Majorant:
    """Bound on (points in the shell m <= |Lambda - x| < m + 1) x (largest amplitude there).

    A point within m + 1 of x has ||Lambda|| <= ||x|| + m + 1, hence level
    l <= L = (||x|| + m + 1)/||(a, c)||, and each offset k_i ranges over at
    most 2m + 3 integers. Diagonal sums weight each point by at most the
    level diagonal ((l + 1)/pi)^n. The bound increases with m.
    """
    center_norm: float = 0.0
    n_factors: int = 1
    direction_norm: float = 1.0
    weighted: bool = False

    def __call__(self, m):
        m = np.asarray(m, dtype=float)
        top = (self.center_norm + m + 1) / self.direction_norm + 1
        bound = top * (2 * m + 3) ** self.n_factors
        if self.weighted:
            bound = bound * (top / math.pi) ** self.n_factors
        return bound


@dataclass(frozen=True)
class TruncationCertificate:
    radius: float
    tail_bound: float
    tol: float
    terms: int = 0
    abs_sum: float = 0.0

    @property
    def rounding_floor(self):
        """Magnitude below which the computed sum is rounding noise."""
        if self.terms == 0:
            return 0.0
        return np.finfo(float).eps * (math.log2(self.terms) + 1) * self.abs_sum

    def to_dict(self):
        data = asdict(self)
        data['rounding_floor'] = self.rounding_floor
        return data


def _bump_tail(cutoff, radius, majorant):
    """Shells from `radius` on, grouped by the cells of the envelope grid.

    A cell [lo, hi) holds at most hi - lo + 1 shell starts, each bounded by
    majorant(hi) times the envelope at lo.
    """
    table = _bump_table(cutoff.r)
    edges = table.bound_rho / cutoff.width
    first = int(np.searchsorted(edges, radius, side='right')) - 1
    lo = np.concatenate([[radius], edges[first + 1:]])
    hi = np.concatenate([edges[first + 1:], [math.inf]])
    bound = cutoff.width ** cutoff.r * np.exp(table.log_bound[first:])
    if bound[-1] > 0:
        return math.inf
    lo, hi, bound = lo[:-1], hi[:-1], bound[:-1]
    return float(np.sum((hi - lo + 1) * majorant(hi) * bound))


def tail_mass(cutoff, radius, majorant):
    """Rigorous bound on the cutoff mass of all spectral points beyond `radius`."""
    radius = max(float(radius), 0.0)
    if cutoff.kind == BUMP:
        return _bump_tail(cutoff, radius, majorant)
    # past the underflow point every further shell is exactly zero
    last = max(radius, math.sqrt(2 * 800.0) / cutoff.width) + 2
    shells = radius + np.arange(0, int(math.ceil(last - radius)) + 1)
    terms = majorant(shells) * cutoff.envelope(shells)
    total = float(np.sum(terms))
    if terms[-1] > 0:
        ratio = float(terms[-1] / terms[-2])
        total += float(terms[-1]) * ratio / (1 - ratio) if ratio < 1 else math.inf
    return total


def tail_radius(cutoff, tol, majorant=None):
    """Smallest radius (to 0.1%) whose tail_mass is below tol."""
    if not 0 < tol <= 1e-2:
        raise ValueError(f'tol must lie in (0, 1e-2], got {tol}')
    majorant = majorant or Majorant(n_factors=cutoff.r)
    hi = 1.0 / cutoff.width
    while tail_mass(cutoff, hi, majorant) > tol:
        if hi >= cutoff.table_end:
            raise ToleranceUnreachable(
                f'the {cutoff.kind} cutoff cannot reach tol={tol:g} within |xi| <= {cutoff.table_end:g}; '
                f'widen the cutoff or loosen tol')
        hi = min(2 * hi, cutoff.table_end)
    lo = 0.0 if tail_mass(cutoff, 0.0, majorant) > tol else hi
    while hi - lo > 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        if tail_mass(cutoff, mid, majorant) > tol:
            lo = mid
        else:
            hi = mid
    return hi


def certify(cutoff, tol, majorant):
    radius = tail_radius(cutoff, tol, majorant)
    return radius, tail_mass(cutoff, radius, majorant)


def _unit(beta, r):
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    if b.shape != (r,):
        raise DimensionMismatch(f'beta has {b.size} components, model has r={r}')
    if abs(np.linalg.norm(b) - 1) > 1e-12:
        raise ValueError('beta must be a unit vector')
    return b


def reduced_period(model, s0):
    """s0 reduced to [-pi, pi], with the constant components replaced by c_j s0_j reduced the same way.

    A multiple 2 pi k built as 2 * math.pi * k reduces to exactly 0.
    """
    s0 = np.asarray(s0, dtype=float)
    n = model.n_factors
    two_pi = 2 * math.pi

    def reduce(v):
        return v - two_pi * np.round(v / two_pi)

    return reduce(s0[:n]), reduce(model.constants * s0[n:])


def phase_angles(model, block, s0):
    """<Lambda, s0> for every point of the block, computed from the reduced period."""
    factor_s0, constant_phase = reduced_period(model, s0)
    lam = block.offsets + block.levels[:, None] * model.shifts[None, :]
    angle = lam @ factor_s0
    if model.polytope.constants:
        angle = angle + block.levels * float(np.sum(constant_phase))
    return angle


def _window_sum(model, center, radius, term, workers=1):
    """(real sum, imaginary sum, sum of |terms|, point count) over the window."""
    chunks = toric_models.level_chunks(model, center, radius)

    def evaluate(levels):
        block = toric_models.window_block(model, center, radius, levels)
        m = len(levels)
        if len(block) == 0:
            zero = np.zeros(m)
            return zero, zero, zero, 0
        re, im = term(block)
        idx = block.level_index
        return (np.bincount(idx, weights=re, minlength=m),
                np.bincount(idx, weights=im, minlength=m),
                np.bincount(idx, weights=np.hypot(re, im), minlength=m),
                len(block))

    parts = parallel_map(evaluate, chunks, workers)
    if not parts:
        return 0.0, 0.0, 0.0, 0
    re = pairwise_sum(np.concatenate([p[0] for p in parts]))
    im = pairwise_sum(np.concatenate([p[1] for p in parts]))
    mass = pairwise_sum(np.concatenate([p[2] for p in parts]))
    return float(re), float(im), float(mass), int(sum(p[3] for p in parts))


def smoothed_projector_diag(model, cutoff, beta, s0, lam, point, tol=DEFAULT_TOL, workers=1):
    """S(lam beta, s0, x, x) = sum e^{-i<lam beta - Lambda, s0>} chat(lam beta - Lambda) rho_Lambda(x)."""
    if lam <= 0:
        raise ValueError(f'lambda must be positive, got {lam}')
    b = _unit(beta, model.r)
    s0 = np.asarray(s0, dtype=float)
    s = np.asarray(point, dtype=float)
    x = lam * b
    majorant = Majorant(float(np.linalg.norm(x)), model.n_factors, model.direction_norm, weighted=True)
    radius, tail = certify(cutoff, tol, majorant)
    periodic = bool(np.any(s0 != 0))

    def term(block):
        weight = (cutoff.hat_radial(np.linalg.norm(x - block.eigenvalues, axis=1))
                  * np.exp(toric_models.log_amplitudes(model, block.levels, block.offsets, s)))
        if not periodic:
            return weight, np.zeros_like(weight)
        angle = phase_angles(model, block, s0)
        return weight * np.cos(angle), weight * np.sin(angle)

    re, im, mass, count = _window_sum(model, x, radius, term, workers)
    value = complex(re, im)
    if periodic:
        value *= np.exp(-1j * lam * float(np.dot(b, s0)))
    return complex(value), TruncationCertificate(radius, tail, tol, count, mass)


def trace_ft(model, cutoff, beta, s0, lam, tol=DEFAULT_TOL, workers=1):
    """e^{-i lam <beta, s0>} sum e^{i <Lambda, s0>} chat(lam beta - Lambda)."""
    if lam <= 0:
        raise ValueError(f'lambda must be positive, got {lam}')
    b = _unit(beta, model.r)
    s0 = np.asarray(s0, dtype=float)
    x = lam * b
    majorant = Majorant(float(np.linalg.norm(x)), model.n_factors, model.direction_norm)
    radius, tail = certify(cutoff, tol, majorant)

    def term(block):
        weight = cutoff.hat_radial(np.linalg.norm(x - block.eigenvalues, axis=1))
        angle = phase_angles(model, block, s0)
        return weight * np.cos(angle), weight * np.sin(angle)

    re, im, mass, count = _window_sum(model, x, radius, term, workers)
    value = np.exp(-1j * lam * float(np.dot(b, s0))) * complex(re, im)
    return complex(value), TruncationCertificate(radius, tail, tol, count, mass)


def eigenvalue_cluster(model, beta, lam, radius, cutoff=None):
    """Spectral points within `radius` of lam beta with their chat weights."""
    b = _unit(beta, model.r)
    x = lam * b
    cluster = []
    for p in toric_models.enumerate_spectrum(model, x, radius):
        weight = 1.0 if cutoff is None else cutoff_hat(cutoff, x - np.array(p.eigenvalue))
        cluster.append((p, weight))
    return cluster


def diagonal_trace(model, cutoff, beta, s0, lam, nodes=64, tol=DEFAULT_TOL, workers=1):
    """Integral of the smoothed projector diagonal over M against prod_i pi ds_i.

    Gauss-Legendre in each moment coordinate; exact once `nodes` exceeds half
    the largest level reached by the window.
    """
    t, w = leggauss(nodes)
    t = 0.5 * (t + 1.0)
    w = 0.5 * math.pi * w
    n = model.n_factors
    total = 0j
    grid = np.indices((nodes,) * n).reshape(n, -1).T
    for idx in grid:
        point = t[idx]
        value, _ = smoothed_projector_diag(model, cutoff, beta, s0, lam, point, tol, workers)
        total += float(np.prod(w[idx])) * value
    return complex(total)


def poisson_trace_constant(model, cutoff):
    """Limit of sum chat(lam beta - Lambda) deep in the cone for one constant Hamiltonian.

    The spectrum is then the multiplicity-free lattice Z^n x cZ, so Poisson
    summation gives (2 pi)^r chi(0) / c.
    """
    if len(model.polytope.constants) != 1:
        raise ValueError('the Poisson constant needs exactly one constant Hamiltonian')
    return (2 * math.pi) ** model.r * cutoff.chi0 / model.polytope.constants[0]
