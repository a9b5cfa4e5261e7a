"""Exact toric model quantizations.

A model is a product of projective lines, factor i with moment interval
[a_i, a_i + 1] (integer shift a_i >= 1), plus optional constant Hamiltonians
c_j > 0. Each factor has symplectic area pi, so the level-l diagonal of the
Szego projector is ((l + 1)/pi)^n and every joint eigenvalue is a lattice
point of the dilated polytope:

    Lambda = (k_1 + l a_1, ..., k_n + l a_n, l c_1, ..., l c_m),  0 <= k_i <= l.

Points of M are given by their moment coordinates s in [0, 1]^n; angles are
omitted since every quantity computed here is torus invariant.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy, xlog1py

# Upper bound on (levels in a chunk) x (offset box size) for one vectorized block
MAX_BLOCK_ENTRIES = 1 << 21


class InvalidPolytope(ValueError):
    """Shifts below 1 or non-positive constants (the origin would lie in P)."""


class OutOfRange(ValueError):
    """Offsets outside 0 <= k_i <= l."""


class OutOfChart(ValueError):
    """A meridian displacement left the angle-free chart."""


@dataclass(frozen=True)
class MomentPolytope:
    shifts: tuple
    constants: tuple = ()

    @property
    def n_factors(self):
        return len(self.shifts)

    @property
    def r(self):
        return len(self.shifts) + len(self.constants)


@dataclass(frozen=True)
class ToricModel:
    polytope: MomentPolytope

    @property
    def d(self):
        return self.polytope.n_factors

    @property
    def n_factors(self):
        return self.polytope.n_factors

    @property
    def r(self):
        return self.polytope.r

    @property
    def shifts(self):
        return np.array(self.polytope.shifts, dtype=np.int64)

    @property
    def constants(self):
        return np.array(self.polytope.constants, dtype=float)

    @property
    def direction_norm(self):
        """||(a, c)||, the smallest norm growth per level: ||Lambda|| >= l * direction_norm."""
        return math.hypot(*self.polytope.shifts, *self.polytope.constants)

    def describe(self):
        parts = [f'P1[{a},{a + 1}]' for a in self.polytope.shifts]
        parts += [f'const({c:g})' for c in self.polytope.constants]
        return ' x '.join(parts)


@dataclass(frozen=True)
class SpectralPoint:
    level: int
    offsets: tuple
    eigenvalue: tuple


@dataclass
class WindowBlock:
    """A vectorized slab of spectral points: one row per point."""
    levels: np.ndarray        # (N,) int64
    offsets: np.ndarray       # (N, n) int64
    eigenvalues: np.ndarray   # (N, r) float
    level_index: np.ndarray   # (N,) position of the level inside the chunk
    chunk_levels: np.ndarray  # (m,) the levels this block covers, ascending

    def __len__(self):
        return len(self.levels)


def build_model(shifts, constants=()):
    shifts = list(shifts)
    constants = list(constants)
    if not shifts:
        raise InvalidPolytope('a model needs at least one projective-line factor')
    for i, a in enumerate(shifts):
        if int(a) != a:
            raise InvalidPolytope(f'shift {i} must be an integer, got {a!r}')
        if a < 1:
            raise InvalidPolytope(f'shift {i} must be >= 1, got {a}')
    for j, c in enumerate(constants):
        c = float(c)
        if not math.isfinite(c) or c <= 0:
            raise InvalidPolytope(f'constant {j} must be a positive real, got {c!r}')
    polytope = MomentPolytope(tuple(int(a) for a in shifts), tuple(float(c) for c in constants))
    return ToricModel(polytope)


def _as_point(model, point):
    s = np.atleast_1d(np.asarray(point, dtype=float))
    if s.shape != (model.n_factors,):
        raise OutOfChart(f'point has {s.size} coordinates, model has {model.n_factors} factors')
    if np.any(s < 0) or np.any(s > 1) or not np.all(np.isfinite(s)):
        raise OutOfChart(f'moment coordinates must lie in [0, 1], got {s.tolist()}')
    return s


def _check_offsets(model, level, offsets):
    k = np.atleast_1d(np.asarray(offsets, dtype=np.int64))
    if level < 0 or int(level) != level:
        raise OutOfRange(f'level must be a non-negative integer, got {level!r}')
    if k.shape != (model.n_factors,):
        raise OutOfRange(f'expected {model.n_factors} offsets, got {k.size}')
    if np.any(k < 0) or np.any(k > level):
        raise OutOfRange(f'offsets {k.tolist()} outside [0, {level}]')
    return k


def joint_eigenvalue(model, level, offsets):
    k = _check_offsets(model, level, offsets)
    factor_part = (k + level * model.shifts).astype(float)
    return np.concatenate([factor_part, level * model.constants])


def spectral_point(model, level, offsets):
    k = _check_offsets(model, level, offsets)
    return SpectralPoint(int(level), tuple(int(x) for x in k),
                         tuple(float(x) for x in joint_eigenvalue(model, level, k)))


def _ball_slack(center, radius):
    return 1e-9 * max(1.0, radius, float(np.linalg.norm(center)))


def window_levels(model, center, radius):
    """Inclusive level range that can reach the ball ||Lambda - center|| <= radius.

    Returns None when no level can.
    """
    x = np.asarray(center, dtype=float)
    reach = radius + _ball_slack(x, radius)
    n = model.n_factors
    a = model.shifts.astype(float)
    lo = 0.0
    hi = math.inf
    # Lambda_i in [l a_i, l (a_i + 1)]
    lo = max(lo, float(np.max((x[:n] - reach) / (a + 1))))
    hi = min(hi, float(np.min((x[:n] + reach) / a)))
    if model.polytope.constants:
        c = model.constants
        lo = max(lo, float(np.max((x[n:] - reach) / c)))
        hi = min(hi, float(np.min((x[n:] + reach) / c)))
    lo = max(0, math.ceil(lo))
    hi = math.floor(hi)
    if hi < lo:
        return None
    return lo, hi


def window_block(model, center, radius, levels):
    """All spectral points of the given levels inside the closed ball.

    Within each level the points come out in lexicographic offset order,
    independently of which other levels share the block.
    """
    x = np.asarray(center, dtype=float)
    levels = np.asarray(levels, dtype=np.int64)
    n = model.n_factors
    slack = _ball_slack(x, radius)
    reach = radius + slack
    a = model.shifts
    lf = levels.astype(float)

    lo = np.clip(np.ceil(x[:n][None, :] - reach - lf[:, None] * a[None, :]), 0, None).astype(np.int64)
    hi = np.minimum(np.floor(x[:n][None, :] + reach - lf[:, None] * a[None, :]),
                    lf[:, None]).astype(np.int64)
    widths = np.clip(hi - lo + 1, 0, None).max(axis=0)
    if np.any(widths == 0):
        return _empty_block(model, levels)

    grid = np.indices(tuple(int(w) for w in widths)).reshape(n, -1).T
    k = lo[:, None, :] + grid[None, :, :]
    valid = np.all(k <= hi[:, None, :], axis=2)

    lam_factor = k + (levels[:, None, None] * a[None, None, :])
    dist2 = np.sum((lam_factor - x[None, None, :n]) ** 2, axis=2, dtype=float)
    if model.polytope.constants:
        lam_const = lf[:, None] * model.constants[None, :]
        dist2 = dist2 + np.sum((lam_const - x[None, n:]) ** 2, axis=1)[:, None]
    valid &= dist2 <= (radius + slack) ** 2

    level_idx, box_idx = np.nonzero(valid)
    offsets = k[level_idx, box_idx]
    eig = np.empty((len(level_idx), model.r), dtype=float)
    eig[:, :n] = lam_factor[level_idx, box_idx]
    if model.polytope.constants:
        eig[:, n:] = lf[level_idx, None] * model.constants[None, :]
    return WindowBlock(levels[level_idx], offsets, eig, level_idx, levels)


def _empty_block(model, levels):
    return WindowBlock(np.zeros(0, dtype=np.int64),
                       np.zeros((0, model.n_factors), dtype=np.int64),
                       np.zeros((0, model.r)),
                       np.zeros(0, dtype=np.int64),
                       np.asarray(levels, dtype=np.int64))


def level_chunks(model, center, radius):
    """Split the window's level range into chunks small enough to vectorize."""
    bounds = window_levels(model, center, radius)
    if bounds is None:
        return []
    lo, hi = bounds
    box = 1
    for _ in range(model.n_factors):
        box *= min(hi + 1, int(2 * radius) + 3)
    step = max(1, MAX_BLOCK_ENTRIES // max(box, 1))
    return [np.arange(start, min(start + step, hi + 1), dtype=np.int64)
            for start in range(lo, hi + 1, step)]


def iter_window(model, center, radius):
    for levels in level_chunks(model, center, radius):
        yield window_block(model, center, radius, levels)


def enumerate_spectrum(model, center, radius):
    """Spectral points with ||Lambda - center|| <= radius, lexicographic in Lambda."""
    if radius < 0:
        raise ValueError(f'radius must be non-negative, got {radius}')
    center = np.asarray(center, dtype=float)
    if center.shape != (model.r,):
        raise ValueError(f'center has {center.size} components, model has r={model.r}')
    points = []
    for block in iter_window(model, center, radius):
        for level, k, lam in zip(block.levels, block.offsets, block.eigenvalues):
            points.append(SpectralPoint(int(level), tuple(int(v) for v in k), tuple(float(v) for v in lam)))
    points.sort(key=lambda p: (p.eigenvalue, p.level, p.offsets))
    return points


def log_amplitudes(model, levels, offsets, point):
    """log rho_{l,k}(s) for arrays of levels (N,) and offsets (N, n); -inf where rho = 0."""
    s = np.asarray(point, dtype=float)
    lv = np.asarray(levels, dtype=float)
    k = np.asarray(offsets, dtype=float)
    n = model.n_factors
    lm = lv[:, None] - k
    log_binom = gammaln(lv[:, None] + 1) - gammaln(k + 1) - gammaln(lm + 1)
    terms = log_binom + xlogy(k, s[None, :]) + xlog1py(lm, -s[None, :])
    return n * np.log((lv + 1) / math.pi) + terms.sum(axis=1)


def diagonal_amplitude(model, level, offsets, point):
    """rho_{l,k}(s) = prod_i ((l+1)/pi) C(l, k_i) s_i^k_i (1 - s_i)^(l - k_i)."""
    k = _check_offsets(model, level, offsets)
    s = _as_point(model, point)
    value = log_amplitudes(model, np.array([level]), k[None, :], s)[0]
    return float(np.exp(value))


def level_diagonal_sum(model, level, point=None, brute=False):
    """((l+1)/pi)^n; with brute=True the amplitudes are summed over every k instead."""
    if level < 0:
        raise OutOfRange(f'level must be >= 0, got {level}')
    if not brute:
        return ((level + 1) / math.pi) ** model.n_factors
    s = _as_point(model, point)
    grid = np.indices((level + 1,) * model.n_factors).reshape(model.n_factors, -1).T
    values = np.exp(log_amplitudes(model, np.full(len(grid), level), grid, s))
    return float(np.sum(values))


def meridian_point(model, factor, base, arclength):
    """Move a distance `arclength` along the meridian of one factor.

    Each factor is a round sphere of radius 1/2 (area pi), so the polar
    angle is arcsin(sqrt(s)) and the meridian runs from s=0 to s=1 in
    length pi/2.
    """
    s = _as_point(model, base).copy()
    if not 0 <= factor < model.n_factors:
        raise OutOfChart(f'factor {factor} out of range for {model.n_factors} factors')
    angle = math.asin(math.sqrt(s[factor])) + arclength
    tol = 1e-15
    if angle < -tol or angle > math.pi / 2 + tol:
        raise OutOfChart(f'meridian displacement {arclength} from s={s[factor]} crosses a pole')
    angle = min(max(angle, 0.0), math.pi / 2)
    s[factor] = math.sin(angle) ** 2
    return s


def count_eigenvalues(model, radius):
    """#{spectral points with ||Lambda|| <= radius}, multiplicity included."""
    if radius <= 0:
        raise ValueError(f'radius must be positive, got {radius}')
    return count_in_ball(model, np.zeros(model.r), radius)


def count_in_ball(model, center, radius):
    """Number of spectral points (with multiplicity) with ||Lambda - center|| <= radius."""
    center = np.asarray(center, dtype=float)
    return int(sum(len(block) for block in iter_window(model, center, radius)))
