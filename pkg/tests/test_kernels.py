import math

import numpy as np
import pytest
from scipy.integrate import quad

import kernels
import toric_models
from geometry import DimensionMismatch


def test_gaussian_hat_at_origin():
    cutoff = kernels.gaussian_cutoff(1.0, 2)
    assert kernels.cutoff_hat(cutoff, [0.0, 0.0]) == pytest.approx(2 * math.pi)


def test_gaussian_hat_decreases():
    cutoff = kernels.gaussian_cutoff(1.0, 1)
    values = [kernels.cutoff_hat(cutoff, [x]) for x in np.linspace(0, 40, 41)]
    assert all(a > b for a, b in zip(values, values[1:]) if b > 0)
    assert values[-1] < 1e-300


def test_hat_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        kernels.cutoff_hat(kernels.gaussian_cutoff(1.0, 2), [0.0])


def test_invalid_widths():
    with pytest.raises(ValueError):
        kernels.gaussian_cutoff(0.0, 1)
    with pytest.raises(ValueError):
        kernels.bump_cutoff(-1.0, 1)


def test_bump_hat_at_origin_is_its_integral():
    cutoff = kernels.bump_cutoff(0.5, 2)
    radial, _ = quad(lambda t: math.exp(-1 / (1 - t * t)) * t, 0, 1, epsabs=1e-14, epsrel=1e-12)
    expected = 0.25 * 2 * math.pi * radial
    assert kernels.cutoff_hat(cutoff, [0.0, 0.0]) == pytest.approx(expected, rel=1e-8)


def _unit_bump(t):
    return math.exp(-1 / (1 - t * t)) if abs(t) < 1 else 0.0


@pytest.mark.parametrize('xi, tol', [(3.7, 1e-9), (60.0, 1e-12), (200.0, 1e-13)])
def test_bump_hat_one_dimensional_against_quadrature(xi, tol):
    cutoff = kernels.bump_cutoff(1.0, 1)
    direct, _ = quad(lambda t: 2 * _unit_bump(t), 0, 1, weight='cos', wvar=xi, epsabs=1e-15, limit=200)
    assert kernels.cutoff_hat(cutoff, [xi]) == pytest.approx(direct, abs=tol)


def test_bump_chi():
    cutoff = kernels.bump_cutoff(0.5, 2)
    assert cutoff.chi0 == pytest.approx(math.exp(-1))
    assert cutoff.chi([0.0, 0.0]) == pytest.approx(math.exp(-1))
    assert cutoff.chi([0.3, 0.4]) == 0.0


def test_bump_envelope_bounds_hat():
    cutoff = kernels.bump_cutoff(1.0, 2)
    rho = np.linspace(0, 3000, 30001)
    hat = np.abs(cutoff.hat_radial(rho))
    suffix = np.maximum.accumulate(hat[::-1])[::-1]
    assert np.all(cutoff.envelope(rho) >= suffix * (1 - 1e-6))
    assert cutoff.envelope(1000.0) > 0
    assert np.all(np.diff(cutoff.envelope(rho)) <= 0)


def test_bump_envelope_decays_like_root_exponential():
    cutoff = kernels.bump_cutoff(1.0, 1)
    # exp(-sqrt(rho)) up to a power of rho
    for rho in (400.0, 1600.0, 3600.0):
        assert cutoff.envelope(rho) < math.exp(-0.9 * math.sqrt(rho))


def test_tail_radius_monotone_in_tol():
    cutoff = kernels.gaussian_cutoff(1.0, 2)
    majorant = kernels.Majorant(100.0, 1, math.sqrt(2), weighted=True)
    loose = kernels.tail_radius(cutoff, 1e-2, majorant)
    tight = kernels.tail_radius(cutoff, 1e-10, majorant)
    assert loose < tight
    assert kernels.tail_mass(cutoff, tight, majorant) <= 1e-10


def test_tail_radius_rejects_bad_tol():
    with pytest.raises(ValueError):
        kernels.tail_radius(kernels.gaussian_cutoff(1.0, 1), 0.5)


def test_bump_certificate_meets_default_tol():
    cutoff = kernels.bump_cutoff(1.0, 2)
    majorant = kernels.Majorant(5.0, 1, math.sqrt(2), weighted=True)
    radius, tail = kernels.certify(cutoff, 1e-10, majorant)
    assert math.isfinite(radius) and radius <= cutoff.table_end
    assert tail <= 1e-10


def test_bump_tolerance_unreachable():
    with pytest.raises(kernels.ToleranceUnreachable):
        kernels.tail_radius(kernels.bump_cutoff(1.0, 2), 1e-300)


def test_gaussian_tail_vanishes_past_underflow():
    cutoff = kernels.gaussian_cutoff(1.0, 2)
    assert kernels.tail_mass(cutoff, 100.0, kernels.Majorant(n_factors=2)) == 0.0


@pytest.mark.parametrize('epsilon', [1.0, 0.5])
def test_bump_diagonal_certified_at_large_lambda(augmented, augmented_beta, epsilon):
    cutoff = kernels.bump_cutoff(epsilon, 2)
    fine, cert = kernels.smoothed_projector_diag(augmented, cutoff, augmented_beta, [0, 0], 1000.0, [0.5])
    assert cert.tail_bound <= cert.tol == 1e-10
    assert cert.radius <= cutoff.table_end
    coarse, coarse_cert = kernels.smoothed_projector_diag(augmented, cutoff, augmented_beta, [0, 0], 1000.0, [0.5],
                                                          tol=1e-4)
    assert coarse_cert.radius < cert.radius
    slack = coarse_cert.tail_bound + cert.tail_bound + cert.rounding_floor + 1e-12 * abs(fine)
    assert abs(fine - coarse) <= slack


def test_diag_positive_and_real_at_identity(augmented, augmented_beta, gaussian2):
    value, cert = kernels.smoothed_projector_diag(augmented, gaussian2, augmented_beta, [0, 0], 500.0, [0.5])
    assert value.real > 0
    assert value.imag == 0
    assert cert.tail_bound <= cert.tol
    assert cert.terms > 0


def test_truncation_stability(augmented, augmented_beta, gaussian2):
    coarse, cert = kernels.smoothed_projector_diag(augmented, gaussian2, augmented_beta, [0.4, 0.1], 300.0, [0.5],
                                                   tol=1e-6)
    fine, _ = kernels.smoothed_projector_diag(augmented, gaussian2, augmented_beta, [0.4, 0.1], 300.0, [0.5],
                                              tol=1e-13)
    assert abs(fine - coarse) <= cert.tail_bound + 1e-12 * abs(fine)


def test_empty_window_outside_cone(augmented, gaussian2):
    beta = np.array([1.0, 3.0]) / math.sqrt(10)
    value, cert = kernels.smoothed_projector_diag(augmented, gaussian2, beta, [0, 0], 1000.0, [0.5])
    assert cert.terms == 0
    assert abs(value) <= cert.tail_bound


def test_two_term_oracle_on_lattice_point(augmented):
    cutoff = kernels.gaussian_cutoff(10.0, 2)
    target = toric_models.joint_eigenvalue(augmented, 100, [50])
    lam = float(np.linalg.norm(target))
    value, _ = kernels.smoothed_projector_diag(augmented, cutoff, target / lam, [0, 0], lam, [0.5])
    expected = kernels.cutoff_hat(cutoff, [0.0, 0.0]) * toric_models.diagonal_amplitude(augmented, 100, [50], [0.5])
    assert value.real == pytest.approx(expected, rel=1e-6)


def test_beta_must_be_unit(augmented, gaussian2):
    with pytest.raises(ValueError):
        kernels.trace_ft(augmented, gaussian2, [1.5, 1.0], [0, 0], 10.0)
    with pytest.raises(ValueError):
        kernels.trace_ft(augmented, gaussian2, [0.6, 0.8], [0, 0], -1.0)


def test_trace_deep_in_cone_is_poisson_constant(augmented, augmented_beta, gaussian2):
    value, _ = kernels.trace_ft(augmented, gaussian2, augmented_beta, [0, 0], 1000.0)
    constant = kernels.poisson_trace_constant(augmented, gaussian2)
    assert constant == pytest.approx(4 * math.pi ** 2)
    assert value.real == pytest.approx(constant, rel=1e-8)
    assert abs(value.imag) < 1e-12


def test_poisson_constant_needs_one_constant(cp1):
    with pytest.raises(ValueError):
        kernels.poisson_trace_constant(cp1, kernels.gaussian_cutoff(1.0, 1))


def test_period_identity(augmented, augmented_beta, gaussian2):
    s0 = np.array([2 * math.pi * 2, 2 * math.pi * -1])
    base, _ = kernels.trace_ft(augmented, gaussian2, augmented_beta, [0, 0], 150.0)
    shifted, _ = kernels.trace_ft(augmented, gaussian2, augmented_beta, s0, 150.0)
    expected = np.exp(-1j * 150.0 * float(np.dot(augmented_beta, s0))) * base
    assert abs(shifted - expected) <= 1e-12 * abs(base)


def test_period_identity_fractional_constant():
    model = toric_models.build_model([1], [0.5])
    cutoff = kernels.gaussian_cutoff(0.5, 2)
    beta = np.array([1.5, 0.5]) / np.linalg.norm([1.5, 0.5])
    s0 = np.array([2 * math.pi, 2 * math.pi / 0.5])
    base, _ = kernels.trace_ft(model, cutoff, beta, [0, 0], 80.0)
    shifted, _ = kernels.trace_ft(model, cutoff, beta, s0, 80.0)
    expected = np.exp(-1j * 80.0 * float(np.dot(beta, s0))) * base
    assert abs(shifted - expected) <= 1e-12 * abs(base)


def test_determinism_across_workers(monkeypatch, cp1xcp1):
    beta = np.array([1.5, 2.5]) / np.linalg.norm([1.5, 2.5])
    cutoff = kernels.gaussian_cutoff(0.5, 2)
    monkeypatch.setattr(toric_models, 'MAX_BLOCK_ENTRIES', 512)
    assert len(toric_models.level_chunks(cp1xcp1, 200.0 * beta, 20.0)) > 1
    serial, _ = kernels.smoothed_projector_diag(cp1xcp1, cutoff, beta, [0.2, 0.0], 200.0, [0.5, 0.5], workers=1)
    threaded, _ = kernels.smoothed_projector_diag(cp1xcp1, cutoff, beta, [0.2, 0.0], 200.0, [0.5, 0.5], workers=4)
    assert serial == threaded


@pytest.mark.parametrize('shifts, constants, beta, lam', [
    ([1], [], [1.0], 60.0),
    ([1], [1], [1.5, 1.0], 120.0),
])
def test_trace_equals_integrated_diagonal(shifts, constants, beta, lam):
    model = toric_models.build_model(shifts, constants)
    b = np.asarray(beta) / np.linalg.norm(beta)
    cutoff = kernels.gaussian_cutoff(0.5, model.r)
    trace, _ = kernels.trace_ft(model, cutoff, b, np.zeros(model.r), lam)
    integrated = kernels.diagonal_trace(model, cutoff, b, np.zeros(model.r), lam, nodes=64)
    assert integrated.real == pytest.approx(trace.real, rel=1e-8)


def test_eigenvalue_cluster_weights(augmented, augmented_beta, gaussian2):
    cluster = kernels.eigenvalue_cluster(augmented, augmented_beta, 100.0, 3.0, gaussian2)
    assert cluster
    center = 100.0 * augmented_beta
    for point, weight in cluster:
        assert np.linalg.norm(np.array(point.eigenvalue) - center) <= 3.0 + 1e-9
        assert weight == pytest.approx(kernels.cutoff_hat(gaussian2, center - np.array(point.eigenvalue)))


def test_eigenvalue_cluster_empty_off_lattice(augmented):
    beta = np.array([5.5, 3.5]) / np.linalg.norm([5.5, 3.5])
    assert kernels.eigenvalue_cluster(augmented, beta, float(np.linalg.norm([5.5, 3.5])), 0.5) == []
