import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import ortho_group

import geometry
import toric_models
from geometry import BOTTOM, TOP, DimensionMismatch, EmptyLocus, NotAPeriod

unit = st.floats(0, 1)
vectors4 = st.lists(st.floats(-10, 10), min_size=4, max_size=4)


@given(s=st.tuples(unit, unit))
def test_xi_is_unit_and_dual_to_phi(s):
    model = toric_models.build_model([1, 2], [0.5])
    data = geometry.moment_map(model, list(s))
    assert np.linalg.norm(data.xi) == pytest.approx(1.0, abs=1e-12)
    assert np.dot(data.phi, data.xi) == pytest.approx(data.norm, rel=1e-12)


def test_calD_augmented(augmented):
    assert geometry.calD(augmented, [0.5]) == pytest.approx(1 / math.sqrt(13), rel=1e-12)


def test_calD_is_one_for_r1(cp1):
    assert geometry.calD(cp1, [0.3]) == 1.0


def test_calD_degenerates_at_pole(augmented):
    with pytest.raises(geometry.DegenerateAt):
        geometry.calD(augmented, [0.0])


@pytest.mark.parametrize('seed', range(5))
def test_kernel_gram_determinant_basis_invariant(seed):
    model = toric_models.build_model([1, 1, 2])
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.1, 0.9, size=3)
    basis = geometry.kernel_basis(model, s)
    gram = geometry.metric_gram(model, s)
    q = ortho_group.rvs(2, random_state=seed)
    mixed = basis @ q
    expected = np.linalg.det(basis.T @ gram @ basis)
    assert np.linalg.det(mixed.T @ gram @ mixed) == pytest.approx(expected, rel=1e-10)
    assert geometry.calD(model, s) == pytest.approx(math.sqrt(expected), rel=1e-10)


def test_transversal_direction(augmented, augmented_beta):
    report = geometry.check_transversality(augmented, augmented_beta)
    assert report.transverse
    assert report.regular_value
    # M_beta is the single circle s = 1/2, where the margin equals calD
    assert report.margin == pytest.approx(1 / math.sqrt(13), rel=1e-9)


def test_ray_through_pole_is_not_transversal(augmented):
    report = geometry.check_transversality(augmented, np.array([1.0, 1.0]) / math.sqrt(2))
    assert not report.transverse


def test_ray_missing_polytope(augmented):
    with pytest.raises(EmptyLocus):
        geometry.check_transversality(augmented, np.array([1.0, 3.0]) / math.sqrt(10))
    with pytest.raises(EmptyLocus):
        geometry.locus_points(augmented, np.array([-1.0, 0.0]))


def test_transversality_margin_continuous(cp1xcp1):
    beta = np.array([1.5, 2.5]) / np.linalg.norm([1.5, 2.5])
    nudged = beta + 1e-7 * np.array([1.0, -1.0])
    nudged /= np.linalg.norm(nudged)
    a = geometry.check_transversality(cp1xcp1, beta).margin
    b = geometry.check_transversality(cp1xcp1, nudged).margin
    assert abs(a - b) <= 1e-3


def test_make_direction_normalizes(augmented):
    direction = geometry.make_direction(augmented, [3.0, 2.0])
    assert np.linalg.norm(direction.beta) == pytest.approx(1.0)
    assert direction.in_cone
    with pytest.raises(DimensionMismatch):
        geometry.make_direction(augmented, [1.0])


def test_fixed_locus_identity(augmented):
    info = geometry.fixed_locus(augmented, [0.0, 0.0])
    assert info.factor_status == [geometry.INTERIOR_FIXED]
    [component] = info.components
    assert (component.f, component.c, component.phase_ok) == (1, 0, True)


def test_fixed_locus_half_period(cp1xcp1):
    info = geometry.fixed_locus(cp1xcp1, [0.0, math.pi])
    assert info.factor_status == [geometry.INTERIOR_FIXED, geometry.POLE_ONLY]
    by_pole = {comp.poles: comp for comp in info.components}
    assert by_pole[((1, BOTTOM),)].phase_ok
    assert not by_pole[((1, TOP),)].phase_ok
    angles, poincare = geometry.linearization(cp1xcp1, by_pole[((1, BOTTOM),)])
    assert abs(angles[1]) == pytest.approx(math.pi)
    assert poincare == pytest.approx(2.0)
    assert geometry.real_poincare(poincare) == pytest.approx(4.0)
    with pytest.raises(NotAPeriod):
        geometry.linearization(cp1xcp1, by_pole[((1, TOP),)])


def test_constant_phase_blocks_lift(augmented):
    info = geometry.fixed_locus(augmented, [0.0, 0.3])
    assert info.components and not info.lifted


def test_poincare_quarter_turn():
    component = geometry.FixedComponent(poles=((0, BOTTOM),), f=0, c=1, phase_ok=True,
                                        rotation_angles=((0, math.pi / 2),))
    _, poincare = geometry.linearization(None, component)
    assert poincare == pytest.approx(1 + 1j)


def _spectral_phases_trivial(model, component, s0, max_level=50):
    """e^{i<Lambda, s0>} = 1 on every weight with non-zero amplitude on the component."""
    n = model.n_factors
    pole = dict(component.poles)
    for level in range(max_level + 1):
        offsets = [[level if pole.get(i) == TOP else 0] if i in pole else range(level + 1) for i in range(n)]
        for k in np.array(np.meshgrid(*offsets, indexing='ij')).reshape(n, -1).T:
            lam = toric_models.joint_eigenvalue(model, level, k)
            if abs(cmath.exp(1j * float(np.dot(lam, s0))) - 1) > 1e-8:
                return False
    return True


@pytest.mark.parametrize('s0', [
    [0.0, math.pi],
    [2 * math.pi, 3 * math.pi],
    [math.pi, math.pi],
    [0.5 * math.pi, math.pi],
    [0.37, 1.1],
])
def test_phase_rule_matches_spectrum(cp1xcp1, s0):
    for component in geometry.fixed_locus(cp1xcp1, s0).components:
        assert component.phase_ok == _spectral_phases_trivial(cp1xcp1, component, s0)


def _mixed_s0(rng, r, count):
    """Coordinates drawn from 2 pi Z, pi Z and generic angles."""
    kind = rng.integers(0, 3, size=(count, r))
    whole = rng.integers(-3, 4, size=(count, r))
    generic = rng.uniform(-2 * math.pi, 2 * math.pi, size=(count, r))
    return np.where(kind == 0, 2 * math.pi * whole, np.where(kind == 1, math.pi * whole, generic))


@pytest.mark.parametrize('model_name, seed', [('cp1xcp1', 11), ('augmented', 12)])
def test_phase_rule_matches_spectrum_random(request, model_name, seed):
    model = request.getfixturevalue(model_name)
    for s0 in _mixed_s0(np.random.default_rng(seed), model.r, 50):
        for component in geometry.fixed_locus(model, s0).components:
            assert component.phase_ok == _spectral_phases_trivial(model, component, s0, max_level=12), s0


def test_component_at(cp1xcp1):
    info = geometry.fixed_locus(cp1xcp1, [0.0, math.pi])
    assert geometry.component_at(cp1xcp1, info, [0.5, 0.0]).poles == ((1, BOTTOM),)
    assert geometry.component_at(cp1xcp1, info, [0.5, 0.5]) is None


def test_psi2_examples():
    assert geometry.psi2([1.0, 0.0], [0.0, 1.0]) == pytest.approx(-1 - 1j)
    assert geometry.psi2([0.0, 0.0], [3.0, 4.0]) == pytest.approx(-12.5)
    with pytest.raises(DimensionMismatch):
        geometry.psi2([1.0, 0.0], [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        geometry.psi2([1.0], [1.0])


@given(v=vectors4, w=vectors4, thetas=st.tuples(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi)))
def test_psi2_properties(v, w, thetas):
    v, w = np.array(v), np.array(w)
    assert geometry.psi2(v, v) == 0
    assert geometry.psi2(v, w).real <= 0
    a = geometry.rotation_matrix(list(thetas))
    np.testing.assert_allclose(a.T @ a, np.eye(4), atol=1e-12)
    assert geometry.psi2(a @ v, a @ w).real == pytest.approx(geometry.psi2(v, w).real, rel=1e-9, abs=1e-9)


def test_normal_fractions(augmented, cp1):
    np.testing.assert_allclose(geometry.normal_fractions(augmented, [0.5]), [1.0])
    np.testing.assert_array_equal(geometry.normal_fractions(cp1, [0.5]), [0.0])


def test_period_gap(augmented):
    gap, nearest = geometry.period_gap(augmented, [0.0, 0.0])
    assert gap == 0.0
    gap, nearest = geometry.period_gap(augmented, [0.3, 0.7])
    # nearest period lies on the top-pole hyperplane 2 s_1 + s_2 = 0
    assert gap == pytest.approx(1.3 / math.sqrt(5))
    assert 2 * nearest[0] + nearest[1] == pytest.approx(0.0, abs=1e-12)
