import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spinflow import clifford
from spinflow.clifford import (SELFDUAL_ACTION_NORM_RATIO, anti_self_dual_part, build_rep,
                               chirality_projectors, form_norm2, hodge_star, quadratic_map,
                               self_dual_basis, self_dual_part, solve_self_dual,
                               two_form_action)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_generators_anticommute_exactly(n):
    rep = build_rep(n)
    assert clifford.anticommutator_defect(rep) == 0.0
    for g in rep.gammas:
        assert np.array_equal(g.conj().T, -g)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_volume_element_squares_to_identity(n):
    w = build_rep(n).volume_element()
    assert np.array_equal(w @ w, np.eye(w.shape[0]))


def test_chiral_basis_in_dimension_four():
    rep = build_rep(4)
    assert np.array_equal(rep.volume_element(), np.diag([1, 1, -1, -1]).astype(complex))
    p, m = chirality_projectors(rep)
    assert np.array_equal(p @ p, p) and np.array_equal(m @ m, m)
    assert np.array_equal(p @ m, np.zeros((4, 4)))
    assert np.array_equal(p + m, np.eye(4))
    # odd elements swap chirality
    for g in rep.gammas:
        assert np.array_equal(p @ g @ p, np.zeros((4, 4)))


def test_dimension_two_volume_element():
    assert np.array_equal(build_rep(2).volume_element(), np.diag([1, -1]).astype(complex))


def test_unsupported_dimension_and_odd_chirality():
    with pytest.raises(ValueError):
        build_rep(5)
    with pytest.raises(ValueError):
        chirality_projectors(build_rep(3))


def test_gammas_are_read_only():
    with pytest.raises(ValueError):
        build_rep(2).gammas[0][0, 0] = 1.0


@settings(max_examples=50, deadline=None, derandomize=True)
@given(v=arrays(float, 4, elements=finite), s=arrays(complex, 4, elements=st.complex_numbers(max_magnitude=5)))
def test_clifford_square_is_minus_norm(v, s):
    rep = build_rep(4)
    vv = clifford.clifford_mul(rep, v, clifford.clifford_mul(rep, v, s))
    assert np.allclose(vv, -np.dot(v, v) * s, atol=1e-10 * (1 + np.dot(v, v) * np.abs(s).max()))


def _antisym(upper):
    F = np.zeros((4, 4))
    F[np.triu_indices(4, 1)] = upper
    return F - F.T


@settings(max_examples=50, deadline=None, derandomize=True)
@given(upper=arrays(float, 6, elements=finite))
def test_hodge_star_and_chiral_action(upper):
    F = _antisym(upper)
    assert np.allclose(hodge_star(hodge_star(F)), F)
    sd, asd = self_dual_part(F), anti_self_dual_part(F)
    rep = build_rep(4)
    a_sd, a_asd = two_form_action(rep, sd), two_form_action(rep, asd)
    tol = 1e-12 * (1 + np.abs(F).max())
    # self-dual forms act on W+ only, anti-self-dual on W- only
    assert np.abs(a_sd[2:, :]).max() < tol and np.abs(a_sd[:, 2:]).max() < tol
    assert np.abs(a_asd[:2, :]).max() < tol and np.abs(a_asd[:, :2]).max() < tol


@settings(max_examples=50, deadline=None, derandomize=True)
@given(c=arrays(float, 3, elements=finite).filter(lambda c: np.linalg.norm(c) > 1e-3))
def test_selfdual_action_norm_constant(c):
    F = sum(ci * B for ci, B in zip(c, self_dual_basis()))
    frob = np.sum(np.abs(two_form_action(build_rep(4), F)) ** 2)
    assert frob / form_norm2(F) == pytest.approx(SELFDUAL_ACTION_NORM_RATIO, rel=1e-12)


@settings(max_examples=50, deadline=None, derandomize=True)
@given(psi=arrays(complex, 2, elements=st.complex_numbers(max_magnitude=3)))
def test_quadratic_map_properties(psi):
    rep = build_rep(4)
    q = quadratic_map(rep, psi)
    n2 = np.vdot(psi, psi).real
    assert abs(np.trace(q)) < 1e-12 * (1 + n2)
    assert np.allclose(q, q.conj().T)
    assert np.sum(np.abs(q) ** 2) == pytest.approx(0.5 * n2 ** 2, abs=1e-12 * (1 + n2 ** 2))
    F = solve_self_dual(rep, q)
    assert np.allclose(two_form_action(rep, F)[:2, :2], q, atol=1e-12 * (1 + n2))
    assert np.allclose(F, hodge_star(F), atol=1e-12 * (1 + n2))
    # Hermitian action of a self-dual form needs purely imaginary coefficients
    assert np.abs(F.real).max() < 1e-12 * (1 + n2)


def test_quadratic_map_rejects_negative_chirality():
    with pytest.raises(ValueError):
        quadratic_map(build_rep(4), np.array([0, 0, 1, 0]))
    with pytest.raises(ValueError):
        quadratic_map(build_rep(2), np.array([1, 0]))


def test_solve_self_dual_rejects_non_traceless_target():
    with pytest.raises(ArithmeticError):
        solve_self_dual(build_rep(4), np.eye(2))


def test_two_form_action_validates_input():
    with pytest.raises(ValueError):
        two_form_action(build_rep(4), np.ones((4, 4)))
    with pytest.raises(ValueError):
        two_form_action(build_rep(2), _antisym(np.arange(6.0)))
