import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from spinflow import clifford
from spinflow.entropyflow import ConformalTorusMetric
from spinflow.grid import TorusGrid, philox
from spinflow.spinfield import (MONOPOLE_FORM_RATIO, SpinorField, U1ConnectionField, c1_squared,
                                check_twisted_sl, check_weighted_ibp,
                                check_weighted_ricci_identity, check_weighted_sl,
                                chern_weil_check, curved_dirac, dirac, dirac_spectrum,
                                energy_identity_terms, flat_weighted_scalar,
                                harmonic_hessian_terms, harmonic_spinor_entropy_check,
                                lattice_spectrum, monopole_algebra_check, random_connection,
                                random_spinor, random_twist, random_weight, soliton_scaling_check,
                                weighted_dirac, weighted_dirac_conjugated, weighted_inner,
                                write_spectrum_csv)

SEEDS = st.integers(0, 2 ** 32 - 1)
T2 = TorusGrid.cube(64, 2)
T4 = TorusGrid.cube(16, 4)


def _sin_weight(grid):
    return np.sin(2 * np.pi * grid.coords()[0] / grid.lengths[0])


def test_constant_spinor_is_harmonic():
    psi = SpinorField(T2, np.ones(T2.shape + (2,)) * np.array([1.0, 2j]))
    assert np.max(np.abs(dirac(psi).values)) < 1e-12


@pytest.mark.parametrize("twist", [(0.0, 0.0), (0.5, 0.0), (0.5, 0.5)])
def test_fourier_mode_is_eigenspinor(twist):
    grid = TorusGrid((16, 12), (1.0, 2.0))
    x, y = grid.coords()
    k = (2, -1)
    c = np.array([1.0, -0.5j])
    psi = SpinorField(grid, np.exp(2j * np.pi * (k[0] * x / 1.0 + k[1] * y / 2.0))[..., None] * c,
                      twist)
    eig = sum((2 * np.pi * (kj + d) / L) ** 2 for kj, d, L in zip(k, twist, grid.lengths))
    d2 = dirac(dirac(psi)).values
    assert np.max(np.abs(d2 - eig * psi.values)) < 1e-10 * eig


def test_dense_dirac_is_hermitian_with_symmetric_spectrum():
    grid = TorusGrid((6, 6), (1.0, 1.3))
    twist = (0.5, 0.5)
    size = 6 * 6 * 2
    mat = np.empty((size, size), dtype=complex)
    for i in range(size):
        e = np.zeros(size, dtype=complex)
        e[i] = 1.0
        mat[:, i] = dirac(SpinorField(grid, e.reshape(6, 6, 2), twist)).values.ravel()
    assert np.allclose(mat, mat.conj().T, atol=1e-12)
    ev = np.linalg.eigvalsh(mat)
    assert np.allclose(ev, -ev[::-1], atol=1e-10)
    assert np.min(ev ** 2) == pytest.approx(lattice_spectrum(grid, twist, 1)[0], rel=1e-12)


def test_constant_weight_gives_plain_dirac():
    rng = philox(11)
    psi = random_spinor(T2, rng, 3, (0.5, 0.0))
    f = np.full(T2.shape, 0.7)
    assert np.max(np.abs(weighted_dirac(psi, f).values - dirac(psi).values)) < 1e-12
    assert check_weighted_sl(f, psi) <= 1e-12 * 100
    assert check_weighted_ibp(f, psi, random_spinor(T2, rng, 3, (0.5, 0.0))) <= 1e-12
    assert check_weighted_ricci_identity(f, psi, 0) <= 1e-12 * 100


def test_harmonic_spinor_maps_to_weighted_kernel():
    f = random_weight(T2, philox(3), 3)
    psi = SpinorField(T2, np.exp(0.5 * f)[..., None] * np.array([0.3, 1.0 + 1j]))
    assert np.max(np.abs(weighted_dirac(psi, f).values)) < 1e-9


def test_flat_weighted_scalar_closed_form():
    grid = TorusGrid((64, 32), (2.0, 1.0))
    x = grid.coords()[0]
    a = 2 * np.pi / 2.0
    f = np.sin(a * x)
    expected = -2 * a * a * np.sin(a * x) - (a * np.cos(a * x)) ** 2
    assert np.max(np.abs(flat_weighted_scalar(grid, f) - expected)) < 1e-10


def test_sl_with_sine_weight():
    rng = philox(21)
    assert check_weighted_sl(_sin_weight(T2), random_spinor(T2, rng, 3)) <= 1e-8
    assert check_weighted_sl(_sin_weight(T4), random_spinor(T4, rng, 2)) <= 1e-6
    for j in range(2):
        assert check_weighted_ricci_identity(_sin_weight(T2), random_spinor(T2, rng, 3), j) <= 1e-8


@settings(max_examples=50, deadline=None, derandomize=True)
@given(seed=SEEDS)
def test_t2_identities_hold_for_random_fields(seed):
    rng = philox(seed)
    twist = random_twist(T2, rng)
    psi = random_spinor(T2, rng, 3, twist)
    phi = random_spinor(T2, rng, 3, twist)
    f = random_weight(T2, rng, 3)
    conj = weighted_dirac_conjugated(psi, f).values
    assert np.max(np.abs(weighted_dirac(psi, f).values - conj)) <= 1e-10
    assert check_weighted_sl(f, psi) <= 1e-8
    norms = math.sqrt(weighted_inner(psi, psi, f).real * weighted_inner(phi, phi, f).real)
    assert check_weighted_ibp(f, psi, phi) <= 1e-9 * max(1.0, norms)
    lhs, rhs = energy_identity_terms(f, psi)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, weighted_inner(psi, psi, f).real)
    assert max(check_weighted_ricci_identity(f, psi, j) for j in range(2)) <= 1e-8


@settings(max_examples=20, deadline=None, derandomize=True)
@given(seed=SEEDS)
def test_harmonic_hessian_pointwise(seed):
    rng = philox(seed)
    f = random_weight(T2, rng, 2, 0.5)
    c = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    lhs, rhs = harmonic_hessian_terms(f, T2, c / np.linalg.norm(c))
    assert np.max(np.abs(lhs - rhs)) <= 1e-7


@settings(max_examples=10, deadline=None, derandomize=True)
@given(seed=SEEDS)
def test_t4_identities_hold_for_random_fields(seed):
    rng = philox(seed)
    twist = random_twist(T4, rng)
    psi = random_spinor(T4, rng, 2, twist)
    f = random_weight(T4, rng, 2)
    assert check_weighted_sl(f, psi) <= 1e-6
    assert check_twisted_sl(random_connection(T4, rng, 2), f, psi) <= 1e-6


def test_twisted_sl_examples_and_negative_control():
    rng = philox(5)
    psi = random_spinor(T4, rng, 2)
    zero = np.zeros(T4.shape)
    assert check_twisted_sl(U1ConnectionField.zero(T4), zero, psi) <= 1e-12 * 100
    y = T4.coords()[1]
    A = U1ConnectionField(T4, (np.sin(2 * np.pi * y), zero, zero, zero))
    assert check_twisted_sl(A, zero, psi) <= 1e-7
    # full coupling with the half-curvature term is inconsistent
    assert check_twisted_sl(A, zero, psi, coupling=1.0) > 1e-2


def test_twisted_sl_rejects_flux():
    fl = np.zeros((4, 4), dtype=int)
    fl[0, 1], fl[1, 0] = 1, -1
    A = U1ConnectionField(T4, tuple(np.zeros(T4.shape) for _ in range(4)), fl)
    with pytest.raises(ValueError):
        check_twisted_sl(A, np.zeros(T4.shape), random_spinor(T4, philox(0), 1))


def test_lattice_spectrum_examples():
    unit = TorusGrid.cube(16, 2)
    assert lattice_spectrum(unit, (0.0, 0.0), 1)[0] == 0.0
    assert lattice_spectrum(unit, (0.5, 0.0), 1)[0] == pytest.approx(math.pi ** 2, rel=1e-15)
    assert dirac_spectrum(unit, (0.5, 0.0), count=2).tolist() == [math.pi ** 2] * 2


@settings(max_examples=30, deadline=None, derandomize=True)
@given(l1=st.floats(0.3, 3.0), l2=st.floats(0.3, 3.0), t1=st.sampled_from([0.0, 0.5]),
       t2=st.sampled_from([0.0, 0.5]))
def test_lattice_spectrum_matches_enumeration(l1, l2, t1, t2):
    grid = TorusGrid((16, 16), (l1, l2))
    got = lattice_spectrum(grid, (t1, t2), 1)[0]
    assert got == pytest.approx(oracles.lattice_min((l1, l2), (t1, t2)), rel=1e-13, abs=1e-13)


@pytest.mark.parametrize("twist", [(0.5, 0.0), (0.0, 0.0), (0.5, 0.5)])
def test_weighted_spectrum_is_unitarily_equivalent(twist):
    grid = TorusGrid((24, 24), (1.0, 1.2))
    f = random_weight(grid, philox(8), 2, 0.8)
    got = dirac_spectrum(grid, twist, f, count=10)
    ref = lattice_spectrum(grid, twist, 10)
    assert np.max(np.abs(got - ref)) <= 1e-8 * max(1.0, ref.max())


def test_soliton_scaling():
    grid = TorusGrid.cube(16, 2)
    rep = soliton_scaling_check(grid, (0.5, 0.0), [1.0, 0.5, 2.0, 4.0])
    assert rep.lambda1[0] == rep.predicted[0]
    assert rep.max_rel_error <= 1e-10
    with pytest.raises(ValueError):
        soliton_scaling_check(grid, (0.0, 0.0), [2.0])


def test_spectrum_csv():
    buf = io.StringIO()
    write_spectrum_csv([0.0, math.pi ** 2], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "index,eigenvalue"
    assert float(lines[2].split(",")[1]) == math.pi ** 2


def test_entropy_spinor_flat_and_bump():
    flat = harmonic_spinor_entropy_check(ConformalTorusMetric.flat(32))
    assert flat.lam_eigensolver == pytest.approx(0.0, abs=1e-13)
    assert flat.lam_spinor == pytest.approx(0.0, abs=1e-13)
    rep = harmonic_spinor_entropy_check(ConformalTorusMetric.cosine_bump(128, 0.2))
    assert rep.rel_error <= 1e-3
    assert rep.dirac_residual < 1e-10


def test_entropy_spinor_error_decreases_under_refinement():
    # coarse grids, where discretisation rather than roundoff dominates
    errs = [harmonic_spinor_entropy_check(ConformalTorusMetric.cosine_bump(n, 0.4),
                                          dirac_tol=1e-3).abs_error
            for n in (8, 12, 16)]
    assert errs[0] > errs[1] > errs[2]


def test_curved_dirac_annihilates_conformal_constant():
    g = ConformalTorusMetric.cosine_bump(64, 0.3, mode="xy")
    phi = np.exp(-0.5 * g.u)[..., None] * np.array([0.0, 1.0])
    assert np.max(np.abs(curved_dirac(g, phi))) < 1e-10
    assert np.max(np.abs(curved_dirac(g, np.ones(g.grid.shape + (2,))))) > 0.1


@pytest.mark.parametrize("fluxes,c1sq", [
    ({}, 0), ({(0, 1): 1, (2, 3): 1}, 2), ({(0, 1): 1, (2, 3): -1}, -2)])
def test_chern_weil_examples(fluxes, c1sq):
    n = np.zeros((4, 4), dtype=int)
    for (j, k), v in fluxes.items():
        n[j, k], n[k, j] = v, -v
    assert oracles.wedge_top_coefficient(n, n) == c1sq
    assert c1_squared(n) == c1sq
    lhs, rhs = chern_weil_check(n)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))
    if c1sq < 0:
        assert lhs < 0


@settings(max_examples=50, deadline=None, derandomize=True)
@given(upper=st.lists(st.integers(-4, 4), min_size=6, max_size=6),
       lengths=st.tuples(*[st.floats(0.5, 2.0)] * 4))
def test_chern_weil_random_fluxes(upper, lengths):
    n = np.zeros((4, 4), dtype=int)
    n[np.triu_indices(4, 1)] = upper
    n = n - n.T
    assert c1_squared(n) == oracles.wedge_top_coefficient(n, n) == 2 * oracles.pfaffian4(n)
    lhs, rhs = chern_weil_check(n, lengths)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_monopole_zero_spinor():
    rep = monopole_algebra_check(np.zeros(4))
    assert rep.passed and np.all(rep.form == 0)


@settings(max_examples=50, deadline=None, derandomize=True)
@given(seed=SEEDS, f=st.floats(-2.0, 2.0))
def test_monopole_norm_relations(seed, f):
    rng = philox(seed)
    psi = np.zeros(4, dtype=complex)
    psi[:2] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    rep = monopole_algebra_check(psi, f)
    assert rep.passed
    assert rep.ratio_action_to_form == pytest.approx(clifford.SELFDUAL_ACTION_NORM_RATIO, rel=1e-12)
    assert rep.ratio_quartic_to_form == pytest.approx(MONOPOLE_FORM_RATIO, rel=1e-12)
    # |phi|^4 equals the Frobenius norm of the form action on W+ twice over
    assert rep.quartic == pytest.approx(2 * rep.quadratic_frobenius2, rel=1e-12)


def test_spinor_field_validation():
    with pytest.raises(ValueError):
        SpinorField(TorusGrid.cube(4, 3), np.zeros((4, 4, 4, 2)))
    with pytest.raises(ValueError):
        SpinorField(T2, np.zeros(T2.shape + (2,)), (0.25, 0.0))
    with pytest.raises(ValueError):
        SpinorField(T2, np.zeros(T2.shape + (4,)))
    a = SpinorField(T2, np.zeros(T2.shape + (2,)), (0.5, 0.0))
    with pytest.raises(ValueError):
        weighted_inner(a, SpinorField(T2, np.zeros(T2.shape + (2,))))
