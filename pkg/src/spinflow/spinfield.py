"""Spinor fields on flat tori: weighted and gauge-twisted Dirac operators.

A spinor field on T^n (n = 2 or 4) has 2^(n//2) complex components per
node. A spin structure is a twist delta in {0, 1/2}^n: the field picks up
the phase e^{2 pi i delta_j} across period j. Only the periodic factor is
stored; derivatives act on the product with e^{2 pi i delta.x/L} through
shifted wavenumbers, so every field stays FFT-friendly.

Weights f are plain real grid arrays or ``WeightField`` instances. The
weighted inner product is sum <psi, phi> e^{-f} times the cell volume.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np
from scipy.sparse.linalg import LinearOperator, lobpcg

from . import clifford
from .clifford import SELFDUAL_ACTION_NORM_RATIO, build_rep
from .entropyflow import (ConformalTorusMetric, EigensolverError, WeightField,
                          lambda_entropy)
from .grid import TorusGrid, band_limited_field

# e^{-2f}|psi|^4 over the 2-form norm |F+|^2 of the self-dual solution.
# Equals 2 * SELFDUAL_ACTION_NORM_RATIO since |q(psi)|^2_Frob = |psi|^4 / 2.
MONOPOLE_FORM_RATIO = 8.0


@lru_cache(maxsize=None)
def _rep(n: int) -> clifford.CliffordRep:
    return build_rep(n)


@lru_cache(maxsize=None)
def _pair_products(n: int) -> tuple[tuple[int, int, np.ndarray], ...]:
    rep = _rep(n)
    return tuple((j, k, rep.gammas[j] @ rep.gammas[k])
                 for j, k in combinations(range(n), 2))


def _as_weight(f) -> np.ndarray:
    if isinstance(f, WeightField):
        return np.asarray(f.f, dtype=float)
    return np.asarray(f, dtype=float)


@dataclass(frozen=True)
class SpinorField:
    grid: TorusGrid
    values: np.ndarray
    twist: tuple[float, ...] = field(default=None)

    def __post_init__(self):
        n = self.grid.ndim
        if n not in (2, 4):
            raise ValueError("spinor fields are supported on T^2 and T^4")
        twist = (0.0,) * n if self.twist is None else tuple(float(d) for d in self.twist)
        if len(twist) != n or any(d not in (0.0, 0.5) for d in twist):
            raise ValueError(f"twist must be a length-{n} vector with entries 0 or 1/2")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape + (self.rank,):
            raise ValueError(f"spinor values must have shape {self.grid.shape + (self.rank,)}")
        object.__setattr__(self, "twist", twist)
        object.__setattr__(self, "values", vals)

    @property
    def rank(self) -> int:
        return 2 ** (self.grid.ndim // 2)

    @property
    def rep(self) -> clifford.CliffordRep:
        return _rep(self.grid.ndim)

    def like(self, values: np.ndarray) -> "SpinorField":
        return SpinorField(self.grid, values, self.twist)

    def quasi_periodic_values(self) -> np.ndarray:
        """Stored values times the twist phase e^{2 pi i delta.x/L}."""
        phase = sum(2 * np.pi * d * x / L
                    for d, x, L in zip(self.twist, self.grid.coords(), self.grid.lengths))
        return self.values * np.exp(1j * np.asarray(phase))[..., None]

    def pointwise_norm2(self) -> np.ndarray:
        return np.sum(np.abs(self.values) ** 2, axis=-1)

    def compatible(self, other: "SpinorField") -> None:
        if self.grid != other.grid or self.twist != other.twist:
            raise ValueError("spinor fields live on different grids or spin structures")


def _check_weight(psi: SpinorField, f: np.ndarray) -> None:
    if f.shape != psi.grid.shape:
        raise ValueError(f"weight shape {f.shape} does not match grid {psi.grid.shape}")


def partial(psi: SpinorField, j: int) -> SpinorField:
    return psi.like(psi.grid.diff(psi.values, j, shift=psi.twist[j]))


def laplacian(psi: SpinorField) -> SpinorField:
    return psi.like(psi.grid.laplacian(psi.values, shift=psi.twist))


def _clifford_field(psi: SpinorField, vec: list[np.ndarray], values=None) -> np.ndarray:
    """Pointwise Clifford product of a vector field with a spinor field."""
    values = psi.values if values is None else values
    if len(vec) != psi.grid.ndim:
        raise ValueError("vector field has the wrong number of components")
    out = np.zeros(values.shape, dtype=complex)
    for v, g in zip(vec, psi.rep.gammas):
        out += v[..., None] * (values @ g.T)
    return out


def dirac(psi: SpinorField) -> SpinorField:
    out = np.zeros_like(psi.values)
    for j, g in enumerate(psi.rep.gammas):
        out += partial(psi, j).values @ g.T
    return psi.like(out)


def weighted_dirac(psi: SpinorField, f) -> SpinorField:
    """D psi - 1/2 grad f . psi."""
    f = _as_weight(f)
    _check_weight(psi, f)
    grad_f = psi.grid.grad(f)
    return psi.like(dirac(psi).values - 0.5 * _clifford_field(psi, grad_f))


def weighted_dirac_conjugated(psi: SpinorField, f) -> SpinorField:
    """e^{f/2} D (e^{-f/2} psi): the defining form of the weighted operator."""
    f = _as_weight(f)
    _check_weight(psi, f)
    inner = psi.like(psi.values * np.exp(-0.5 * f)[..., None])
    return psi.like(dirac(inner).values * np.exp(0.5 * f)[..., None])


def weighted_inner(psi: SpinorField, phi: SpinorField, f=None) -> complex:
    psi.compatible(phi)
    dens = np.sum(psi.values.conj() * phi.values, axis=-1)
    w = None if f is None else np.exp(-_as_weight(f))
    return complex(psi.grid.integrate(dens, w))


def weighted_laplacian(psi: SpinorField, f) -> SpinorField:
    """Delta psi - sum_j d_j f d_j psi."""
    f = _as_weight(f)
    out = laplacian(psi).values
    for j, df in enumerate(psi.grid.grad(f)):
        out = out - df[..., None] * partial(psi, j).values
    return psi.like(out)


def flat_weighted_scalar(grid: TorusGrid, f) -> np.ndarray:
    """R_f = 2 Delta f - |grad f|^2 on a flat torus."""
    f = _as_weight(f)
    return 2.0 * grid.laplacian(f) - sum(d * d for d in grid.grad(f))


def _maxnorm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def check_weighted_sl(f, psi: SpinorField) -> float:
    """max |D_f^2 psi - (-Delta_f psi + R_f psi / 4)|."""
    f = _as_weight(f)
    lhs = weighted_dirac(weighted_dirac(psi, f), f).values
    rhs = -weighted_laplacian(psi, f).values
    rhs = rhs + 0.25 * flat_weighted_scalar(psi.grid, f)[..., None] * psi.values
    return _maxnorm(lhs - rhs)


def check_weighted_ibp(f, psi: SpinorField, phi: SpinorField) -> float:
    """|<psi, D_f phi>_f - <D_f psi, phi>_f|."""
    a = weighted_inner(psi, weighted_dirac(phi, f), f)
    b = weighted_inner(weighted_dirac(psi, f), phi, f)
    return abs(a - b)


def energy_identity_terms(f, psi: SpinorField) -> tuple[float, float]:
    """(1/4 int R_f |psi|^2 e^{-f}, int (|D_f psi|^2 - |grad psi|^2) e^{-f})."""
    f = _as_weight(f)
    w = np.exp(-f)
    grid = psi.grid
    lhs = 0.25 * grid.integrate(flat_weighted_scalar(grid, f) * psi.pointwise_norm2(), w)
    dpsi = weighted_dirac(psi, f).pointwise_norm2()
    grad2 = sum(partial(psi, j).pointwise_norm2() for j in range(grid.ndim))
    rhs = grid.integrate(dpsi - grad2, w)
    return float(lhs), float(rhs)


def check_weighted_ricci_identity(f, psi: SpinorField, j: int) -> float:
    """max |[D_f, d_j] psi - 1/2 Hess f(e_j) . psi| (flat background)."""
    f = _as_weight(f)
    grid = psi.grid
    comm = (weighted_dirac(partial(psi, j), f).values
            - partial(weighted_dirac(psi, f), j).values)
    hess = grid.hessian(f)
    rhs = 0.5 * _clifford_field(psi, [hess[..., j, k] for k in range(grid.ndim)])
    return _maxnorm(comm - rhs)


def harmonic_hessian_terms(f, grid: TorusGrid, constant) -> tuple[np.ndarray, np.ndarray]:
    """For psi = e^{f/2} c: (|Hess f|^2 |psi|^2 / 4, sum_j |D_f d_j psi|^2) pointwise."""
    f = _as_weight(f)
    c = np.asarray(constant, dtype=complex)
    psi = SpinorField(grid, np.exp(0.5 * f)[..., None] * c)
    hess = grid.hessian(f)
    lhs = 0.25 * np.sum(hess ** 2, axis=(-2, -1)) * psi.pointwise_norm2()
    rhs = sum(weighted_dirac(partial(psi, j), f).pointwise_norm2()
              for j in range(grid.ndim))
    return lhs, rhs


# -- spectra ---------------------------------------------------------------

def _resolved_wavenumbers(grid: TorusGrid, twist) -> list[np.ndarray]:
    # For untwisted axes the Nyquist mode is dropped: the spectral first
    # derivative annihilates it and it carries no continuum information.
    out = []
    for n, L, d in zip(grid.shape, grid.lengths, twist):
        m = np.fft.fftfreq(n, d=1.0 / n)
        if d == 0.0 and n % 2 == 0:
            m = m[m != -(n // 2)]
        out.append(2 * np.pi * (m + d) / L)
    return out


def lattice_spectrum(grid: TorusGrid, twist=None, count: int = 1) -> np.ndarray:
    """Lowest eigenvalues of D^2 on the flat torus by Fourier diagonalisation.

    Each momentum k contributes |k|^2 with multiplicity equal to the spinor rank.
    """
    twist = (0.0,) * grid.ndim if twist is None else tuple(twist)
    ks = _resolved_wavenumbers(grid, twist)
    k2 = sum(np.meshgrid(*[k * k for k in ks], indexing="ij"))
    rank = 2 ** (grid.ndim // 2)
    vals = np.sort(np.repeat(k2.ravel(), rank))
    if count > vals.size:
        raise ValueError("requested more eigenvalues than grid modes")
    return vals[:count]


def _nyquist_mask(grid: TorusGrid, twist) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for j, (n, d) in enumerate(zip(grid.shape, twist)):
        if d == 0.0 and n % 2 == 0:
            idx = [slice(None)] * grid.ndim
            idx[j] = n // 2
            mask[tuple(idx)] = True
    return mask


def weighted_spectrum(grid: TorusGrid, twist, f, count: int = 10, tol: float = 1e-8,
                      extra: int = 6, maxiter: int = 2000, seed: int = 0) -> np.ndarray:
    """Lowest eigenvalues of D_f^2 acting in L^2_f.

    The multiplication e^{-f/2} maps L^2_f isometrically onto L^2, carrying
    D_f to T = e^{-f/2} D_f e^{f/2}; the eigenvalues are the squared singular
    values of T, found with LOBPCG on T^H T. Untwisted Nyquist modes are
    lifted out of the low spectrum with a penalty.
    """
    f = _as_weight(f)
    twist = (0.0,) * grid.ndim if twist is None else tuple(float(d) for d in twist)
    proto = SpinorField(grid, np.zeros(grid.shape + (2 ** (grid.ndim // 2),)), twist)
    shape = proto.values.shape
    ef = np.exp(0.5 * f)[..., None]
    gradf = grid.grad(f)

    def t_apply(v):
        psi = proto.like(v * ef)
        return weighted_dirac(psi, f).values / ef

    def th_apply(v):
        psi = proto.like(v / ef)
        out = dirac(psi).values + 0.5 * _clifford_field(psi, gradf)
        return out * ef

    mask = _nyquist_mask(grid, twist)
    ks = [2 * np.pi * (np.fft.fftfreq(n, d=1.0 / n) + d) / L
          for n, L, d in zip(grid.shape, grid.lengths, twist)]
    k2 = sum(np.meshgrid(*[k * k for k in ks], indexing="ij"))
    penalty = 4.0 * float(np.max(k2)) + 1.0
    spec_mask = np.zeros(grid.shape, dtype=bool)
    spec_mask[mask] = True

    def project_nyquist(v):
        hat = grid.fft(v)
        hat[~spec_mask] = 0.0
        return grid.ifft(hat)

    def matvec(x):
        x = np.asarray(x)
        cols = x.reshape(shape + (-1,)) if x.ndim == 2 else x.reshape(shape + (1,))
        out = np.empty_like(cols, dtype=complex)
        for c in range(cols.shape[-1]):
            v = cols[..., c]
            out[..., c] = th_apply(t_apply(v)) + penalty * project_nyquist(v)
        return out.reshape(x.shape[0], -1) if x.ndim == 2 else out.ravel()

    precond_symbol = (k2 + 1.0)[..., None]

    def precond(x):
        x = np.asarray(x)
        cols = x.reshape(shape + (-1,)) if x.ndim == 2 else x.reshape(shape + (1,))
        out = np.empty_like(cols, dtype=complex)
        for c in range(cols.shape[-1]):
            out[..., c] = grid.ifft(grid.fft(cols[..., c]) / precond_symbol)
        return out.reshape(x.shape[0], -1) if x.ndim == 2 else out.ravel()

    size = int(np.prod(shape))
    A = LinearOperator((size, size), matvec=matvec, matmat=matvec, dtype=complex)
    M = LinearOperator((size, size), matvec=precond, matmat=precond, dtype=complex)
    block = count + extra
    rng = np.random.Generator(np.random.Philox(key=seed))
    # start from the lowest Fourier modes with a small random perturbation
    order = np.argsort(np.repeat(np.where(mask, np.inf, k2).ravel(), proto.rank), kind="stable")
    X = np.zeros((size, block), dtype=complex)
    for c in range(block):
        node, comp = divmod(int(order[c]), proto.rank)
        hat = np.zeros(grid.shape + (proto.rank,), dtype=complex)
        hat[np.unravel_index(node, grid.shape) + (comp,)] = 1.0
        X[:, c] = (grid.ifft(hat) / ef).ravel()
    X += 1e-3 * (rng.standard_normal(X.shape) + 1j * rng.standard_normal(X.shape)) / math.sqrt(size)
    with warnings.catch_warnings():
        # convergence is judged by the explicit residual test below
        warnings.simplefilter("ignore", UserWarning)
        vals, vecs = lobpcg(A, X, M=M, tol=tol, maxiter=maxiter, largest=False)
    vals = np.sort(np.real(vals))
    # residual check on the requested eigenpairs
    AX = matvec(vecs)
    res = np.linalg.norm(AX - vecs * np.real(np.diag(vecs.conj().T @ AX)) /
                         np.sum(np.abs(vecs) ** 2, axis=0), axis=0)
    scale = max(1.0, float(np.max(np.abs(vals[:count]))))
    if not np.all(np.isfinite(vals)) or np.sort(res)[:count].max() > 1e-6 * scale:
        raise EigensolverError("weighted Dirac spectrum did not converge")
    return vals[:count]


def dirac_spectrum(grid: TorusGrid, twist=None, f=None, count: int = 1, **kwargs) -> np.ndarray:
    """Lowest ``count`` eigenvalues of D^2 (or of D_f^2 in L^2_f when ``f`` is given)."""
    if count < 1:
        raise ValueError("count must be positive")
    if f is None:
        return lattice_spectrum(grid, twist, count)
    return weighted_spectrum(grid, twist, f, count, **kwargs)


@dataclass
class ScalingReport:
    scales: list[float]
    lambda1: list[float]
    predicted: list[float]
    max_rel_error: float


def soliton_scaling_check(grid: TorusGrid, twist, scales) -> ScalingReport:
    """Compare lambda_1(tau g) with lambda_1(g) / tau; tau g has side lengths sqrt(tau) L."""
    base = float(lattice_spectrum(grid, twist, 1)[0])
    if base <= 0.0:
        raise ValueError("lambda_1 vanishes for this spin structure; scaling is vacuous")
    got, pred = [], []
    for tau in scales:
        if not tau > 0:
            raise ValueError("scales must be positive")
        got.append(float(lattice_spectrum(grid.scaled(math.sqrt(tau)), twist, 1)[0]))
        pred.append(base / tau)
    rel = [abs(a - b) / abs(b) for a, b in zip(got, pred)]
    return ScalingReport(list(scales), got, pred, max(rel))


def write_spectrum_csv(eigenvalues, path_or_file) -> None:
    import csv
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "eigenvalue"])
        for i, v in enumerate(eigenvalues):
            w.writerow([i, f"{float(v):.17g}"])
    finally:
        if own:
            fh.close()


# -- curved conformal T^2 --------------------------------------------------

def _frame_derivatives(g: ConformalTorusMetric, phi: np.ndarray) -> list[np.ndarray]:
    """nabla_{E_j} phi for the orthonormal frame E_j = e^{-u} d_j of e^{2u} g_flat."""
    grid = g.grid
    rep = _rep(2)
    eu = np.exp(-g.u)
    du = grid.grad(g.u)
    g12 = rep.gammas[0] @ rep.gammas[1]
    omega = (-eu * du[1], eu * du[0])
    out = []
    for j in range(2):
        d = grid.diff(phi, j)
        out.append(eu[..., None] * d + 0.5 * omega[j][..., None] * (phi @ g12.T))
    return out


def curved_dirac(g: ConformalTorusMetric, phi: np.ndarray) -> np.ndarray:
    rep = _rep(2)
    nab = _frame_derivatives(g, phi)
    return sum(n @ gam.T for n, gam in zip(nab, rep.gammas))


@dataclass
class EntropySpinorReport:
    lam_eigensolver: float
    lam_spinor: float
    rel_error: float
    abs_error: float
    dirac_residual: float


def harmonic_spinor_entropy_check(g: ConformalTorusMetric, constant=(1.0, 0.0),
                                  dirac_tol: float = 1e-8, eig_tol: float = 1e-12) -> EntropySpinorReport:
    """Entropy from the eigensolver against -4 |grad psi|^2_f / |psi|^2_f for a harmonic spinor.

    phi = e^{-u/2} c is harmonic for e^{2u} g_flat with the trivial spin
    structure; psi = e^{f/2} phi with f the entropy minimiser.
    """
    c = np.asarray(constant, dtype=complex)
    if c.shape != (2,) or not np.any(c):
        raise ValueError("constant spinor must be a non-zero 2-vector")
    phi = np.exp(-0.5 * g.u)[..., None] * c
    dres = _maxnorm(curved_dirac(g, phi)) / float(np.max(np.abs(phi)))
    if dres > dirac_tol:
        raise ArithmeticError(f"harmonic spinor residual {dres:.3e} exceeds {dirac_tol:.1e}")
    ent = lambda_entropy(g, tol=eig_tol)
    f = ent.minimizer_f.f
    psi = np.exp(0.5 * f)[..., None] * phi
    w = np.exp(-f) * g.density
    grad2 = sum(np.sum(np.abs(n) ** 2, axis=-1) for n in _frame_derivatives(g, psi))
    num = g.grid.integrate(grad2, w)
    den = g.grid.integrate(np.sum(np.abs(psi) ** 2, axis=-1), w)
    lam_s = -4.0 * float(num / den)
    err = abs(lam_s - ent.lam)
    rel = err / abs(ent.lam) if ent.lam != 0.0 else err
    return EntropySpinorReport(ent.lam, lam_s, rel, err, dres)


# -- U(1)-twisted operators on T^4 -----------------------------------------

@dataclass(frozen=True)
class U1ConnectionField:
    """Real connection 1-form: periodic components plus an integer flux matrix."""

    grid: TorusGrid
    components: tuple[np.ndarray, ...]
    fluxes: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.grid.ndim
        comps = tuple(np.asarray(a, dtype=float) for a in self.components)
        if len(comps) != n or any(a.shape != self.grid.shape for a in comps):
            raise ValueError(f"need {n} real components on the grid")
        fl = np.zeros((n, n), dtype=np.int64) if self.fluxes is None else _integer_fluxes(self.fluxes, n)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "fluxes", fl)

    @classmethod
    def zero(cls, grid: TorusGrid) -> "U1ConnectionField":
        return cls(grid, tuple(np.zeros(grid.shape) for _ in range(grid.ndim)))

    def curvature(self) -> np.ndarray:
        """dA plus the constant harmonic part, shape grid + (n, n)."""
        n, grid = self.grid.ndim, self.grid
        F = np.zeros(grid.shape + (n, n))
        for j, k in combinations(range(n), 2):
            val = grid.diff(self.components[k], j) - grid.diff(self.components[j], k)
            val = val + 2 * np.pi * self.fluxes[j, k] / (grid.lengths[j] * grid.lengths[k])
            F[..., j, k] = val
            F[..., k, j] = -val
        return F


def _integer_fluxes(fluxes, n: int) -> np.ndarray:
    arr = np.asarray(fluxes)
    if arr.shape != (n, n):
        raise ValueError(f"flux matrix must be {n}x{n}")
    if not np.all(np.isfinite(arr.astype(float))) or np.any(arr != np.round(arr)):
        raise ValueError("fluxes must be integers")
    arr = np.round(arr).astype(np.int64)
    if np.any(arr != -arr.T):
        raise ValueError("flux matrix must be antisymmetric")
    return arr


def _covariant(psi: SpinorField, A: U1ConnectionField, j: int, coupling: float) -> SpinorField:
    return psi.like(partial(psi, j).values + 1j * coupling * A.components[j][..., None] * psi.values)


def twisted_weighted_dirac(psi: SpinorField, A: U1ConnectionField, f,
                           coupling: float = 0.5) -> SpinorField:
    """sum_j g_j (d_j + i coupling A_j) psi - 1/2 grad f . psi."""
    f = _as_weight(f)
    out = np.zeros_like(psi.values)
    for j, g in enumerate(psi.rep.gammas):
        out += _covariant(psi, A, j, coupling).values @ g.T
    return psi.like(out - 0.5 * _clifford_field(psi, psi.grid.grad(f)))


def twisted_weighted_laplacian(psi: SpinorField, A: U1ConnectionField, f,
                               coupling: float = 0.5) -> SpinorField:
    f = _as_weight(f)
    out = np.zeros_like(psi.values)
    for j, df in enumerate(psi.grid.grad(f)):
        cov = _covariant(psi, A, j, coupling)
        out += _covariant(cov, A, j, coupling).values - df[..., None] * cov.values
    return psi.like(out)


def curvature_action(psi: SpinorField, F: np.ndarray) -> np.ndarray:
    """Pointwise sum_{j<k} F_jk g_j g_k psi for a (complex) 2-form field F."""
    out = np.zeros_like(psi.values)
    for j, k, gg in _pair_products(psi.grid.ndim):
        out += F[..., j, k][..., None] * (psi.values @ gg.T)
    return out


def check_twisted_sl(A: U1ConnectionField, f, psi: SpinorField, coupling: float = 0.5) -> float:
    """max |D_{A,f}^2 psi - (-Delta_{A,f} psi + R_f psi / 4 + 1/2 F_A . psi)|.

    The spinor is coupled to the square root of the line bundle, so its
    covariant derivative carries half the connection (``coupling``); the
    bundle curvature is F_A = i dA.
    """
    if np.any(A.fluxes != 0):
        raise ValueError("twisted check requires zero flux (no transition functions)")
    if A.grid != psi.grid:
        raise ValueError("connection and spinor live on different grids")
    f = _as_weight(f)
    lhs = twisted_weighted_dirac(twisted_weighted_dirac(psi, A, f, coupling), A, f, coupling).values
    rhs = -twisted_weighted_laplacian(psi, A, f, coupling).values
    rhs = rhs + 0.25 * flat_weighted_scalar(psi.grid, f)[..., None] * psi.values
    rhs = rhs + 0.5 * curvature_action(psi, 1j * A.curvature())
    return _maxnorm(lhs - rhs)


# -- curvature-level checks on T^4 -----------------------------------------

def c1_squared(fluxes) -> Fraction:
    """int (F/2 pi)^(F/2 pi) for the constant form with integer fluxes.

    Expands F ^ F over all index orderings with permutation signs; exact.
    """
    n = _integer_fluxes(fluxes, 4)
    total = 0
    for p in permutations(range(4)):
        inv = sum(p[a] > p[b] for a in range(4) for b in range(a + 1, 4))
        sign = -1 if inv % 2 else 1
        total += sign * int(n[p[0], p[1]]) * int(n[p[2], p[3]])
    return Fraction(total, 4)


def chern_weil_check(fluxes, lengths=(1.0, 1.0, 1.0, 1.0), nodes: int = 4
                     ) -> tuple[float, float]:
    """(int |F+|^2 - |F-|^2 dV by quadrature, 4 pi^2 c1^2 from the wedge expansion)."""
    n = _integer_fluxes(fluxes, 4)
    grid = TorusGrid((nodes,) * 4, tuple(lengths))
    A = U1ConnectionField(grid, tuple(np.zeros(grid.shape) for _ in range(4)), n)
    F = A.curvature()
    dens = clifford.form_norm2(clifford.self_dual_part(F)) - clifford.form_norm2(
        clifford.anti_self_dual_part(F))
    lhs = float(grid.integrate(dens))
    rhs = 4 * math.pi ** 2 * float(c1_squared(n))
    return lhs, rhs


@dataclass
class MonopoleReport:
    form: np.ndarray
    quartic: float
    action_frobenius2: float
    quadratic_frobenius2: float
    form_norm2: float
    self_duality_defect: float
    ratio_action_to_form: float | None
    ratio_quartic_to_form: float | None
    ratio_quartic_to_quadratic: float | None
    passed: bool


def monopole_algebra_check(psi, f: float = 0.0, rtol: float = 1e-12) -> MonopoleReport:
    """Solve F+ . = e^{-f} q(psi) on W+ for a self-dual F and compare norms."""
    rep = _rep(4)
    psi = np.asarray(psi, dtype=complex)
    Q = math.exp(-f) * clifford.quadratic_map(rep, psi)
    F = clifford.solve_self_dual(rep, Q)
    w_plus = psi[:2] if psi.shape == (4,) else psi
    quartic = math.exp(-2 * f) * float(np.vdot(w_plus, w_plus).real) ** 2
    act = float(np.sum(np.abs(clifford.two_form_action(rep, F)) ** 2))
    qf = float(np.sum(np.abs(Q) ** 2))
    fn = float(clifford.form_norm2(F))
    defect = float(np.max(np.abs(clifford.anti_self_dual_part(F))))
    if fn == 0.0:
        ok = quartic == 0.0 and act == 0.0
        return MonopoleReport(F, quartic, act, qf, fn, defect, None, None, None, ok)
    r_act, r_q, r_qq = act / fn, quartic / fn, quartic / qf
    ok = (abs(r_act - SELFDUAL_ACTION_NORM_RATIO) <= rtol * SELFDUAL_ACTION_NORM_RATIO
          and abs(r_q - MONOPOLE_FORM_RATIO) <= rtol * MONOPOLE_FORM_RATIO
          and abs(r_qq - 2.0) <= 2.0 * rtol
          and defect <= rtol * math.sqrt(fn))
    return MonopoleReport(F, quartic, act, qf, fn, defect, r_act, r_q, r_qq, ok)


# -- random test data ------------------------------------------------------

def random_spinor(grid: TorusGrid, rng: np.random.Generator, kmax: int = 2, twist=None
                  ) -> SpinorField:
    rank = 2 ** (grid.ndim // 2)
    vals = band_limited_field(grid, rng, kmax, components=rank, real=False)
    return SpinorField(grid, vals, twist)


def random_weight(grid: TorusGrid, rng: np.random.Generator, kmax: int = 2,
                  amplitude: float = 1.0) -> np.ndarray:
    return band_limited_field(grid, rng, kmax, amplitude=amplitude)


def random_connection(grid: TorusGrid, rng: np.random.Generator, kmax: int = 2,
                      amplitude: float = 1.0) -> U1ConnectionField:
    comps = tuple(band_limited_field(grid, rng, kmax, amplitude=amplitude)
                  for _ in range(grid.ndim))
    return U1ConnectionField(grid, comps)


def random_twist(grid: TorusGrid, rng: np.random.Generator) -> tuple[float, ...]:
    return tuple(0.5 * float(b) for b in rng.integers(0, 2, size=grid.ndim))
