"""Perelman's lambda-entropy and 2D Ricci flow on conformally flat tori.

A metric is g = e^{2u} g_flat on the torus grid. Then dV = e^{2u} dx,
Delta_g = e^{-2u} Delta_flat and R = -2 e^{-2u} Delta_flat u.

lambda(g) is the lowest eigenvalue of -4 Delta_g + R in L^2(dV). With
v = e^{u} w the problem becomes the ordinary symmetric eigenproblem

    H v = e^{-u} (-4 Delta_flat) (e^{-u} v) + R v = lambda v

on the flat grid, solved by shifted inverse iteration with preconditioned
conjugate-gradient inner solves.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .grid import TorusGrid


class EigensolverError(RuntimeError):
    pass


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class ConformalTorusMetric:
    grid: TorusGrid
    u: np.ndarray

    def __post_init__(self):
        if self.grid.ndim != 2:
            raise ValueError("conformal torus metrics are two-dimensional")
        u = np.asarray(self.u, dtype=float)
        self.grid.check(u)
        if not np.all(np.isfinite(u)):
            raise ValueError("conformal factor must be finite")
        object.__setattr__(self, "u", u)

    @classmethod
    def flat(cls, n: int, lengths=(1.0, 1.0)) -> "ConformalTorusMetric":
        grid = TorusGrid((n, n), lengths)
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, n: int, fn, lengths=(1.0, 1.0)) -> "ConformalTorusMetric":
        grid = TorusGrid((n, n), lengths)
        x, y = grid.coords()
        return cls(grid, np.broadcast_to(fn(x, y, *grid.lengths), grid.shape).astype(float))

    @classmethod
    def cosine_bump(cls, n: int, amplitude: float, lengths=(1.0, 1.0),
                    mode: str = "x") -> "ConformalTorusMetric":
        """u = amplitude cos(2 pi x/L1) (``mode='x'``) or times cos(2 pi y/L2) (``'xy'``)."""
        if mode == "x":
            return cls.from_function(n, lambda x, y, L1, L2: amplitude * np.cos(2 * np.pi * x / L1),
                                     lengths)
        if mode == "xy":
            return cls.from_function(
                n, lambda x, y, L1, L2: amplitude * np.cos(2 * np.pi * x / L1)
                * np.cos(2 * np.pi * y / L2), lengths)
        raise ValueError(f"unknown mode {mode!r}")

    @property
    def density(self) -> np.ndarray:
        """e^{2u}: dV = density * dx."""
        return np.exp(2.0 * self.u)

    @property
    def volume(self) -> float:
        return float(self.grid.integrate(self.density))

    def integrate(self, field_) -> float:
        return self.grid.integrate(field_ * self.density)

    def scaled(self, c: float) -> "ConformalTorusMetric":
        """The homothetic metric c^2 g."""
        return replace(self, u=self.u + math.log(c))

    def laplacian(self, h: np.ndarray) -> np.ndarray:
        return np.exp(-2.0 * self.u) * self.grid.laplacian(h)

    def grad_norm2(self, h: np.ndarray) -> np.ndarray:
        gx, gy = self.grid.grad(h)
        return np.exp(-2.0 * self.u) * (gx * gx + gy * gy)


@dataclass(frozen=True)
class WeightField:
    """Weight f defining the measure e^{-f} dV.

    ``mode`` records the normalisation: ``'unit'`` for int e^{-f} dV = 1 and
    ``'volume'`` for int e^{-f} dV = Vol(g).
    """

    f: np.ndarray
    mode: str = "unit"

    def __post_init__(self):
        if self.mode not in ("unit", "volume"):
            raise ValueError("mode must be 'unit' or 'volume'")

    def normalized(self, g: ConformalTorusMetric, mode: str | None = None) -> "WeightField":
        mode = self.mode if mode is None else mode
        target = 1.0 if mode == "unit" else g.volume
        mass = g.integrate(np.exp(-self.f))
        return WeightField(self.f + math.log(mass / target), mode)

    def mass(self, g: ConformalTorusMetric) -> float:
        return float(g.integrate(np.exp(-self.f)))


@dataclass
class EntropyResult:
    lam: float
    eigenfunction: np.ndarray
    minimizer_f: WeightField
    iterations: int = 0
    residual: float = 0.0

    @property
    def weight(self) -> np.ndarray:
        """e^{-f}; equals the squared eigenfunction for the unit normalisation."""
        return np.exp(-self.minimizer_f.f)


def _check_grid(g: ConformalTorusMetric, arr: np.ndarray) -> None:
    if np.shape(arr) != g.grid.shape:
        raise ValueError(f"field shape {np.shape(arr)} does not match grid {g.grid.shape}")


def scalar_curvature(g: ConformalTorusMetric) -> np.ndarray:
    return -2.0 * np.exp(-2.0 * g.u) * g.grid.laplacian(g.u)


def weighted_scalar(g: ConformalTorusMetric, f, check: bool = True) -> np.ndarray:
    """R_f = R + 2 Delta f - |grad f|^2.

    The alternative form R + 2 Delta_f f + |grad f|^2 (Delta_f the drift
    Laplacian) is evaluated as well and compared when ``check`` is set.
    """
    f = f.f if isinstance(f, WeightField) else np.asarray(f, dtype=float)
    _check_grid(g, f)
    R = scalar_curvature(g)
    lap = g.laplacian(f)
    gf2 = g.grad_norm2(f)
    rf = R + 2.0 * lap - gf2
    if check:
        drift_lap = lap - gf2
        alt = R + 2.0 * drift_lap + gf2
        scale = max(1.0, float(np.max(np.abs(rf))))
        if np.max(np.abs(alt - rf)) > 1e-12 * scale:
            raise ArithmeticError("the two forms of the weighted scalar curvature disagree")
    return rf


def weighted_ricci(g: ConformalTorusMetric, f) -> np.ndarray:
    """Covariant coordinate components of Ric_f = (R/2) g + Hess_g f, shape (N, N, 2, 2)."""
    f = f.f if isinstance(f, WeightField) else np.asarray(f, dtype=float)
    _check_grid(g, f)
    grid = g.grid
    R = scalar_curvature(g)
    du = grid.grad(g.u)
    df = grid.grad(f)
    hess = grid.hessian(f)
    dot = du[0] * df[0] + du[1] * df[1]
    e2u = g.density
    out = np.empty(grid.shape + (2, 2))
    for i in range(2):
        for j in range(2):
            # Christoffel term for the conformal metric
            chris = du[i] * df[j] + du[j] * df[i] - (i == j) * dot
            out[..., i, j] = hess[..., i, j] - chris + (i == j) * 0.5 * R * e2u
    return out


def tensor_norm2(g: ConformalTorusMetric, T: np.ndarray) -> np.ndarray:
    """|T|_g^2 for a covariant 2-tensor field."""
    return np.exp(-4.0 * g.u) * np.sum(T * T, axis=(-2, -1))


def tensor_trace(g: ConformalTorusMetric, T: np.ndarray) -> np.ndarray:
    return np.exp(-2.0 * g.u) * (T[..., 0, 0] + T[..., 1, 1])


def _operator(g: ConformalTorusMetric):
    grid = g.grid
    emu = np.exp(-g.u)
    R = scalar_curvature(g)
    k2 = grid.k_squared()

    def apply(v):
        return emu * grid.ifft(4.0 * k2 * grid.fft(emu * v)).real + R * v

    return apply, R, k2


def lambda_entropy(g: ConformalTorusMetric, tol: float = 1e-11, maxiter: int = 200,
                   normalization: str = "unit", x0: np.ndarray | None = None,
                   step_tol: float = 1e-12) -> EntropyResult:
    """Lowest eigenpair of -4 Delta_g + R and the entropy minimiser f = -2 log u1.

    Converged when ||H v - lam v|| <= tol * max(1, |lam|) for unit v (or
    the roundoff floor 16 eps ||H||) and successive iterates differ by at
    most ``step_tol``. The second test matters on fine grids: the residual
    floor grows like N^2 while the eigenvector keeps improving.
    ``x0`` warm-starts the iteration with a previous eigenfunction.
    """
    grid = g.grid
    apply, R, k2 = _operator(g)
    shape = grid.shape
    size = int(np.prod(shape))
    mu = float(np.min(R)) - 1.0
    alpha = float(np.mean(np.exp(-2.0 * g.u)))
    beta = float(np.mean(R)) - mu
    precond_symbol = 4.0 * alpha * k2 + max(beta, 1.0)

    A = LinearOperator((size, size), dtype=float,
                       matvec=lambda x: (apply(x.reshape(shape)) - mu * x.reshape(shape)).ravel())
    M = LinearOperator((size, size), dtype=float,
                       matvec=lambda x: grid.ifft(grid.fft(x.reshape(shape)) / precond_symbol
                                                 ).real.ravel())
    if x0 is None:
        v = np.exp(g.u)
    else:
        v = np.asarray(x0, dtype=float) * np.exp(g.u)
    v = v / math.sqrt(grid.integrate(v * v))
    lam = grid.integrate(v * apply(v))
    opnorm = 4.0 * float(np.max(k2)) * float(np.max(np.exp(-2.0 * g.u))) + float(np.max(np.abs(R)))
    floor = 16.0 * np.finfo(float).eps * opnorm
    res = np.inf
    it = 0
    for it in range(1, maxiter + 1):
        guess = (v / max(lam - mu, 1e-300)).ravel()
        sol, info = cg(A, v.ravel(), x0=guess, rtol=1e-14, atol=0.0, maxiter=2000, M=M)
        if info < 0:
            raise EigensolverError("inner CG solve broke down")
        prev = v
        v = sol.reshape(shape)
        v = v / math.sqrt(grid.integrate(v * v))
        step = math.sqrt(grid.integrate((v - prev) ** 2))
        Hv = apply(v)
        lam = grid.integrate(v * Hv)
        res = math.sqrt(grid.integrate((Hv - lam * v) ** 2))
        if res <= max(tol * max(1.0, abs(lam)), floor) and step <= step_tol:
            break
    else:
        raise EigensolverError(f"inverse iteration did not converge (residual {res:.3e})")
    if np.sum(v) < 0:
        v = -v
    w = v * np.exp(-g.u)
    if np.min(w) <= 1e-12 * np.max(w):
        raise EigensolverError("ground state is not strictly positive; refine the grid")
    # unit L^2(dV) normalisation of w is the unit normalisation of e^{-f} = w^2
    f = WeightField(-2.0 * np.log(w), "unit")
    if normalization != "unit":
        f = f.normalized(g, normalization)
    return EntropyResult(float(lam), w, f, it, float(res))


def fourier_second_derivative_matrix(n: int, length: float) -> np.ndarray:
    """Dense periodic spectral second-derivative matrix (Trefethen's formula)."""
    h = 2 * np.pi / n
    i = np.arange(n)
    d = (i[:, None] - i[None, :]) % n
    with np.errstate(divide="ignore"):
        if n % 2 == 0:
            col = -0.5 * (-1.0) ** d / np.sin(d * h / 2) ** 2
            diag = -np.pi ** 2 / (3 * h ** 2) - 1.0 / 6.0
        else:
            col = -0.5 * (-1.0) ** d / (np.sin(d * h / 2) * np.tan(d * h / 2))
            diag = -np.pi ** 2 / (3 * h ** 2) + 1.0 / 12.0
    mat = np.where(d == 0, diag, col)
    return mat * (2 * np.pi / length) ** 2


def lambda_entropy_dense(g: ConformalTorusMetric, count: int = 1) -> np.ndarray:
    """Lowest eigenvalues by dense diagonalisation (small grids only)."""
    n1, n2 = g.grid.shape
    if n1 * n2 > 64 * 64:
        raise ValueError("dense fallback is limited to grids of at most 64 x 64")
    d1 = fourier_second_derivative_matrix(n1, g.grid.lengths[0])
    d2 = fourier_second_derivative_matrix(n2, g.grid.lengths[1])
    lap = np.kron(d1, np.eye(n2)) + np.kron(np.eye(n1), d2)
    emu = np.exp(-g.u).ravel()
    H = -4.0 * emu[:, None] * lap * emu[None, :] + np.diag(scalar_curvature(g).ravel())
    H = 0.5 * (H + H.T)
    return np.linalg.eigvalsh(H)[:count]


def normalized_lambda(g: ConformalTorusMetric, result: EntropyResult | None = None) -> float:
    """Scale-invariant lambda * Vol (the 2D case of lambda Vol^(2/n))."""
    if result is None:
        result = lambda_entropy(g)
    return result.lam * g.volume


@dataclass
class FlowSample:
    t: float
    metric: ConformalTorusMetric
    entropy: EntropyResult

    @property
    def normalized_lambda(self) -> float:
        return self.entropy.lam * self.metric.volume


# RK4 is stable on the negative real axis up to |h z| <= 2.785
_RK4_REAL_STABILITY = 2.785


def cfl_step(g: ConformalTorusMetric, cfl: float = 0.5) -> float:
    """Stable explicit RK4 step for u_t = e^{-2u} Delta u, times the safety factor ``cfl``.

    The linearised operator has spectral radius at most
    max(e^{-2u}) * max|k|^2 = e^{-2 min u} * max|k|^2 on the grid.
    """
    if not 0 < cfl <= 1:
        raise ValueError("cfl must lie in (0, 1]")
    radius = math.exp(-2.0 * float(np.min(g.u))) * float(np.max(g.grid.k_squared()))
    return cfl * _RK4_REAL_STABILITY / radius


def _flow_rhs(grid: TorusGrid, u: np.ndarray, normalized: bool) -> np.ndarray:
    lap = grid.laplacian(u)
    rate = np.exp(-2.0 * u) * lap  # = -R/2
    if normalized:
        # average scalar curvature: int R dV / Vol = -2 int Delta u dx / Vol
        vol = grid.integrate(np.exp(2.0 * u))
        rbar = -2.0 * grid.integrate(lap) / vol
        rate = rate + 0.5 * rbar
    return rate


def ricci_flow_2d(g0: ConformalTorusMetric, t_end: float, dt: float, normalized: bool = False,
                  substeps: int | None = None, cfl: float = 0.5, eig_tol: float = 1e-11
                  ) -> list[FlowSample]:
    """Ricci flow u_t = -R/2 (plus R_bar/2 when ``normalized``), sampled every ``dt``.

    Each sample interval is covered by ``substeps`` RK4 steps; by default the
    smallest count satisfying the CFL bound is used. An explicit ``substeps``
    that violates the bound is rejected with CFLError.
    """
    if not dt > 0 or t_end < 0:
        raise ValueError("dt must be positive and t_end non-negative")
    grid = g0.grid
    nsamples = int(round(t_end / dt))
    u = g0.u.copy()
    g = g0
    ent = lambda_entropy(g, tol=eig_tol)
    out = [FlowSample(0.0, g, ent)]
    for k in range(1, nsamples + 1):
        limit = cfl_step(g, cfl)
        if substeps is None:
            nsub = max(1, math.ceil(dt / limit))
        else:
            nsub = int(substeps)
            if dt / nsub > limit:
                raise CFLError(f"step {dt / nsub:.3e} exceeds CFL limit {limit:.3e}")
        h = dt / nsub
        for _ in range(nsub):
            k1 = _flow_rhs(grid, u, normalized)
            k2 = _flow_rhs(grid, u + 0.5 * h * k1, normalized)
            k3 = _flow_rhs(grid, u + 0.5 * h * k2, normalized)
            k4 = _flow_rhs(grid, u + h * k3, normalized)
            u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        g = ConformalTorusMetric(grid, u.copy())
        ent = lambda_entropy(g, tol=eig_tol, x0=ent.eigenfunction)
        out.append(FlowSample(k * dt, g, ent))
    return out


def entropy_derivative_density(sample: FlowSample) -> float:
    """2 int |Ric_f|^2 e^{-f} dV at the unit-normalised minimiser."""
    g = sample.metric
    f = sample.entropy.minimizer_f
    if f.mode != "unit":
        f = f.normalized(g, "unit")
    ric = weighted_ricci(g, f)
    return 2.0 * float(g.integrate(tensor_norm2(g, ric) * np.exp(-f.f)))


@dataclass
class DerivativeReport:
    times: np.ndarray
    fd_derivative: np.ndarray
    ricci_integral: np.ndarray
    rel_error: np.ndarray
    max_rel_error: float
    max_abs_error: float
    extra: dict = field(default_factory=dict)


def perelman_derivative_check(trajectory: list[FlowSample], floor: float = 1e-12
                              ) -> DerivativeReport:
    """Centered-difference d lambda/dt against 2 int |Ric_f|^2 e^{-f} dV at interior samples."""
    if len(trajectory) < 3:
        raise ValueError("need at least three samples for a centered difference")
    t = np.array([s.t for s in trajectory])
    lam = np.array([s.entropy.lam for s in trajectory])
    fd = (lam[2:] - lam[:-2]) / (t[2:] - t[:-2])
    rhs = np.array([entropy_derivative_density(s) for s in trajectory[1:-1]])
    abs_err = np.abs(fd - rhs)
    rel = abs_err / np.maximum(np.abs(rhs), floor)
    return DerivativeReport(t[1:-1], fd, rhs, rel, float(np.max(rel)), float(np.max(abs_err)))


def cauchy_schwarz_terms(phi, g: ConformalTorusMetric) -> tuple[float, float]:
    """(Vol (int phi^4 / int phi^2)^2, int phi^4) in the measure dV_g."""
    phi = np.asarray(phi, dtype=float)
    _check_grid(g, phi)
    if not np.any(phi != 0):
        raise ValueError("phi vanishes identically")
    if np.any(phi < 0):
        raise ValueError("phi must be non-negative")
    i2 = g.integrate(phi ** 2)
    i4 = g.integrate(phi ** 4)
    return float(g.volume * (i4 / i2) ** 2), float(i4)


def cauchy_schwarz_chain_check(phi, g: ConformalTorusMetric, rtol: float = 1e-12) -> bool:
    lhs, rhs = cauchy_schwarz_terms(phi, g)
    return lhs >= rhs * (1.0 - rtol)


# -- export ----------------------------------------------------------------

TRAJECTORY_COLUMNS = ("t", "lambda", "normalized_lambda", "vol", "min_R", "max_R", "stddev_Rf")


def trajectory_rows(trajectory: list[FlowSample]):
    for s in trajectory:
        g = s.metric
        R = scalar_curvature(g)
        rf = weighted_scalar(g, s.entropy.minimizer_f, check=False)
        yield (s.t, s.entropy.lam, s.normalized_lambda, g.volume,
               float(R.min()), float(R.max()), float(np.std(rf)))


def write_trajectory_csv(trajectory: list[FlowSample], path_or_file) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for row in trajectory_rows(trajectory):
            w.writerow([f"{x:.17g}" for x in row])
    finally:
        if own:
            fh.close()


_MAGIC = b"SPFG"
_HEADER = "4sc3xIIdd"  # magic, endianness tag, pad, N1, N2, L1, L2


def write_metric_snapshot(g: ConformalTorusMetric, path) -> None:
    """Binary dump: 4-byte magic, endianness tag ('<' or '>'), N1, N2, L1, L2, then u (float64, C order)."""
    tag = "<" if np.little_endian else ">"
    n1, n2 = g.grid.shape
    header = struct.pack(tag + _HEADER, _MAGIC, tag.encode(), n1, n2, *g.grid.lengths)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(g.u, dtype=tag + "f8").tobytes())


def read_metric_snapshot(path) -> ConformalTorusMetric:
    with open(path, "rb") as fh:
        raw = fh.read()
    tag = raw[4:5].decode()
    if raw[:4] != _MAGIC or tag not in "<>":
        raise ValueError("not a metric snapshot")
    size = struct.calcsize(tag + _HEADER)
    _, _, n1, n2, l1, l2 = struct.unpack(tag + _HEADER, raw[:size])
    u = np.frombuffer(raw[size:], dtype=tag + "f8")
    if u.size != n1 * n2:
        raise ValueError("truncated metric snapshot")
    return ConformalTorusMetric(TorusGrid((n1, n2), (l1, l2)), u.reshape(n1, n2).astype(float))
