"""Left-invariant metrics on S^3 = SU(2) and their volume-normalised Ricci flow.

The frame e1, e2, e3 satisfies [e_i, e_j] = 2 e_k for cyclic (i, j, k); a
left-invariant metric is diag(a, b, c) in this frame and (1, 1, 1) is the
unit round sphere. The Berger metric with parameter kappa is
(kappa^2, 1, 1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

# structure constants C[i, j, k]: [e_i, e_j] = sum_k C[i, j, k] e_k
_C = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _C[_i, _j, _k] = 2.0
    _C[_j, _i, _k] = -2.0


@dataclass(frozen=True)
class LeftInvariantMetric3:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not all(math.isfinite(x) and x > 0 for x in (self.a, self.b, self.c)):
            raise ValueError(f"metric coefficients must be positive, got {self.coeffs}")

    @classmethod
    def berger(cls, kappa: float) -> "LeftInvariantMetric3":
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        return cls(kappa * kappa, 1.0, 1.0)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)

    @property
    def volume_factor(self) -> float:
        """sqrt(abc); the Riemannian volume is 2 pi^2 times this."""
        return math.sqrt(self.a * self.b * self.c)

    @property
    def kappa(self) -> float:
        """Berger shape parameter sqrt(a / b) (scale invariant)."""
        return math.sqrt(self.a / self.b)

    def scaled_to_volume(self, vol_factor: float) -> "LeftInvariantMetric3":
        s = (vol_factor / self.volume_factor) ** (2.0 / 3.0)
        return LeftInvariantMetric3(self.a * s, self.b * s, self.c * s)

    def distance_to_round(self) -> float:
        """max_i |g_i / (abc)^(1/3) - 1|: zero exactly for round metrics."""
        x = self.coeffs
        return float(np.max(np.abs(x / np.cbrt(np.prod(x)) - 1.0)))


def _ricci_orthonormal(coeffs: np.ndarray) -> np.ndarray:
    # orthonormal frame E_i = e_i / sqrt(g_i)
    s = np.sqrt(coeffs)
    c = _C * s[None, None, :] / (s[:, None, None] * s[None, :, None])
    # Koszul: <nabla_{E_i} E_j, E_k> = 1/2 (c_ijk - c_jki + c_kij)
    gam = 0.5 * (c - np.transpose(c, (2, 0, 1)) + np.transpose(c, (1, 2, 0)))
    # R(E_i, E_j) E_k = nabla_i nabla_j E_k - nabla_j nabla_i E_k - nabla_[E_i,E_j] E_k
    # with nabla_i E_k = gam[i, k, l] E_l for left-invariant fields
    nn = np.einsum("jkl,ilm->ijkm", gam, gam)
    riem = nn - np.transpose(nn, (1, 0, 2, 3)) - np.einsum("ijp,pkm->ijkm", c, gam)
    # Ric(E_j, E_k) = sum_i <R(E_i, E_j) E_k, E_i>
    ric = np.einsum("ijki->jk", riem)
    return 0.5 * (ric + ric.T)


def ricci_from_structure_constants(m: LeftInvariantMetric3) -> np.ndarray:
    """Ricci tensor Ric(e_i, e_j) in the (non-orthonormal) Lie algebra frame."""
    coeffs = m.coeffs
    s = np.sqrt(coeffs)
    return _ricci_orthonormal(coeffs) * np.outer(s, s)


def scalar_curvature(m: LeftInvariantMetric3) -> float:
    return float(np.trace(_ricci_orthonormal(m.coeffs)))


def scalar_curvature_berger(kappa: float) -> float:
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return 2.0 * (4.0 - kappa * kappa)


def _pair_matches(kappa: float, p: np.ndarray, q: np.ndarray, tol: float) -> np.ndarray:
    k2 = kappa * kappa
    ksq = round(k2)
    if abs(k2 - ksq) < 1e-12 * max(1.0, k2):
        # exact integer test: kappa^4/4 - (p-q)^2 == 4 p q kappa^2
        K = int(ksq)
        p = p.astype(object)
        q = q.astype(object)
        lhs = K * K - 4 * (p - q) ** 2
        return np.array((lhs >= 0) & (lhs == 16 * p * q * K), dtype=bool)
    rhs = 2.0 * np.sqrt(4.0 * p * q * k2 + (p - q) ** 2)
    return np.abs(k2 - rhs) <= tol


def harmonic_spinor_solutions(kappa: float, search_bound: int, tol: float = 1e-9
                              ) -> list[tuple[int, int]]:
    """Positive integer pairs (p, q) <= search_bound solving
    kappa^2 = 2 sqrt(4 p q kappa^2 + (p - q)^2), in lexicographic order.

    Only pairs that can possibly match are evaluated: any solution has
    4 kappa sqrt(pq) <= kappa^2 + tol and 2|p - q| <= kappa^2 + tol.
    """
    if search_bound < 1 or not tol > 0:
        raise ValueError("search_bound must be >= 1 and tol > 0")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    k2 = kappa * kappa
    pq_max = ((k2 + tol) / (4.0 * kappa)) ** 2
    diff_max = (k2 + tol) / 2.0
    out = []
    for p in range(1, search_bound + 1):
        qmax = min(search_bound, int(math.floor(pq_max / p)), int(math.floor(p + diff_max)))
        qmin = max(1, int(math.ceil(p - diff_max)))
        if qmax < qmin:
            if p > pq_max:
                break
            continue
        q = np.arange(qmin, qmax + 1)
        hit = _pair_matches(kappa, np.full_like(q, p), q, tol)
        out.extend((p, int(qq)) for qq in q[hit])
    return out


@dataclass
class FlowTrajectory:
    times: list[float] = field(default_factory=list)
    metrics: list[LeftInvariantMetric3] = field(default_factory=list)
    scalar_curvatures: list[float] = field(default_factory=list)
    spinor_counts: list[int] = field(default_factory=list)

    @property
    def kappas(self) -> np.ndarray:
        return np.array([m.kappa for m in self.metrics])

    def rows(self):
        for t, m, R, n in zip(self.times, self.metrics, self.scalar_curvatures,
                              self.spinor_counts):
            yield t, m.a, m.b, m.c, m.kappa, R, n

    def to_csv(self, path_or_file) -> None:
        header = ["t", "a", "b", "c", "kappa", "R", "n_solutions"]
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in self.rows():
                w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in row])
        finally:
            if own:
                fh.close()


class IntegratorError(RuntimeError):
    pass


def _rhs(x: np.ndarray) -> np.ndarray:
    ric_on = _ricci_orthonormal(x)
    R = float(np.trace(ric_on))
    # d g_ii / dt = -2 Ric(e_i, e_i) + (2/3) R g_ii ; R is constant in space
    return -2.0 * np.diag(ric_on) * x + (2.0 / 3.0) * R * x


def normalized_ricci_flow(m0: LeftInvariantMetric3, t_end: float, dt: float = 1e-3,
                          search_bound: int = 64, tol: float = 1e-9,
                          volume_tol: float = 1e-5, stiffness: float = 0.5
                          ) -> FlowTrajectory:
    """Volume-normalised Ricci flow of a left-invariant metric, sampled every ``dt``.

    Each sample interval is split into RK4 substeps of length at most
    ``stiffness / (16 max|sec|)`` so large-kappa starts stay stable; the
    volume is renormalised after every substep. A substep whose relative
    volume drift exceeds ``volume_tol`` is rejected with IntegratorError.
    The harmonic-spinor pair count is taken at the Berger shape sqrt(a/b).
    """
    if not dt > 0 or t_end < 0:
        raise ValueError("dt must be positive and t_end non-negative")
    vol = m0.volume_factor
    x = m0.coeffs.copy()
    traj = FlowTrajectory()

    def record(t, x):
        m = LeftInvariantMetric3(*x)
        traj.times.append(t)
        traj.metrics.append(m)
        traj.scalar_curvatures.append(scalar_curvature(m))
        traj.spinor_counts.append(len(harmonic_spinor_solutions(m.kappa, search_bound, tol)))

    nsteps = int(round(t_end / dt))
    record(0.0, x)
    for step in range(1, nsteps + 1):
        curv = float(np.max(np.abs(np.diag(_ricci_orthonormal(x)))))
        nsub = max(1, math.ceil(dt * 16.0 * curv / stiffness))
        h = dt / nsub
        for _ in range(nsub):
            k1 = _rhs(x)
            k2 = _rhs(x + 0.5 * h * k1)
            k3 = _rhs(x + 0.5 * h * k2)
            k4 = _rhs(x + h * k3)
            y = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(y > 0):
                raise IntegratorError(f"metric degenerated at t={step * dt:.6g}")
            drift = abs(math.sqrt(np.prod(y)) / vol - 1.0)
            if drift > volume_tol:
                raise IntegratorError(
                    f"volume drift {drift:.3e} exceeds {volume_tol:.1e} at t={step * dt:.6g}")
            x = y * (vol / math.sqrt(np.prod(y))) ** (2.0 / 3.0)
        record(step * dt, x)
    return traj
