"""Seeded identity suite over the spinor, Clifford and curvature checks."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import clifford, spinfield
from .grid import TorusGrid, philox
from .reports import check_record

TOLERANCES = {
    "clifford_square": 1e-13,
    "dirac_conjugation": 1e-10,
    "weighted_sl_t2": 1e-8,
    "weighted_sl_t4": 1e-6,
    "weighted_ibp": 1e-9,
    "energy_identity": 1e-9,
    "weighted_ricci": 1e-8,
    "harmonic_hessian": 1e-7,
    "twisted_sl_t4": 1e-6,
    "chern_weil": 1e-10,
    "monopole_algebra": 1e-12,
}


def _t2_checks(seed: int, n: int) -> list[dict]:
    grid = TorusGrid.cube(n, 2)
    rng = philox(seed, 1)
    twist = spinfield.random_twist(grid, rng)
    psi = spinfield.random_spinor(grid, rng, 3, twist)
    phi = spinfield.random_spinor(grid, rng, 3, twist)
    f = spinfield.random_weight(grid, rng, 3)
    shape = grid.shape
    out = []
    d1 = spinfield.weighted_dirac(psi, f).values
    d2 = spinfield.weighted_dirac_conjugated(psi, f).values
    out.append(check_record("dirac_conjugation", shape, seed, np.max(np.abs(d1 - d2)),
                            TOLERANCES["dirac_conjugation"]))
    out.append(check_record("weighted_sl_t2", shape, seed, spinfield.check_weighted_sl(f, psi),
                            TOLERANCES["weighted_sl_t2"]))
    norms = math.sqrt(spinfield.weighted_inner(psi, psi, f).real
                      * spinfield.weighted_inner(phi, phi, f).real)
    ibp = spinfield.check_weighted_ibp(f, psi, phi) / max(1.0, norms)
    out.append(check_record("weighted_ibp", shape, seed, ibp, TOLERANCES["weighted_ibp"]))
    lhs, rhs = spinfield.energy_identity_terms(f, psi)
    scale = max(1.0, spinfield.weighted_inner(psi, psi, f).real)
    out.append(check_record("energy_identity", shape, seed, abs(lhs - rhs) / scale,
                            TOLERANCES["energy_identity"]))
    ric = max(spinfield.check_weighted_ricci_identity(f, psi, j) for j in range(2))
    out.append(check_record("weighted_ricci", shape, seed, ric, TOLERANCES["weighted_ricci"]))
    const = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    const /= np.linalg.norm(const)
    a, b = spinfield.harmonic_hessian_terms(0.5 * f, grid, const)
    out.append(check_record("harmonic_hessian", shape, seed, np.max(np.abs(a - b)),
                            TOLERANCES["harmonic_hessian"]))
    return out


def _t4_checks(seed: int, n: int, coupling: float) -> list[dict]:
    grid = TorusGrid.cube(n, 4)
    rng = philox(seed, 2)
    twist = spinfield.random_twist(grid, rng)
    psi = spinfield.random_spinor(grid, rng, 2, twist)
    f = spinfield.random_weight(grid, rng, 2)
    A = spinfield.random_connection(grid, rng, 2)
    shape = grid.shape
    return [
        check_record("weighted_sl_t4", shape, seed, spinfield.check_weighted_sl(f, psi),
                     TOLERANCES["weighted_sl_t4"]),
        check_record("twisted_sl_t4", shape, seed,
                     spinfield.check_twisted_sl(A, f, psi, coupling=coupling),
                     TOLERANCES["twisted_sl_t4"]),
    ]


def _algebra_checks(seed: int) -> list[dict]:
    rng = philox(seed, 3)
    out = []
    worst = 0.0
    for n in (2, 3, 4):
        rep = clifford.build_rep(n)
        v = rng.standard_normal(n)
        s = rng.standard_normal(rep.size) + 1j * rng.standard_normal(rep.size)
        vv = clifford.clifford_mul(rep, v, clifford.clifford_mul(rep, v, s))
        worst = max(worst, float(np.max(np.abs(vv + np.dot(v, v) * s))))
    out.append(check_record("clifford_square", [], seed, worst, TOLERANCES["clifford_square"]))
    upper = rng.integers(-3, 4, size=6)
    fl = np.zeros((4, 4), dtype=np.int64)
    fl[np.triu_indices(4, 1)] = upper
    fl = fl - fl.T
    lhs, rhs = spinfield.chern_weil_check(fl)
    out.append(check_record("chern_weil", [4, 4, 4, 4], seed,
                            abs(lhs - rhs) / max(1.0, abs(rhs)), TOLERANCES["chern_weil"]))
    psi = np.zeros(4, dtype=complex)
    psi[:2] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    rep4 = spinfield.monopole_algebra_check(psi, float(rng.uniform(-1.0, 1.0)))
    dev = 0.0 if rep4.form_norm2 == 0 else max(
        abs(rep4.ratio_action_to_form / clifford.SELFDUAL_ACTION_NORM_RATIO - 1.0),
        abs(rep4.ratio_quartic_to_form / spinfield.MONOPOLE_FORM_RATIO - 1.0),
        abs(rep4.ratio_quartic_to_quadratic / 2.0 - 1.0))
    out.append(check_record("monopole_algebra", [], seed, dev, TOLERANCES["monopole_algebra"]))
    return out


def run_seed(seed: int, t2_n: int = 64, t4_n: int = 16, coupling: float = 0.5) -> list[dict]:
    return _algebra_checks(seed) + _t2_checks(seed, t2_n) + _t4_checks(seed, t4_n, coupling)


def thread_count() -> int:
    raw = os.environ.get("SPINFLOW_THREADS", "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"SPINFLOW_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ValueError("SPINFLOW_THREADS must be at least 1")
    return n


def run_suite(seeds, t2_n: int = 64, t4_n: int = 16, coupling: float = 0.5,
              threads: int | None = None) -> dict:
    """Run every check for every seed; records are ordered by seed, then check."""
    seeds = list(seeds)
    threads = thread_count() if threads is None else threads
    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_seed = list(pool.map(lambda s: run_seed(s, t2_n, t4_n, coupling), seeds))
    else:
        per_seed = [run_seed(s, t2_n, t4_n, coupling) for s in seeds]
    records = [r for batch in per_seed for r in batch]
    failing = sorted({r["check"] for r in records if not r["pass"]})
    return {
        "suite": "identities",
        "seeds": seeds,
        "checks": records,
        "failing": failing,
        "pass": not failing,
    }
