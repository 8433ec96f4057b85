"""Complex Clifford modules in dimensions 2, 3, 4.

Convention: ``g_i g_j + g_j g_i = -2 delta_ij Id``; every generator is
skew-Hermitian, so Clifford multiplication by a unit vector is unitary.
All matrices have entries in {0, +-1, +-i} and the algebraic identities
hold exactly in floating point.

In dimension 4 the chiral basis is used: the complex volume element is
``diag(1, 1, -1, -1)`` and the positive half-spinors W+ are the first two
components. Two-forms act by ``F. = sum_{i<j} F_ij g_i g_j``. With the
orientation e1^e2^e3^e4, self-dual forms act only on W+ and
anti-self-dual forms only on W-.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

_I2 = np.eye(2, dtype=complex)
_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# Norm of the Clifford action of a self-dual 2-form relative to the 2-form
# norm |F|^2 = sum_{i<j} F_ij^2, for the Frobenius norm on the W+ block.
# Measured by tests/test_clifford.py::test_selfdual_action_norm_constant.
SELFDUAL_ACTION_NORM_RATIO = 4.0


@dataclass(frozen=True)
class CliffordRep:
    dim: int
    gammas: tuple[np.ndarray, ...]

    @property
    def size(self) -> int:
        return self.gammas[0].shape[0]

    def volume_element(self) -> np.ndarray:
        """omega_C = i^floor((n+1)/2) g_1 ... g_n."""
        prod = np.eye(self.size, dtype=complex)
        for g in self.gammas:
            prod = prod @ g
        return (1j ** ((self.dim + 1) // 2)) * prod


def _block(a, b):
    z = np.zeros((2, 2), dtype=complex)
    return np.block([[z, a], [b, z]])


def build_rep(n: int) -> CliffordRep:
    """Chiral complex representation of Cl(n) for n in {2, 3, 4}."""
    if n == 2:
        gammas = (1j * _SIGMA[0], 1j * _SIGMA[1])
    elif n == 3:
        gammas = tuple(1j * s for s in _SIGMA)
    elif n == 4:
        gammas = tuple(_block(1j * s, 1j * s) for s in _SIGMA) + (_block(_I2, -_I2),)
    else:
        raise ValueError(f"unsupported dimension {n}; expected 2, 3 or 4")
    for g in gammas:
        g.setflags(write=False)
    return CliffordRep(n, gammas)


def anticommutator_defect(rep: CliffordRep) -> float:
    """max |g_i g_j + g_j g_i + 2 delta_ij Id| over all pairs (0 when exact)."""
    eye = np.eye(rep.size)
    worst = 0.0
    for i, gi in enumerate(rep.gammas):
        for j, gj in enumerate(rep.gammas):
            d = gi @ gj + gj @ gi + 2.0 * (i == j) * eye
            worst = max(worst, float(np.max(np.abs(d))))
    return worst


def vector_action(rep: CliffordRep, v) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != rep.dim:
        raise ValueError(f"vector has {v.shape[-1]} components, expected {rep.dim}")
    return np.einsum("...i,iab->...ab", v, np.stack(rep.gammas))


def clifford_mul(rep: CliffordRep, v, s) -> np.ndarray:
    """Clifford product v.s; broadcasts over leading (grid) axes."""
    v = np.asarray(v)
    s = np.asarray(s)
    if v.shape[-1] != rep.dim or s.shape[-1] != rep.size:
        raise ValueError("dimension mismatch between vector, spinor and representation")
    return np.einsum("...i,iab,...b->...a", v, np.stack(rep.gammas), s)


def chirality_projectors(rep: CliffordRep) -> tuple[np.ndarray, np.ndarray]:
    if rep.dim % 2:
        raise ValueError("chirality is only defined in even dimensions")
    w = rep.volume_element()
    eye = np.eye(rep.size)
    return (eye + w) / 2, (eye - w) / 2


def _check_antisymmetric(F) -> np.ndarray:
    F = np.asarray(F)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise ValueError("2-form must be a square matrix")
    if not np.allclose(F, -F.T, atol=1e-14, rtol=0):
        raise ValueError("2-form matrix is not antisymmetric")
    return F


def two_form_action(rep: CliffordRep, F) -> np.ndarray:
    """sum_{i<j} F_ij g_i g_j for an antisymmetric (real or complex) F."""
    F = _check_antisymmetric(F)
    if F.shape[0] != rep.dim:
        raise ValueError("2-form dimension does not match representation")
    out = np.zeros((rep.size, rep.size), dtype=complex)
    for i, j in combinations(range(rep.dim), 2):
        out += F[i, j] * (rep.gammas[i] @ rep.gammas[j])
    return out


def hodge_star(F) -> np.ndarray:
    """Hodge star of a 2-form on oriented R^4 (e1^e2^e3^e4 positive)."""
    F = np.asarray(F)
    eps = _levi_civita4()
    return 0.5 * np.einsum("ijkl,...kl->...ij", eps, F)


def self_dual_part(F):
    return 0.5 * (np.asarray(F) + hodge_star(F))


def anti_self_dual_part(F):
    return 0.5 * (np.asarray(F) - hodge_star(F))


def form_norm2(F):
    """|F|^2 = sum_{i<j} |F_ij|^2 (no double counting)."""
    F = np.asarray(F)
    return 0.5 * np.sum(np.abs(F) ** 2, axis=(-2, -1))


def _levi_civita4():
    eps = np.zeros((4,) * 4)
    for p in permutations(range(4)):
        inv = sum(p[a] > p[b] for a in range(4) for b in range(a + 1, 4))
        eps[p] = -1.0 if inv % 2 else 1.0
    return eps


# Orthogonal basis of self-dual forms, each of norm^2 2.
def self_dual_basis() -> list[np.ndarray]:
    basis = []
    for (a, b), (c, d) in (((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2))):
        F = np.zeros((4, 4))
        F[a, b], F[b, a] = 1.0, -1.0
        F[c, d], F[d, c] = 1.0, -1.0
        basis.append(F)
    return basis


def quadratic_map(rep: CliffordRep, psi) -> np.ndarray:
    """Traceless part of psi (x) psi^* on W+, returned as a 2x2 block.

    ``psi`` may be given as a full 4-spinor (which must lie in W+) or as
    its two W+ components.
    """
    if rep.dim != 4:
        raise ValueError("quadratic map is defined for n = 4 only")
    psi = np.asarray(psi, dtype=complex)
    if psi.shape == (4,):
        _, pminus = chirality_projectors(rep)
        if np.linalg.norm(pminus @ psi) > 1e-12 * max(1.0, np.linalg.norm(psi)):
            raise ValueError("spinor is not of positive chirality")
        psi = psi[:2]
    elif psi.shape != (2,):
        raise ValueError("expected a W+ spinor (2 or 4 components)")
    return np.outer(psi, psi.conj()) - 0.5 * np.vdot(psi, psi).real * np.eye(2)


def solve_self_dual(rep: CliffordRep, Q) -> np.ndarray:
    """Self-dual complex 2-form F with two_form_action(F) = Q on W+.

    ``Q`` is a traceless 2x2 endomorphism of W+. Raises if the least-squares
    solution does not reproduce ``Q`` (which would mean the Clifford
    conventions are inconsistent).
    """
    basis = self_dual_basis()
    cols = [two_form_action(rep, B)[:2, :2].ravel() for B in basis]
    A = np.stack(cols, axis=1)
    Q = np.asarray(Q, dtype=complex)
    coef, *_ = np.linalg.lstsq(A, Q.ravel(), rcond=None)
    if np.max(np.abs(A @ coef - Q.ravel())) > 1e-10 * max(1.0, np.max(np.abs(Q))):
        raise ArithmeticError("no self-dual 2-form realises this endomorphism")
    return sum(c * B for c, B in zip(coef, basis))
