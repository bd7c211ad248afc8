"""Entropies and distillable coherence with respect to a reference basis.

All logarithms are base 2. Probabilities below ``ZERO_PROB`` are treated as
exact zeros (``0 log 0 = 0``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmat import (
    CLIP_TOL,
    NORM_TOL,
    RANK_CUTOFF,
    ValidationError,
    dag,
    density_matrix,
)

ZERO_PROB = 1e-15
SHANNON_NEG_TOL = 1e-12
SHANNON_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ReferenceBasis:
    """Orthonormal basis stored as the columns of a unitary matrix."""

    kets: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.kets, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValidationError(f"basis must be a square matrix of kets, got {u.shape}")
        err = np.max(np.abs(dag(u) @ u - np.eye(u.shape[0])))
        if err > NORM_TOL:
            raise ValidationError(f"basis kets are not orthonormal (deviation {err:.3e})")
        u.setflags(write=False)
        object.__setattr__(self, "kets", u)

    @property
    def dim(self) -> int:
        return self.kets.shape[0]

    @classmethod
    def computational(cls, dim: int) -> "ReferenceBasis":
        return cls(np.eye(dim, dtype=complex))

    @classmethod
    def pauli(cls, axis: str) -> "ReferenceBasis":
        """Qubit eigenbasis of Pauli ``X``, ``Y`` or ``Z`` (+1 eigenvector first)."""
        s = 1 / np.sqrt(2)
        table = {
            "Z": np.eye(2),
            "X": np.array([[s, s], [s, -s]]),
            "Y": np.array([[s, s], [1j * s, -1j * s]]),
        }
        try:
            return cls(np.asarray(table[axis.upper()], dtype=complex))
        except KeyError:
            raise ValidationError(f"unknown Pauli axis {axis!r}") from None

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        """Diagonal ``<i|rho|i>`` in this basis; works on stacks of matrices."""
        u = self.kets
        return np.real(np.einsum("ai,...ab,bi->...i", u.conj(), rho, u))


@dataclass(frozen=True)
class DephasingMap:
    """Complete decoherence in a reference basis."""

    basis: ReferenceBasis

    @property
    def dim(self) -> int:
        return self.basis.dim

    @classmethod
    def computational(cls, dim: int = 2) -> "DephasingMap":
        return cls(ReferenceBasis.computational(dim))

    @classmethod
    def pauli(cls, axis: str) -> "DephasingMap":
        return cls(ReferenceBasis.pauli(axis))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        u = self.basis.kets
        p = self.basis.probabilities(rho)
        return (u * p[..., None, :]) @ dag(u)


def resolve_dephasing(delta: DephasingMap | ReferenceBasis | None, dim: int) -> DephasingMap:
    if delta is None:
        return DephasingMap.computational(dim)
    if isinstance(delta, ReferenceBasis):
        delta = DephasingMap(delta)
    if delta.dim != dim:
        raise ValidationError(f"basis dimension {delta.dim} does not match state dimension {dim}")
    return delta


def _entropy_of(p: np.ndarray) -> np.ndarray:
    """Shannon entropy along the last axis without validation."""
    p = np.where(p < ZERO_PROB, 0.0, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=-1)


def shannon(p) -> float:
    """Shannon entropy in bits of a probability vector."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0:
        raise ValidationError("empty probability vector")
    if np.any(p < -SHANNON_NEG_TOL):
        raise ValidationError(f"negative probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    if abs(p.sum() - 1.0) > SHANNON_SUM_TOL:
        raise ValidationError(f"probabilities sum to {p.sum():.12g}, expected 1")
    return float(_entropy_of(p))


def binary_entropy(x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"binary entropy argument {x} outside [0, 1]")
    return shannon([x, 1.0 - x])


def spectrum(rho: np.ndarray) -> np.ndarray:
    """Clipped, renormalized eigenvalues of a (stack of) unit-trace operator(s)."""
    w = np.linalg.eigvalsh(rho)
    w = np.clip(w, 0.0, None)
    return w / w.sum(axis=-1, keepdims=True)


def von_neumann(rho) -> float:
    rho = density_matrix(rho)
    return float(_entropy_of(spectrum(rho)))


def dephase(rho, delta: DephasingMap | ReferenceBasis | None = None) -> np.ndarray:
    rho = density_matrix(rho)
    return resolve_dephasing(delta, rho.shape[0])(rho)


def dephased_entropy(rho, delta: DephasingMap | ReferenceBasis | None = None) -> float:
    """``H_Delta(rho)``: Shannon entropy of the diagonal in the reference basis."""
    rho = density_matrix(rho)
    delta = resolve_dephasing(delta, rho.shape[0])
    return float(_entropy_of(np.clip(delta.basis.probabilities(rho), 0.0, None)))


def distillable_coherence(rho, delta: DephasingMap | ReferenceBasis | None = None) -> float:
    """Distillable coherence ``H_Delta(rho) - S(rho)``, floored at 0."""
    rho = density_matrix(rho)
    delta = resolve_dephasing(delta, rho.shape[0])
    c = _entropy_of(np.clip(delta.basis.probabilities(rho), 0.0, None)) - _entropy_of(spectrum(rho))
    return max(float(c), 0.0)


def entropy_pair(rhos: np.ndarray, delta: DephasingMap) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(H_Delta, S)`` for a stack of unit-trace Hermitian matrices.

    No validation is done here; callers normalize and symmetrize first.
    """
    h = _entropy_of(np.clip(delta.basis.probabilities(rhos), 0.0, None))
    s = _entropy_of(spectrum(rhos))
    return h, s


def relative_entropy(rho, sigma, cutoff: float = RANK_CUTOFF) -> float:
    """Quantum relative entropy ``Tr rho (log rho - log sigma)`` in bits.

    Returns ``inf`` when the support of ``rho`` is not contained in the
    support of ``sigma``.
    """
    rho = density_matrix(rho)
    sigma = density_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ValidationError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    wr, vr = np.linalg.eigh(rho)
    ws, vs = np.linalg.eigh(sigma)
    tol_s = cutoff * max(ws.max(), 0.0)
    tol_r = cutoff * max(wr.max(), 0.0)
    ker = vs[:, ws <= tol_s]
    if ker.size:
        leak = np.real(np.trace(dag(ker) @ rho @ ker))
        if leak > max(tol_r, CLIP_TOL):
            return float("inf")
    pr = np.where(wr > tol_r, wr, 0.0)
    ps = ws > tol_s
    term_rr = float(np.sum(np.where(pr > 0, pr * np.log2(np.where(pr > 0, pr, 1.0)), 0.0)))
    # Tr rho log sigma restricted to the support of sigma
    overlap = np.abs(dag(vs[:, ps]) @ vr) ** 2  # |<s_k|r_j>|^2
    term_rs = float(np.sum(overlap @ pr * np.log2(ws[ps])))
    return max(term_rr - term_rs, 0.0)


def local_bound_gap(rho, delta: DephasingMap | ReferenceBasis | None = None) -> float:
    """Slack ``H_Delta(rho) - C_d(rho)`` in the local uncertainty bound; equals ``S(rho)``."""
    return dephased_entropy(rho, delta) - distillable_coherence(rho, delta)


def max_overlap(delta: DephasingMap, delta_prime: DephasingMap) -> float:
    """``max_{i,j} |<i|j'>|^2`` between two reference bases."""
    g = dag(delta.basis.kets) @ delta_prime.basis.kets
    return float(np.max(np.abs(g) ** 2))
