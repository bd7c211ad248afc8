"""Dense Hermitian linear algebra for small quantum systems.

Matrices are plain ``numpy`` complex arrays. Density matrices are validated
at API boundaries through :func:`density_matrix`, which applies the
eigenvalue clipping policy described below.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
CLIP_TOL = 1e-9
RANK_CUTOFF = 1e-9
NORM_TOL = 1e-10


class ValidationError(ValueError):
    """Input violates a structural contract (shape, Hermiticity, positivity)."""


class DomainError(ValueError):
    """A matrix function is undefined on part of the spectrum."""


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {a.shape}")
    return a


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dag(m)))) if m.size else 0.0


def check_hermitian(m, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    err = hermiticity_error(a)
    if err > tol:
        raise ValidationError(f"{name} is not Hermitian (max deviation {err:.3e})")
    return 0.5 * (a + dag(a))


def eigh(m, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, v)`` with ``m = v @ diag(w) @ v^dagger`` and orthonormal
    columns in ``v``.
    """
    a = check_hermitian(m, tol)
    w, v = np.linalg.eigh(a)
    return w[::-1].copy(), v[:, ::-1].copy()


def mat_func(
    m,
    f: Callable[[np.ndarray], np.ndarray],
    *,
    pseudo_inverse: bool = False,
    cutoff: float = RANK_CUTOFF,
) -> np.ndarray:
    """Apply a real function to the spectrum of a Hermitian matrix.

    Eigenvalues in ``[-CLIP_TOL, 0)`` are clipped to zero before ``f`` is
    applied. With ``pseudo_inverse=True`` eigenvalues at or below
    ``cutoff * max|eigenvalue|`` are mapped to 0 instead of being passed to
    ``f``; this realizes support-restricted inverses and inverse roots.

    Raises
    ------
    DomainError
        If ``f`` returns a non-finite value on the (clipped) spectrum.
    """
    w, v = eigh(m)
    w = np.where((w < 0) & (w >= -CLIP_TOL), 0.0, w)
    scale = max(float(np.max(np.abs(w))), 0.0) if w.size else 0.0
    if pseudo_inverse:
        keep = w > cutoff * scale
        fw = np.zeros_like(w)
        if np.any(keep):
            fw[keep] = f(w[keep])
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            fw = np.asarray(f(w), dtype=float)
    if not np.all(np.isfinite(fw)):
        bad = w[~np.isfinite(fw)]
        raise DomainError(f"function undefined at eigenvalue(s) {bad}")
    out = (v * fw) @ dag(v)
    return 0.5 * (out + dag(out))


def density_matrix(m, *, name: str = "density matrix") -> np.ndarray:
    """Validate and clean a density matrix.

    Eigenvalues in ``[-1e-9, 0)`` are clipped to zero and the spectrum is
    renormalized; anything more negative is rejected, as is a trace more
    than ``1e-9`` away from one.
    """
    a = check_hermitian(m, name=name)
    tr = float(np.trace(a).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"{name} has trace {tr:.12g}, expected 1")
    w, v = np.linalg.eigh(a)
    if w[0] < -CLIP_TOL:
        raise ValidationError(
            f"{name} is not positive semidefinite (most negative eigenvalue {w[0]:.6g})"
        )
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
        a = (v * w) @ dag(v)
        a = 0.5 * (a + dag(a))
    return a


def is_density_matrix(m) -> bool:
    try:
        density_matrix(m)
    except ValidationError:
        return False
    return True


def ket(amplitudes, *, normalize: bool = False) -> np.ndarray:
    """Column state vector; enforces unit norm unless ``normalize`` is set."""
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    n = np.linalg.norm(v)
    if normalize:
        if n == 0:
            raise ValidationError("cannot normalize the zero vector")
        return v / n
    if abs(n - 1.0) > NORM_TOL:
        raise ValidationError(f"ket norm {n:.12g} is not 1")
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def pinv_sqrt(rho, cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Moore-Penrose inverse square root, zero outside the support."""
    rho = density_matrix(rho)
    return mat_func(rho, lambda x: x ** -0.5, pseudo_inverse=True, cutoff=cutoff)


def sqrtm_psd(m) -> np.ndarray:
    return mat_func(m, lambda x: np.sqrt(np.clip(x, 0.0, None)))


def kron(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, as_matrix(op))
    return out


def partial_trace(m, dims: Sequence[int], keep: str = "B") -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    Parameters
    ----------
    m : array_like
        Operator on ``C^{d_A} (x) C^{d_B}``.
    dims : (int, int)
        ``(d_A, d_B)``.
    keep : {"A", "B"}
        Which subsystem survives.
    """
    a = as_matrix(m)
    d_a, d_b = (int(d) for d in dims)
    if a.shape != (d_a * d_b, d_a * d_b):
        raise ValidationError(
            f"operator of shape {a.shape} does not match dims ({d_a}, {d_b})"
        )
    t = a.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValidationError(f"keep must be 'A' or 'B', got {keep!r}")


def swap_operator(d_a: int, d_b: int) -> np.ndarray:
    """Permutation taking ``|i>|j>`` on ``A (x) B`` to ``|j>|i>`` on ``B (x) A``."""
    s = np.zeros((d_a * d_b, d_a * d_b))
    for i in range(d_a):
        for j in range(d_b):
            s[j * d_a + i, i * d_b + j] = 1.0
    return s


def bures_fidelity(rho, sigma) -> float:
    """``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``, clipped to ``[0, 1]``."""
    rho = density_matrix(rho)
    sigma = density_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ValidationError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    s = sqrtm_psd(rho)
    inner = s @ sigma @ s
    w = np.linalg.eigvalsh(0.5 * (inner + dag(inner)))
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None)))) ** 2
    return min(max(f, 0.0), 1.0)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
