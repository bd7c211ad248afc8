"""State families, closed-form qubit assemblages, random sampling and noise fitting.

Polarization encoding is ``H -> |0>`` and ``V -> |1>``; Pauli matrices are
indexed ``1 = X``, ``2 = Y``, ``3 = Z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import qmat
from .qmat import ValidationError
from .steering import PAULI, Assemblage

_ID2 = np.eye(2, dtype=complex)
_SIGMA = [PAULI[1], PAULI[2], PAULI[3]]


def _schmidt(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size == 0 or np.any(q < -1e-12) or abs(q.sum() - 1) > 1e-9:
        raise ValidationError(f"Schmidt weights {q} are not a probability vector")
    return np.clip(q, 0.0, None)


def schmidt_ket(q) -> np.ndarray:
    """``sum_i sqrt(q_i) |i>|i>``."""
    q = _schmidt(q)
    d = q.size
    v = np.zeros(d * d, dtype=complex)
    v[np.arange(d) * (d + 1)] = np.sqrt(q)
    return v


def pure_schmidt(q) -> np.ndarray:
    return qmat.projector(schmidt_ket(q))


def phi_ket(q: float, phi: float) -> np.ndarray:
    if not 0.0 <= q <= 1.0:
        raise ValidationError(f"q = {q} outside [0, 1]")
    return np.array([np.sqrt(q), 0, 0, np.exp(1j * phi) * np.sqrt(1 - q)], dtype=complex)


def phi_state(q: float, phi: float = 0.0) -> np.ndarray:
    """``|Phi(q, phi)> = sqrt(q)|HH> + e^{i phi} sqrt(1-q)|VV>`` as a density matrix."""
    return qmat.projector(phi_ket(q, phi))


PHI_PLUS = phi_state(0.5, 0.0)
PHI_MINUS = phi_state(0.5, np.pi)


def bell_diagonal(r: float) -> np.ndarray:
    """``r |Phi+><Phi+| + (1 - r) |Phi-><Phi-|``."""
    if not 0.0 <= r <= 1.0:
        raise ValidationError(f"r = {r} outside [0, 1]")
    return r * PHI_PLUS + (1 - r) * PHI_MINUS


def white_noise_mix(rho, p: float) -> np.ndarray:
    """``(1 - p) rho + p * 1/d``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"noise factor {p} outside [0, 1]")
    rho = qmat.density_matrix(rho)
    d = rho.shape[0]
    return (1 - p) * rho + p * np.eye(d) / d


@dataclass(frozen=True)
class BlochParams:
    """Local Bloch vectors ``r`` (Alice), ``s`` (Bob) and correlation matrix ``t``."""

    r: np.ndarray
    s: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).reshape(3)
        s = np.asarray(self.s, dtype=float).reshape(3)
        t = np.asarray(self.t, dtype=float).reshape(3, 3)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)

    def swapped(self) -> "BlochParams":
        return BlochParams(self.s, self.r, self.t.T)

    @classmethod
    def from_state(cls, rho) -> "BlochParams":
        rho = np.asarray(rho, dtype=complex)
        r = [np.trace(rho @ np.kron(s, _ID2)).real for s in _SIGMA]
        s = [np.trace(rho @ np.kron(_ID2, s)).real for s in _SIGMA]
        t = [[np.trace(rho @ np.kron(a, b)).real for b in _SIGMA] for a in _SIGMA]
        return cls(r, s, t)


def chi_matrix(p: BlochParams) -> np.ndarray:
    """Unvalidated ``(1/4)[1 + r.sigma (x) 1 + 1 (x) s.sigma + sum t_ij sigma_i (x) sigma_j]``."""
    m = np.kron(_ID2, _ID2).astype(complex)
    for i in range(3):
        m += p.r[i] * np.kron(_SIGMA[i], _ID2) + p.s[i] * np.kron(_ID2, _SIGMA[i])
        for j in range(3):
            m += p.t[i, j] * np.kron(_SIGMA[i], _SIGMA[j])
    return m / 4


def chi_general(p: BlochParams) -> np.ndarray:
    m = chi_matrix(p)
    w = np.linalg.eigvalsh(m)
    if w[0] < -qmat.CLIP_TOL:
        raise ValidationError(f"unphysical Bloch parameters: most negative eigenvalue {w[0]:.6g}")
    return qmat.density_matrix(m)


def is_physical(p: BlochParams) -> bool:
    return float(np.linalg.eigvalsh(chi_matrix(p))[0]) >= -qmat.CLIP_TOL


def chi_oneway(s: float, q) -> np.ndarray:
    """``s |psi_q><psi_q| + (1 - s) Tr_B[|psi_q><psi_q|] (x) 1/d``."""
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"s = {s} outside [0, 1]")
    q = _schmidt(q)
    d = q.size
    psi = pure_schmidt(q)
    rho_a = qmat.partial_trace(psi, (d, d), keep="A")
    return s * psi + (1 - s) * np.kron(rho_a, np.eye(d) / d)


def theta_weights(theta: float) -> np.ndarray:
    return np.array([np.cos(theta) ** 2, np.sin(theta) ** 2])


@dataclass(frozen=True)
class EigenTables:
    """Conditional-state eigenvalues, indexed ``[x_index, a, +/-]``.

    Entries belonging to zero-probability outcomes are ``nan``.
    """

    probabilities: np.ndarray
    eigenvalues: np.ndarray
    dephased: np.ndarray


def analytic_assemblage_xz(p: BlochParams) -> tuple[Assemblage, EigenTables]:
    """Closed-form assemblage for Alice measuring ``X`` then ``Z`` on ``chi(r, s, t)``.

    ``sigma_{a|x} = (1/4)[(1 + (-1)^a r_x) 1 + sum_j (s_j + (-1)^a t_xj) sigma_j]``.
    """
    if not is_physical(p):
        raise ValidationError("unphysical Bloch parameters")
    members = []
    probs = np.zeros((2, 2))
    eig = np.full((2, 2, 2), np.nan)
    deph = np.full((2, 2, 2), np.nan)
    for k, x in enumerate((1, 3)):
        row = []
        for a in (0, 1):
            sign = (-1) ** a
            norm = 1 + sign * p.r[x - 1]
            vec = p.s + sign * p.t[x - 1]
            row.append((norm * _ID2 + sum(vec[j] * _SIGMA[j] for j in range(3))) / 4)
            probs[k, a] = norm / 2
            if norm / 2 < 1e-12:
                continue
            radius = np.linalg.norm(vec) / norm
            eig[k, a] = [0.5 * (1 + radius), 0.5 * (1 - radius)]
            z = vec[2] / norm
            deph[k, a] = [0.5 * (1 + z), 0.5 * (1 - z)]
        members.append(np.stack(row))
    return Assemblage(members), EigenTables(probs, eig, deph)


def random_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def haar_random_pure(d_a: int, d_b: int, seed) -> np.ndarray:
    """Pure bipartite state drawn from the unitarily invariant measure."""
    return qmat.projector(random_ket(d_a * d_b, _rng(seed)))


def haar_random_state(d: int, seed, d_env: int | None = None) -> np.ndarray:
    """Mixed state: marginal of a Haar-random pure state on ``d x d_env`` (default ``d_env = d``)."""
    d_env = d if d_env is None else d_env
    psi = random_ket(d * d_env, _rng(seed)).reshape(d, d_env)
    rho = psi @ psi.conj().T
    return 0.5 * (rho + rho.conj().T)


def fit_white_noise(rho_exp, rho_th, tol: float = 1e-5) -> tuple[float, float]:
    """White-noise factor maximizing the fidelity between ``(1-p) rho_th + p 1/d`` and ``rho_exp``.

    Bounded Brent search (golden section with parabolic steps) on ``[0, 1]``;
    the endpoints are also checked since the optimum may sit on the boundary.
    """
    rho_exp = qmat.density_matrix(rho_exp)
    rho_th = qmat.density_matrix(rho_th)

    def neg_f(p):
        return -qmat.bures_fidelity(white_noise_mix(rho_th, p), rho_exp)

    res = minimize_scalar(neg_f, bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": tol * 0.1})
    candidates = [(float(res.x), -float(res.fun)), (0.0, -neg_f(0.0)), (1.0, -neg_f(1.0))]
    return max(candidates, key=lambda c: c[1])
