"""Steering scenarios, the coherence-based steering witness and the EUR witness.

An assemblage is stored as one array of shape ``(n_outcomes, d, d)`` per
setting; settings may have different outcome counts. Settings and outcomes
are addressed by position, and measurement sets may carry display labels
(the qubit Pauli set uses ``(1, 3)`` for ``X`` and ``Z``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qmat
from .infotheory import (
    DephasingMap,
    ReferenceBasis,
    entropy_pair,
    max_overlap,
    resolve_dephasing,
    shannon,
)
from .qmat import ValidationError

ZERO_WEIGHT = 1e-12
VIOLATION_THRESHOLD = 1e-10
COMPLETENESS_TOL = 1e-9
NONSIGNALING_TOL = 1e-9
EUR_STRICT = 1e-12

PAULI = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


def _min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (m + qmat.dag(m)))[0])


@dataclass(frozen=True)
class POVM:
    """Positive operator-valued measure; ``effects`` has shape ``(n, d, d)``."""

    effects: np.ndarray
    atol: float = COMPLETENESS_TOL

    def __post_init__(self):
        e = np.asarray(self.effects, dtype=complex)
        if e.ndim != 3 or e.shape[1] != e.shape[2] or e.shape[0] == 0:
            raise ValidationError(f"effects must have shape (n, d, d), got {e.shape}")
        for a, m in enumerate(e):
            if qmat.hermiticity_error(m) > max(self.atol, qmat.HERMITIAN_TOL):
                raise ValidationError(f"effect {a} is not Hermitian")
            if _min_eig(m) < -max(self.atol, qmat.CLIP_TOL):
                raise ValidationError(f"effect {a} is not positive semidefinite")
        dev = np.max(np.abs(e.sum(axis=0) - np.eye(e.shape[1])))
        if dev > self.atol:
            raise ValidationError(f"effects do not sum to identity (deviation {dev:.3e})")
        e = 0.5 * (e + qmat.dag(e))
        e.setflags(write=False)
        object.__setattr__(self, "effects", e)

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.effects.shape[0]

    @classmethod
    def projective(cls, basis: ReferenceBasis | np.ndarray) -> "POVM":
        u = basis.kets if isinstance(basis, ReferenceBasis) else np.asarray(basis, dtype=complex)
        return cls(np.stack([np.outer(u[:, i], u[:, i].conj()) for i in range(u.shape[1])]))

    @classmethod
    def pauli(cls, x: int) -> "POVM":
        """``M_{a|x} = (1 + (-1)^a sigma_x) / 2`` for ``x`` in ``{1, 2, 3}``."""
        s = PAULI[x]
        return cls(np.stack([(np.eye(2) + s) / 2, (np.eye(2) - s) / 2]))

    @classmethod
    def trivial(cls, dim: int) -> "POVM":
        return cls(np.eye(dim, dtype=complex)[None])


@dataclass(frozen=True)
class MeasurementSet:
    settings: tuple[POVM, ...]
    labels: tuple | None = None

    def __post_init__(self):
        settings = tuple(self.settings)
        if not settings:
            raise ValidationError("a measurement set needs at least one setting")
        dims = {p.dim for p in settings}
        if len(dims) != 1:
            raise ValidationError(f"settings act on different dimensions {sorted(dims)}")
        object.__setattr__(self, "settings", settings)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(range(len(settings))))
        elif len(self.labels) != len(settings):
            raise ValidationError("labels must match the number of settings")
        else:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.settings[0].dim

    @property
    def n_settings(self) -> int:
        return len(self.settings)

    def __len__(self) -> int:
        return len(self.settings)

    def __getitem__(self, x: int) -> POVM:
        return self.settings[x]

    @classmethod
    def from_effects(cls, effects: Sequence, labels=None, atol: float = COMPLETENESS_TOL) -> "MeasurementSet":
        return cls(tuple(POVM(np.asarray(e), atol=atol) for e in effects), labels)

    @classmethod
    def pauli(cls, axes: Sequence[int] = (1, 3)) -> "MeasurementSet":
        """Qubit Pauli measurements; the default is the ``{X, Z}`` pair."""
        return cls(tuple(POVM.pauli(x) for x in axes), tuple(axes))

    @classmethod
    def computational_and_fourier(cls, dim: int) -> "MeasurementSet":
        """Computational basis plus its discrete Fourier transform, for ``d > 2``."""
        w = np.exp(2j * np.pi / dim)
        f = np.array([[w ** (j * k) for k in range(dim)] for j in range(dim)]) / np.sqrt(dim)
        return cls((POVM.projective(np.eye(dim)), POVM.projective(f)))


class Assemblage:
    """Family of subnormalized operators ``sigma_{a|x}`` with a common marginal.

    Parameters
    ----------
    members : sequence of array_like
        ``members[x]`` has shape ``(n_outcomes_x, d, d)``.
    check : bool
        Validate positivity and non-signaling. Disable only for operators
        built from transcribed, slightly unphysical data.
    """

    def __init__(self, members, *, check: bool = True, atol: float = NONSIGNALING_TOL):
        arrs = []
        for x, m in enumerate(members):
            a = np.asarray(m, dtype=complex)
            if a.ndim != 3 or a.shape[1] != a.shape[2]:
                raise ValidationError(f"setting {x}: members must have shape (n, d, d), got {a.shape}")
            a = 0.5 * (a + qmat.dag(a))
            a.setflags(write=False)
            arrs.append(a)
        if not arrs:
            raise ValidationError("an assemblage needs at least one setting")
        dims = {a.shape[1] for a in arrs}
        if len(dims) != 1:
            raise ValidationError(f"members act on different dimensions {sorted(dims)}")
        self.members: tuple[np.ndarray, ...] = tuple(arrs)
        if check:
            self._validate(atol)

    def _validate(self, atol: float) -> None:
        rho_b = self.members[0].sum(axis=0)
        for x, a in enumerate(self.members):
            for k, s in enumerate(a):
                tr = float(np.trace(s).real)
                if _min_eig(s) < -qmat.CLIP_TOL or tr < -qmat.CLIP_TOL or tr > 1 + atol:
                    raise ValidationError(f"member (x={x}, a={k}) is not a subnormalized positive operator")
            dev = np.max(np.abs(a.sum(axis=0) - rho_b))
            if dev > atol:
                raise ValidationError(f"non-signaling violated at setting {x} (deviation {dev:.3e})")
        if abs(np.trace(rho_b).real - 1.0) > qmat.TRACE_TOL:
            raise ValidationError("assemblage marginal does not have unit trace")

    @property
    def dim(self) -> int:
        return self.members[0].shape[1]

    @property
    def n_settings(self) -> int:
        return len(self.members)

    def n_outcomes(self, x: int) -> int:
        return self.members[x].shape[0]

    @property
    def marginal(self) -> np.ndarray:
        return self.members[0].sum(axis=0)

    def probabilities(self, x: int) -> np.ndarray:
        return np.real(np.trace(self.members[x], axis1=1, axis2=2))

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        x, a = key
        return self.members[x][a]

    def mix(self, other: "Assemblage", q: float) -> "Assemblage":
        """``q * self + (1 - q) * other`` member-wise."""
        if self.n_settings != other.n_settings or any(
            a.shape != b.shape for a, b in zip(self.members, other.members)
        ):
            raise ValidationError("assemblages have different shapes")
        return Assemblage([q * a + (1 - q) * b for a, b in zip(self.members, other.members)])

    def relabel(self, setting_order: Sequence[int], outcome_orders: Sequence[Sequence[int]]) -> "Assemblage":
        return Assemblage(
            [self.members[x][list(outcome_orders[i])] for i, x in enumerate(setting_order)]
        )

    def __repr__(self) -> str:
        outs = [a.shape[0] for a in self.members]
        return f"Assemblage(dim={self.dim}, outcomes={outs})"


@dataclass(frozen=True)
class LHSModel:
    """Local-hidden-state model.

    ``responses[x, a, lam]`` is ``p(a|x, lambda)``; all settings share the
    same number of outcomes.
    """

    hidden_states: np.ndarray
    weights: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        states = np.stack([qmat.density_matrix(s) for s in np.asarray(self.hidden_states, dtype=complex)])
        w = np.asarray(self.weights, dtype=float)
        r = np.asarray(self.responses, dtype=float)
        if w.shape != (states.shape[0],) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValidationError("hidden-state weights must be a normalized probability vector")
        if r.ndim != 3 or r.shape[2] != states.shape[0]:
            raise ValidationError(f"responses must have shape (n_x, n_a, n_lambda), got {r.shape}")
        if np.any(r < 0) or np.max(np.abs(r.sum(axis=1) - 1)) > 1e-12:
            raise ValidationError("response functions are not normalized over outcomes")
        object.__setattr__(self, "hidden_states", states)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "responses", r)


@dataclass(frozen=True)
class SteeringReport:
    cd_star: float
    h_star: float
    sivp: float
    per_setting: dict = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return self.sivp > VIOLATION_THRESHOLD


def assemblage_from_state(rho_ab, m: MeasurementSet, *, check: bool = True) -> Assemblage:
    """Bob's assemblage ``Tr_A[(M_{a|x} (x) 1) rho_AB]``.

    With ``check=False`` the input operator is only required to be
    Hermitian; used for transcribed data that is not exactly a state.
    """
    if check:
        rho_ab = qmat.density_matrix(rho_ab)
    else:
        rho_ab = qmat.check_hermitian(rho_ab, tol=1e-6)
    d_a = m.dim
    n = rho_ab.shape[0]
    if n % d_a:
        raise ValidationError(f"state dimension {n} is not a multiple of Alice's dimension {d_a}")
    d_b = n // d_a
    t = rho_ab.reshape(d_a, d_b, d_a, d_b)
    members = [np.einsum("aki,ijkl->ajl", povm.effects, t) for povm in m.settings]
    return Assemblage(members, check=check)


def assemblage_from_lhs(model: LHSModel, n_settings: int | None = None, n_outcomes: int | None = None) -> Assemblage:
    """``sigma_{a|x} = sum_lambda p(lambda) p(a|x, lambda) rho_lambda``."""
    r = model.responses
    if n_settings is not None and r.shape[0] != n_settings:
        raise ValidationError(f"model has {r.shape[0]} settings, expected {n_settings}")
    if n_outcomes is not None and r.shape[1] != n_outcomes:
        raise ValidationError(f"model has {r.shape[1]} outcomes, expected {n_outcomes}")
    members = np.einsum("l,xal,lij->xaij", model.weights, r, model.hidden_states)
    return Assemblage(list(members))


def _conditional_terms(asm: Assemblage, x: int, delta: DephasingMap) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Probabilities, ``H_Delta`` and ``S`` of the non-negligible conditional states."""
    sig = asm.members[x]
    p = np.real(np.trace(sig, axis1=1, axis2=2))
    keep = p >= ZERO_WEIGHT
    if not np.any(keep):
        return p[keep], p[keep], p[keep]
    cond = sig[keep] / p[keep, None, None]
    h, s = entropy_pair(cond, delta)
    return p[keep], h, s


def _setting_pair(asm: Assemblage, x: int, delta: DephasingMap) -> tuple[float, float]:
    p, h, s = _conditional_terms(asm, x, delta)
    cd = np.clip(h - s, 0.0, None)
    return float(p @ cd), float(p @ h)


def _check_setting(asm: Assemblage, x: int) -> None:
    if not 0 <= x < asm.n_settings:
        raise ValidationError(f"setting index {x} out of range for {asm.n_settings} settings")


def conditional_cd(asm: Assemblage, x: int, delta: DephasingMap | ReferenceBasis | None = None) -> float:
    """``sum_a p(a|x) C_d(rho_{a|x})``."""
    _check_setting(asm, x)
    return _setting_pair(asm, x, resolve_dephasing(delta, asm.dim))[0]


def conditional_h(asm: Assemblage, x: int, delta: DephasingMap | ReferenceBasis | None = None) -> float:
    """``sum_a p(a|x) H_Delta(rho_{a|x})``."""
    _check_setting(asm, x)
    return _setting_pair(asm, x, resolve_dephasing(delta, asm.dim))[1]


def steering_report(asm: Assemblage, delta: DephasingMap | ReferenceBasis | None = None) -> SteeringReport:
    """Optimal conditional coherence, optimal conditional entropy and the SIVP."""
    delta = resolve_dephasing(delta, asm.dim)
    per = {x: _setting_pair(asm, x, delta) for x in range(asm.n_settings)}
    cd_star = max(v[0] for v in per.values())
    h_star = min(v[1] for v in per.values())
    return SteeringReport(cd_star, h_star, max(cd_star - h_star, 0.0), per)


def sivp(asm: Assemblage, delta: DephasingMap | ReferenceBasis | None = None) -> float:
    return steering_report(asm, delta).sivp


@dataclass(frozen=True)
class EURResult:
    lhs_sum: float
    bound: float
    violated: bool


def eur_report(
    asm: Assemblage,
    delta: DephasingMap | ReferenceBasis | None,
    delta_prime: DephasingMap | ReferenceBasis | None,
    x: int,
    x_prime: int,
) -> EURResult:
    """Entropic-uncertainty steering test for settings ``(x, x')`` and bases ``(Delta, Delta')``."""
    _check_setting(asm, x)
    _check_setting(asm, x_prime)
    delta = resolve_dephasing(delta, asm.dim)
    delta_prime = resolve_dephasing(delta_prime, asm.dim)
    lhs = _setting_pair(asm, x, delta)[1] + _setting_pair(asm, x_prime, delta_prime)[1]
    omega = max_overlap(delta, delta_prime)
    bound = max(-float(np.log2(omega)), 0.0)
    return EURResult(lhs, bound, lhs < bound - EUR_STRICT)


@dataclass(frozen=True)
class WitnessComparison:
    eur_violated: bool
    qcur_violated: bool
    implication_holds: bool
    margin: float
    sivp: float
    pairs: dict


def qcur_vs_eur(
    asm: Assemblage,
    delta: DephasingMap | ReferenceBasis | None = None,
    delta_prime: DephasingMap | ReferenceBasis | None = None,
) -> WitnessComparison:
    """Compare the coherence witness (basis ``Delta``) with the EUR witness.

    For every ordered setting pair ``(x, x')`` the chain
    ``C_d^{B|A}(x') - H_Delta^{B|A}(x) >= bound - lhs_sum`` holds for any
    assemblage, so an EUR violation forces a positive SIVP. ``margin`` is the
    smallest slack of that chain over all pairs and must be non-negative.
    """
    delta = resolve_dephasing(delta, asm.dim)
    if delta_prime is None:
        if asm.dim != 2:
            raise ValidationError("delta_prime is required for dimensions other than 2")
        delta_prime = DephasingMap.pauli("X")
    delta_prime = resolve_dephasing(delta_prime, asm.dim)
    rep = steering_report(asm, delta)
    pairs = {}
    margin = np.inf
    eur_any = False
    for x, xp in itertools.product(range(asm.n_settings), repeat=2):
        if x == xp and asm.n_settings > 1:
            continue
        e = eur_report(asm, delta, delta_prime, x, xp)
        chain = rep.per_setting[xp][0] - rep.per_setting[x][1] - (e.bound - e.lhs_sum)
        margin = min(margin, chain)
        eur_any |= e.violated
        pairs[(x, xp)] = e
    qcur = rep.violated
    return WitnessComparison(eur_any, qcur, (not eur_any) or qcur, float(margin), rep.sivp, pairs)


def swap_state(rho_ab, d_a: int, d_b: int) -> np.ndarray:
    s = qmat.swap_operator(d_a, d_b)
    return s @ np.asarray(rho_ab, dtype=complex) @ s.T


def sivp_both_directions(
    rho_ab,
    m_alice: MeasurementSet | None = None,
    m_bob: MeasurementSet | None = None,
    delta_a: DephasingMap | ReferenceBasis | None = None,
    delta_b: DephasingMap | ReferenceBasis | None = None,
) -> tuple[float, float]:
    """SIVP with Alice steering Bob, then with Bob steering Alice.

    The second value measures Bob's side with ``m_bob`` and evaluates the
    witness on Alice's conditional states in basis ``delta_a``.
    """
    m_alice = m_alice or MeasurementSet.pauli()
    m_bob = m_bob or MeasurementSet.pauli()
    rho_ab = qmat.density_matrix(rho_ab)
    d_a = m_alice.dim
    d_b = rho_ab.shape[0] // d_a
    a_to_b = sivp(assemblage_from_state(rho_ab, m_alice), delta_b)
    b_to_a = sivp(assemblage_from_state(swap_state(rho_ab, d_a, d_b), m_bob), delta_a)
    return a_to_b, b_to_a


def pure_state_sivp_theory(schmidt) -> float:
    """Entanglement entropy of the Schmidt weights; the optimal pure-state SIVP."""
    return shannon(schmidt)
