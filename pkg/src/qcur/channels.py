"""Kraus channels, incoherence classes and classical wirings of assemblages.

Incoherence is always judged in the computational basis, which is the
reference basis of the coherence witness by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qmat
from .qmat import ValidationError
from .steering import Assemblage

GENERATED_TOL = 1e-9
TRANSCRIBED_TOL = 5e-3
OFFDIAG_TOL = 1e-10
WIRING_TOL = 1e-12


@dataclass(frozen=True)
class KrausChannel:
    """CPTP map ``rho -> sum_mu K_mu rho K_mu^dagger``.

    ``tol`` bounds the completeness defect ``max|sum K^dagger K - 1|``. Use
    ``TRANSCRIBED_TOL`` for operators copied from printed tables.
    """

    kraus: np.ndarray
    tol: float = GENERATED_TOL
    seed: int | None = None

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] == 0:
            raise ValidationError(f"Kraus operators must have shape (n, d_out, d_in), got {k.shape}")
        dev = self.completeness_defect_of(k)
        if dev > self.tol:
            raise ValidationError(f"Kraus operators are not trace preserving (defect {dev:.3e} > {self.tol:.1e})")
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)

    @staticmethod
    def completeness_defect_of(k: np.ndarray) -> float:
        s = np.einsum("kji,kjl->il", k.conj(), k)
        return float(np.max(np.abs(s - np.eye(k.shape[2]))))

    @property
    def completeness_defect(self) -> float:
        return self.completeness_defect_of(self.kraus)

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    def apply_raw(self, ops: np.ndarray) -> np.ndarray:
        """Unnormalized ``sum K X K^dagger`` on one operator or a stack of them."""
        return np.einsum("kij,...jl,kml->...im", self.kraus, ops, self.kraus.conj())

    @classmethod
    def identity(cls, dim: int) -> "KrausChannel":
        return cls(np.eye(dim, dtype=complex)[None])

    @classmethod
    def full_dephasing(cls, dim: int) -> "KrausChannel":
        return cls(np.stack([np.diag(np.eye(dim)[i]).astype(complex) for i in range(dim)]))


def apply_channel(ch: KrausChannel, rho) -> np.ndarray:
    """Apply ``ch``; the result is renormalized when the channel carries a small completeness defect."""
    rho = qmat.density_matrix(rho)
    if rho.shape[0] != ch.dim_in:
        raise ValidationError(f"channel input dimension {ch.dim_in} does not match state dimension {rho.shape[0]}")
    out = ch.apply_raw(rho)
    out = 0.5 * (out + qmat.dag(out))
    return out / np.trace(out).real


def is_gio(ch: KrausChannel, tol: float = OFFDIAG_TOL) -> bool:
    """Every Kraus operator is diagonal in the reference basis."""
    if ch.dim_in != ch.dim_out:
        return False
    off = ch.kraus * (1 - np.eye(ch.dim_in))
    return bool(np.max(np.abs(off)) <= tol)


def is_ico(ch: KrausChannel, tol: float = OFFDIAG_TOL) -> bool:
    """Every Kraus column has at most one non-negligible entry."""
    nonzero = np.abs(ch.kraus) > tol
    return bool(np.all(nonzero.sum(axis=1) <= 1))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_gio(dim: int, n_kraus: int, seed) -> KrausChannel:
    """Random diagonal Kraus channel.

    For each basis index the squared moduli across Kraus operators form a
    uniform point on the simplex; phases are uniform.
    """
    if n_kraus < 1:
        raise ValidationError("n_kraus must be at least 1")
    rng = _rng(seed)
    w = rng.dirichlet(np.ones(n_kraus), size=dim).T  # (n_kraus, dim)
    phases = np.exp(2j * np.pi * rng.random((n_kraus, dim)))
    amps = np.sqrt(w) * phases
    kraus = np.zeros((n_kraus, dim, dim), dtype=complex)
    idx = np.arange(dim)
    kraus[:, idx, idx] = amps
    return KrausChannel(kraus, seed=seed if isinstance(seed, (int, np.integer)) else None)


def random_ico(dim: int, n_kraus: int, seed) -> KrausChannel:
    """Random incoherent channel ``K_mu = sum_i c_{mu,i} |f_mu(i)><i|``.

    ``f_0`` is a random permutation and the remaining ``f_mu`` are arbitrary
    maps. Within one Kraus operator only one preimage per target keeps a
    non-zero amplitude, which makes ``sum K^dagger K`` diagonal; the moduli
    per column are then drawn from the simplex so completeness is exact.
    """
    if n_kraus < 1:
        raise ValidationError("n_kraus must be at least 1")
    rng = _rng(seed)
    targets = np.empty((n_kraus, dim), dtype=int)
    targets[0] = rng.permutation(dim)
    active = np.zeros((n_kraus, dim), dtype=bool)
    active[0] = True
    for mu in range(1, n_kraus):
        targets[mu] = rng.integers(0, dim, size=dim)
        for j in np.unique(targets[mu]):
            pre = np.flatnonzero(targets[mu] == j)
            active[mu, rng.choice(pre)] = True
    w = np.zeros((n_kraus, dim))
    for i in range(dim):
        mus = np.flatnonzero(active[:, i])
        w[mus, i] = rng.dirichlet(np.ones(mus.size))
    phases = np.exp(2j * np.pi * rng.random((n_kraus, dim)))
    kraus = np.zeros((n_kraus, dim, dim), dtype=complex)
    for mu in range(n_kraus):
        kraus[mu, targets[mu], np.arange(dim)] = np.sqrt(w[mu]) * phases[mu]
    return KrausChannel(kraus, seed=seed if isinstance(seed, (int, np.integer)) else None)


@dataclass(frozen=True)
class WiringMap:
    """Classical pre- and post-processing of settings and outcomes.

    Attributes
    ----------
    p_x_given_xp : ndarray, shape (n_x_new, n_x)
        ``p(x|x')``.
    p_ap_given : ndarray, shape (n_x_new, n_x, n_a, n_a_new)
        ``p(a'|a, x, x')`` indexed ``[x', x, a, a']``. All old settings share
        the outcome count ``n_a``.
    """

    p_x_given_xp: np.ndarray
    p_ap_given: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.p_x_given_xp, dtype=float)
        pa = np.asarray(self.p_ap_given, dtype=float)
        if px.ndim != 2 or pa.ndim != 4 or pa.shape[:2] != px.shape:
            raise ValidationError(f"inconsistent wiring shapes {px.shape} and {pa.shape}")
        if np.any(px < 0) or np.max(np.abs(px.sum(axis=1) - 1)) > WIRING_TOL:
            raise ValidationError("p(x|x') rows are not normalized distributions")
        if np.any(pa < 0) or np.max(np.abs(pa.sum(axis=3) - 1)) > WIRING_TOL:
            raise ValidationError("p(a'|a,x,x') is not normalized over a'")
        object.__setattr__(self, "p_x_given_xp", px)
        object.__setattr__(self, "p_ap_given", pa)

    @property
    def n_settings_in(self) -> int:
        return self.p_x_given_xp.shape[1]

    @property
    def n_settings_out(self) -> int:
        return self.p_x_given_xp.shape[0]

    @property
    def n_outcomes_in(self) -> int:
        return self.p_ap_given.shape[2]

    @property
    def n_outcomes_out(self) -> int:
        return self.p_ap_given.shape[3]

    @classmethod
    def identity(cls, n_settings: int, n_outcomes: int) -> "WiringMap":
        px = np.eye(n_settings)
        pa = np.zeros((n_settings, n_settings, n_outcomes, n_outcomes))
        pa[:, :] = np.eye(n_outcomes)
        return cls(px, pa)

    @classmethod
    def merge_outcomes(cls, n_settings: int, n_outcomes: int) -> "WiringMap":
        """Every outcome goes to ``a' = 0``; the result has a single outcome."""
        return cls(np.eye(n_settings), np.ones((n_settings, n_settings, n_outcomes, 1)))

    @classmethod
    def random(cls, n_settings: int, n_outcomes: int, seed, n_settings_out: int | None = None,
               n_outcomes_out: int | None = None, concentration: float = 1.0) -> "WiringMap":
        """Conditional tables drawn from symmetric Dirichlet distributions.

        ``concentration = 1`` is uniform on each simplex; small values give
        nearly deterministic wirings.
        """
        rng = _rng(seed)
        xo = n_settings if n_settings_out is None else n_settings_out
        ao = n_outcomes if n_outcomes_out is None else n_outcomes_out
        px = rng.dirichlet(np.full(n_settings, concentration), size=xo)
        pa = rng.dirichlet(np.full(ao, concentration), size=(xo, n_settings, n_outcomes))
        return cls(px, pa)


def _stack(asm: Assemblage, n_outcomes: int) -> np.ndarray:
    if any(asm.n_outcomes(x) != n_outcomes for x in range(asm.n_settings)):
        raise ValidationError("wiring expects every setting to have the same number of outcomes")
    return np.stack(asm.members)


def wire_assemblage(w: WiringMap, asm: Assemblage) -> Assemblage:
    """``sigma_{a'|x'} = sum_{a,x} p(x|x') p(a'|a,x,x') sigma_{a|x}``."""
    if asm.n_settings != w.n_settings_in:
        raise ValidationError(f"wiring expects {w.n_settings_in} settings, assemblage has {asm.n_settings}")
    sig = _stack(asm, w.n_outcomes_in)
    out = np.einsum("yx,yxab,xaij->ybij", w.p_x_given_xp, w.p_ap_given, sig)
    return Assemblage(list(out))


@dataclass(frozen=True)
class OneWayGIOProtocol:
    """Bob applies GIO ``Xi_xi`` with probability ``p(xi)`` and tells Alice ``xi``; Alice rewires."""

    branch_probs: np.ndarray
    branch_channels: tuple[KrausChannel, ...]
    branch_wirings: tuple[WiringMap, ...]
    seed: int | None = None

    def __post_init__(self):
        p = np.asarray(self.branch_probs, dtype=float)
        chans = tuple(self.branch_channels)
        wires = tuple(self.branch_wirings)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1) > WIRING_TOL:
            raise ValidationError("branch probabilities must be a normalized distribution")
        if not len(chans) == len(wires) == p.size:
            raise ValidationError("one channel and one wiring are required per branch")
        for k, ch in enumerate(chans):
            if not is_gio(ch):
                raise ValidationError(f"branch {k} channel is not genuinely incoherent")
        shapes = {(wi.p_x_given_xp.shape, wi.p_ap_given.shape) for wi in wires}
        if len(shapes) != 1:
            raise ValidationError("all branch wirings must share input and output shapes")
        object.__setattr__(self, "branch_probs", p)
        object.__setattr__(self, "branch_channels", chans)
        object.__setattr__(self, "branch_wirings", wires)

    @classmethod
    def random(cls, dim: int, n_settings: int, n_outcomes: int, seed, n_branches: int | None = None,
               max_kraus: int = 4) -> "OneWayGIOProtocol":
        rng = _rng(seed)
        nb = int(rng.integers(1, 4)) if n_branches is None else n_branches
        probs = rng.dirichlet(np.ones(nb))
        chans = tuple(random_gio(dim, int(rng.integers(1, max_kraus + 1)), rng) for _ in range(nb))
        wires = tuple(WiringMap.random(n_settings, n_outcomes, rng) for _ in range(nb))
        return cls(probs, chans, wires, seed=seed if isinstance(seed, (int, np.integer)) else None)


def one_way_gio_apply(proto: OneWayGIOProtocol, asm: Assemblage) -> Assemblage:
    """``sum_{a,x,xi} p(x|x',xi) p(a'|a,x,x',xi) p(xi) Xi_xi(sigma_{a|x})``."""
    for k, ch in enumerate(proto.branch_channels):
        if not is_gio(ch):
            raise ValidationError(f"branch {k} channel is not genuinely incoherent")
    w0 = proto.branch_wirings[0]
    sig = _stack(asm, w0.n_outcomes_in)
    if asm.n_settings != w0.n_settings_in:
        raise ValidationError(f"protocol expects {w0.n_settings_in} settings, assemblage has {asm.n_settings}")
    out = 0
    for p, ch, w in zip(proto.branch_probs, proto.branch_channels, proto.branch_wirings):
        mapped = ch.apply_raw(sig)
        out = out + p * np.einsum("yx,yxab,xaij->ybij", w.p_x_given_xp, w.p_ap_given, mapped)
    return Assemblage(list(out))


def channel_on_assemblage(ch: KrausChannel, asm: Assemblage, *, check: bool = True) -> Assemblage:
    """Bob applies ``ch`` to every member; Alice's labels are untouched."""
    return Assemblage([ch.apply_raw(m) for m in asm.members], check=check)


def local_channel_on_state(ch: KrausChannel, rho_ab, d_a: int, *, side: str = "B") -> np.ndarray:
    """Apply ``ch`` to one side of a bipartite operator."""
    rho_ab = np.asarray(rho_ab, dtype=complex)
    d_b = rho_ab.shape[0] // d_a
    if side == "B":
        ks = [np.kron(np.eye(d_a), k) for k in ch.kraus]
    elif side == "A":
        ks = [np.kron(k, np.eye(d_b)) for k in ch.kraus]
    else:
        raise ValidationError(f"side must be 'A' or 'B', got {side!r}")
    return sum(k @ rho_ab @ qmat.dag(k) for k in ks)


def transcribed_kraus_lambda1() -> KrausChannel:
    """The four-operator non-incoherent qubit channel, entries to three decimals."""
    k = np.array([
        [[0.559 + 0.351j, 0.425 - 0.487j], [0.721, -0.024 + 0.564j]],
        [[0.004 + 0.021j, 0.388], [-0.160 - 0.030j, 0.319 - 0.091j]],
        [[-0.050 - 0.071j, 0.032 + 0.020j], [0.097, 0.005 - 0.037j]],
        [[0.021, 0.006 + 0.012j], [0.001 - 0.012j, -0.013 - 0.016j]],
    ], dtype=complex)
    return KrausChannel(k, tol=TRANSCRIBED_TOL)


def transcribed_rho_ab() -> np.ndarray:
    """Two-qubit operator of the CPTP counterexample, entries to three decimals.

    It is Hermitian but neither unit trace (0.999) nor positive
    (smallest eigenvalue about -0.12), so it is not a valid density matrix.
    """
    return np.array([
        [0.276, 0.293 - 0.062j, -0.027 + 0.251j, 0.073 - 0.203j],
        [0.293 + 0.062j, 0.325, -0.085 + 0.026j, 0.123 - 0.199j],
        [-0.027 - 0.251j, -0.085 - 0.026j, 0.230, -0.191 - 0.047j],
        [0.073 + 0.203j, 0.123 + 0.199j, -0.191 + 0.047j, 0.168],
    ], dtype=complex)


LAMBDA1_ON_MAXMIXED = np.array([[0.506, 0.117 + 0.026j], [0.117 - 0.026j, 0.494]])
