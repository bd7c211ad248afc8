"""Measurement incompatibility through steering-assisted coherence distillation.

The monotone is ``V_I(M) = sup_rho SIVP({sqrt(rho) M_{a|x} sqrt(rho)})`` over
full-rank states ``rho``. It is evaluated numerically and the reported
value is a lower bound on the supremum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import qmat
from .channels import WiringMap
from .infotheory import DephasingMap, ReferenceBasis, entropy_pair, resolve_dephasing
from .qmat import ValidationError
from .steering import POVM, Assemblage, MeasurementSet, ZERO_WEIGHT

EPS = 1e-3


@dataclass(frozen=True)
class ParentModel:
    """Joint-measurement model ``M_{a|x} = sum_lambda p(a|x, lambda) G_lambda``.

    ``responses[x, a, lam]`` holds ``p(a|x, lambda)``.
    """

    parent: POVM
    responses: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.responses, dtype=float)
        if r.ndim != 3 or r.shape[2] != self.parent.n_outcomes:
            raise ValidationError(f"responses must have shape (n_x, n_a, {self.parent.n_outcomes}), got {r.shape}")
        if np.any(r < 0) or np.max(np.abs(r.sum(axis=1) - 1)) > 1e-12:
            raise ValidationError("responses are not normalized over outcomes")
        object.__setattr__(self, "responses", r)


@dataclass
class OptimizerConfig:
    """Search settings for the supremum over full-rank states.

    ``grid`` points per Bloch axis (qubits) or ``n_random`` starts (``d > 2``)
    seed ``n_starts`` Nelder-Mead runs that share ``budget`` evaluations.
    """

    grid: int = 21
    n_starts: int = 5
    budget: int = 2000
    eps: float = EPS
    n_random: int = 400
    seed: int = 0
    xatol: float = 1e-7
    fatol: float = 1e-10


@dataclass
class IncompatReport:
    value: float
    argmax_state: np.ndarray
    converged: bool
    n_evals: int
    basis: np.ndarray
    trace: list = field(default_factory=list)
    lower_bound: bool = True


def seo(asm: Assemblage, *, complete: bool = True) -> MeasurementSet | list[np.ndarray]:
    """Steering-equivalent observables ``rho_B^{-1/2} sigma_{a|x} rho_B^{-1/2}``.

    Off the support of ``rho_B`` the effects vanish, so they sum to the
    support projector. With ``complete=True`` the kernel projector is added
    to outcome 0 of every setting, yielding a proper measurement set; with
    ``complete=False`` the raw per-setting effect stacks are returned.
    """
    rho_b = asm.marginal
    w = qmat.pinv_sqrt(rho_b)
    raw = [np.einsum("ij,ajk,kl->ail", w, m, w) for m in asm.members]
    if not complete:
        return raw
    support = w @ rho_b @ w
    kernel = np.eye(asm.dim) - support
    out = []
    for e in raw:
        e = e.copy()
        e[0] = e[0] + kernel
        out.append(e)
    return MeasurementSet.from_effects(out, atol=1e-8)


def embed(m: MeasurementSet, rho) -> Assemblage:
    """Assemblage ``sqrt(rho) M_{a|x} sqrt(rho)``."""
    rho = qmat.density_matrix(rho)
    s = qmat.sqrtm_psd(rho)
    return Assemblage([np.einsum("ij,ajk,kl->ail", s, p.effects, s) for p in m.settings])


def compatible_set(model: ParentModel) -> MeasurementSet:
    effects = np.einsum("xal,lij->xaij", model.responses, model.parent.effects)
    return MeasurementSet.from_effects(list(effects))


def smeared_pauli_parent(eta: float) -> ParentModel:
    """Four-outcome parent for the noisy pair ``{eta X, eta Z}``.

    ``G_{jk} = (1 + (-1)^j eta X + (-1)^k eta Z) / 4``, positive for
    ``eta <= 1/sqrt(2)``. The marginals reproduce
    ``(1 +/- eta sigma) / 2`` for both settings.
    """
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    g = []
    for j in (0, 1):
        for k in (0, 1):
            g.append((np.eye(2) + (-1) ** j * eta * x + (-1) ** k * eta * z) / 4)
    resp = np.zeros((2, 2, 4))
    for lam, (j, k) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        resp[0, j, lam] = 1.0
        resp[1, k, lam] = 1.0
    return ParentModel(POVM(np.stack(g)), resp)


def smeared_pauli(eta: float) -> MeasurementSet:
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    return MeasurementSet.from_effects(
        [np.stack([(np.eye(2) + eta * s) / 2, (np.eye(2) - eta * s) / 2]) for s in (x, z)], labels=(1, 3)
    )


def post_process_measurements(w: WiringMap, m: MeasurementSet) -> MeasurementSet:
    """``M_{a'|x'} = sum_{a,x} p(x|x') p(a'|a,x,x') M_{a|x}``."""
    if m.n_settings != w.n_settings_in:
        raise ValidationError(f"wiring expects {w.n_settings_in} settings, measurement set has {m.n_settings}")
    if any(p.n_outcomes != w.n_outcomes_in for p in m.settings):
        raise ValidationError("wiring expects every setting to have the same number of outcomes")
    eff = np.stack([p.effects for p in m.settings])
    out = np.einsum("yx,yxab,xaij->ybij", w.p_x_given_xp, w.p_ap_given, eff)
    return MeasurementSet.from_effects(list(out))


def mix_measurements(m1: MeasurementSet, m2: MeasurementSet, q: float) -> MeasurementSet:
    if m1.n_settings != m2.n_settings:
        raise ValidationError("measurement sets have different numbers of settings")
    return MeasurementSet.from_effects(
        [q * a.effects + (1 - q) * b.effects for a, b in zip(m1.settings, m2.settings)], labels=m1.labels
    )


# ---------------------------------------------------------------------------
# objective


def _sivp_batch(sqrt_rhos: np.ndarray, m: MeasurementSet, delta: DephasingMap) -> np.ndarray:
    """SIVP of ``sqrt(rho) M sqrt(rho)`` for a stack of square roots, shape ``(n, d, d)``."""
    n = sqrt_rhos.shape[0]
    cds, hs = [], []
    for povm in m.settings:
        sig = np.einsum("nij,ajk,nkl->nail", sqrt_rhos, povm.effects, sqrt_rhos)
        p = np.real(np.trace(sig, axis1=2, axis2=3))
        safe = np.where(p >= ZERO_WEIGHT, p, 1.0)
        cond = sig / safe[..., None, None]
        cond = 0.5 * (cond + qmat.dag(cond))
        h, s = entropy_pair(cond, delta)
        w = np.where(p >= ZERO_WEIGHT, p, 0.0)
        cds.append(np.sum(w * np.clip(h - s, 0.0, None), axis=1))
        hs.append(np.sum(w * h, axis=1))
    cd_star = np.max(np.stack(cds), axis=0)
    h_star = np.min(np.stack(hs), axis=0)
    return np.clip(cd_star - h_star, 0.0, None).reshape(n)


def _bloch_sqrt(vecs: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Square roots of qubit states with Bloch vectors radially clipped to ``1 - eps``."""
    vecs = np.atleast_2d(np.asarray(vecs, dtype=float))
    norm = np.linalg.norm(vecs, axis=1)
    rmax = 1 - eps
    scale = np.where(norm > rmax, rmax / np.where(norm > 0, norm, 1.0), 1.0)
    v = vecs * scale[:, None]
    r = np.linalg.norm(v, axis=1)
    lp, lm = np.sqrt((1 + r) / 2), np.sqrt((1 - r) / 2)
    unit = np.where(r[:, None] > 0, v / np.where(r > 0, r, 1.0)[:, None], 0.0)
    pauli = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
    a = (lp + lm) / 2
    b = (lp - lm) / 2
    sq = a[:, None, None] * np.eye(2) + b[:, None, None] * np.einsum("nk,kij->nij", unit, pauli)
    rho = 0.5 * (np.eye(2) + np.einsum("nk,kij->nij", v, pauli))
    return sq, rho


def _chol_params(d: int) -> int:
    return d * d


def _chol_state(theta: np.ndarray, d: int, eps: float) -> np.ndarray:
    l = np.zeros((d, d), dtype=complex)
    idx = np.tril_indices(d)
    k = idx[0].size
    l[idx] = theta[:k]
    off = np.tril_indices(d, -1)
    l[off] += 1j * theta[k:]
    rho = l @ l.conj().T
    tr = np.trace(rho).real
    if tr <= 0:
        rho = np.eye(d) / d
    else:
        rho = rho / tr
    return (1 - eps) * rho + eps * np.eye(d) / d


def incompat_measure(
    m: MeasurementSet,
    config: OptimizerConfig | None = None,
    delta: DephasingMap | ReferenceBasis | None = None,
) -> IncompatReport:
    """Lower bound on ``V_I`` by grid (or random) scan plus Nelder-Mead refinement.

    Never raises on an exhausted budget; ``converged`` reports whether every
    local search met its tolerances.
    """
    cfg = config or OptimizerConfig()
    delta = resolve_dephasing(delta, m.dim)
    d = m.dim
    trace: list[tuple[int, float]] = []

    if m.n_settings == 1:
        rho = np.eye(d) / d
        return IncompatReport(0.0, rho, True, 0, delta.basis.kets, [(0, 0.0)])

    if d == 2:
        g = np.linspace(-1.0, 1.0, cfg.grid)
        pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
        pts = pts[np.linalg.norm(pts, axis=1) <= 1 - cfg.eps + 1e-12]
        sq, _ = _bloch_sqrt(pts, cfg.eps)
        vals = _sivp_batch(sq, m, delta)

        def to_state(v):
            return _bloch_sqrt(v, cfg.eps)[1][0]

        def objective(v):
            return -float(_sivp_batch(_bloch_sqrt(v, cfg.eps)[0], m, delta)[0])
    else:
        rng = np.random.default_rng(cfg.seed)
        pts = rng.normal(size=(cfg.n_random, _chol_params(d)))
        pts[0] = 0.0
        pts[0, np.cumsum(np.arange(1, d + 1)) - 1] = 1.0  # identity diagonal -> maximally mixed
        sq = np.stack([qmat.sqrtm_psd(_chol_state(p, d, cfg.eps)) for p in pts])
        vals = _sivp_batch(sq, m, delta)

        def to_state(v):
            return _chol_state(v, d, cfg.eps)

        def objective(v):
            return -float(_sivp_batch(qmat.sqrtm_psd(to_state(v))[None], m, delta)[0])

    n_evals = len(pts)
    order = np.argsort(-vals, kind="stable")
    best_val = float(vals[order[0]])
    best_pt = pts[order[0]]
    trace.append((0, best_val))
    converged = True
    per_start = max(cfg.budget // max(cfg.n_starts, 1), 10)
    for k, i in enumerate(order[: cfg.n_starts], start=1):
        res = minimize(
            objective, pts[i], method="Nelder-Mead",
            options={"maxfev": per_start, "xatol": cfg.xatol, "fatol": cfg.fatol},
        )
        n_evals += int(res.nfev)
        converged &= bool(res.success)
        val = -float(res.fun)
        if val > best_val:
            best_val, best_pt = val, res.x
        trace.append((k, best_val))
    return IncompatReport(best_val, to_state(best_pt), converged, n_evals, delta.basis.kets, trace)
