"""Two-qubit polarization tomography from coincidence counts.

Projector labels follow the optical convention ``H, V, D, A, R, L`` for
``|0>, |1>, |+>, |->, |+i>, |-i>``.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import qmat
from .infotheory import DephasingMap
from .qmat import ValidationError
from .steering import MeasurementSet, assemblage_from_state, sivp

log = logging.getLogger(__name__)

_S = 1 / np.sqrt(2)
POLARIZATION_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "A": np.array([_S, -_S], dtype=complex),
    "R": np.array([_S, 1j * _S], dtype=complex),
    "L": np.array([_S, -1j * _S], dtype=complex),
}
LABELS = tuple(POLARIZATION_KETS)

MAX_ITER = 5000
UPDATE_TOL = 1e-10
DILUTION = 0.5


@dataclass
class CoincidenceRecord:
    """Coincidence counts for product projections ``|alice> (x) |bob>``.

    ``flux`` optionally fixes the expected number of pairs per setting; when
    absent it is estimated from the data.
    """

    settings: list[tuple[str, str]]
    counts: np.ndarray
    metadata: str = ""
    flux: np.ndarray | None = None

    def __post_init__(self):
        self.settings = [(str(a).upper(), str(b).upper()) for a, b in self.settings]
        self.counts = np.asarray(self.counts, dtype=float).reshape(-1)
        if not self.settings:
            raise ValidationError("a coincidence record needs at least one setting")
        if len(self.settings) != self.counts.size:
            raise ValidationError("one count per setting is required")
        if np.any(self.counts < 0):
            raise ValidationError("counts must be non-negative")
        bad = sorted({x for pair in self.settings for x in pair} - set(LABELS))
        if bad:
            raise ValidationError(f"unknown projector label(s) {bad}; expected {''.join(LABELS)}")
        if self.flux is not None:
            self.flux = np.broadcast_to(np.asarray(self.flux, dtype=float), self.counts.shape).copy()

    def projectors(self) -> np.ndarray:
        return np.stack([
            qmat.projector(np.kron(POLARIZATION_KETS[a], POLARIZATION_KETS[b])) for a, b in self.settings
        ])

    def with_counts(self, counts) -> "CoincidenceRecord":
        return CoincidenceRecord(list(self.settings), counts, self.metadata, self.flux)

    def permuted(self, order: Sequence[int]) -> "CoincidenceRecord":
        order = list(order)
        flux = None if self.flux is None else self.flux[order]
        return CoincidenceRecord([self.settings[i] for i in order], self.counts[order], self.metadata, flux)


@dataclass
class TomoResult:
    rho_hat: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    incomplete: bool = False
    history: list = field(default_factory=list, repr=False)


def pauli36_settings() -> list[tuple[str, str]]:
    """All 36 pairs of single-qubit Pauli eigenstate projections."""
    return [(a, b) for a in LABELS for b in LABELS]


def design_matrix(settings: Iterable[tuple[str, str]]) -> np.ndarray:
    """Rows are vectorized projectors, so ``A @ vec(rho)`` gives Born probabilities."""
    rec = CoincidenceRecord(list(settings), np.zeros(len(list(settings))))
    return rec.projectors().conj().reshape(len(rec.settings), -1)


def is_informationally_complete(settings) -> bool:
    return int(np.linalg.matrix_rank(design_matrix(settings))) == 16


def simulate_counts(rho, settings=None, mean_total: float = 1e4, seed=None, *, exact: bool = False) -> CoincidenceRecord:
    """Poisson coincidence counts.

    Each setting receives ``mean_total`` pairs on average (the flux) and
    registers ``Poisson(flux * <proj|rho|proj>)`` coincidences. With
    ``exact=True`` the expected values are returned without sampling.
    """
    rho = qmat.density_matrix(rho)
    settings = pauli36_settings() if settings is None else list(settings)
    rec = CoincidenceRecord(settings, np.zeros(len(settings)), metadata=f"simulated, flux={mean_total}")
    probs = np.clip(np.real(np.einsum("kij,ji->k", rec.projectors(), rho)), 0.0, None)
    means = mean_total * probs
    if exact:
        counts = means
    else:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        counts = rng.poisson(means).astype(float)
    return CoincidenceRecord(settings, counts, rec.metadata, np.full(len(settings), float(mean_total)))


def _loglik(counts: np.ndarray, probs: np.ndarray, flux: np.ndarray) -> float:
    mu = flux * probs
    pos = counts > 0
    if np.any(pos & (mu <= 0)):
        return -np.inf
    return float(np.sum(counts[pos] * np.log(mu[pos])) - np.sum(mu))


def mle_reconstruct(rec: CoincidenceRecord, *, max_iter: int = MAX_ITER, tol: float = UPDATE_TOL,
                    dilution: float = DILUTION, keep_history: bool = False) -> TomoResult:
    """Maximum-likelihood two-qubit state by the diluted ``R rho R`` iteration.

    ``rho <- N[(1 - eps) rho + eps R rho R]`` with
    ``R = sum_k (n_k / p_k) Pi_k / sum_k F_k p_k`` and ``F_k`` the
    per-setting flux. Iterates stay positive and unit-trace.
    """
    proj = rec.projectors()
    flat = proj.reshape(len(proj), 16)
    flat_t = flat.conj()  # p_k = sum_ij conj(Pi_k)_ij rho_ij for Hermitian Pi_k
    n = rec.counts
    incomplete = not is_informationally_complete(rec.settings)
    if incomplete:
        log.warning("settings are not informationally complete; estimate is best effort")
    rho = np.eye(4, dtype=complex) / 4
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = np.clip((flat_t @ rho.reshape(16)).real, 1e-300, None)
        flux = rec.flux if rec.flux is not None else np.full(n.size, n.sum() / p.sum())
        if keep_history:
            history.append(_loglik(n, p, flux))
        # R rho = rho at the optimum when sum_k flux_k Pi_k is proportional to the identity
        r_op = ((n / p) @ flat).reshape(4, 4) / float(flux @ p)
        new = (1 - dilution) * rho + dilution * (r_op @ rho @ r_op)
        new = 0.5 * (new + qmat.dag(new))
        new /= np.trace(new).real
        delta = float(np.max(np.abs(new - rho)))
        rho = new
        if delta < tol:
            converged = True
            break
    p = np.clip(np.real(np.einsum("kij,ji->k", proj, rho)), 1e-300, None)
    flux = rec.flux if rec.flux is not None else np.full(n.size, n.sum() / p.sum())
    return TomoResult(qmat.density_matrix(rho), _loglik(n, p, flux), it, converged, incomplete, history)


@dataclass
class MonteCarloSummary:
    sivp_mean: float
    sivp_sigma: float
    samples: np.ndarray
    n_reps: int
    seed: int
    point_estimate: float
    sigma_defined: bool = True


def monte_carlo_sivp(
    rec: CoincidenceRecord,
    n_reps: int = 1000,
    plan: MeasurementSet | None = None,
    delta: DephasingMap | None = None,
    seed: int = 0,
    *,
    workers: int = 1,
    max_iter: int = MAX_ITER,
) -> MonteCarloSummary:
    """Shot-noise error bar on the SIVP of the reconstructed state.

    Every repetition redraws each count from a Poisson law whose mean is the
    observed count, reconstructs the state and evaluates the SIVP of the
    assemblage that ``plan`` induces on Bob. Repetition ``k`` uses the
    ``k``-th child of ``SeedSequence(seed)``, so results do not depend on
    ``workers``.
    """
    plan = plan or MeasurementSet.pauli()
    point = sivp(assemblage_from_state(mle_reconstruct(rec, max_iter=max_iter).rho_hat, plan), delta)
    children = np.random.SeedSequence(seed).spawn(n_reps)

    def one(ss):
        rng = np.random.default_rng(ss)
        resampled = rec.with_counts(rng.poisson(rec.counts).astype(float))
        rho = mle_reconstruct(resampled, max_iter=max_iter).rho_hat
        return sivp(assemblage_from_state(rho, plan), delta)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            samples = np.array(list(ex.map(one, children)))
    else:
        samples = np.array([one(c) for c in children])
    if n_reps < 2:
        return MonteCarloSummary(float(samples.mean()), float("nan"), samples, n_reps, seed, point, False)
    return MonteCarloSummary(float(samples.mean()), float(samples.std(ddof=1)), samples, n_reps, seed, point)


def read_counts_csv(text: str, metadata: str = "") -> CoincidenceRecord:
    """Parse ``alice_setting,bob_setting,counts`` rows.

    Raises ``ValidationError`` naming the line of the first malformed row, or
    listing duplicated settings.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("line 1: empty counts file") from None
    if [h.strip().lower() for h in header] != ["alice_setting", "bob_setting", "counts"]:
        raise ValidationError(f"line 1: expected header 'alice_setting,bob_setting,counts', got {','.join(header)!r}")
    settings, counts = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ValidationError(f"line {lineno}: expected 3 fields, got {len(row)}")
        a, b, c = (x.strip() for x in row)
        if a.upper() not in POLARIZATION_KETS or b.upper() not in POLARIZATION_KETS:
            raise ValidationError(f"line {lineno}: unknown setting ({a}, {b})")
        try:
            n = float(c)
        except ValueError:
            raise ValidationError(f"line {lineno}: count {c!r} is not a number") from None
        if n < 0 or not np.isfinite(n):
            raise ValidationError(f"line {lineno}: count {c!r} must be a non-negative number")
        settings.append((a.upper(), b.upper()))
        counts.append(n)
    seen, dupes = set(), []
    for s in settings:
        if s in seen:
            dupes.append(s)
        seen.add(s)
    if dupes:
        raise ValidationError(f"duplicate settings: {', '.join(a + b for a, b in dupes)}")
    if not settings:
        raise ValidationError("no data rows")
    return CoincidenceRecord(settings, counts, metadata)


def write_counts_csv(rec: CoincidenceRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alice_setting", "bob_setting", "counts"])
    for (a, b), n in zip(rec.settings, rec.counts):
        w.writerow([a, b, int(n) if float(n).is_integer() else repr(float(n))])
    return buf.getvalue()


def missing_settings(rec: CoincidenceRecord) -> list[tuple[str, str]]:
    have = set(rec.settings)
    return [s for s in pauli36_settings() if s not in have]
