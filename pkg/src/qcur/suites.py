"""Randomized property suites for the steering witness.

Every suite draws trial ``k`` from the ``k``-th child of
``SeedSequence(seed)``, so verdicts do not depend on execution order. A
suite stops at its first failing trial and keeps that trial's inputs as the
counterexample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channels, serialize, states
from .infotheory import DephasingMap
from .steering import (
    VIOLATION_THRESHOLD,
    LHSModel,
    MeasurementSet,
    assemblage_from_lhs,
    assemblage_from_state,
    qcur_vs_eur,
    sivp,
    steering_report,
)

SLACK = 1e-10
CPTP_TARGETS = (0.061, 0.198)
CPTP_TOL = 0.01
LAMBDA1_TOL = 2e-3


@dataclass
class SuiteResult:
    name: str
    trials: int
    seed: int | None
    passed: bool
    failures: int = 0
    worst: float = -np.inf
    counterexample: dict | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "trials": self.trials,
            "seed": self.seed,
            "passed": self.passed,
            "failures": self.failures,
            "worst_violation": self.worst,
            "details": self.details,
            "counterexample": self.counterexample,
        }


def _children(seed: int, trials: int):
    for k, ss in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        yield k, np.random.default_rng(ss)


def _pure_xz(rng) -> tuple[np.ndarray, object]:
    rho = states.haar_random_pure(2, 2, rng)
    return rho, assemblage_from_state(rho, MeasurementSet.pauli())


def random_lhs_model(rng, dim: int = 2) -> LHSModel:
    """Random hidden qubit states and response tables, 2 to 4 settings and outcomes."""
    n_x = int(rng.integers(2, 5))
    n_a = int(rng.integers(2, 5))
    n_l = int(rng.integers(1, 7))
    hidden = np.stack([states.haar_random_state(dim, rng, d_env=int(rng.integers(1, 3))) for _ in range(n_l)])
    weights = rng.dirichlet(np.ones(n_l))
    resp = rng.dirichlet(np.ones(n_a), size=(n_x, n_l)).transpose(0, 2, 1)
    # half of the models use deterministic responses, the extreme points
    if rng.random() < 0.5:
        pick = rng.integers(0, n_a, size=(n_x, n_l))
        resp = np.zeros((n_x, n_a, n_l))
        for x in range(n_x):
            resp[x, pick[x], np.arange(n_l)] = 1.0
    return LHSModel(hidden, weights, resp)


def lhs_suite(trials: int, seed: int) -> SuiteResult:
    res = SuiteResult("lhs", trials, seed, True)
    for k, rng in _children(seed, trials):
        model = random_lhs_model(rng)
        asm = assemblage_from_lhs(model)
        v = sivp(asm)
        res.worst = max(res.worst, v)
        if v > VIOLATION_THRESHOLD:
            res.failures += 1
            res.passed = False
            res.counterexample = {
                "trial": k,
                "sivp": v,
                "hidden_states": [serialize.matrix_to_json(s) for s in model.hidden_states],
                "weights": model.weights.tolist(),
                "responses": model.responses.tolist(),
                "assemblage": serialize.assemblage_to_json(asm),
            }
            break
    return res


def gio_suite(trials: int, seed: int) -> SuiteResult:
    res = SuiteResult("gio", trials, seed, True)
    worst_cd = worst_h = -np.inf
    for k, rng in _children(seed, trials):
        rho, asm = _pure_xz(rng)
        proto = channels.OneWayGIOProtocol.random(2, 2, 2, rng)
        before = steering_report(asm)
        after = steering_report(channels.one_way_gio_apply(proto, asm))
        d_v = after.sivp - before.sivp
        d_cd = after.cd_star - before.cd_star
        d_h = before.h_star - after.h_star
        res.worst = max(res.worst, d_v)
        worst_cd, worst_h = max(worst_cd, d_cd), max(worst_h, d_h)
        if max(d_v, d_cd, d_h) > SLACK:
            res.failures += 1
            res.passed = False
            res.counterexample = {
                "trial": k,
                "state": serialize.matrix_to_json(rho),
                "protocol": serialize.protocol_to_json(proto),
                "before": [before.cd_star, before.h_star, before.sivp],
                "after": [after.cd_star, after.h_star, after.sivp],
            }
            break
    res.details = {"worst_cd_increase": worst_cd, "worst_h_decrease": worst_h}
    return res


def ico_suite(trials: int, seed: int, max_kraus: int = 4) -> SuiteResult:
    res = SuiteResult("ico", trials, seed, True)
    for k, rng in _children(seed, trials):
        rho, asm = _pure_xz(rng)
        ch = channels.random_ico(2, int(rng.integers(1, max_kraus + 1)), rng)
        d_v = sivp(channels.channel_on_assemblage(ch, asm)) - sivp(asm)
        res.worst = max(res.worst, d_v)
        if d_v > SLACK:
            res.failures += 1
            res.passed = False
            res.counterexample = {"trial": k, "state": serialize.matrix_to_json(rho),
                                  "channel": serialize.channel_to_json(ch), "increase": d_v}
            break
    return res


def wiring_suite(trials: int, seed: int) -> SuiteResult:
    res = SuiteResult("wiring", trials, seed, True)
    for k, rng in _children(seed, trials):
        rho, asm = _pure_xz(rng)
        w = channels.WiringMap.random(2, 2, rng)
        d_v = sivp(channels.wire_assemblage(w, asm)) - sivp(asm)
        res.worst = max(res.worst, d_v)
        if d_v > SLACK:
            res.failures += 1
            res.passed = False
            res.counterexample = {"trial": k, "state": serialize.matrix_to_json(rho),
                                  "wiring": serialize.wiring_to_json(w), "increase": d_v}
            break
    return res


def convexity_suite(trials: int, seed: int) -> SuiteResult:
    res = SuiteResult("convexity", trials, seed, True)
    qs = np.round(np.arange(1, 10) / 10, 1)
    m = MeasurementSet.pauli()
    for k, rng in _children(seed, trials):
        r1 = states.haar_random_state(4, rng, d_env=int(rng.integers(1, 5)))
        r2 = states.haar_random_state(4, rng, d_env=int(rng.integers(1, 5)))
        a1, a2 = assemblage_from_state(r1, m), assemblage_from_state(r2, m)
        v1, v2 = sivp(a1), sivp(a2)
        for q in qs:
            gap = sivp(a1.mix(a2, q)) - (q * v1 + (1 - q) * v2)
            res.worst = max(res.worst, gap)
            if gap > SLACK:
                res.failures += 1
                res.passed = False
                res.counterexample = {"trial": k, "q": float(q), "gap": gap,
                                      "state_1": serialize.matrix_to_json(r1),
                                      "state_2": serialize.matrix_to_json(r2)}
                return res
    return res


def eur_suite(trials: int, seed: int) -> SuiteResult:
    """EUR violation with bases Z and X must come with a positive SIVP in basis Z."""
    res = SuiteResult("eur", trials, seed, True)
    m = MeasurementSet.pauli()
    n_eur = n_qcur = 0
    for k, rng in _children(seed, trials):
        rho = states.haar_random_state(4, rng, d_env=int(rng.integers(1, 5)))
        cmp = qcur_vs_eur(assemblage_from_state(rho, m), DephasingMap.computational(2), DephasingMap.pauli("X"))
        n_eur += cmp.eur_violated
        n_qcur += cmp.qcur_violated
        res.worst = max(res.worst, -cmp.margin)
        if not cmp.implication_holds or cmp.margin < -SLACK:
            res.failures += 1
            res.passed = False
            res.counterexample = {"trial": k, "state": serialize.matrix_to_json(rho),
                                  "margin": cmp.margin, "sivp": cmp.sivp}
            break
    res.details = {"eur_violations": n_eur, "qcur_violations": n_qcur}
    return res


@dataclass(frozen=True)
class CPTPRegression:
    sivp_before: float
    sivp_after: float
    lambda_on_maxmixed: np.ndarray
    lambda_error: float

    @property
    def checks(self) -> dict:
        return {
            "before": abs(self.sivp_before - CPTP_TARGETS[0]) <= CPTP_TOL,
            "after": abs(self.sivp_after - CPTP_TARGETS[1]) <= CPTP_TOL,
            "lambda1": self.lambda_error <= LAMBDA1_TOL,
        }


def cptp_regression() -> CPTPRegression:
    """The transcribed non-incoherent channel acting on Bob's side of the transcribed operator.

    Alice measures ``X`` and ``Z`` on the first factor; the witness uses the
    computational basis. The transcribed operator is not a state, so the
    assemblage skips positivity checks.
    """
    lam = channels.transcribed_kraus_lambda1()
    asm = assemblage_from_state(channels.transcribed_rho_ab(), MeasurementSet.pauli(), check=False)
    before = sivp(asm)
    after = sivp(channels.channel_on_assemblage(lam, asm, check=False))
    out = channels.apply_channel(lam, np.eye(2) / 2)
    err = float(np.max(np.abs(out - channels.LAMBDA1_ON_MAXMIXED)))
    return CPTPRegression(before, after, out, err)


def cptp_suite(trials: int | None = None, seed: int | None = None) -> SuiteResult:
    reg = cptp_regression()
    checks = reg.checks
    res = SuiteResult("cptp-regression", 1, None, all(checks.values()))
    res.failures = sum(not v for v in checks.values())
    res.worst = max(abs(reg.sivp_before - CPTP_TARGETS[0]), abs(reg.sivp_after - CPTP_TARGETS[1]))
    res.details = {
        "sivp_before": reg.sivp_before,
        "sivp_after": reg.sivp_after,
        "expected": list(CPTP_TARGETS),
        "tolerance": CPTP_TOL,
        "lambda1_max_error": reg.lambda_error,
        "checks": checks,
    }
    if not res.passed:
        res.counterexample = {
            "rho_ab": serialize.matrix_to_json(channels.transcribed_rho_ab()),
            "channel": serialize.channel_to_json(channels.transcribed_kraus_lambda1()),
            "lambda1_on_maxmixed": serialize.matrix_to_json(reg.lambda_on_maxmixed),
        }
    return res


SUITES = {
    "lhs": lhs_suite,
    "gio": gio_suite,
    "ico": ico_suite,
    "wiring": wiring_suite,
    "convexity": convexity_suite,
    "eur": eur_suite,
    "cptp-regression": cptp_suite,
}
RANDOMIZED = frozenset(SUITES) - {"cptp-regression"}


def run_suite(name: str, trials: int | None = None, seed: int | None = None) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(name)
    if name in RANDOMIZED:
        if seed is None or trials is None:
            raise ValueError(f"suite {name!r} needs both trials and seed")
        return SUITES[name](trials, seed)
    return SUITES[name]()
