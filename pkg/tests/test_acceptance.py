"""Acceptance criteria, one test per criterion.

Each test records a single ``PASS``/``FAIL`` line, printed in the terminal
summary (see ``conftest.py``) and also when this file is run as a script.
Tolerances are the stated ones; nothing is loosened to make a check pass.
"""

import time

import numpy as np
import pytest

from qcur import incompat, states, suites, tomo
from qcur.channels import WiringMap
from qcur.cli import classify, oneway_scan
from qcur.infotheory import binary_entropy
from qcur.steering import MeasurementSet, assemblage_from_state, sivp

XZ = MeasurementSet.pauli()
REPORT: list[str] = []

DATA_SEED = 2024
MC_SEED = 11
NOISE_SEED = 0


def record(number: int, ok: bool, summary: str) -> bool:
    REPORT.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {summary}")
    return ok


def test_c01_fig2b_curve():
    t0 = time.perf_counter()
    qs = np.linspace(0, 1, 101)
    err = max(abs(sivp(assemblage_from_state(states.phi_state(float(q)), XZ)) - binary_entropy(q)) for q in qs)
    dt = time.perf_counter() - t0
    ok = record(1, err <= 1e-9 and dt < 1.0, f"fig2b max |err| = {err:.2e} over 101 points, {dt:.3f} s")
    assert ok


def test_c02_fig2c_curve():
    rs = np.linspace(0, 1, 101)
    err = max(abs(sivp(assemblage_from_state(states.bell_diagonal(float(r)), XZ)) - (1 - binary_entropy(r))) for r in rs)
    assert record(2, err <= 1e-9, f"fig2c max |err| = {err:.2e} over 101 points")


def test_c03_cptp_counterexample():
    reg = suites.cptp_regression()
    c = reg.checks
    ok = record(3, all(c.values()),
                f"SIVP before {reg.sivp_before:.4f} (target 0.061, {'ok' if c['before'] else 'miss'}), "
                f"after {reg.sivp_after:.4f} (target 0.198, {'ok' if c['after'] else 'miss'}), "
                f"Lambda1 error {reg.lambda_error:.1e} ({'ok' if c['lambda1'] else 'miss'})")
    assert ok, "transcribed operator and channel do not reproduce the 'after' value"


def _suite(number: int, name: str, trials: int, seed: int, budget: float | None = None):
    t0 = time.perf_counter()
    res = suites.run_suite(name, trials, seed)
    dt = time.perf_counter() - t0
    ok = res.passed and res.trials == trials and (budget is None or dt < budget)
    extra = "".join(f", {k} {v:.3g}" for k, v in res.details.items())
    record(number, ok, f"{name} suite: {res.trials} trials, {res.failures} failures, "
                       f"worst {res.worst:.2e}{extra}, {dt:.1f} s")
    assert ok, res.counterexample


def test_c04_lhs_soundness():
    _suite(4, "lhs", 1000, 4)


def test_c05_gio_monotonicity():
    _suite(5, "gio", 1000, 5)


def test_c06_ico_monotonicity():
    _suite(6, "ico", 10_000, 6, budget=300.0)


def test_c07_eur_implication():
    _suite(7, "eur", 1000, 7)


def test_c08_incompatibility_monotone():
    v_pauli = incompat.incompat_measure(XZ).value
    v_smeared = incompat.incompat_measure(incompat.smeared_pauli(0.6)).value
    cfg = incompat.OptimizerConfig(grid=11, budget=400)
    base = incompat.incompat_measure(XZ, cfg).value
    # uniform wirings wash out almost everything, so half are nearly deterministic
    wirings = [WiringMap.random(2, 2, s, concentration=1.0 if s < 100 else 0.05) for s in range(200)]
    vals = [incompat.incompat_measure(incompat.post_process_measurements(w, XZ), cfg).value for w in wirings]
    worst = max(vals) - base
    ok = abs(v_pauli - 1.0) <= 1e-3 and v_smeared <= 1e-6 and worst <= 1e-3
    record(8, ok, f"V_I(X,Z) = {v_pauli:.6f}, V_I(eta=0.6) = {v_smeared:.1e}, "
                  f"max increase over 200 wirings {worst:.1e} "
                  f"({sum(v > 1e-6 for v in vals)} with V_I > 0)")
    assert ok


def test_c09_oneway_scan():
    t0 = time.perf_counter()
    rows = oneway_scan(50, 50)
    dt = time.perf_counter() - t0
    regions = [r[4] for r in rows]
    corner = [r[4] for r in rows if r[0] == 1.0 and r[1] == 0.25 * np.pi]
    n = {k: regions.count(k) for k in ("I", "II", "III")}
    ok = n["II"] > 0 and corner == ["I"] and dt < 120 and len(rows) == 2500
    record(9, ok, f"regions I={n['I']} II={n['II']} III={n['III']}, (1, pi/4) in {corner[0]}, {dt:.1f} s")
    assert ok
    assert classify(0.0, 0.0) == "III"


def test_c10_tomography_pipeline():
    parts, ok = [], True
    for q in (0.1, 0.3, 0.5):
        rec = tomo.simulate_counts(states.phi_state(q), mean_total=1e4, seed=DATA_SEED)
        mc = tomo.monte_carlo_sivp(rec, 1000, seed=MC_SEED, workers=4)
        z = abs(mc.sivp_mean - binary_entropy(q)) / mc.sivp_sigma
        ok &= z <= 2.0
        parts.append(f"q={q}: {mc.sivp_mean:.4f} +/- {mc.sivp_sigma:.4f} ({z:.2f} sigma)")
    noisy = tomo.simulate_counts(states.white_noise_mix(states.PHI_PLUS, 0.026), mean_total=1e4, seed=NOISE_SEED)
    p_opt, _ = states.fit_white_noise(tomo.mle_reconstruct(noisy).rho_hat, states.PHI_PLUS)
    ok &= abs(p_opt - 0.026) <= 0.005
    parts.append(f"noise fit p = {p_opt:.4f}")
    record(10, bool(ok), "; ".join(parts))
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
