"""Command-line entry point: ``qcur <subcommand> ...``.

Exit codes: 0 success, 1 property-suite failure, 2 usage error, 3 input
validation error. Numbers are printed with 9 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import incompat, serialize, states, suites, tomo
from .infotheory import DephasingMap
from .qmat import DomainError, ValidationError
from .serialize import fmt
from .steering import VIOLATION_THRESHOLD, MeasurementSet, assemblage_from_state, sivp, sivp_both_directions

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3

ONEWAY_S = (0.75, 1.0)
ONEWAY_THETA = (0.005, 0.25 * np.pi)


class UsageError(Exception):
    pass


def _grid(lo: float, hi: float, steps: int, name: str) -> np.ndarray:
    """``steps`` equal intervals, ``steps + 1`` points including both ends."""
    if steps < 1:
        raise UsageError(f"--steps must be at least 1, got {steps}")
    if not lo <= hi:
        raise UsageError(f"need {name}min <= {name}max, got {lo} > {hi}")
    return np.linspace(lo, hi, steps + 1)


def _unit_range(lo: float, hi: float, name: str) -> None:
    if not 0.0 <= lo <= hi <= 1.0:
        raise UsageError(f"need 0 <= {name}min <= {name}max <= 1, got [{lo}, {hi}]")


def _probability(x: float, flag: str) -> float:
    if not 0.0 <= x <= 1.0:
        raise UsageError(f"{flag} must lie in [0, 1], got {x}")
    return x


def _plan(text: str) -> MeasurementSet:
    names = {"x": 1, "y": 2, "z": 3, "1": 1, "2": 2, "3": 3}
    try:
        axes = tuple(names[c.strip().lower()] for c in text.split(",") if c.strip())
    except KeyError:
        raise UsageError(f"--plan expects comma-separated Pauli axes from x,y,z, got {text!r}") from None
    if not axes:
        raise UsageError("--plan needs at least one axis")
    return MeasurementSet.pauli(axes)


def _basis(text: str) -> DephasingMap:
    t = text.strip().upper()
    if t == "Z":
        return DephasingMap.computational(2)
    if t in ("X", "Y"):
        return DephasingMap.pauli(t)
    raise UsageError(f"--basis must be x, y or z, got {text!r}")


def _write(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _table(header: list[str], rows: list[list], fmt_name: str) -> str:
    if fmt_name == "json":
        return serialize.dumps([dict(zip(header, r)) for r in rows])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def cmd_fig2b(args) -> int:
    _unit_range(args.qmin, args.qmax, "q")
    p = _probability(args.noise_p, "--noise-p")
    m = MeasurementSet.pauli()
    rows = []
    for q in _grid(args.qmin, args.qmax, args.steps, "q"):
        rho = states.phi_state(float(q))
        rows.append([float(q), sivp(assemblage_from_state(rho, m)),
                     sivp(assemblage_from_state(states.white_noise_mix(rho, p), m))])
    _write(_table(["q", "sivp_ideal", "sivp_noisy"], rows, args.format), args.output)
    return EXIT_OK


def noisy_bell_diagonal(r: float, p_plus: float, p_minus: float) -> np.ndarray:
    """Bell-diagonal mixture where each Bell projector carries its own white noise."""
    return (r * states.white_noise_mix(states.PHI_PLUS, p_plus)
            + (1 - r) * states.white_noise_mix(states.PHI_MINUS, p_minus))


def cmd_fig2c(args) -> int:
    _unit_range(args.rmin, args.rmax, "r")
    pp = _probability(args.noise_plus, "--noise-plus")
    pm = _probability(args.noise_minus, "--noise-minus")
    m = MeasurementSet.pauli()
    rows = []
    for r in _grid(args.rmin, args.rmax, args.steps, "r"):
        r = float(r)
        rows.append([r, sivp(assemblage_from_state(states.bell_diagonal(r), m)),
                     sivp(assemblage_from_state(noisy_bell_diagonal(r, pp, pm), m))])
    _write(_table(["r", "sivp_ideal", "sivp_noisy"], rows, args.format), args.output)
    return EXIT_OK


def classify(a_to_b: float, b_to_a: float) -> str:
    """Region I when both directions violate, II when exactly one does, III otherwise."""
    n = (a_to_b > VIOLATION_THRESHOLD) + (b_to_a > VIOLATION_THRESHOLD)
    return {2: "I", 1: "II", 0: "III"}[n]


def oneway_scan(grid_s: int = 50, grid_theta: int = 50, s_range=ONEWAY_S, theta_range=ONEWAY_THETA) -> list[list]:
    """Rows ``(s, theta, sivp_AtoB, sivp_BtoA, region)`` in ``s``-major order.

    ``AtoB`` has Alice measure ``X, Z`` and tests Bob's conditional states;
    ``BtoA`` swaps the roles.
    """
    if grid_s < 1 or grid_theta < 1:
        raise UsageError("grid sizes must be positive")
    m = MeasurementSet.pauli()
    rows = []
    for s in np.linspace(*s_range, grid_s):
        for th in np.linspace(*theta_range, grid_theta):
            ab, ba = sivp_both_directions(states.chi_oneway(float(s), states.theta_weights(float(th))), m, m)
            rows.append([float(s), float(th), ab, ba, classify(ab, ba)])
    return rows


def cmd_oneway(args) -> int:
    rows = oneway_scan(args.grid_s, args.grid_theta, (args.s_min, args.s_max), (args.theta_min, args.theta_max))
    _write(_table(["s", "theta", "sivp_AtoB", "sivp_BtoA", "region"], rows, args.format), args.output)
    counts = {k: sum(r[4] == k for r in rows) for k in ("I", "II", "III")}
    print(f"regions: I={counts['I']} II={counts['II']} III={counts['III']}", file=sys.stderr)
    return EXIT_OK


def cmd_properties(args) -> int:
    if args.suite in suites.RANDOMIZED and args.seed is None:
        raise UsageError(f"suite {args.suite!r} is randomized and requires --seed")
    res = suites.run_suite(args.suite, args.trials, args.seed)
    _write(serialize.dumps(res.to_dict()), args.output)
    status = "PASS" if res.passed else "FAIL"
    print(f"{status} {res.name}: {res.trials} trial(s), {res.failures} failure(s)", file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_FAIL


BUILTINS = ("pauli-xz", "smeared-xz")


def cmd_incompat(args) -> int:
    if (args.builtin is None) == (args.file is None):
        raise UsageError("give exactly one of --builtin or --file")
    if args.builtin == "pauli-xz":
        m = MeasurementSet.pauli()
    elif args.builtin == "smeared-xz":
        if not 0.0 <= args.eta <= 1.0:
            raise UsageError(f"--eta must lie in [0, 1], got {args.eta}")
        m = incompat.smeared_pauli(args.eta)
    else:
        m = serialize.loads(Path(args.file).read_text())
        if not isinstance(m, MeasurementSet):
            raise ValidationError(f"{args.file}: expected a measurement_set document")
    cfg = incompat.OptimizerConfig(grid=args.grid, budget=args.budget, seed=args.seed)
    rep = incompat.incompat_measure(m, cfg)
    out = {
        "value": rep.value,
        "lower_bound": rep.lower_bound,
        "converged": rep.converged,
        "n_evals": rep.n_evals,
        "seed": args.seed,
        "argmax_state": serialize.matrix_to_json(rep.argmax_state),
        "reference_basis": serialize.matrix_to_json(rep.basis),
        "trace": [[k, v] for k, v in rep.trace],
    }
    _write(serialize.dumps(out), args.output)
    return EXIT_OK


def cmd_tomo(args) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    rec = tomo.read_counts_csv(Path(args.counts).read_text(), metadata=str(args.counts))
    missing = tomo.missing_settings(rec)
    if missing:
        raise ValidationError(f"missing settings: {', '.join(a + b for a, b in missing)}")
    plan = _plan(args.plan)
    delta = _basis(args.basis)
    fit = tomo.mle_reconstruct(rec)
    mc = tomo.monte_carlo_sivp(rec, args.reps, plan, delta, seed=args.seed, workers=args.workers)
    out = {
        "rho_hat": serialize.matrix_to_json(fit.rho_hat),
        "loglik": fit.loglik,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "sivp_point": mc.point_estimate,
        "sivp_mean": mc.sivp_mean,
        "sivp_sigma": mc.sivp_sigma if mc.sigma_defined else None,
        "sigma_defined": mc.sigma_defined,
        "n_reps": mc.n_reps,
        "seed": mc.seed,
    }
    if args.theory_q is not None:
        if not 0.0 <= args.theory_q <= 1.0:
            raise UsageError(f"--theory-q must lie in [0, 1], got {args.theory_q}")
        rho_th = states.phi_state(args.theory_q, args.theory_phi)
        p_opt, fid = states.fit_white_noise(fit.rho_hat, rho_th)
        out["noise_fit"] = {"theory_q": args.theory_q, "theory_phi": args.theory_phi,
                            "p_opt": p_opt, "fidelity": fid}
    _write(serialize.dumps(out), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcur", description="Coherence-based steering witness toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, table=True):
        sp.add_argument("--output", "-o", help="output path (default: stdout)")
        if table:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    b = sub.add_parser("fig2b", help="SIVP of |Phi(q,0)> with and without white noise")
    b.add_argument("--qmin", type=float, default=0.0)
    b.add_argument("--qmax", type=float, default=1.0)
    b.add_argument("--steps", type=int, default=100, help="number of equal intervals")
    b.add_argument("--noise-p", type=float, default=0.026)
    common(b)
    b.set_defaults(func=cmd_fig2b)

    c = sub.add_parser("fig2c", help="SIVP of Bell-diagonal states")
    c.add_argument("--rmin", type=float, default=0.0)
    c.add_argument("--rmax", type=float, default=1.0)
    c.add_argument("--steps", type=int, default=100, help="number of equal intervals")
    c.add_argument("--noise-plus", type=float, default=0.009)
    c.add_argument("--noise-minus", type=float, default=0.013)
    common(c)
    c.set_defaults(func=cmd_fig2c)

    o = sub.add_parser("oneway", help="two-way / one-way / undetected classification scan")
    o.add_argument("--grid-s", type=int, default=50)
    o.add_argument("--grid-theta", type=int, default=50)
    o.add_argument("--s-min", type=float, default=ONEWAY_S[0])
    o.add_argument("--s-max", type=float, default=ONEWAY_S[1])
    o.add_argument("--theta-min", type=float, default=ONEWAY_THETA[0])
    o.add_argument("--theta-max", type=float, default=ONEWAY_THETA[1])
    common(o)
    o.set_defaults(func=cmd_oneway)

    pr = sub.add_parser("properties", help="run a randomized property suite")
    pr.add_argument("suite", choices=sorted(suites.SUITES))
    pr.add_argument("--trials", type=int, default=1000)
    pr.add_argument("--seed", type=int)
    common(pr, table=False)
    pr.set_defaults(func=cmd_properties)

    i = sub.add_parser("incompat", help="lower bound on the incompatibility monotone")
    i.add_argument("--builtin", choices=BUILTINS)
    i.add_argument("--file", help="measurement_set JSON document")
    i.add_argument("--eta", type=float, default=0.6, help="visibility for smeared-xz")
    i.add_argument("--budget", type=int, default=2000)
    i.add_argument("--grid", type=int, default=21)
    i.add_argument("--seed", type=int, required=True)
    common(i, table=False)
    i.set_defaults(func=cmd_incompat)

    t = sub.add_parser("tomo", help="tomography and Monte Carlo SIVP from a counts CSV")
    t.add_argument("counts", help="CSV with header alice_setting,bob_setting,counts")
    t.add_argument("--plan", default="x,z", help="Alice's Pauli settings, e.g. x,z")
    t.add_argument("--basis", default="z", help="reference basis on Bob's side")
    t.add_argument("--reps", type=int, default=1000)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--theory-q", type=float, help="fit white noise against |Phi(q, phi)>")
    t.add_argument("--theory-phi", type=float, default=0.0)
    common(t, table=False)
    t.set_defaults(func=cmd_tomo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except (ValidationError, DomainError, json.JSONDecodeError) as e:
        print(f"qcur: validation error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"qcur: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
