"""Command-line entry point.

Exit codes: 0 success, 2 usage or parse error, 3 invalid state,
4 insufficient statistics, 1 when no fidelity-constrained pair could be
sampled.
"""

import argparse
import json
import sys
import time

from .discord import (RADICAND_TOL, Side, discord_report, geometric_discord, k_matrix,
                      moments_from_k, q_indicator, v_indicator)
from .errors import InsufficientStatistics, InvalidState, SamplingExhausted
from .experiment import THROUGHPUT_COLUMNS, DelayScheme, ExperimentConfig, estimate_q, throughput_curve
from .output import csv_text, dumps, write_csv, write_json, write_manifest
from .robustness import robustness_sweep
from .seeding import substream
from .states import Measure, StateFileError, bloch_decompose, load_state, purity, random_state

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID_STATE = 3
EXIT_INSUFFICIENT = 4

SWEEP_COLUMNS = ("d_a", "q_a", "v_a", "d_b", "q_b", "purity")
SCATTER_COLUMNS = ("q_exact", "q_prime", "fidelity")
FULL_SWEEP_COUNT = 10 ** 6
FULL_ROBUSTNESS_PAIRS = 10 ** 6


class UsageError(Exception):
    pass


def _emit(text, out):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _probability_open(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {v}")
    return v


def _eta_grid(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eta grid {text!r}") from None
    if not vals or any(not 0 < v <= 1 for v in vals):
        raise argparse.ArgumentTypeError("eta values must lie in (0, 1]")
    return vals


def cmd_analyze(args):
    start = time.perf_counter()
    rho = load_state(args.state_file)
    report = discord_report(rho).to_dict()
    text = dumps(report)
    sys.stdout.write(text)
    if args.out:
        write_json(args.out, report)
        write_manifest(args.out, "analyze", {"state_file": args.state_file}, None, [args.out],
                       time.perf_counter() - start)
    return EXIT_OK


def sweep_row(rho):
    """One row of the random-state sweep plus its two consistency flags."""
    b = bloch_decompose(rho)
    row = {}
    radicand_ok = True
    for side, suffix in ((Side.A, "a"), (Side.B, "b")):
        k = k_matrix(b, side)
        m = moments_from_k(k)
        radicand_ok &= m.radicand >= -RADICAND_TOL
        row["d_" + suffix] = geometric_discord(k)
        row["q_" + suffix] = q_indicator(m)
        if side is Side.A:
            row["v_a"] = v_indicator(m)
    row["purity"] = purity(rho)
    sandwich_ok = all(-1e-9 <= row["q_" + s] <= row["d_" + s] + 1e-9 for s in "ab")
    return row, sandwich_ok, radicand_ok


def run_sweep(count, seed, measure=Measure.HILBERT_SCHMIDT):
    rows, violations, bad_radicands = [], 0, 0
    for i in range(count):
        row, ok, rad_ok = sweep_row(random_state(substream(seed, i), measure))
        rows.append(row)
        violations += not ok
        bad_radicands += not rad_ok
    return rows, violations, bad_radicands


def cmd_sweep(args):
    count = FULL_SWEEP_COUNT if args.full else args.count
    start = time.perf_counter()
    rows, violations, bad = run_sweep(count, args.seed, Measure(args.measure))
    text = csv_text(SWEEP_COLUMNS, rows)
    _emit(text, args.out)
    summary = {"count": count, "seed": args.seed, "measure": Measure(args.measure).value,
               "sandwich_violations": violations, "negative_radicands": bad}
    sys.stderr.write(dumps(summary))
    if args.out:
        write_manifest(args.out, "sweep", summary, args.seed, [args.out], time.perf_counter() - start)
    return EXIT_OK


def _experiment_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config file must contain a JSON object")
    overrides = {"eta": args.eta, "tau_ns": args.tau_ns, "seed": args.seed,
                 "iterations": getattr(args, "count", None)}
    if args.scheme is not None:
        overrides["delay_scheme"] = DelayScheme.parse(args.scheme).value
    if args.strict_delay_factor:
        overrides["strict_delay_factor"] = True
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad experiment config: {exc}") from exc


def cmd_simulate(args):
    start = time.perf_counter()
    rho = load_state(args.state_file)
    cfg = _experiment_config(args)
    est = estimate_q(rho, cfg, side=Side(args.side), workers=args.workers)
    result = {"m1": est.m1.value, "m1_std_error": est.m1.std_error,
              "m2": est.m2.value, "m2_std_error": est.m2.std_error,
              "q": est.value, "q_std_error": est.std_error,
              "n_success_m1": est.m1.n_success, "n_success_m2": est.m2.n_success,
              "n_total": cfg.iterations, "side": Side(args.side).value,
              "runs": [est.m1.to_dict(cfg), est.m2.to_dict(cfg)]}
    _emit(dumps(result), args.out)
    if args.out:
        write_manifest(args.out, "simulate", cfg.to_dict(), cfg.seed, [args.out],
                       time.perf_counter() - start)
    return EXIT_OK


def cmd_throughput(args):
    start = time.perf_counter()
    cfg = _experiment_config(args)
    rows = throughput_curve(cfg, args.eta_grid, args.n_target)
    _emit(csv_text(THROUGHPUT_COLUMNS, rows), args.out)
    if args.out:
        write_manifest(args.out, "throughput", {**cfg.to_dict(), "eta_grid": args.eta_grid,
                                                "n_target": args.n_target},
                       None, [args.out], time.perf_counter() - start)
    return EXIT_OK


def cmd_robustness(args):
    start = time.perf_counter()
    n_pairs = FULL_ROBUSTNESS_PAIRS if args.full else args.n_pairs
    summary = robustness_sweep(n_pairs, args.f_min, args.seed, workers=args.workers)
    outputs = []
    if args.out:
        write_csv(args.out, SCATTER_COLUMNS, summary.rows)
        outputs.append(args.out)
    summary_json = summary.to_dict()
    if args.summary:
        write_json(args.summary, summary_json)
        outputs.append(args.summary)
    sys.stdout.write(dumps(summary_json))
    if outputs:
        write_manifest(outputs[0], "robustness", {"n_pairs": n_pairs, "f_min": args.f_min},
                       args.seed, outputs, time.perf_counter() - start)
    return EXIT_OK


def _add_experiment_flags(p):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--eta", type=float, help="detector efficiency")
    p.add_argument("--tau-ns", type=float, help="repetition period in ns")
    p.add_argument("--scheme", choices=["det", "prob"], help="delay scheme for M2")
    p.add_argument("--strict-delay-factor", action="store_true",
                   help="include the delay success p^2 in the M2 rate")
    p.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="discordlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="discord indicators of a state file")
    p.add_argument("state_file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="indicators for random states (CSV)")
    p.add_argument("--count", type=_positive_int, default=10 ** 4)
    p.add_argument("--full", action="store_true", help=f"use {FULL_SWEEP_COUNT} states")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--measure", choices=[m.value for m in Measure], default=Measure.HILBERT_SCHMIDT.value)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of M1, M2 and Q")
    p.add_argument("state_file")
    _add_experiment_flags(p)
    p.add_argument("--count", type=_positive_int, help="iterations per moment")
    p.add_argument("--side", choices=["A", "B"], default="A")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("throughput", help="success rates versus detector efficiency (CSV)")
    _add_experiment_flags(p)
    p.add_argument("--eta-grid", type=_eta_grid,
                   default=[round(0.05 * i, 2) for i in range(1, 21)],
                   help="comma-separated efficiencies in (0, 1]")
    p.add_argument("--n-target", type=_positive_int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_throughput)

    p = sub.add_parser("robustness", help="mismatched-source sweep")
    p.add_argument("--n-pairs", "--count", dest="n_pairs", type=_positive_int, default=10 ** 4)
    p.add_argument("--full", action="store_true", help=f"use {FULL_ROBUSTNESS_PAIRS} pairs")
    p.add_argument("--f-min", type=_probability_open, default=0.90)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", help="scatter CSV (q_exact, q_prime, fidelity)")
    p.add_argument("--summary", help="summary JSON")
    p.set_defaults(func=cmd_robustness)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StateFileError, UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidState as exc:
        print(f"invalid state ({exc.invariant}): {exc}", file=sys.stderr)
        return EXIT_INVALID_STATE
    except InsufficientStatistics as exc:
        print(f"insufficient statistics: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except SamplingExhausted as exc:
        print(f"sampling exhausted: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
