"""Command-line entry point: ``glauberlearn <subcommand> ...``.

Experiment settings come from an optional ``key = value`` file (``--config``);
any flag given on the command line overrides the file.  Seeds are always
explicit.  Exit status is 0 exactly when the command finished and every
requested check passed.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .dynamics import RngSeed, read_trace, simulate_ct, simulate_dt, write_trace
from .experiments import (
    COUPLING_MODES,
    INIT_MODES,
    ExperimentConfig,
    benchmark_csv,
    build_model,
    initial_state,
    read_config,
    resolve_params,
    run_recovery_experiment,
    run_scaling_benchmark,
    write_experiment,
)
from .graphs import GENERATORS
from .learner import glauber_learn, practical_params, theory_params, write_edges
from .lowerbound import build_ensemble, fano_bound, kl_reports, theorem2_T
from .model import write_model
from .verification import check_names, run_verification_suite


def _tau(text: str) -> float | str:
    if text in ("clt", "default"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tau must be a number, 'clt' or 'default', got {text!r}") from None


def _add_model_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("model")
    g.add_argument("--config", help="key = value settings file; flags override it")
    g.add_argument("--graph", choices=GENERATORS)
    g.add_argument("--p", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--model-file", dest="model_file")
    g.add_argument("--couplings", choices=COUPLING_MODES)
    g.add_argument("--theta", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--init", choices=INIT_MODES)
    g.add_argument("--seed", type=int)


def _add_learner_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--mode", choices=("theory", "practical"))
    ap.add_argument("--L", type=float)
    ap.add_argument("--tau", type=_tau)
    ap.add_argument("--delta", type=float)
    ap.add_argument("--symmetrize", action="store_const", const=True)


def _settings(args, keys) -> dict:
    out = read_config(args.config) if getattr(args, "config", None) else {}
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


_CFG_KEYS = [
    "graph", "p", "d", "rows", "cols", "model_file", "couplings", "theta", "alpha",
    "beta", "init", "seed", "mode", "L", "tau", "T", "delta", "symmetrize", "trials",
]


def cmd_simulate(args) -> int:
    settings = _settings(args, _CFG_KEYS)
    if args.model_file:
        settings.update(graph="file", couplings="file")
    cfg = ExperimentConfig.from_mapping(settings)
    model = build_model(cfg)
    seed = RngSeed(cfg.seed, args.stream)
    init = initial_state(cfg.init, model, seed)
    if args.steps is not None:
        trace = simulate_dt(model, init, args.steps, seed)
    else:
        if cfg.T is None:
            raise ValueError("simulate needs --T (continuous) or --steps (discrete)")
        trace = simulate_ct(model, init, cfg.T, seed)
    write_trace(trace, args.out)
    if args.model_out:
        write_model(model, args.model_out)
    print(f"wrote {len(trace)} events to {args.out}")
    return 0


def cmd_learn(args) -> int:
    trace = read_trace(args.trace)
    if args.mode == "theory":
        if None in (args.d, args.alpha, args.beta):
            raise ValueError("theory mode needs --d, --alpha and --beta")
        params = theory_params(trace.p, args.d, args.alpha, args.beta)
        if params.T > trace.horizon:
            print(f"warning: trace horizon {trace.horizon:g} is shorter than the required T = {params.T:.4g}", file=sys.stderr)
    else:
        if args.L is None:
            raise ValueError("practical mode needs --L")
        d = args.d if args.d is not None else 1
        alpha = args.alpha if args.alpha is not None else 1.0
        beta = args.beta if args.beta is not None else alpha
        tau = args.tau if args.tau is not None else "clt"
        delta = args.delta if args.delta is not None else 0.01
        params = practical_params(args.L, trace.horizon, alpha, beta, d, tau, trace.p, delta, bool(args.symmetrize))
    edges = glauber_learn(trace, params, bool(args.symmetrize))
    write_edges(edges, args.out)
    print(" ".join(f"{k}={v:.6g}" for k, v in params.as_dict().items()), f"edges={len(edges)}")
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_mapping(_settings(args, _CFG_KEYS))
    result = run_recovery_experiment(cfg)
    paths = write_experiment(result, args.out)
    print(f"success rate {result.success_rate:.4f} ({result.successes}/{len(result.trials)}); results in {paths['results']}")
    if args.min_success is not None and result.success_rate < args.min_success:
        return 1
    return 0


def cmd_benchmark(args) -> int:
    res = run_scaling_benchmark(args.p, args.T, args.seed, args.L, args.d, args.repeats)
    text = benchmark_csv(res)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    lo, hi = args.exponent_range
    ok = lo <= res.exponent <= hi
    print(f"exponent {res.exponent:.3f} in [{lo}, {hi}]: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_verify(args) -> int:
    only = [name for chunk in args.only or () for name in chunk.split(",") if name]
    checks = run_verification_suite(only, args.model, args.seed, args.mc_reps, args.stationarity_runs)
    lines = [c.line() for c in checks]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if checks and all(c.passed for c in checks) else 1


def cmd_lowerbound(args) -> int:
    ens = build_ensemble(args.p, args.d, args.alpha, args.beta)
    reports = kl_reports(ens, args.n)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "u", "v", "C1", "Cl", "total", "bound", "margin"])
        for r in reports:
            w.writerow([r.variant, r.u, r.v, repr(r.C1), repr(r.Cl), repr(r.total), repr(r.bound), repr(r.margin)])
    ok = all(r.total <= r.bound for r in reports)
    summary = f"M={ens.M} worst_margin={min(r.margin for r in reports):.6g}"
    if ens.M >= 2:
        fano = fano_bound([r.total for r in reports], ens.M)
        summary += f" gamma={fano.gamma:.6g} fano_applicable={fano.applicable}"
        if fano.applicable:
            summary += f" risk>={fano.risk_bound:.6g}"
    if args.p >= 2:
        summary += f" T_lower={theorem2_T(args.p, args.d, args.alpha, args.beta):.6g}"
    print(summary)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glauberlearn", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate Glauber dynamics and write a trace")
    _add_model_flags(s)
    s.add_argument("--T", type=float, help="continuous-time horizon")
    s.add_argument("--steps", type=int, help="discrete heat-bath chain with this many samples")
    s.add_argument("--stream", type=int, default=0, help="RNG stream id under the seed")
    s.add_argument("--out", required=True)
    s.add_argument("--model-out", dest="model_out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("learn", help="estimate the edge set from a trace")
    s.add_argument("--trace", required=True)
    _add_learner_flags(s)
    s.add_argument("--d", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_learn, mode="practical")

    s = sub.add_parser("experiment", help="seeded recovery trials")
    _add_model_flags(s)
    _add_learner_flags(s)
    s.add_argument("--T", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--min-success", dest="min_success", type=float, help="fail when the success rate is lower")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("benchmark", help="learner wall-clock scaling in p")
    s.add_argument("--p", type=int, nargs="+", default=[100, 200, 400])
    s.add_argument("--T", type=float, default=2000.0)
    s.add_argument("--L", type=float, default=1.0)
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--exponent-range", dest="exponent_range", type=float, nargs=2, default=(1.6, 2.4))
    s.add_argument("--out")
    s.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("verify", help="run the numerical verification suite")
    s.add_argument("--only", action="append", help=f"check or module names, comma separated: {', '.join(check_names())}")
    s.add_argument("--model", help="also validate this model file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mc-reps", dest="mc_reps", type=int, default=200_000)
    s.add_argument("--stationarity-runs", dest="stationarity_runs", type=int, default=100_000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("lowerbound", help="exact KL report for the clique ensemble")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_lowerbound)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"glauberlearn {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
