"""Command-line interface.

Subcommands:
  run       one algorithm run, prints the run record
  sweep     parameter sweep to CSV (config file and/or flags)
  oracle    exact small-n analysis: times, stationary, lemma checks
  bounds    closed-form bound table
  baseline  uniform-sampling best-fitness baseline

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .bounds import (
    clone_noise_probability,
    eq1_check,
    mixing_bound,
    noisy_restart_bound,
    restart_bound,
)
from .core import MutationOperator, ProblemInstance, ProblemKind, RandomSource
from .engine import AlgorithmConfig, StoppingRule, run
from .harness import (
    ExperimentConfig,
    SweepCell,
    baseline_mean,
    emit_csv,
    format_csv,
    run_sweep,
)
from .noise import NoiseKind, NoiseModel
from . import oracle


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisyea",
        description="Simulate and exactly analyse (1+lambda) EAs under prior noise.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_lambda=True):
        p.add_argument("--function", choices=["onemax", "leadingones", "hurdle"],
                       required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--w", type=int, default=None, help="hurdle width")
        p.add_argument("--mutation", choices=["standard", "onebit"],
                       default="standard")
        p.add_argument("--noise", choices=["none", "onebit", "bitwise", "asym"],
                       default="none")
        p.add_argument("--p", type=float, default=None)
        p.add_argument("--q", type=float, default=None)
        if with_lambda:
            p.add_argument("--lambda", dest="lam", type=int, default=1)

    p_run = sub.add_parser("run", help="single run, print the run record")
    common(p_run)
    p_run.add_argument("--max-gens", type=int, default=10000)
    p_run.add_argument("--seed", type=int, default=1)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="parameter sweep to CSV")
    p_sweep.add_argument("--config", default=None,
                         help="JSON file with the same keys as the flags")
    p_sweep.add_argument("--function", choices=["onemax", "leadingones", "hurdle"])
    p_sweep.add_argument("--n", type=int)
    p_sweep.add_argument("--w", type=int, default=None)
    p_sweep.add_argument("--mutation", choices=["standard", "onebit"], default=None)
    p_sweep.add_argument("--noise", choices=["none", "onebit", "bitwise", "asym"],
                         default=None)
    p_sweep.add_argument("--lambda", dest="lam", default=None,
                         help="comma-separated offspring counts, e.g. 1,2,4")
    p_sweep.add_argument("--p", type=float, default=None,
                         help="single p value, or the fixed p of a bit-wise q sweep")
    p_sweep.add_argument("--q", type=float, default=None, help="single q value")
    p_sweep.add_argument("--p-log2-range", default=None, metavar="A:B",
                         help="sweep p over 2^A..2^B")
    p_sweep.add_argument("--q-log2-range", default=None, metavar="A:B",
                         help="sweep q over 2^A..2^B (bit-wise noise)")
    p_sweep.add_argument("--runs", type=int, default=None)
    p_sweep.add_argument("--max-gens", type=int, default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--threads", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--budget", type=float, default=None,
                         help="generation-step budget guard (default 1e11)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser("oracle", help="exact analysis on small n")
    common(p_oracle, with_lambda=False)
    p_oracle.add_argument("--check",
                          choices=["times", "stationary", "lemma1", "median"],
                          default="times")
    p_oracle.add_argument("--export-matrix", default=None, metavar="PATH")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_bounds = sub.add_parser("bounds", help="closed-form bound table")
    p_bounds.add_argument("--M", type=float, default=None)
    p_bounds.add_argument("--p", type=float, required=True)
    p_bounds.add_argument("--nu", type=int, default=None)
    p_bounds.add_argument("--lambda", dest="lam", type=int, default=None)
    p_bounds.add_argument("--n", type=int, default=None)
    p_bounds.add_argument("--ell", type=int, default=None)
    p_bounds.add_argument("--t", type=int, default=None)
    p_bounds.set_defaults(func=_cmd_bounds)

    p_base = sub.add_parser("baseline", help="uniform sampling baseline")
    p_base.add_argument("--function", choices=["onemax", "leadingones", "hurdle"],
                        required=True)
    p_base.add_argument("--n", type=int, required=True)
    p_base.add_argument("--w", type=int, default=None)
    p_base.add_argument("--samples", type=int, required=True)
    p_base.add_argument("--reps", type=int, default=1)
    p_base.add_argument("--seed", type=int, default=1)
    p_base.set_defaults(func=_cmd_baseline)

    return parser


def _instance(function: str, n: int, w) -> ProblemInstance:
    kind = ProblemKind(function)
    if kind is ProblemKind.HURDLE and w is None:
        raise ValueError("hurdle requires --w")
    return ProblemInstance(kind, n, w if kind is ProblemKind.HURDLE else None)


def _noise_model(noise: str, p, q) -> NoiseModel:
    kind = NoiseKind(noise)
    if kind is NoiseKind.NONE:
        return NoiseModel.none()
    if p is None:
        raise ValueError(f"{noise} noise requires --p")
    if kind is NoiseKind.BIT_WISE:
        if q is None:
            raise ValueError("bitwise noise requires --q")
        return NoiseModel.bit_wise(p, q)
    return NoiseModel(kind, p)


def _cmd_run(args) -> int:
    instance = _instance(args.function, args.n, args.w)
    cfg = AlgorithmConfig(
        lam=args.lam,
        mutation=MutationOperator(args.mutation),
        noise=_noise_model(args.noise, args.p, args.q),
    )
    record = run(instance, cfg, StoppingRule(args.max_gens), RandomSource(args.seed))
    print(f"success: {record.success}")
    print(f"generations: {record.generations}")
    print(f"evaluations: {record.evaluations}")
    print(f"best_true_fitness: {record.best_true_fitness}")
    print(f"final_parent: {record.final_parent.to_str()}")
    return 0


def _parse_log2_range(spec: str) -> list[float]:
    try:
        lo, hi = spec.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ValueError(f"expected A:B with integers, got {spec!r}")
    if lo > hi:
        raise ValueError(f"empty range {spec!r}")
    return [2.0**e for e in range(lo, hi + 1)]


def _cmd_sweep(args) -> int:
    cfgfile = {}
    if args.config:
        with open(args.config) as fh:
            cfgfile = json.load(fh)

    def opt(flag_value, key, default=None):
        if flag_value is not None:
            return flag_value
        return cfgfile.get(key, default)

    function = opt(args.function, "function")
    n = opt(args.n, "n")
    if function is None or n is None:
        raise ValueError("sweep requires --function and --n (flag or config)")
    instance = _instance(function, int(n), opt(args.w, "w"))
    mutation = MutationOperator(opt(args.mutation, "mutation", "standard"))
    noise_kind = NoiseKind(opt(args.noise, "noise", "none"))

    lam_spec = opt(args.lam, "lambda", "1")
    if isinstance(lam_spec, (list, tuple)):
        lams = [int(v) for v in lam_spec]
    else:
        lams = [int(v) for v in str(lam_spec).split(",") if v.strip()]

    p = opt(args.p, "p")
    q = opt(args.q, "q")
    p_range = opt(args.p_log2_range, "p_log2_range")
    q_range = opt(args.q_log2_range, "q_log2_range")
    if isinstance(p_range, (list, tuple)):
        p_range = f"{p_range[0]}:{p_range[1]}"
    if isinstance(q_range, (list, tuple)):
        q_range = f"{q_range[0]}:{q_range[1]}"

    if noise_kind is NoiseKind.NONE:
        params = [0.0]
        template_noise = NoiseModel.none()
    elif noise_kind is NoiseKind.BIT_WISE:
        if q_range:
            params = _parse_log2_range(q_range)
        elif q is not None:
            params = [float(q)]
        else:
            raise ValueError("bit-wise sweep requires --q or --q-log2-range")
        template_noise = NoiseModel.bit_wise(1.0 if p is None else float(p), params[0])
    else:
        if p_range:
            params = _parse_log2_range(p_range)
        elif p is not None:
            params = [float(p)]
        else:
            raise ValueError(f"{noise_kind.value} sweep requires --p or --p-log2-range")
        template_noise = NoiseModel(noise_kind, params[0])

    sweep = tuple(
        SweepCell(param, lam) for param in params for lam in lams
    )
    config = ExperimentConfig(
        instance=instance,
        algorithm=AlgorithmConfig(lam=lams[0], mutation=mutation, noise=template_noise),
        sweep=sweep,
        runs_per_cell=int(opt(args.runs, "runs", 100)),
        stop=StoppingRule(int(opt(args.max_gens, "max_gens", 10000))),
        base_seed=int(opt(args.seed, "seed", 1)),
        max_budget=float(opt(args.budget, "budget", 1e11)),
    )
    threads = opt(args.threads, "threads")
    summaries = run_sweep(config, threads=None if threads is None else int(threads))
    out = opt(args.out, "out")
    if out:
        emit_csv(summaries, out)
        print(f"wrote {len(summaries)} cells to {out}")
    else:
        sys.stdout.write(format_csv(summaries))
    return 0


def _cmd_oracle(args) -> int:
    instance = _instance(args.function, args.n, args.w)
    cfg = AlgorithmConfig(
        lam=1,
        mutation=MutationOperator(args.mutation),
        noise=_noise_model(args.noise, args.p, args.q),
    )
    if args.check == "lemma1":
        tm = oracle.build_transition_matrix(instance, cfg)
        violations = oracle.check_lemma1_monotonicity(tm)
        print(f"{len(violations)} violations")
        for x, y in violations[:20]:
            print(f"  P({x:0{args.n}b} -> {y:0{args.n}b}) < reverse")
    elif args.check == "stationary":
        tm = oracle.build_transition_matrix(instance, cfg)
        pi = oracle.stationary_distribution(tm)
        opt_state = (1 << args.n) - 1
        print(f"pi(optimum) = {pi[opt_state]:.10g}")
        print(f"2^-n        = {2.0**-args.n:.10g}")
        print(f"max_x pi(x) = {pi.max():.10g} at state {int(pi.argmax())}")
    elif args.check == "median":
        res = oracle.median_optimisation_time(instance, cfg)
        print(f"worst-case median generations: {res.worst_case_median:g}")
    else:
        res = oracle.expected_optimisation_time(instance, cfg)
        unreachable = int((~res.reachable).sum())
        print(f"expected generations, uniform start: {res.expected_time_uniform_start:g}")
        worst = res.expected_time_by_state[res.worst_case_state]
        print(f"worst start state: {res.worst_case_state} ({worst:g} generations)")
        print(f"states with infinite expected time: {unreachable}")
    if args.export_matrix:
        tm = oracle.build_transition_matrix(instance, cfg)
        oracle.export_matrix_csv(tm, args.export_matrix)
        print(f"matrix written to {args.export_matrix}")
    return 0


def _cmd_bounds(args) -> int:
    p = args.p
    rows = []
    if args.M is not None:
        rb = restart_bound(args.M, p)
        rows.append(("2M(1-p)^-M", rb.waiting_time, rb.log_waiting_time))
        rows.append(("2M e^(pM/(1-p))", rb.relaxed, rb.log_relaxed))
        if args.nu is not None:
            nb = noisy_restart_bound(args.M, p, args.nu)
            rows.append((f"2M(1-p)^-(nu M), nu={args.nu}", nb.value, nb.log_value))
    if args.ell is not None:
        vals = eq1_check(p, args.ell)
        rows.append((f"(1/2)min(p*ell,1), ell={args.ell}", vals.half_min, None))
        rows.append(("p*ell/(1+p*ell)", vals.ratio, None))
        rows.append(("1-(1-p)^ell", vals.exact, None))
        rows.append(("min(p*ell,1)", vals.upper_min, None))
        rows.append(("chain holds", float(vals.holds), None))
    if args.n is not None and args.lam is not None:
        v = clone_noise_probability(p, args.n, args.lam)
        rows.append((f"p(1-(1-1/n)^n(1-p))^lambda, lambda={args.lam}", v, None))
    if args.n is not None and args.t is not None:
        v = mixing_bound(args.t, args.n)
        rows.append((f"(1/2)(1+(1-2/n)^t), t={args.t}", v, None))
    if not rows:
        raise ValueError("nothing to compute: pass --M, --ell, or --n with --lambda/--t")
    width = max(len(r[0]) for r in rows)
    for name, value, logv in rows:
        line = f"{name:<{width}}  {value:.10g}"
        if logv is not None:
            line += f"  (ln = {logv:.10g})"
        print(line)
    return 0


def _cmd_baseline(args) -> int:
    instance = _instance(args.function, args.n, args.w)
    mean = baseline_mean(instance, args.samples, args.reps, args.seed)
    print(f"mean best fitness over {args.reps} x {args.samples} uniform samples: "
          f"{mean:.6g}")
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
