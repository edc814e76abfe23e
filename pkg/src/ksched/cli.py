"""Command-line entry points.

Subcommands mirror the library runners: gen (write an instance file), run
(tracking comparison), sweep (budget sweep), hist (MSE histogram study),
scale (dimension scaling study), curv (curvature report), uav (patrol
scenario), score (evaluate a selection file or the exhaustive optimum against
an instance). Experiment summaries print to stdout as JSON; --out DIR also
writes the records CSV and summary JSON. The exit code is nonzero when a
statistical trend check fails, or a wall-time check fails under --assert-perf.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .curvature import curvature_report
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    run_experiment,
)
from .model import (
    MeasurementGeneratorSpec,
    generate_instance,
    load_instance,
    load_selection,
    predicted_prior,
    save_instance,
)
from .objective import score_selection
from .selection import Policy, RandomizedGreedyPolicy, exhaustive_select, make_policy


def _eps_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty epsilon list")
    return values


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty integer list")
    return values


def _add_dims(p: argparse.ArgumentParser, m: int, n: int, k: int) -> None:
    p.add_argument("--m", type=int, default=m, help="state dimension")
    p.add_argument("--n", type=int, default=n, help="number of candidate sensors")
    p.add_argument("--k", type=int, default=k, help="selection budget per step")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=None, metavar="DIR", help="output directory")


def _add_perf(p: argparse.ArgumentParser) -> None:
    p.add_argument("--assert-perf", action="store_true",
                   help="fail on wall-time trend violations (off by default)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksched",
        description="Budgeted sensor scheduling for Kalman filtering: "
                    "greedy and randomized-greedy selection with benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate and save a problem instance")
    _add_dims(p, 50, 400, 55)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--q-var", type=float, default=0.05)
    p.add_argument("--r-var", type=float, default=0.05)
    p.add_argument("--h-kind", choices=["gaussian-iid", "bernoulli-centered"],
                   default="gaussian-iid")
    p.add_argument("--h-mode", choices=["explicit", "generator"], default="explicit")
    _add_common(p)

    p = sub.add_parser("run", help="tracking comparison over a horizon")
    _add_dims(p, 50, 400, 55)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--eps", type=_eps_list, default=(0.001,))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--policies", default=None,
                   help="comma list, e.g. greedy,randomized:0.001,random")
    _add_common(p)
    _add_perf(p)

    p = sub.add_parser("sweep", help="budget sweep over several K values")
    _add_dims(p, 50, 400, 55)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--eps", type=_eps_list, default=(0.001,))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--k-values", type=_int_list, default=(55, 65, 75, 85, 95, 105, 115))
    p.add_argument("--policies", default=None)
    _add_common(p)
    _add_perf(p)

    p = sub.add_parser("hist", help="per-run MSE sample at several epsilons")
    _add_dims(p, 50, 400, 60)
    p.add_argument("--eps", type=_eps_list, default=(0.1, 0.01, 0.001))
    p.add_argument("--trials", type=int, default=100,
                   help="randomized runs per epsilon")
    _add_common(p)
    _add_perf(p)

    p = sub.add_parser("scale", help="dimension scaling study")
    _add_dims(p, 20, 200, 25)
    p.add_argument("--eps", type=_eps_list, default=(0.1, 0.01, 0.001))
    p.add_argument("--gamma-max", type=int, default=8,
                   help="largest scale factor; doubling sequence from 1")
    p.add_argument("--repeats", type=int, default=3, help="timing repeats (min taken)")
    _add_common(p)
    _add_perf(p)

    p = sub.add_parser("curv", help="brute-force curvature report (small n)")
    _add_dims(p, 3, 8, 3)
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--eps", type=_eps_list, default=(0.5,))
    p.add_argument("--q-var", type=float, default=0.05)
    p.add_argument("--r-var", type=float, default=0.05)
    _add_common(p)

    p = sub.add_parser("uav", help="patrol-vehicle tracking scenario")
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--eps", type=_eps_list, default=(0.05,))
    _add_common(p)
    _add_perf(p)

    p = sub.add_parser("score", help="score a selection (or the exhaustive "
                                     "optimum) against an instance")
    p.add_argument("--instance", required=True, metavar="FILE")
    p.add_argument("--selection", default=None, metavar="FILE")
    p.add_argument("--exhaustive", action="store_true",
                   help="score the exhaustive-optimal selection instead")
    p.add_argument("--step", type=int, default=None,
                   help="time step (default: the selection file's step, else 1)")
    p.add_argument("--k", type=int, default=None,
                   help="budget for --exhaustive (default: instance K)")
    p.add_argument("--out", default=None, metavar="FILE", help="write the JSON here too")
    return parser


def _policies_from_args(args) -> tuple[Policy, ...]:
    if args.policies:
        return tuple(make_policy(tok.strip()) for tok in args.policies.split(",") if tok.strip())
    pols: list[Policy] = [make_policy("greedy")]
    pols.extend(RandomizedGreedyPolicy(epsilon=e) for e in args.eps)
    pols.append(make_policy("random"))
    return tuple(pols)


def _emit_report(report: ExperimentReport, kind: str, out_dir: str | None,
                 assert_perf: bool) -> int:
    print(json.dumps(report.summary, indent=2, sort_keys=True))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        stem = kind.replace("-", "_")
        report.write_csv(os.path.join(out_dir, f"{stem}.csv"))
        report.write_json(os.path.join(out_dir, f"{stem}_summary.json"))
        report.write_extra_tables(out_dir)
    failed = list(report.violations)
    if assert_perf:
        failed += report.perf_violations
    for msg in failed:
        print(f"ASSERTION FAILED: {msg}", file=sys.stderr)
    return 1 if failed else 0


def _cmd_gen(args) -> int:
    instance = generate_instance(
        MeasurementGeneratorSpec(args.h_kind), args.m, args.n, args.k,
        args.horizon, args.q_var, args.r_var, args.seed,
    )
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "instance.json")
    save_instance(instance, path, h_mode=args.h_mode)
    print(json.dumps({
        "instance": path, "m": args.m, "n": args.n, "K": args.k,
        "horizon": args.horizon, "seed": args.seed, "h_mode": args.h_mode,
    }, indent=2))
    return 0


def _cmd_run(args) -> int:
    cfg = ExperimentConfig(
        kind="tracking", m=args.m, n=args.n, K=args.k, horizon=args.horizon,
        eps_list=args.eps, trials=args.trials, policies=_policies_from_args(args),
        out_dir=args.out, master_seed=args.seed, assert_perf=args.assert_perf,
    )
    return _emit_report(run_experiment(cfg), "tracking", args.out, args.assert_perf)


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig(
        kind="budget-sweep", m=args.m, n=args.n, K=args.k_values[0],
        horizon=args.horizon, eps_list=args.eps, k_values=args.k_values,
        trials=args.trials, policies=_policies_from_args(args), out_dir=args.out,
        master_seed=args.seed, assert_perf=args.assert_perf,
    )
    return _emit_report(run_experiment(cfg), "budget-sweep", args.out, args.assert_perf)


def _cmd_hist(args) -> int:
    cfg = ExperimentConfig(
        kind="histogram", m=args.m, n=args.n, K=args.k, horizon=1,
        eps_list=args.eps, trials=args.trials,
        policies=(make_policy("greedy"),), out_dir=args.out,
        master_seed=args.seed, assert_perf=args.assert_perf,
    )
    return _emit_report(run_experiment(cfg), "histogram", args.out, args.assert_perf)


def _cmd_scale(args) -> int:
    gammas = [1]
    while gammas[-1] * 2 <= args.gamma_max:
        gammas.append(gammas[-1] * 2)
    cfg = ExperimentConfig(
        kind="scaling", m=args.m, n=args.n, K=args.k, horizon=1,
        eps_list=args.eps, gamma_values=tuple(gammas), trials=1,
        policies=(make_policy("greedy"),), out_dir=args.out,
        master_seed=args.seed, assert_perf=args.assert_perf,
        timing_repeats=args.repeats,
    )
    return _emit_report(run_experiment(cfg), "scaling", args.out, args.assert_perf)


def _cmd_curv(args) -> int:
    instance = generate_instance(
        MeasurementGeneratorSpec("gaussian-iid"), args.m, args.n, args.k,
        args.horizon, args.q_var, args.r_var, args.seed,
    )
    p_pred = predicted_prior(instance, 1)
    report = curvature_report(
        p_pred, instance.H_at(1), instance.R_diag, epsilon=args.eps[0], K=args.k
    )
    doc = report.to_dict()
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "curvature.json"), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_uav(args) -> int:
    cfg = ExperimentConfig(
        kind="uav", eps_list=args.eps, trials=args.trials, horizon=args.horizon,
        out_dir=args.out, master_seed=args.seed, assert_perf=args.assert_perf,
    )
    return _emit_report(run_experiment(cfg), "uav", args.out, args.assert_perf)


def _cmd_score(args) -> int:
    if (args.selection is None) == (not args.exhaustive):
        print("score: provide exactly one of --selection or --exhaustive",
              file=sys.stderr)
        return 2
    instance = load_instance(args.instance)
    sel_doc = load_selection(args.selection) if args.selection is not None else None
    if args.step is not None:
        step = args.step
    elif sel_doc is not None:
        step = sel_doc["step"]
    else:
        step = 1
    if not 1 <= step <= instance.horizon:
        print(f"score: step {step} outside instance horizon {instance.horizon}",
              file=sys.stderr)
        return 2
    p_pred = predicted_prior(instance, step)
    if sel_doc is not None:
        selected = sel_doc["selected"]
        k = sel_doc["K"]
        source = "selection-file"
    else:
        k = args.k if args.k is not None else instance.K
        res = exhaustive_select(p_pred, instance.H_at(step), instance.R_diag, k)
        selected = list(res.selected)
        source = "exhaustive"
    f_val, mse = score_selection(p_pred, instance.H_at(step), instance.R_diag, selected)
    doc = {
        "instance": args.instance,
        "source": source,
        "step": step,
        "K": k,
        "selected": sorted(int(j) for j in selected),
        "f_value": f_val,
        "mse": mse,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


_DISPATCH = {
    "gen": _cmd_gen,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "hist": _cmd_hist,
    "scale": _cmd_scale,
    "curv": _cmd_curv,
    "uav": _cmd_uav,
    "score": _cmd_score,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _DISPATCH[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
