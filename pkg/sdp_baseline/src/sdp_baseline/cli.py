"""Console entry point: solve the relaxation and write a scoreable selection.

    sdp-baseline solve --instance FILE [--step K] [--k K] [--out FILE]

Prints a JSON summary (status, bound value, weights, rounded selection) to
stdout. With --out, writes the rounded selection in the shared selection
format so the scheduler CLI can score it. Exit status: 0 on success, 1 on
solver failure, 2 on bad arguments or malformed files.
"""

from __future__ import annotations

import argparse
import json
import sys

from .io import InstanceFormatError, ParameterError, save_selection
from .solver import SolverError, round_topk, solve_sdp


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdp-baseline",
        description="Convex-relaxation lower bound and top-K rounding for "
                    "budgeted sensor selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="solve the relaxation for one step")
    solve.add_argument("--instance", metavar="FILE", required=True,
                       help="instance file to read")
    solve.add_argument("--step", type=int, default=1,
                       help="1-based time step (default 1)")
    solve.add_argument("--k", type=int, default=None,
                       help="budget (default: the instance's K)")
    solve.add_argument("--solver", default=None,
                       help="force a cvxpy solver by name")
    solve.add_argument("--out", metavar="FILE", default=None,
                       help="write the rounded selection here")
    return parser


def _cmd_solve(args) -> int:
    sol = solve_sdp(args.instance, K=args.k, step=args.step, solver=args.solver)
    selected = round_topk(sol.z, sol.k)
    if args.out:
        save_selection(
            args.out, selected, K=sol.k, step=args.step,
            meta={"method": "sdp-top-k", "objective": sol.objective,
                  "status": sol.status, "solver": sol.solver},
        )
    print(json.dumps({
        "status": sol.status,
        "solver": sol.solver,
        "objective": sol.objective,
        "wall_time_s": sol.wall_time_s,
        "step": args.step,
        "k": sol.k,
        "z": [float(v) for v in sol.z],
        "selected": selected,
        "out": args.out,
    }, indent=2))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _cmd_solve(args)
    except SolverError as exc:
        print(f"solver failed ({exc.status}): {exc}", file=sys.stderr)
        return 1
    except (ParameterError, InstanceFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
