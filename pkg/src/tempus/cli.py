"""Command line front end: generate, plan, validate, encode, benchmark."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time

from . import domains
from .arpg import compute_arpg
from .encoding import encode, smt_script
from .model import (
    ModelError,
    dump_plan,
    dump_task,
    load_plan,
    load_task,
    plan_to_data,
)
from .planner import PlannerError, solve_task
from .snap import build_snap
from .validator import validate_plan


def _add_task_arg(p):
    p.add_argument("task", help="task JSON file")


def _cmd_gen(args):
    task = domains.generate_instance(args.kind, args.sizes, seed=args.seed)
    if args.output:
        dump_task(task, args.output)
    else:
        from .model import task_to_data

        json.dump(task_to_data(task), sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def _cmd_plan(args):
    task = load_task(args.task)
    t0 = time.monotonic()
    result = solve_task(
        task,
        rolling=not args.no_rolling,
        max_rounds=args.max_rounds,
        timeout_ms=args.timeout_ms,
    )
    elapsed = time.monotonic() - t0
    report = {
        "solved": result.solved,
        "proven_unsolvable": result.proven_unsolvable,
        "bound": result.bound,
        "achieved_goals": result.achieved,
        "total_goals": result.total_goals,
        "seconds": round(elapsed, 3),
    }
    if result.plan is not None:
        report["plan"] = plan_to_data(result.plan)
        if args.output:
            dump_plan(result.plan, args.output)
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0 if result.solved else 1


def _cmd_validate(args):
    task = load_task(args.task)
    plan = load_plan(args.plan)
    result = validate_plan(task, plan, epsilon=args.epsilon)
    json.dump(result.to_data(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0 if result.valid else 1


def _cmd_encode(args):
    task = load_task(args.task)
    snap = build_snap(task)
    arpg = compute_arpg(snap)
    enc = encode(task, snap, arpg.pattern, rolling=not args.no_rolling)
    script = "\n".join(smt_script(enc, include_goals=True)) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(script)
    else:
        sys.stdout.write(script)
    return 0


def _parse_spec(spec):
    if ":" in spec:
        kind, rest = spec.split(":", 1)
        sizes = [s for s in rest.split(",") if s]
    else:
        kind, sizes = spec, []
    return kind, sizes


def _cmd_bench(args):
    rows = [("instance", "solved", "seconds", "bound", "goals")]
    for spec in args.instances:
        kind, sizes = _parse_spec(spec)
        task = domains.generate_instance(kind, sizes)
        t0 = time.monotonic()
        result = solve_task(task, rolling=not args.no_rolling)
        elapsed = time.monotonic() - t0
        rows.append(
            (
                spec,
                "yes" if result.solved else "no",
                "%.3f" % elapsed,
                result.bound,
                "%d/%d" % (result.achieved, result.total_goals),
            )
        )
    out = sys.stdout
    if args.csv:
        out = open(args.csv, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerows(rows)
    finally:
        if args.csv:
            out.close()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tempus",
        description="Temporal-numeric planner with intermediate conditions "
        "and effects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark instance")
    p.add_argument("kind", help="instance family, e.g. instradi or pour")
    p.add_argument("sizes", nargs="*", help="size arguments")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="write task JSON here")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("plan", help="solve a task")
    _add_task_arg(p)
    p.add_argument("--no-rolling", action="store_true")
    p.add_argument("--max-rounds", type=int, default=50)
    p.add_argument("--timeout-ms", type=int, default=None)
    p.add_argument("-o", "--output", help="write the plan JSON here")
    p.set_defaults(fn=_cmd_plan)

    p = sub.add_parser("validate", help="check a plan against a task")
    _add_task_arg(p)
    p.add_argument("plan", help="plan JSON file")
    p.add_argument("--epsilon", default=None, help="override the task epsilon")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("encode", help="print the SMT encoding for the "
                       "initial pattern")
    _add_task_arg(p)
    p.add_argument("--no-rolling", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=_cmd_encode)

    p = sub.add_parser("bench", help="run a batch of instances")
    p.add_argument("instances", nargs="+", help="kind:size[,size...] specs")
    p.add_argument("--no-rolling", action="store_true")
    p.add_argument("--csv", help="write results to this CSV file")
    p.set_defaults(fn=_cmd_bench)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ModelError, PlannerError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
