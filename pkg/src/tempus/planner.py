"""The search loop: grow a pattern, encode, maximize goals, repeat.

Each round computes a fresh pattern by relaxed reachability from the state
the best partial plan reached, appends it to the applied prefix, and asks
the solver for a model satisfying as many goals as possible. A model meeting
every goal is turned into a timed plan and checked by the validator before
being returned.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .arpg import compute_arpg
from .encoding import encode
from .model import ModelError, PlanEntry, PlanningTask, TimedPlan
from .smtlib import MaxSolveResult, max_solve
from .snap import build_snap, epsilon_b, task_well_orderable
from .validator import final_state, validate_plan


class PlannerError(RuntimeError):
    pass


class ProvenUnsolvable(Exception):
    """The relaxed analysis showed no plan can exist."""


@dataclass
class PlannerResult:
    solved: bool
    plan: Optional[TimedPlan]
    bound: int  # number of solver rounds used
    achieved: int
    total_goals: int
    proven_unsolvable: bool = False
    pattern_length: int = 0
    arpg_cells: tuple = ()
    goal_report: dict = field(default_factory=dict)


def _integral_plan_offsets(task: PlanningTask) -> bool:
    offs = [c.start.offset for c in task.plan_ics]
    offs += [c.end.offset for c in task.plan_ics]
    offs += [e.at.offset for e in task.plan_ies]
    return all(Fraction(o).denominator == 1 for o in offs)


def extract_plan(enc, model, task: PlanningTask) -> TimedPlan:
    entries = []
    for occ in enc.occurrences:
        if not occ.is_start:
            continue
        reps = model[occ.hvar]
        if reps <= 0:
            continue
        reps = int(reps)
        start = model[occ.tvar]
        dur = model[occ.dvar]
        gap = epsilon_b(task.action(occ.owner), task.epsilon)
        for k in range(reps):
            entries.append(PlanEntry(start + k * (dur + gap), occ.owner, dur))
    return TimedPlan.of(entries)


def solve_task(
    task: PlanningTask,
    rolling: bool = True,
    max_rounds: int = 50,
    timeout_ms: Optional[int] = None,
    on_round=None,
) -> PlannerResult:
    """Run the pattern/encode/maximize loop until every goal is met, the
    task is proven unsolvable, or the round budget runs out."""
    snap_full = build_snap(task)
    total_goals = len(task.goal)

    prefix = ()
    consumed = frozenset()
    anchor = None  # None means the initial state
    rounds = 0
    best: Optional[MaxSolveResult] = None
    best_enc = None
    first_cells = ()

    while rounds < max_rounds:
        snap_round = build_snap(task, anchor=anchor, consumed=consumed)
        arpg = compute_arpg(snap_round)
        if rounds == 0:
            first_cells = arpg.cells
            if (
                not arpg.goal_reachable
                and task_well_orderable(task)
                and _integral_plan_offsets(task)
            ):
                return PlannerResult(
                    solved=False,
                    plan=None,
                    bound=0,
                    achieved=0,
                    total_goals=total_goals,
                    proven_unsolvable=True,
                    arpg_cells=first_cells,
                )

        pattern = prefix + arpg.pattern
        enc = encode(task, snap_full, pattern, rolling=rolling)
        result = max_solve(enc, timeout_ms=timeout_ms)
        rounds += 1
        if on_round is not None:
            on_round(rounds, len(pattern), result)

        if result.status != "sat":
            if best is not None:
                break
            return PlannerResult(
                solved=False,
                plan=None,
                bound=rounds,
                achieved=0,
                total_goals=total_goals,
                pattern_length=len(pattern),
                arpg_cells=first_cells,
            )

        if best is None or result.achieved > best.achieved:
            best, best_enc = result, enc

        if result.achieved == total_goals:
            plan = extract_plan(enc, result.model, task)
            check = validate_plan(task, plan)
            if not check.valid:
                raise PlannerError(
                    "extracted plan failed validation: %s"
                    % "; ".join(v.message for v in check.violations)
                )
            return PlannerResult(
                solved=True,
                plan=plan,
                bound=rounds,
                achieved=result.achieved,
                total_goals=total_goals,
                pattern_length=len(pattern),
                arpg_cells=first_cells,
                goal_report=result.goals,
            )

        # the next round appends a fresh block to every position tried so
        # far, so later rounds can only do better; the state reached by the
        # best partial steers what the fresh block contains
        applied_positions = [
            occ for occ in enc.occurrences if result.model[occ.hvar] > 0
        ]
        prefix = tuple(pattern)
        consumed = consumed | frozenset(
            occ.happening.uid
            for occ in applied_positions
            if occ.happening.is_plan
        )
        partial = extract_plan(enc, result.model, task)
        try:
            anchor = final_state(task, partial)
        except ModelError as exc:
            raise PlannerError("partial plan does not replay: %s" % exc)

    if best is not None and best.achieved > 0 and best_enc is not None:
        plan = extract_plan(best_enc, best.model, task)
        check = validate_plan(task, plan)
        bad = set(check.kinds()) - {"goal"}
        if bad:
            raise PlannerError(
                "extracted plan failed validation: %s"
                % "; ".join(v.message for v in check.violations)
            )
        return PlannerResult(
            solved=False,
            plan=plan,
            bound=rounds,
            achieved=best.achieved,
            total_goals=total_goals,
            pattern_length=len(best_enc.pattern),
            arpg_cells=first_cells,
            goal_report=best.goals,
        )
    return PlannerResult(
        solved=False,
        plan=None,
        bound=rounds,
        achieved=0 if best is None else best.achieved,
        total_goals=total_goals,
        arpg_cells=first_cells,
    )
