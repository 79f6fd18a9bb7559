"""Independent plan validity checker.

This module is the ground truth the rest of the package is tested against:
it rebuilds absolute intermediate conditions and effects from a timed plan,
replays the induced state timeline and checks every validity clause with
exact rational arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .model import (
    ModelError,
    PlanningTask,
    State,
    TimedPlan,
    absolute_ices,
    apply_effects,
    cond_to_sexpr,
    mutex_effsets,
    rat,
    rat_str,
    satisfies,
)

INIT = "init"
GOAL = "goal"
INTERMEDIATE = "intermediate-condition"
SELF_OVERLAP = "self-overlap"
EPSILON = "epsilon-separation"
MALFORMED = "malformed"


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    uid: Optional[str] = None
    time: Optional[Fraction] = None

    def to_data(self) -> dict:
        out = {"kind": self.kind, "message": self.message}
        if self.uid is not None:
            out["uid"] = self.uid
        if self.time is not None:
            out["time"] = rat_str(self.time)
        return out


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def to_data(self) -> dict:
        if self.valid:
            return {"valid": True}
        return {"valid": False, "violations": [v.to_data() for v in self.violations]}


def _structural_problems(task: PlanningTask, plan: TimedPlan, ms: Fraction) -> list:
    problems = []
    known = {a.name: a for a in task.actions}
    for entry in plan.entries:
        action = known.get(entry.action)
        if action is None:
            problems.append("unknown action %r" % entry.action)
            continue
        if entry.t <= 0:
            problems.append("%s starts at %s, starts must be positive" % (entry.action, rat_str(entry.t)))
        if not (action.lower <= entry.d <= action.upper):
            problems.append(
                "%s has duration %s outside [%s, %s]"
                % (entry.action, rat_str(entry.d), rat_str(action.lower), rat_str(action.upper))
            )
    for c in task.plan_ics:
        for rt in (c.start, c.end):
            if rt.resolve(Fraction(0), ms) < 0:
                problems.append("plan IC %s resolves before time zero (makespan %s)" % (c.uid, rat_str(ms)))
                break
    for e in task.plan_ies:
        if e.at.resolve(Fraction(0), ms) < 0:
            problems.append("plan IE %s resolves before time zero (makespan %s)" % (e.uid, rat_str(ms)))
    return problems


def _representative_effects(abs_ies_at_t: list):
    """Join simultaneous effect sets, keeping one effect per variable so the
    timeline stays well-defined even for invalid plans."""
    per_var = {}
    for e in abs_ies_at_t:
        for eff in e.effs:
            per_var.setdefault(eff.var, set()).add(eff)
    chosen = []
    for var in sorted(per_var):
        chosen.append(min(per_var[var], key=repr))
    return chosen


@dataclass
class Timeline:
    """Effect times with the state holding after each of them.

    boundaries[0] is always 0 with states[0] = init; states[i] holds on the
    interval (boundaries[i], boundaries[i+1]] of the plan.
    """

    boundaries: list
    states: list
    abs_ics: list = field(default_factory=list)
    abs_ies: list = field(default_factory=list)

    @property
    def final(self) -> State:
        return self.states[-1]


def build_timeline(task: PlanningTask, plan: TimedPlan) -> Timeline:
    abs_ics, abs_ies = absolute_ices(task, plan)
    by_time = {}
    for e in abs_ies:
        by_time.setdefault(e.t, []).append(e)
    boundaries = [Fraction(0)]
    states = [task.init]
    for t in sorted(by_time):
        effs = _representative_effects(by_time[t])
        boundaries.append(t)
        states.append(apply_effects(states[-1], effs))
    return Timeline(boundaries, states, abs_ics, abs_ies)


def _check_intermediate(timeline: Timeline) -> list:
    violations = []
    bounds = timeline.boundaries
    states = timeline.states
    m = len(bounds) - 1
    for ic in timeline.abs_ics:
        if not ic.conds:
            continue
        check_at = []
        if ic.t_start == 0:
            check_at.append(0)
        for i in range(m):
            lo, hi = bounds[i], bounds[i + 1]
            if lo < ic.t_start <= hi or lo < ic.t_end <= hi:
                check_at.append(i)
        if bounds[m] < ic.t_end:
            check_at.append(m)
        for i in sorted(set(check_at)):
            if not satisfies(states[i], ic.conds):
                violations.append(
                    Violation(
                        INTERMEDIATE,
                        "condition %s fails in the state holding from time %s"
                        % (ic.uid, rat_str(bounds[i])),
                        uid=ic.uid,
                        time=bounds[i],
                    )
                )
    return violations


def _check_self_overlap(plan: TimedPlan) -> list:
    violations = []
    entries = plan.entries
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            a, b = entries[i], entries[j]
            if a.action != b.action:
                continue
            if b.t + b.d <= a.t or b.t >= a.t + a.d:
                continue
            violations.append(
                Violation(
                    SELF_OVERLAP,
                    "%s at %s overlaps its own run at %s"
                    % (a.action, rat_str(b.t), rat_str(a.t)),
                    time=b.t,
                )
            )
    return violations


def _check_separation(task: PlanningTask, timeline: Timeline, epsilon: Fraction) -> list:
    violations = []
    ies = timeline.abs_ies
    for i in range(len(ies)):
        for j in range(i + 1, len(ies)):
            e1, e2 = ies[i], ies[j]
            if not mutex_effsets(e1.effs, e2.effs):
                continue
            gap = abs(e1.t - e2.t)
            if gap < epsilon:
                violations.append(
                    Violation(
                        EPSILON,
                        "mutex effects %s@%s and %s@%s are %s apart, need %s"
                        % (e1.uid, rat_str(e1.t), e2.uid, rat_str(e2.t), rat_str(gap), rat_str(epsilon)),
                        time=min(e1.t, e2.t),
                    )
                )
    return violations


def _check_simultaneous(timeline: Timeline, epsilon: Fraction) -> list:
    """Same-instant writes to one variable.

    Distinct simultaneous effects on a variable leave the successor state
    undefined, so they are malformed at any epsilon. With epsilon = 0 even
    identical writes from two sources are rejected: nothing else separates
    them."""
    violations = []
    by_time = {}
    for e in timeline.abs_ies:
        by_time.setdefault(e.t, []).append(e)
    for t in sorted(by_time):
        group = by_time[t]
        if len(group) < 2:
            continue
        per_var = {}
        for e in group:
            for eff in e.effs:
                per_var.setdefault(eff.var, []).append((e.uid, eff))
        for var in sorted(per_var):
            writers = per_var[var]
            if len(writers) < 2:
                continue
            distinct_effs = {eff for _, eff in writers}
            if len(distinct_effs) > 1 or epsilon == 0:
                violations.append(
                    Violation(
                        MALFORMED,
                        "variable %s written by %s simultaneously at %s"
                        % (var, sorted(u for u, _ in writers), rat_str(t)),
                        time=t,
                    )
                )
    return violations


def validate_plan(task: PlanningTask, plan: TimedPlan, epsilon=None) -> ValidationResult:
    """Check a timed plan against every validity clause.

    Returns all violations found, not only the first. A structurally broken
    plan (unknown actions, nonpositive starts, durations outside bounds,
    plan ICEs resolving to negative times) yields a single malformed
    violation instead."""
    eps = task.epsilon if epsilon is None else rat(epsilon)
    ms = plan.makespan()
    problems = _structural_problems(task, plan, ms)
    if problems:
        return ValidationResult((Violation(MALFORMED, "; ".join(problems)),))

    timeline = build_timeline(task, plan)
    violations = []

    if timeline.states[0] != task.init:
        violations.append(Violation(INIT, "timeline does not start from the initial state"))

    for g in task.goal:
        if not satisfies(timeline.final, [g]):
            violations.append(Violation(GOAL, "goal %s fails in the final state" % cond_to_sexpr(g)))

    violations.extend(_check_intermediate(timeline))
    violations.extend(_check_self_overlap(plan))
    violations.extend(_check_separation(task, timeline, eps))
    violations.extend(_check_simultaneous(timeline, eps))
    return ValidationResult(tuple(violations))


def final_state(task: PlanningTask, plan: TimedPlan) -> State:
    """State reached after every effect of the plan has fired.

    The plan must be structurally sound; goal satisfaction is not required."""
    problems = _structural_problems(task, plan, plan.makespan())
    if problems:
        raise ModelError("cannot replay malformed plan: %s" % "; ".join(problems))
    return build_timeline(task, plan).final
