"""Snap compilation: happenings, per-action orderings, supporters, rolling.

A durative action is broken into happenings (one per IC and IE), ordered by
their relative time as if the action took its minimal duration. The snap task
chains each action's happenings behind execution flags and a global integer
time counter, which is what the relaxed reachability analysis consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import (
    BoolCond,
    BoolEff,
    DurativeAction,
    IC,
    IE,
    LinearExpr,
    ModelError,
    NumCond,
    NumEff,
    PlanningTask,
    RelTime,
    State,
    Variable,
    mutex_effsets,
    mutex_ie_ic,
    rel,
    START,
    END,
)

EXEC_PREFIX = "_exec_"
TIME_VAR = "_time"


def exec_var(uid: str) -> str:
    return EXEC_PREFIX + uid


@dataclass(frozen=True)
class Happening:
    """One IC or IE as an orderable unit.

    For IE happenings, conds holds the conditions of any point IC sharing the
    same relative instant; the gating below uses them, the encoding does not.
    t_start/t_end are computed as if the owning action lasted its lower bound
    and are None for plan-level happenings.
    """

    owner: Optional[str]
    kind: str  # "ic" or "ie"
    uid: str
    conds: frozenset
    effs: frozenset
    start: RelTime
    end: RelTime
    t_start: Optional[Fraction] = None
    t_end: Optional[Fraction] = None

    @property
    def is_ic(self) -> bool:
        return self.kind == "ic"

    @property
    def is_plan(self) -> bool:
        return self.owner is None

    def display(self) -> str:
        if self.owner is None:
            if self.is_ic:
                return "C[%s,%s]" % (self.start.label(), self.end.label())
            return "E[%s]" % self.start.label()
        if self.is_ic:
            return "%s[%s,%s]" % (self.owner, self.start.label(), self.end.label())
        return "%s[%s]" % (self.owner, self.start.label())

    def order_key(self):
        # conditions sort before effects at the same instant
        kind_rank = 0 if self.is_ic else 1
        return (kind_rank, self.start.sort_key(), self.end.sort_key(), self.uid)


@dataclass(frozen=True)
class AiceSeq:
    """The happenings of one action, grouped by shared instant, in order."""

    owner: str
    groups: tuple

    def flat(self):
        return tuple(h for g in self.groups for h in g)

    def ies(self):
        return tuple(h for h in self.flat() if not h.is_ic)

    @property
    def first(self) -> Happening:
        return self.groups[0][0]

    @property
    def last(self) -> Happening:
        return self.groups[-1][-1]


def _happenings_at(action: DurativeAction, duration: Fraction):
    zero = Fraction(0)
    out = []
    point_conds = {}
    for c in action.ics:
        ts = c.start.resolve(zero, duration)
        te = c.end.resolve(zero, duration)
        if te < ts:
            raise ModelError(
                "action %s: condition window %s is inverted at duration %s"
                % (action.name, c.uid, duration)
            )
        if ts == te:
            point_conds[ts] = point_conds.get(ts, frozenset()) | c.conds
        out.append(Happening(action.name, "ic", c.uid, c.conds, frozenset(), c.start, c.end, ts, te))
    for e in action.ies:
        t = e.at.resolve(zero, duration)
        merged = point_conds.get(t, frozenset())
        out.append(Happening(action.name, "ie", e.uid, merged, e.effs, e.at, e.at, t, t))
    return out


def aices(action: DurativeAction) -> AiceSeq:
    """Group and order the action's happenings as if it lasted L."""
    happenings = _happenings_at(action, action.lower)
    by_time = {}
    for h in happenings:
        by_time.setdefault(h.t_start, []).append(h)
    groups = tuple(
        tuple(sorted(by_time[t], key=Happening.order_key)) for t in sorted(by_time)
    )
    return AiceSeq(action.name, groups)


def _order_signature(action: DurativeAction, duration: Fraction):
    happenings = _happenings_at(action, duration)
    by_time = {}
    for h in happenings:
        by_time.setdefault(h.t_start, []).append(h)
    return tuple(
        tuple(sorted(h.uid for h in by_time[t])) for t in sorted(by_time)
    )


def action_well_orderable(action: DurativeAction) -> bool:
    """True when the internal order of the happenings does not depend on the
    duration chosen within [L, U]."""
    if action.lower == action.upper:
        return True
    try:
        sig_l = _order_signature(action, action.lower)
        sig_u = _order_signature(action, action.upper)
    except ModelError:
        return False
    return sig_l == sig_u


def plan_happenings(task: PlanningTask):
    out = []
    for c in task.plan_ics:
        out.append(Happening(None, "ic", c.uid, c.conds, frozenset(), c.start, c.end))
    for e in task.plan_ies:
        out.append(Happening(None, "ie", e.uid, frozenset(), e.effs, e.at, e.at))
    return tuple(out)


def _plan_order_signature(task: PlanningTask, ms: Fraction):
    items = []
    for c in task.plan_ics:
        items.append((c.start.resolve(Fraction(0), ms), c.uid))
    for e in task.plan_ies:
        items.append((e.at.resolve(Fraction(0), ms), e.uid))
    by_time = {}
    for t, uid in items:
        by_time.setdefault(t, []).append(uid)
    return tuple(tuple(sorted(by_time[t])) for t in sorted(by_time))


def plan_well_orderable(task: PlanningTask) -> bool:
    offsets = [c.start.offset for c in task.plan_ics]
    offsets += [c.end.offset for c in task.plan_ics]
    offsets += [e.at.offset for e in task.plan_ies]
    if not offsets:
        return True
    base = 2 * max(offsets) + 3
    return _plan_order_signature(task, base) == _plan_order_signature(task, 2 * base)


def task_well_orderable(task: PlanningTask) -> bool:
    return plan_well_orderable(task) and all(
        action_well_orderable(a) for a in task.actions
    )


# ---------------------------------------------------------------------------
# rolling

def eligible_for_rolling(action: DurativeAction) -> bool:
    all_effs = [e for ie in action.ies for e in ie.effs]
    ic_literals = {}
    for c in action.ics:
        for cond in c.conds:
            if isinstance(cond, BoolCond):
                ic_literals.setdefault(cond.var, set()).add(cond.value)
    has_increment = False
    for ie in action.ies:
        for eff in ie.effs:
            if isinstance(eff, BoolEff):
                if (not eff.value) in ic_literals.get(eff.var, ()):
                    return False
                continue
            if eff.increment:
                has_increment = True
            for other in action.ies:
                for oeff in other.effs:
                    if oeff is eff or not isinstance(oeff, NumEff):
                        continue
                    # repetitions must see the same right hand sides, so no
                    # written variable may feed another write, even within
                    # the same instant
                    if eff.var in oeff.expr.vars():
                        return False
                    if not eff.increment and oeff.var == eff.var:
                        return False
            # the model layer already forbids a target inside its own rhs
    return has_increment


def rollable(action: DurativeAction) -> bool:
    return eligible_for_rolling(action) and action_well_orderable(action)


def epsilon_b(action: DurativeAction, epsilon: Fraction) -> Fraction:
    """Extra gap between consecutive repetitions of one action.

    Nonzero exactly when an effect at the very end interferes with a
    condition or effect at the very start, so that back to back runs need the
    usual separation."""
    if action.upper == 0:
        # every repetition boundary coincides, and a plan cannot hold two
        # entries at one instant, so any self interfering effect forces the
        # gap
        for e in action.ies:
            for e2 in action.ies:
                if mutex_effsets(e.effs, e2.effs):
                    return epsilon
        return Fraction(0)
    start_t = rel(START)
    end_ies = [e for e in action.ies if e.at == rel(END)]
    start_ies = [e for e in action.ies if e.at == start_t]
    start_ics = [c for c in action.ics if c.start == start_t]
    for e in end_ies:
        for c in start_ics:
            if mutex_ie_ic(e, c):
                return epsilon
        for e2 in start_ies:
            if mutex_effsets(e.effs, e2.effs):
                return epsilon
    return Fraction(0)


def rolled_duration(action: DurativeAction, r: int, epsilon: Fraction):
    gap = epsilon_b(action, epsilon) * (r - 1)
    return (r * action.lower + gap, r * action.upper + gap)


def delta_sum(action: DurativeAction, var: str) -> LinearExpr:
    """Net linear increment applied to var by one full run of the action."""
    total = LinearExpr.constant(0)
    for ie in action.ies:
        for eff in ie.effs:
            if isinstance(eff, NumEff) and eff.increment and eff.var == var:
                total = total.plus(eff.expr)
    return total


def plain_assignment(action: DurativeAction, var: str) -> Optional[LinearExpr]:
    for ie in action.ies:
        for eff in ie.effs:
            if isinstance(eff, NumEff) and not eff.increment and eff.var == var:
                return eff.expr
    return None


def roll_expr(psi: LinearExpr, r: int, action: DurativeAction) -> LinearExpr:
    """Value of psi at the start of the r-th consecutive repetition (r >= 1),
    in terms of the state before the first one."""
    mapping = {}
    for var in psi.vars():
        assigned = plain_assignment(action, var)
        if assigned is not None:
            mapping[var] = assigned
        else:
            delta = delta_sum(action, var)
            mapping[var] = LinearExpr.var(var).plus(delta.scaled(r - 1))
    return psi.substitute(mapping)


# ---------------------------------------------------------------------------
# the snap task

@dataclass(frozen=True)
class SnapAction:
    name: str
    pre: frozenset
    effs: frozenset
    origin: tuple  # ("happening", uid) or ("tick", i)

    @property
    def is_tick(self) -> bool:
        return self.origin[0] == "tick"


@dataclass(frozen=True)
class Supporter:
    pre: frozenset
    effs: frozenset
    parent: SnapAction

    def display(self) -> str:
        return self.parent.name


@dataclass(frozen=True)
class SnapTask:
    variables: tuple
    actions: tuple
    init: State
    goal: tuple
    horizon: int
    base: PlanningTask
    happenings: dict  # uid -> Happening (actions and plan alike)
    seqs: dict  # action name -> AiceSeq

    def happening(self, uid: str) -> Happening:
        return self.happenings[uid]


def _time_equals(value: int):
    expr = LinearExpr.var(TIME_VAR).shifted(-value)
    return [NumCond(expr, False), NumCond(expr.scaled(-1), False)]


def snap_horizon(task: PlanningTask, consumed=frozenset()) -> int:
    offsets = [c.start.offset for c in task.plan_ics if c.uid not in consumed]
    offsets += [c.end.offset for c in task.plan_ics if c.uid not in consumed]
    offsets += [e.at.offset for e in task.plan_ies if e.uid not in consumed]
    if not offsets:
        return 1
    return int(math.ceil(max(offsets))) + 1


def build_snap(task: PlanningTask, anchor=None, consumed=frozenset()) -> SnapTask:
    """Compile the task into instantaneous actions over exec flags and a
    time counter.

    anchor replaces the initial state (used when replanning from the state a
    partial plan reached); consumed names plan-level items already executed
    there, which keep their flags pre-set instead of getting actions."""
    horizon = snap_horizon(task, consumed)
    happenings = {}
    seqs = {}
    actions = []

    for b in task.actions:
        seq = aices(b)
        seqs[b.name] = seq
        prev_group = ()
        for group in seq.groups:
            gate = frozenset(BoolCond(exec_var(h.uid), True) for h in prev_group)
            for h in group:
                happenings[h.uid] = h
                actions.append(
                    SnapAction(
                        "snap!" + h.uid,
                        h.conds | gate,
                        h.effs | {BoolEff(exec_var(h.uid), True)},
                        ("happening", h.uid),
                    )
                )
            prev_group = group

    for i in range(1, horizon + 1):
        actions.append(
            SnapAction(
                "tick!%d" % i,
                frozenset(_time_equals(i - 1)),
                frozenset({NumEff(TIME_VAR, LinearExpr.constant(i), increment=False)}),
                ("tick", i),
            )
        )

    zero, m = Fraction(0), Fraction(horizon)
    for h in plan_happenings(task):
        happenings[h.uid] = h
        if h.uid in consumed:
            continue
        at = int(math.ceil(h.start.resolve(zero, m)))
        if h.is_ic:
            pre = h.conds | frozenset(_time_equals(at))
            effs = frozenset({BoolEff(exec_var(h.uid), True)})
        else:
            pre = frozenset(_time_equals(at))
            effs = h.effs | {BoolEff(exec_var(h.uid), True)}
        actions.append(SnapAction("snap!" + h.uid, pre, effs, ("happening", h.uid)))

    variables = list(task.variables)
    variables.append(Variable(TIME_VAR, "num"))
    for uid in happenings:
        variables.append(Variable(exec_var(uid), "bool"))

    base_state = task.init if anchor is None else anchor
    init_vals = base_state.as_dict()
    init_vals[TIME_VAR] = Fraction(0)
    for uid in happenings:
        init_vals[exec_var(uid)] = uid in consumed

    goal = list(task.goal)
    for h in plan_happenings(task):
        goal.append(BoolCond(exec_var(h.uid), True))

    return SnapTask(
        variables=tuple(variables),
        actions=tuple(actions),
        init=State(init_vals),
        goal=tuple(goal),
        horizon=horizon,
        base=task,
        happenings=happenings,
        seqs=seqs,
    )


def supporters(action: SnapAction):
    """Split a snap action for the relaxed analysis: one guarded copy per
    direction of each numeric effect, plus a propositional rest."""
    out = []
    bool_effs = frozenset(e for e in action.effs if isinstance(e, BoolEff))
    for eff in sorted(
        (e for e in action.effs if isinstance(e, NumEff)), key=lambda e: e.var
    ):
        rhs = eff.expr if not eff.increment else eff.expr.plus(LinearExpr.var(eff.var))
        diff = rhs.minus(LinearExpr.var(eff.var))
        out.append(
            Supporter(action.pre | {NumCond(diff, True)}, frozenset({eff}), action)
        )
        out.append(
            Supporter(action.pre | {NumCond(diff.scaled(-1), True)}, frozenset({eff}), action)
        )
    out.append(Supporter(action.pre, bool_effs, action))
    return out
