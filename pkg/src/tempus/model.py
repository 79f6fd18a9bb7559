"""Ground temporal-numeric planning tasks with intermediate conditions and effects.

All times, durations and coefficients are exact rationals (fractions.Fraction).
Floats only ever appear at I/O boundaries and are parsed exactly from their
decimal spelling.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union


class ModelError(Exception):
    """Raised for ill-formed tasks, plans, expressions or effects."""


# ---------------------------------------------------------------------------
# rationals

Rat = Fraction

_DECIMAL_RE = re.compile(r"^-?\d+(\.\d+)?$")
_FRACTION_RE = re.compile(r"^-?\d+/\d+$")


def rat(value: Union[int, str, float, Fraction]) -> Fraction:
    """Parse a rational from an int, Fraction, 'a/b' or decimal string.

    Floats are accepted but converted through their shortest repr so that
    JSON numbers like 0.001 mean exactly 1/1000.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ModelError("boolean is not a rational: %r" % (value,))
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        text = value.strip()
        if _FRACTION_RE.match(text) or _DECIMAL_RE.match(text):
            return Fraction(text)
        raise ModelError("cannot parse rational from %r" % (value,))
    raise ModelError("cannot parse rational from %r" % (value,))


def rat_str(q: Fraction) -> str:
    return str(q)


# ---------------------------------------------------------------------------
# relative times

START = "START"
END = "END"
ALPHA = "ALPHA"
OMEGA = "OMEGA"

_FORWARD = (START, ALPHA)
_BACKWARD = (END, OMEGA)
_ACTION_ANCHORS = (START, END)
_PLAN_ANCHORS = (ALPHA, OMEGA)
_ANCHOR_RANK = {START: 0, ALPHA: 0, END: 1, OMEGA: 1}
_ANCHOR_SHORT = {START: "S", END: "E", ALPHA: "A", OMEGA: "O"}


@dataclass(frozen=True)
class RelTime:
    """A relative time: an anchor plus a nonnegative offset.

    START/ALPHA offsets count forward from the interval start, END/OMEGA
    offsets count backward from the interval end.
    """

    anchor: str
    offset: Fraction

    def __post_init__(self):
        if self.anchor not in _ANCHOR_RANK:
            raise ModelError("unknown anchor %r" % (self.anchor,))
        if not isinstance(self.offset, Fraction):
            object.__setattr__(self, "offset", rat(self.offset))
        if self.offset < 0:
            raise ModelError("negative relative-time offset %s" % (self.offset,))
        if self.anchor in _PLAN_ANCHORS and self.offset == 0:
            raise ModelError("plan-relative offsets must be strictly positive")

    @property
    def is_plan(self) -> bool:
        return self.anchor in _PLAN_ANCHORS

    @property
    def forward(self) -> bool:
        return self.anchor in _FORWARD

    def resolve(self, lo: Fraction, hi: Fraction) -> Fraction:
        """Absolute time within the interval [lo, hi]."""
        if self.forward:
            return lo + self.offset
        return hi - self.offset

    def sort_key(self):
        return (_ANCHOR_RANK[self.anchor], self.offset)

    def label(self) -> str:
        short = _ANCHOR_SHORT[self.anchor]
        if self.offset == 0:
            return short
        sign = "+" if self.forward else "-"
        return "%s%s%s" % (short, sign, _fmt_offset(self.offset))


def _fmt_offset(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return str(q)


def rel(anchor: str, offset=0) -> RelTime:
    return RelTime(anchor, rat(offset))


# ---------------------------------------------------------------------------
# linear expressions

@dataclass(frozen=True)
class LinearExpr:
    """Sum of coefficient*variable terms plus a rational constant.

    Canonical: terms sorted by variable name, no zero coefficients.
    """

    terms: tuple
    const: Fraction

    @staticmethod
    def build(coeffs: Mapping[str, Fraction] = (), const=0) -> "LinearExpr":
        acc = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for var, k in items:
            k = rat(k)
            if k == 0:
                continue
            acc[var] = acc.get(var, Fraction(0)) + k
        cleaned = tuple(sorted((v, k) for v, k in acc.items() if k != 0))
        return LinearExpr(cleaned, rat(const))

    @staticmethod
    def constant(value) -> "LinearExpr":
        return LinearExpr((), rat(value))

    @staticmethod
    def var(name: str, coeff=1) -> "LinearExpr":
        return LinearExpr.build({name: rat(coeff)})

    def coeff(self, var: str) -> Fraction:
        for v, k in self.terms:
            if v == var:
                return k
        return Fraction(0)

    def vars(self):
        return frozenset(v for v, _ in self.terms)

    def contains(self, var: str) -> bool:
        return any(v == var for v, _ in self.terms)

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def plus(self, other: "LinearExpr") -> "LinearExpr":
        merged = dict(self.terms)
        for v, k in other.terms:
            merged[v] = merged.get(v, Fraction(0)) + k
        return LinearExpr.build(merged, self.const + other.const)

    def minus(self, other: "LinearExpr") -> "LinearExpr":
        return self.plus(other.scaled(Fraction(-1)))

    def scaled(self, k) -> "LinearExpr":
        k = rat(k)
        if k == 0:
            return LinearExpr.constant(0)
        return LinearExpr(tuple((v, c * k) for v, c in self.terms), self.const * k)

    def shifted(self, k) -> "LinearExpr":
        return LinearExpr(self.terms, self.const + rat(k))

    def substitute(self, mapping: Mapping[str, "LinearExpr"]) -> "LinearExpr":
        out = LinearExpr.constant(self.const)
        for v, k in self.terms:
            repl = mapping.get(v)
            if repl is None:
                out = out.plus(LinearExpr.var(v, k))
            else:
                out = out.plus(repl.scaled(k))
        return out

    def evaluate(self, state: "State") -> Fraction:
        total = self.const
        for v, k in self.terms:
            total += k * state.num(v)
        return total

    def to_sexpr(self) -> str:
        parts = []
        for v, k in self.terms:
            if k == 1:
                parts.append(v)
            else:
                parts.append("(* %s %s)" % (rat_str(k), v))
        if self.const != 0 or not parts:
            parts.append(rat_str(self.const))
        if len(parts) == 1:
            return parts[0]
        return "(+ %s)" % " ".join(parts)

    def __repr__(self):
        return "LinearExpr[%s]" % self.to_sexpr()


# ---------------------------------------------------------------------------
# conditions and effects

@dataclass(frozen=True)
class BoolCond:
    var: str
    value: bool


@dataclass(frozen=True)
class NumCond:
    """expr >= 0, or expr > 0 when strict."""

    expr: LinearExpr
    strict: bool = False


Condition = Union[BoolCond, NumCond]


@dataclass(frozen=True)
class BoolEff:
    var: str
    value: bool


@dataclass(frozen=True)
class NumEff:
    """Numeric assignment.

    Plain assignment: new value is expr (expr never mentions var).
    Increment: new value is old value + expr; expr never mentions var either,
    it is the delta.
    """

    var: str
    expr: LinearExpr
    increment: bool = False


Effect = Union[BoolEff, NumEff]


def cond_vars(conds: Iterable[Condition]) -> frozenset:
    out = set()
    for c in conds:
        if isinstance(c, BoolCond):
            out.add(c.var)
        else:
            out |= c.expr.vars()
    return frozenset(out)


def assigned_vars(effs: Iterable[Effect]) -> frozenset:
    return frozenset(e.var for e in effs)


def effect_read_vars(eff: Effect) -> frozenset:
    """Variables the right-hand side of an effect depends on.

    For increments this is the delta's variables only; the implicit
    occurrence of the target does not count as a read, because repeated
    increments commute.
    """
    if isinstance(eff, BoolEff):
        return frozenset()
    return eff.expr.vars()


def mutex_effsets(effs1: Iterable[Effect], effs2: Iterable[Effect]) -> bool:
    a1, a2 = assigned_vars(effs1), assigned_vars(effs2)
    if a1 & a2:
        return True
    reads1 = frozenset().union(*[effect_read_vars(e) for e in effs1]) if effs1 else frozenset()
    reads2 = frozenset().union(*[effect_read_vars(e) for e in effs2]) if effs2 else frozenset()
    return bool(a1 & reads2) or bool(a2 & reads1)


# ---------------------------------------------------------------------------
# intermediate conditions and effects

@dataclass(frozen=True)
class IC:
    start: RelTime
    end: RelTime
    conds: frozenset
    uid: str

    def label(self) -> str:
        return "[%s,%s]" % (self.start.label(), self.end.label())


@dataclass(frozen=True)
class IE:
    at: RelTime
    effs: frozenset
    uid: str

    def label(self) -> str:
        return "[%s]" % self.at.label()


def mutex_ie(e1: IE, e2: IE) -> bool:
    return mutex_effsets(e1.effs, e2.effs)


def mutex_ie_ic(e: IE, c: IC) -> bool:
    return bool(assigned_vars(e.effs) & cond_vars(c.conds))


# ---------------------------------------------------------------------------
# actions

@dataclass(frozen=True)
class DurativeAction:
    name: str
    lower: Fraction
    upper: Fraction
    ics: tuple
    ies: tuple

    @property
    def is_snap(self) -> bool:
        return self.lower == 0 and self.upper == 0

    def ic_at(self, start: RelTime, end: RelTime) -> Optional[IC]:
        for c in self.ics:
            if c.start == start and c.end == end:
                return c
        return None

    @property
    def start_ic(self) -> IC:
        c = self.ic_at(rel(START), rel(START))
        assert c is not None, "start IC is materialized at construction"
        return c

    @property
    def end_ic(self) -> Optional[IC]:
        return self.ic_at(rel(END), rel(END))


def _check_effect_set(effs, where: str):
    seen = {}
    for e in effs:
        if e.var in seen and seen[e.var] != e:
            raise ModelError("%s assigns %r twice" % (where, e.var))
        seen[e.var] = e
    return frozenset(seen.values())


def make_action(name: str, lower, upper, ics=(), ies=()) -> DurativeAction:
    """Build a durative action from anchor triples.

    ics: iterable of (start: RelTime, end: RelTime, conds iterable).
    ies: iterable of (at: RelTime, effs iterable).
    Conditions sharing both anchors and effects sharing an anchor are merged.
    Always-true point ICs at START and at END are added when absent, so every
    action has designated start and end happenings.
    """
    lower, upper = rat(lower), rat(upper)
    if lower < 0 or upper < lower:
        raise ModelError("action %s has bad duration bounds [%s, %s]" % (name, lower, upper))
    if upper > 0 and lower == 0:
        raise ModelError("action %s has upper > 0 but lower = 0" % name)

    merged_ics = {}
    for start, end, conds in ics:
        _check_action_anchor(name, start, lower)
        _check_action_anchor(name, end, lower)
        key = (start, end)
        merged_ics[key] = merged_ics.get(key, frozenset()) | frozenset(conds)
    merged_ics.setdefault((rel(START), rel(START)), frozenset())
    if upper > 0:
        # for an instantaneous action the start already is the end, and a
        # separate always-true end marker would float freely in a pattern
        merged_ics.setdefault((rel(END), rel(END)), frozenset())

    merged_ies = {}
    for at, effs in ies:
        _check_action_anchor(name, at, lower)
        merged_ies[at] = merged_ies.get(at, frozenset()) | frozenset(effs)

    ic_keys = sorted(merged_ics, key=lambda k: (k[0].sort_key(), k[1].sort_key()))
    ie_keys = sorted(merged_ies, key=lambda k: k.sort_key())
    out_ics = tuple(
        IC(s, e, merged_ics[(s, e)], "%s:c%d" % (name, i))
        for i, (s, e) in enumerate(ic_keys)
    )
    out_ies = tuple(
        IE(at, _check_effect_set(merged_ies[at], "action %s IE %s" % (name, at.label())), "%s:e%d" % (name, i))
        for i, at in enumerate(ie_keys)
    )
    return DurativeAction(name, lower, upper, out_ics, out_ies)


def _check_action_anchor(name, rt: RelTime, lower: Fraction):
    if rt.is_plan:
        raise ModelError("action %s uses plan-relative anchor %s" % (name, rt.anchor))
    if rt.offset > lower:
        raise ModelError(
            "action %s has offset %s beyond its lower duration bound %s"
            % (name, rt.offset, lower)
        )


def make_snap_action(name: str, pre=(), effs=()) -> DurativeAction:
    """Instantaneous action: conditions at START, effects at START, L=U=0."""
    return make_action(name, 0, 0, ics=[(rel(START), rel(START), pre)], ies=[(rel(START), effs)])


# ---------------------------------------------------------------------------
# states

class State:
    """Total assignment of the task variables. Immutable by convention."""

    __slots__ = ("_vals",)

    def __init__(self, values: Mapping[str, Union[bool, Fraction]]):
        vals = {}
        for k, v in values.items():
            if isinstance(v, bool):
                vals[k] = v
            else:
                vals[k] = rat(v)
        self._vals = vals

    def value(self, var: str):
        try:
            return self._vals[var]
        except KeyError:
            raise ModelError("variable %r not bound in state" % (var,))

    def num(self, var: str) -> Fraction:
        v = self.value(var)
        if isinstance(v, bool):
            raise ModelError("variable %r is boolean, expected numeric" % (var,))
        return v

    def flag(self, var: str) -> bool:
        v = self.value(var)
        if not isinstance(v, bool):
            raise ModelError("variable %r is numeric, expected boolean" % (var,))
        return v

    def items(self):
        return self._vals.items()

    def as_dict(self):
        return dict(self._vals)

    def __contains__(self, var):
        return var in self._vals

    def __eq__(self, other):
        return isinstance(other, State) and self._vals == other._vals

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "State(%r)" % (self._vals,)


def eval_expr(state: State, expr: LinearExpr) -> Fraction:
    return expr.evaluate(state)


def satisfies(state: State, conds: Iterable[Condition]) -> bool:
    for c in conds:
        if isinstance(c, BoolCond):
            if state.flag(c.var) != c.value:
                return False
        else:
            v = eval_expr(state, c.expr)
            if c.strict:
                if not v > 0:
                    return False
            elif not v >= 0:
                return False
    return True


def apply_effects(state: State, effs: Iterable[Effect]) -> State:
    """Apply a set of effects simultaneously; numeric right-hand sides are
    evaluated in the pre-state."""
    effs = list(effs)
    _check_effect_set(effs, "effect set")
    new_vals = state.as_dict()
    for e in effs:
        if isinstance(e, BoolEff):
            state.flag(e.var)
            new_vals[e.var] = e.value
        else:
            base = state.num(e.var) if e.increment else Fraction(0)
            new_vals[e.var] = base + eval_expr(state, e.expr)
    return State(new_vals)


# ---------------------------------------------------------------------------
# tasks

@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "bool" or "num"

    def __post_init__(self):
        if self.kind not in ("bool", "num"):
            raise ModelError("variable %s has unknown kind %r" % (self.name, self.kind))


@dataclass(frozen=True)
class PlanningTask:
    variables: tuple
    actions: tuple
    init: State
    goal: tuple
    plan_ics: tuple
    plan_ies: tuple
    epsilon: Fraction

    def action(self, name: str) -> DurativeAction:
        for a in self.actions:
            if a.name == name:
                return a
        raise ModelError("unknown action %r" % (name,))

    def bool_vars(self):
        return frozenset(v.name for v in self.variables if v.kind == "bool")

    def num_vars(self):
        return frozenset(v.name for v in self.variables if v.kind == "num")

    def var_kind(self, name: str) -> str:
        for v in self.variables:
            if v.name == name:
                return v.kind
        raise ModelError("unknown variable %r" % (name,))


def make_task(variables, actions, init, goal=(), plan_ics=(), plan_ies=(), epsilon="0.001") -> PlanningTask:
    """Assemble and sanity-check a planning task.

    plan_ics: iterable of (start: RelTime, end: RelTime, conds).
    plan_ies: iterable of (at: RelTime, effs).
    """
    variables = tuple(variables)
    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        raise ModelError("duplicate variable names")
    bools = frozenset(v.name for v in variables if v.kind == "bool")
    nums = frozenset(v.name for v in variables if v.kind == "num")

    actions = tuple(actions)
    action_names = [a.name for a in actions]
    if len(set(action_names)) != len(action_names):
        raise ModelError("duplicate action names")

    if not isinstance(init, State):
        init = State(init)
    for v in variables:
        val = init.value(v.name)
        if v.kind == "bool" and not isinstance(val, bool):
            raise ModelError("init gives non-boolean value to %s" % v.name)
        if v.kind == "num" and isinstance(val, bool):
            raise ModelError("init gives boolean value to numeric %s" % v.name)
    extra = set(dict(init.items())) - set(names)
    if extra:
        raise ModelError("init binds unknown variables %s" % sorted(extra))

    merged_ics = {}
    for start, end, conds in plan_ics:
        _check_plan_anchor(start)
        _check_plan_anchor(end)
        key = (start, end)
        merged_ics[key] = merged_ics.get(key, frozenset()) | frozenset(conds)
    ic_keys = sorted(merged_ics, key=lambda k: (k[0].sort_key(), k[1].sort_key(), k[0].anchor, k[1].anchor))
    out_ics = tuple(IC(s, e, merged_ics[(s, e)], ":c%d" % i) for i, (s, e) in enumerate(ic_keys))

    merged_ies = {}
    for at, effs in plan_ies:
        _check_plan_anchor(at)
        merged_ies[at] = merged_ies.get(at, frozenset()) | frozenset(effs)
    ie_keys = sorted(merged_ies, key=lambda k: (k.sort_key(), k.anchor))
    out_ies = tuple(
        IE(at, _check_effect_set(merged_ies[at], "plan IE %s" % at.label()), ":e%d" % i)
        for i, at in enumerate(ie_keys)
    )

    goal_list = []
    for g in goal:
        if g not in goal_list:
            goal_list.append(g)

    task = PlanningTask(
        variables=variables,
        actions=actions,
        init=init,
        goal=tuple(goal_list),
        plan_ics=out_ics,
        plan_ies=out_ies,
        epsilon=rat(epsilon),
    )
    _typecheck_task(task, bools, nums)
    return task


def _check_plan_anchor(rt: RelTime):
    if not rt.is_plan:
        raise ModelError("plan ICE uses action-relative anchor %s" % rt.anchor)


def _typecheck_conds(conds, bools, nums, where):
    for c in conds:
        if isinstance(c, BoolCond):
            if c.var not in bools:
                raise ModelError("%s: %r is not a boolean variable" % (where, c.var))
        else:
            bad = c.expr.vars() - nums
            if bad:
                raise ModelError("%s: non-numeric variables %s in expression" % (where, sorted(bad)))


def _typecheck_effs(effs, bools, nums, where):
    for e in effs:
        if isinstance(e, BoolEff):
            if e.var not in bools:
                raise ModelError("%s: %r is not a boolean variable" % (where, e.var))
        else:
            if e.var not in nums:
                raise ModelError("%s: %r is not a numeric variable" % (where, e.var))
            bad = e.expr.vars() - nums
            if bad:
                raise ModelError("%s: non-numeric variables %s in expression" % (where, sorted(bad)))
            if e.expr.contains(e.var):
                raise ModelError("%s: effect on %r mentions its own target" % (where, e.var))


def _typecheck_task(task: PlanningTask, bools, nums):
    _typecheck_conds(task.goal, bools, nums, "goal")
    for a in task.actions:
        for c in a.ics:
            _typecheck_conds(c.conds, bools, nums, "action %s" % a.name)
        for e in a.ies:
            _typecheck_effs(e.effs, bools, nums, "action %s" % a.name)
    for c in task.plan_ics:
        _typecheck_conds(c.conds, bools, nums, "plan IC %s" % c.uid)
    for e in task.plan_ies:
        _typecheck_effs(e.effs, bools, nums, "plan IE %s" % e.uid)


# ---------------------------------------------------------------------------
# plans

@dataclass(frozen=True)
class PlanEntry:
    t: Fraction
    action: str
    d: Fraction


@dataclass(frozen=True)
class TimedPlan:
    entries: tuple

    @staticmethod
    def of(entries: Iterable[PlanEntry]) -> "TimedPlan":
        uniq = sorted(set(entries), key=lambda e: (e.t, e.action, e.d))
        return TimedPlan(tuple(uniq))

    def makespan(self) -> Fraction:
        if not self.entries:
            return Fraction(0)
        return max(e.t + e.d for e in self.entries)

    def __len__(self):
        return len(self.entries)


def plan_entry(t, action, d) -> PlanEntry:
    return PlanEntry(rat(t), action, rat(d))


# ---------------------------------------------------------------------------
# absolute ICEs

@dataclass(frozen=True)
class AbsIC:
    t_start: Fraction
    t_end: Fraction
    conds: frozenset
    uid: str
    entry: Optional[PlanEntry]


@dataclass(frozen=True)
class AbsIE:
    t: Fraction
    effs: frozenset
    uid: str
    entry: Optional[PlanEntry]


def absolute_ices(task: PlanningTask, plan: TimedPlan):
    """Instantiate every ICE of the plan's actions and of the task itself at
    absolute times. Absolute IEs are deduplicated on (time, origin uid), which
    mirrors the set semantics of plans."""
    ms = plan.makespan()
    ics = []
    ies = {}
    for entry in plan.entries:
        b = task.action(entry.action)
        lo, hi = entry.t, entry.t + entry.d
        for c in b.ics:
            ics.append(AbsIC(c.start.resolve(lo, hi), c.end.resolve(lo, hi), c.conds, c.uid, entry))
        for e in b.ies:
            at = e.at.resolve(lo, hi)
            ies.setdefault((at, e.uid), AbsIE(at, e.effs, e.uid, entry))
    for c in task.plan_ics:
        ics.append(AbsIC(c.start.resolve(0, ms), c.end.resolve(0, ms), c.conds, c.uid, None))
    for e in task.plan_ies:
        at = e.at.resolve(0, ms)
        ies.setdefault((at, e.uid), AbsIE(at, e.effs, e.uid, None))
    uniq_ics = []
    seen = set()
    for c in ics:
        key = (c.t_start, c.t_end, c.uid)
        if key not in seen:
            seen.add(key)
            uniq_ics.append(c)
    return uniq_ics, sorted(ies.values(), key=lambda e: (e.t, e.uid))


def parallelize_effects(abs_ies: Iterable[AbsIE]):
    """Group absolute IEs by time and join their effect sets.

    Returns (timeline, conflicts) where timeline is a list of
    (time, joined effect frozenset) with strictly increasing times and
    conflicts lists (time, var) pairs where two distinct effects target the
    same variable at the same instant.
    """
    by_time = {}
    for e in abs_ies:
        by_time.setdefault(e.t, []).append(e)
    timeline = []
    conflicts = []
    for t in sorted(by_time):
        per_var = {}
        for e in by_time[t]:
            for eff in e.effs:
                per_var.setdefault(eff.var, set()).add(eff)
        joined = set()
        for var, targeting in per_var.items():
            if len(targeting) > 1:
                conflicts.append((t, var))
            joined |= targeting
        timeline.append((t, frozenset(joined)))
    return timeline, conflicts


# ---------------------------------------------------------------------------
# s-expression parsing

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


def parse_sexpr(text: str):
    """Parse one s-expression into nested lists of atom strings."""
    tokens = _TOKEN_RE.findall(text)
    if not tokens:
        raise ModelError("empty s-expression")
    pos = 0

    def parse_one():
        nonlocal pos
        if pos >= len(tokens):
            raise ModelError("unexpected end of s-expression in %r" % text)
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(parse_one())
            if pos >= len(tokens):
                raise ModelError("unbalanced s-expression in %r" % text)
            pos += 1
            return items
        if tok == ")":
            raise ModelError("unexpected ')' in %r" % text)
        return tok

    node = parse_one()
    if pos != len(tokens):
        raise ModelError("trailing tokens in %r" % text)
    return node


def _is_number_atom(tok: str) -> bool:
    return bool(_DECIMAL_RE.match(tok) or _FRACTION_RE.match(tok))


def parse_expr(node) -> LinearExpr:
    if isinstance(node, str):
        if _is_number_atom(node):
            return LinearExpr.constant(rat(node))
        return LinearExpr.var(node)
    if not node:
        raise ModelError("empty expression")
    op = node[0]
    args = node[1:]
    if op == "+":
        out = LinearExpr.constant(0)
        for a in args:
            out = out.plus(parse_expr(a))
        return out
    if op == "-":
        if len(args) == 1:
            return parse_expr(args[0]).scaled(-1)
        out = parse_expr(args[0])
        for a in args[1:]:
            out = out.minus(parse_expr(a))
        return out
    if op == "*":
        if len(args) != 2:
            raise ModelError("'*' takes two arguments")
        left, right = parse_expr(args[0]), parse_expr(args[1])
        if left.is_constant:
            return right.scaled(left.const)
        if right.is_constant:
            return left.scaled(right.const)
        raise ModelError("nonlinear product in expression")
    if op == "/":
        if len(args) != 2:
            raise ModelError("'/' takes two arguments")
        num, den = parse_expr(args[0]), parse_expr(args[1])
        if not den.is_constant or den.const == 0:
            raise ModelError("division only by a nonzero constant")
        return num.scaled(Fraction(1) / den.const)
    raise ModelError("unknown expression operator %r" % (op,))


def parse_condition(source) -> list:
    """Parse one condition s-expression; '=' and the narrowing relations
    expand into {>=, >} pairs, so a list is returned."""
    node = parse_sexpr(source) if isinstance(source, str) else source
    if isinstance(node, str):
        return [BoolCond(node, True)]
    if not node:
        raise ModelError("empty condition")
    op = node[0]
    args = node[1:]
    if op == "not":
        if len(args) != 1 or not isinstance(args[0], str):
            raise ModelError("'not' takes one variable")
        return [BoolCond(args[0], False)]
    if op == "=" and len(args) == 2 and isinstance(args[1], str) and args[1] in ("true", "false"):
        if not isinstance(args[0], str):
            raise ModelError("boolean '=' takes a variable")
        return [BoolCond(args[0], args[1] == "true")]
    if op in (">=", ">", "<=", "<", "="):
        if len(args) != 2:
            raise ModelError("%r takes two arguments" % op)
        diff = parse_expr(args[0]).minus(parse_expr(args[1]))
        if op == ">=":
            return [NumCond(diff, False)]
        if op == ">":
            return [NumCond(diff, True)]
        if op == "<=":
            return [NumCond(diff.scaled(-1), False)]
        if op == "<":
            return [NumCond(diff.scaled(-1), True)]
        return [NumCond(diff, False), NumCond(diff.scaled(-1), False)]
    raise ModelError("unknown condition operator %r" % (op,))


def parse_conditions(sources: Iterable[str]) -> list:
    out = []
    for s in sources:
        out.extend(parse_condition(s))
    return out


def parse_effect(source) -> Effect:
    node = parse_sexpr(source) if isinstance(source, str) else source
    if not isinstance(node, list) or len(node) != 3:
        raise ModelError("effect must be (:= v val), (+= x e) or (-= x e)")
    op, var, value = node
    if not isinstance(var, str):
        raise ModelError("effect target must be a variable")
    if op == ":=":
        if isinstance(value, str) and value in ("true", "false"):
            return BoolEff(var, value == "true")
        expr = parse_expr(value)
        k = expr.coeff(var)
        if k == 0:
            return NumEff(var, expr, increment=False)
        if k == 1:
            return NumEff(var, expr.minus(LinearExpr.var(var)), increment=True)
        raise ModelError("assignment to %r mentions it with coefficient %s" % (var, k))
    if op in ("+=", "-="):
        expr = parse_expr(value)
        if expr.contains(var):
            raise ModelError("increment of %r mentions its own target" % (var,))
        if op == "-=":
            expr = expr.scaled(-1)
        return NumEff(var, expr, increment=True)
    raise ModelError("unknown effect operator %r" % (op,))


def cond_to_sexpr(c: Condition) -> str:
    if isinstance(c, BoolCond):
        return c.var if c.value else "(not %s)" % c.var
    rel_op = ">" if c.strict else ">="
    return "(%s %s 0)" % (rel_op, c.expr.to_sexpr())


def eff_to_sexpr(e: Effect) -> str:
    if isinstance(e, BoolEff):
        return "(:= %s %s)" % (e.var, "true" if e.value else "false")
    if e.increment:
        return "(+= %s %s)" % (e.var, e.expr.to_sexpr())
    return "(:= %s %s)" % (e.var, e.expr.to_sexpr())


# ---------------------------------------------------------------------------
# JSON serialization

def _reltime_to_data(rt: RelTime):
    return {"anchor": rt.anchor, "offset": rat_str(rt.offset)}


def _reltime_from_data(data) -> RelTime:
    return RelTime(data["anchor"], rat(data["offset"]))


def task_to_data(task: PlanningTask) -> dict:
    return {
        "vars": [{"name": v.name, "kind": v.kind} for v in task.variables],
        "actions": [
            {
                "name": a.name,
                "lower": rat_str(a.lower),
                "upper": rat_str(a.upper),
                "ics": [
                    {
                        "start": _reltime_to_data(c.start),
                        "end": _reltime_to_data(c.end),
                        "conds": sorted(cond_to_sexpr(x) for x in c.conds),
                    }
                    for c in a.ics
                ],
                "ies": [
                    {
                        "at": _reltime_to_data(e.at),
                        "effs": sorted(eff_to_sexpr(x) for x in e.effs),
                    }
                    for e in a.ies
                ],
            }
            for a in task.actions
        ],
        "init": {
            name: (val if isinstance(val, bool) else rat_str(val))
            for name, val in sorted(task.init.items())
        },
        "goal": sorted(cond_to_sexpr(g) for g in task.goal),
        "plan_ics": [
            {
                "start": _reltime_to_data(c.start),
                "end": _reltime_to_data(c.end),
                "conds": sorted(cond_to_sexpr(x) for x in c.conds),
            }
            for c in task.plan_ics
        ],
        "plan_ies": [
            {
                "at": _reltime_to_data(e.at),
                "effs": sorted(eff_to_sexpr(x) for x in e.effs),
            }
            for e in task.plan_ies
        ],
        "epsilon": rat_str(task.epsilon),
    }


def task_from_data(data: Mapping) -> PlanningTask:
    variables = [Variable(v["name"], v["kind"]) for v in data.get("vars", [])]
    actions = []
    for a in data.get("actions", []):
        ics = [
            (
                _reltime_from_data(c["start"]),
                _reltime_from_data(c["end"]),
                parse_conditions(c.get("conds", [])),
            )
            for c in a.get("ics", [])
        ]
        ies = [
            (
                _reltime_from_data(e["at"]),
                [parse_effect(x) for x in e.get("effs", [])],
            )
            for e in a.get("ies", [])
        ]
        actions.append(make_action(a["name"], rat(a["lower"]), rat(a["upper"]), ics, ies))
    init = {}
    for name, val in data.get("init", {}).items():
        init[name] = val if isinstance(val, bool) else rat(val)
    goal = parse_conditions(data.get("goal", []))
    plan_ics = [
        (
            _reltime_from_data(c["start"]),
            _reltime_from_data(c["end"]),
            parse_conditions(c.get("conds", [])),
        )
        for c in data.get("plan_ics", [])
    ]
    plan_ies = [
        (
            _reltime_from_data(e["at"]),
            [parse_effect(x) for x in e.get("effs", [])],
        )
        for e in data.get("plan_ies", [])
    ]
    return make_task(
        variables,
        actions,
        init,
        goal,
        plan_ics,
        plan_ies,
        epsilon=rat(data.get("epsilon", "0.001")),
    )


def plan_to_data(plan: TimedPlan) -> dict:
    return {
        "entries": [
            {"t": rat_str(e.t), "action": e.action, "d": rat_str(e.d)}
            for e in plan.entries
        ]
    }


def plan_from_data(data: Mapping) -> TimedPlan:
    entries = [
        plan_entry(rat(e["t"]), e["action"], rat(e["d"]))
        for e in data.get("entries", [])
    ]
    return TimedPlan.of(entries)


def load_task(path: str) -> PlanningTask:
    with open(path, "r", encoding="utf-8") as fh:
        return task_from_data(json.load(fh))


def dump_task(task: PlanningTask, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(task_to_data(task), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_plan(path: str) -> TimedPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return plan_from_data(json.load(fh))


def dump_plan(plan: TimedPlan, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plan_to_data(plan), fh, indent=1)
        fh.write("\n")
