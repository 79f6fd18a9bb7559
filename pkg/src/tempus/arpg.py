"""Relaxed reachability over interval abstractions of numeric state.

Each variable is tracked as a convex interval (booleans as subsets of
{false, true}). Supporters fire once each, layer by layer; the first layer in
which any supporter of a happening fires decides the happening's position in
the extracted pattern.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .model import (
    BoolCond,
    BoolEff,
    LinearExpr,
    NumCond,
    NumEff,
    rat_str,
)
from .snap import Happening, SnapTask, TIME_VAR, supporters

INF = math.inf


def interval_eval(expr: LinearExpr, state) -> tuple:
    lo = Fraction(expr.const)
    hi = Fraction(expr.const)
    for var, coeff in expr.terms:
        vlo, vhi = state[var]
        if coeff >= 0:
            tlo, thi = coeff * vlo, coeff * vhi
        else:
            tlo, thi = coeff * vhi, coeff * vlo
        lo, hi = lo + tlo, hi + thi
    return lo, hi


def _hull(a, b):
    return min(a[0], b[0]), max(a[1], b[1])


def _cond_sat(cond, state) -> bool:
    if isinstance(cond, BoolCond):
        return cond.value in state[cond.var]
    _, hi = interval_eval(cond.expr, state)
    return hi > 0 if cond.strict else hi >= 0


def conditions_sat(conds, state) -> bool:
    return all(_cond_sat(c, state) for c in conds)


def _apply_group(state, effs):
    """Result of one action's fired effects on the interval state."""
    new = dict(state)
    seen = set()
    assigned_nums = {e.var for e in effs if isinstance(e, NumEff)}
    for eff in effs:
        if isinstance(eff, BoolEff):
            new[eff.var] = state[eff.var] | {eff.value}
    for eff in effs:
        if not isinstance(eff, NumEff):
            continue
        rhs = eff.expr
        if eff.increment:
            rhs = rhs.plus(LinearExpr.var(eff.var))
        base = _hull(state[eff.var], interval_eval(rhs, state))
        if assigned_nums & set(rhs.vars()):
            # repeated application can drift; open the affected side
            dlo, dhi = interval_eval(rhs.minus(LinearExpr.var(eff.var)), state)
            lo, hi = base
            if dlo < 0:
                lo = -INF
            if dhi > 0:
                hi = INF
            base = (lo, hi)
        if eff.var in seen:
            base = _hull(new[eff.var], base)
        seen.add(eff.var)
        new[eff.var] = base
    return new


@dataclass(frozen=True)
class ArpgResult:
    pattern: tuple  # linearized happenings, layer by layer
    complete: bool  # every happening of the snap task was emitted
    goal_reachable: bool
    cells: tuple  # ((time label, (display, ...)), ...) for inspection
    final: dict  # var -> interval / bool subset
    left_out: tuple  # happenings never emitted


def _happening_order_key(h: Happening):
    kind_rank = 0 if h.is_ic else 1
    owner = h.owner if h.owner is not None else ""
    return (kind_rank, owner, h.start.sort_key(), h.end.sort_key(), h.uid)


def compute_arpg(snap: SnapTask) -> ArpgResult:
    state = {}
    for var in snap.variables:
        val = snap.init.value(var.name)
        if var.kind == "bool":
            state[var.name] = frozenset({val})
        else:
            state[var.name] = (val, val)

    pending = []
    for action in snap.actions:
        pending.extend(supporters(action))

    emitted = set()
    layers = []
    cells = []

    while True:
        if conditions_sat(snap.goal, state):
            break
        fired = [s for s in pending if conditions_sat(s.pre, state)]
        if not fired:
            break
        pending = [s for s in pending if s not in fired]

        label = state[TIME_VAR][1]
        new_uids = []
        for sup in fired:
            origin = sup.parent.origin
            if origin[0] == "happening" and origin[1] not in emitted:
                emitted.add(origin[1])
                new_uids.append(origin[1])
        if new_uids:
            layer = sorted(
                (snap.happening(uid) for uid in new_uids), key=_happening_order_key
            )
            layers.append(tuple(layer))
            cells.append((label, tuple(h.display() for h in layer)))

        by_parent = {}
        for sup in fired:
            by_parent.setdefault(sup.parent.name, set()).update(sup.effs)
        merged = dict(state)
        for effs in by_parent.values():
            result = _apply_group(state, effs)
            for var, val in result.items():
                cur = merged[var]
                if isinstance(cur, frozenset):
                    merged[var] = cur | val
                else:
                    merged[var] = _hull(cur, val)
        state = merged

    goal_ok = conditions_sat(snap.goal, state)
    left = tuple(
        h for uid, h in sorted(snap.happenings.items()) if uid not in emitted
    )

    pattern, complete = _linearize(snap, layers, left)
    return ArpgResult(
        pattern=pattern,
        complete=complete,
        goal_reachable=goal_ok,
        cells=tuple(cells),
        final=state,
        left_out=left,
    )


def _linearize(snap: SnapTask, layers, left):
    from .snap import task_well_orderable

    flat = [h for layer in layers for h in layer]
    if not left:
        return tuple(flat), True
    if task_well_orderable(snap.base):
        # incomplete actions cannot be applied anyway; drop what was emitted
        # of them, but late plan happenings must still appear
        bad_owners = {h.owner for h in left if h.owner is not None}
        kept = [h for h in flat if h.owner not in bad_owners]
        kept.extend(sorted((h for h in left if h.owner is None), key=_happening_order_key))
        return tuple(kept), False
    rest = sorted(left, key=_happening_order_key)
    return tuple(flat + rest), False


def dump_cells(result: ArpgResult):
    """Readable (time, happenings) rows of the analysis."""
    rows = []
    for label, displays in result.cells:
        rows.append((rat_str(label), list(displays)))
    return rows
