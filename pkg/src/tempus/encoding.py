"""SMT encoding of a linearized happening pattern.

Each happening occurrence i gets an integer count h_i and rational times
(t_i, te_i for condition windows, d_i for action starts). Effects are folded
into symbolic state chains; conditions, ordering, duration and separation
constraints tie counts and times together. The result is a deterministic
SMT-LIB script plus named goal formulas left unasserted so the caller can
maximize how many of them hold.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import (
    BoolCond,
    BoolEff,
    LinearExpr,
    ModelError,
    NumCond,
    NumEff,
    PlanningTask,
    START,
    ALPHA,
    assigned_vars,
    cond_vars,
    mutex_effsets,
)
from .snap import Happening, SnapTask, epsilon_b, delta_sum, plain_assignment, rollable


class EncodingError(ModelError):
    pass


# ---------------------------------------------------------------------------
# tiny term / formula language

@dataclass(frozen=True)
class TConst:
    value: Fraction


@dataclass(frozen=True)
class TVar:
    name: str
    sort: str  # "Int" or "Real"


@dataclass(frozen=True)
class TAdd:
    items: tuple


@dataclass(frozen=True)
class TMul:
    items: tuple


@dataclass(frozen=True)
class TIte:
    cond: object
    then: object
    els: object


FTRUE = ("true",)
FFALSE = ("false",)


@dataclass(frozen=True)
class FVar:
    name: str


@dataclass(frozen=True)
class FNot:
    arg: object


@dataclass(frozen=True)
class FAnd:
    items: tuple


@dataclass(frozen=True)
class FOr:
    items: tuple


@dataclass(frozen=True)
class FImp:
    left: object
    right: object


@dataclass(frozen=True)
class FIff:
    left: object
    right: object


@dataclass(frozen=True)
class FCmp:
    op: str  # ">=", ">", "=", "<="
    lhs: object
    rhs: object


def term_sort(t) -> str:
    if isinstance(t, TConst):
        return "Int" if t.value.denominator == 1 else "Real"
    if isinstance(t, TVar):
        return t.sort
    if isinstance(t, (TAdd, TMul)):
        for item in t.items:
            if term_sort(item) == "Real":
                return "Real"
        return "Int"
    if isinstance(t, TIte):
        if term_sort(t.then) == "Real" or term_sort(t.els) == "Real":
            return "Real"
        return "Int"
    raise EncodingError("not a term: %r" % (t,))


def _const_str(value: Fraction, sort: str) -> str:
    num, den = value.numerator, value.denominator
    if sort == "Int":
        if den != 1:
            raise EncodingError("fractional constant in integer context")
        return str(num) if num >= 0 else "(- %d)" % -num
    if den == 1:
        body = "%d.0" % abs(num)
    else:
        body = "(/ %d.0 %d.0)" % (abs(num), den)
    return body if num >= 0 else "(- %s)" % body


def emit_term(t, sort: Optional[str] = None) -> str:
    own = term_sort(t)
    target = sort or own
    if target == "Real" and own == "Int" and not isinstance(t, TConst):
        return "(to_real %s)" % _emit_term_raw(t, "Int")
    return _emit_term_raw(t, target)


def _emit_term_raw(t, sort: str) -> str:
    if isinstance(t, TConst):
        return _const_str(t.value, sort)
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TAdd):
        if not t.items:
            return _const_str(Fraction(0), sort)
        if len(t.items) == 1:
            return emit_term(t.items[0], sort)
        return "(+ %s)" % " ".join(emit_term(i, sort) for i in t.items)
    if isinstance(t, TMul):
        if len(t.items) == 1:
            return emit_term(t.items[0], sort)
        return "(* %s)" % " ".join(emit_term(i, sort) for i in t.items)
    if isinstance(t, TIte):
        return "(ite %s %s %s)" % (
            emit_formula(t.cond),
            emit_term(t.then, sort),
            emit_term(t.els, sort),
        )
    raise EncodingError("not a term: %r" % (t,))


def emit_formula(f) -> str:
    if f is FTRUE:
        return "true"
    if f is FFALSE:
        return "false"
    if isinstance(f, FVar):
        return f.name
    if isinstance(f, FNot):
        return "(not %s)" % emit_formula(f.arg)
    if isinstance(f, FAnd):
        if not f.items:
            return "true"
        if len(f.items) == 1:
            return emit_formula(f.items[0])
        return "(and %s)" % " ".join(emit_formula(i) for i in f.items)
    if isinstance(f, FOr):
        if not f.items:
            return "false"
        if len(f.items) == 1:
            return emit_formula(f.items[0])
        return "(or %s)" % " ".join(emit_formula(i) for i in f.items)
    if isinstance(f, FImp):
        return "(=> %s %s)" % (emit_formula(f.left), emit_formula(f.right))
    if isinstance(f, FIff):
        return "(= %s %s)" % (emit_formula(f.left), emit_formula(f.right))
    if isinstance(f, FCmp):
        sort = "Real" if "Real" in (term_sort(f.lhs), term_sort(f.rhs)) else "Int"
        return "(%s %s %s)" % (f.op, emit_term(f.lhs, sort), emit_term(f.rhs, sort))
    raise EncodingError("not a formula: %r" % (f,))


_SYM_BAD = re.compile(r"[^A-Za-z0-9_.~!@$%^&*+=<>?/-]")


def _san(name: str) -> str:
    return _SYM_BAD.sub("_", name)


# ---------------------------------------------------------------------------
# occurrences

@dataclass(frozen=True)
class Occ:
    index: int  # 1-based position in the pattern
    happening: Happening
    is_start: bool
    is_end: bool
    hvar: str
    tvar: str
    tevar: Optional[str]
    dvar: Optional[str]

    @property
    def uid(self):
        return self.happening.uid

    @property
    def owner(self):
        return self.happening.owner

    @property
    def is_ic(self):
        return self.happening.is_ic

    def h(self):
        return TVar(self.hvar, "Int")

    def t(self):
        return TVar(self.tvar, "Real")

    def te(self):
        return TVar(self.tevar, "Real")

    def d(self):
        return TVar(self.dvar, "Real")


@dataclass
class Encoding:
    task: PlanningTask
    pattern: tuple
    occurrences: tuple
    decls: tuple  # ((name, sort), ...)
    assertions: tuple  # strings
    goals: tuple  # ((name, formula string), ...)
    final_names: dict  # task var -> symbol
    ms_name: str
    logic: str
    rolling: bool


def _h_pos(occ) -> object:
    return FCmp(">", occ.h(), TConst(Fraction(0)))


def _h_zero(occ) -> object:
    return FCmp("=", occ.h(), TConst(Fraction(0)))


class _Builder:
    def __init__(self, task: PlanningTask, snap: SnapTask, pattern, rolling: bool):
        self.task = task
        self.snap = snap
        self.pattern = tuple(pattern)
        self.rolling = rolling
        self.eps = task.epsilon
        self.decls = []
        self._declared = set()
        self.asserts = []
        self.occs = []
        self.snapshots = []  # (bool sigma, num sigma) before each position
        self.bool_sigma = {}
        self.num_sigma = {}
        self.rollable = {a.name: rollable(a) for a in task.actions}
        self.eps_b = {a.name: epsilon_b(a, self.eps) for a in task.actions}
        self.firsts = {name: seq.first.uid for name, seq in snap.seqs.items()}
        self.lasts = {name: seq.last.uid for name, seq in snap.seqs.items()}

    # -- infrastructure

    def declare(self, name: str, sort: str):
        if name in self._declared:
            raise EncodingError("duplicate symbol %s" % name)
        self._declared.add(name)
        self.decls.append((name, sort))

    def put(self, formula):
        self.asserts.append("(assert %s)" % emit_formula(formula))

    def lin(self, expr: LinearExpr, num_map) -> object:
        items = [TConst(Fraction(expr.const))] if expr.const != 0 else []
        for var, coeff in expr.terms:
            base = num_map[var]
            if coeff == 1:
                items.append(base)
            else:
                items.append(TMul((TConst(Fraction(coeff)), base)))
        if not items:
            return TConst(Fraction(0))
        return TAdd(tuple(items))

    def cond_formula(self, cond, snapshot) -> object:
        bools, nums = snapshot
        if isinstance(cond, BoolCond):
            f = bools[cond.var]
            return f if cond.value else FNot(f)
        term = self.lin(cond.expr, nums)
        return FCmp(">" if cond.strict else ">=", term, TConst(Fraction(0)))

    def conds_formula(self, conds, snapshot) -> object:
        parts = [self.cond_formula(c, snapshot) for c in _sorted_conds(conds)]
        return FAnd(tuple(parts))

    # -- construction passes

    def build(self) -> Encoding:
        self.declare("ms", "Real")
        self.put(FCmp(">=", TVar("ms", "Real"), TConst(Fraction(0))))
        self._init_sigma()
        self._positions()
        self._causal()
        self._temporal()
        goals, final_names = self._final()
        logic = "QF_NIRA" if self.rolling else "QF_LIRA"
        return Encoding(
            task=self.task,
            pattern=self.pattern,
            occurrences=tuple(self.occs),
            decls=tuple(self.decls),
            assertions=tuple(self.asserts),
            goals=tuple(goals),
            final_names=final_names,
            ms_name="ms",
            logic=logic,
            rolling=self.rolling,
        )

    def _init_sigma(self):
        for var in self.task.variables:
            val = self.task.init.value(var.name)
            if var.kind == "bool":
                self.bool_sigma[var.name] = FTRUE if val else FFALSE
            else:
                self.num_sigma[var.name] = TConst(Fraction(val))

    def _positions(self):
        for pos, h in enumerate(self.pattern, 1):
            hvar, tvar = "h%d" % pos, "t%d" % pos
            self.declare(hvar, "Int")
            self.declare(tvar, "Real")
            tevar = dvar = None
            if h.is_ic:
                tevar = "te%d" % pos
                self.declare(tevar, "Real")
            is_start = h.owner is not None and self.firsts[h.owner] == h.uid
            is_end = h.owner is not None and self.lasts[h.owner] == h.uid
            if is_start:
                dvar = "d%d" % pos
                self.declare(dvar, "Real")
            occ = Occ(pos, h, is_start, is_end, hvar, tvar, tevar, dvar)
            self.occs.append(occ)
            self.snapshots.append((dict(self.bool_sigma), dict(self.num_sigma)))
            if not h.is_ic:
                self._apply_effects(occ)

    def _apply_effects(self, occ):
        bools, nums = self.snapshots[-1]
        use_counts = self.rolling and occ.owner is not None and self.rollable[occ.owner]
        for eff in _sorted_effs(occ.happening.effs):
            sym = "s%d_%s" % (occ.index, _san(eff.var))
            if isinstance(eff, BoolEff):
                self.declare(sym, "Bool")
                prev = bools[eff.var]
                if eff.value:
                    rule = FOr((prev, _h_pos(occ)))
                else:
                    rule = FAnd((prev, _h_zero(occ)))
                self.put(FIff(FVar(sym), rule))
                self.bool_sigma[eff.var] = FVar(sym)
            else:
                self.declare(sym, "Real")
                prev = nums[eff.var]
                if eff.increment:
                    delta = self.lin(eff.expr, nums)
                    if use_counts:
                        rule = TAdd((prev, TMul((occ.h(), delta))))
                    else:
                        rule = TIte(_h_pos(occ), TAdd((prev, delta)), prev)
                else:
                    rule = TIte(_h_pos(occ), self.lin(eff.expr, nums), prev)
                self.put(FCmp("=", TVar(sym, "Real"), rule))
                self.num_sigma[eff.var] = TVar(sym, "Real")

    # -- causal constraints

    def _causal(self):
        by_uid = {}
        for occ in self.occs:
            by_uid.setdefault(occ.uid, []).append(occ)

        # plan-level items happen exactly once
        for uid in self._plan_uids():
            copies = by_uid.get(uid, [])
            for occ in copies:
                self.put(FCmp("<=", occ.h(), TConst(Fraction(1))))
            if not copies:
                self.put(FFALSE)
                continue
            self.put(
                FCmp("=", TAdd(tuple(o.h() for o in copies)), TConst(Fraction(1)))
            )

        owned = {}
        for occ in self.occs:
            if occ.owner is not None:
                owned.setdefault(occ.owner, []).append(occ)

        for name, occs in owned.items():
            uids = [h.uid for h in self.snap.seqs[name].flat()]
            starts = [o for o in occs if o.is_start]
            ends = [o for o in occs if o.is_end]

            # every piece of an applied action is applied equally often
            for occ in occs:
                for uid in uids:
                    if uid == occ.uid:
                        continue
                    copies = by_uid.get(uid, [])
                    self.put(
                        FOr(tuple(FCmp("=", occ.h(), o.h()) for o in copies))
                    )

            # between a matched start and end, counts add up
            n_pieces = len(uids)
            for p in starts:
                for q in ends:
                    if p.index >= q.index:
                        continue
                    window = [o for o in occs if p.index <= o.index <= q.index]
                    win_starts = [o for o in window if o.is_start]
                    lhs = TMul(
                        (
                            TConst(Fraction(n_pieces)),
                            TAdd(tuple(o.h() for o in win_starts)),
                        )
                    )
                    rhs = TAdd(tuple(o.h() for o in window))
                    self.put(
                        FImp(FCmp("=", p.h(), q.h()), FCmp("=", lhs, rhs))
                    )

            # applied starts see a matching later end and vice versa
            for p in starts:
                later = [q for q in ends if q.index > p.index]
                self.put(
                    FImp(
                        _h_pos(p),
                        FOr(tuple(FCmp("=", q.h(), p.h()) for q in later)),
                    )
                )
            for q in ends:
                earlier = [p for p in starts if p.index < q.index]
                self.put(
                    FImp(
                        _h_pos(q),
                        FOr(tuple(FCmp("=", p.h(), q.h()) for p in earlier)),
                    )
                )

            # repetition only for actions that support it
            if not (self.rolling and self.rollable[name]):
                for p in starts:
                    self.put(FCmp("<=", p.h(), TConst(Fraction(1))))

        # conditions hold in the state reached before the occurrence
        for occ in self.occs:
            if not occ.is_ic:
                continue
            snapshot = self.snapshots[occ.index - 1]
            conds = occ.happening.conds
            if conds:
                self.put(FImp(_h_pos(occ), self.conds_formula(conds, snapshot)))
            if (
                self.rolling
                and occ.owner is not None
                and self.rollable[occ.owner]
            ):
                rolled = self._rolled_conds(occ, snapshot)
                if rolled is not None:
                    self.put(
                        FImp(FCmp(">", occ.h(), TConst(Fraction(1))), rolled)
                    )

    def _plan_uids(self):
        return [c.uid for c in self.task.plan_ics] + [
            e.uid for e in self.task.plan_ies
        ]

    def _rolled_conds(self, occ, snapshot):
        """Numeric conditions restated for the last of h_i back to back runs."""
        action = self.task.action(occ.owner)
        _, nums = snapshot
        reps_minus_one = TAdd((occ.h(), TConst(Fraction(-1))))
        parts = []
        for cond in _sorted_conds(occ.happening.conds):
            if not isinstance(cond, NumCond):
                continue
            items = (
                [TConst(Fraction(cond.expr.const))] if cond.expr.const != 0 else []
            )
            for var, coeff in cond.expr.terms:
                plain = plain_assignment(action, var)
                if plain is not None:
                    sub = self.lin(plain, nums)
                else:
                    delta = delta_sum(action, var)
                    if delta.is_constant and delta.const == 0:
                        sub = nums[var]
                    else:
                        sub = TAdd(
                            (
                                nums[var],
                                TMul((reps_minus_one, self.lin(delta, nums))),
                            )
                        )
                items.append(sub if coeff == 1 else TMul((TConst(Fraction(coeff)), sub)))
            term = TAdd(tuple(items)) if items else TConst(Fraction(0))
            parts.append(
                FCmp(">" if cond.strict else ">=", term, TConst(Fraction(0)))
            )
        if not parts:
            return None
        return FAnd(tuple(parts))

    # -- temporal constraints

    def _temporal(self):
        zero = TConst(Fraction(0))
        occs = self.occs

        for occ in occs:
            self.put(FCmp(">=", occ.h(), zero))
            self.put(FCmp(">=", occ.t(), zero))
            if occ.tevar:
                self.put(FCmp(">=", occ.te(), zero))
            if occ.dvar:
                self.put(FCmp(">=", occ.d(), zero))

        ends = [o for o in occs if o.is_end]
        if ends:
            for q in ends:
                self.put(FCmp(">=", TVar("ms", "Real"), q.t()))
            self.put(FOr(tuple(FCmp("=", TVar("ms", "Real"), q.t()) for q in ends)))
        else:
            self.put(FCmp("=", TVar("ms", "Real"), zero))

        for occ in occs:
            if occ.owner is not None:
                continue
            lo, hi_ = zero, TVar("ms", "Real")
            if occ.is_ic:
                c = occ.happening
                self.put(
                    FImp(
                        _h_pos(occ),
                        FAnd(
                            (
                                FCmp("=", occ.t(), _rel_term(c.start, lo, hi_)),
                                FCmp("=", occ.te(), _rel_term(c.end, lo, hi_)),
                            )
                        ),
                    )
                )
            else:
                self.put(
                    FImp(
                        _h_pos(occ),
                        FCmp("=", occ.t(), _rel_term(occ.happening.start, lo, hi_)),
                    )
                )

        owned = {}
        for occ in occs:
            if occ.owner is not None:
                owned.setdefault(occ.owner, []).append(occ)

        for name, group in owned.items():
            starts = [o for o in group if o.is_start]
            ends_b = [o for o in group if o.is_end]
            uids = [h.uid for h in self.snap.seqs[name].flat()]
            for p in starts:
                for q in ends_b:
                    if p.index >= q.index:
                        continue
                    window = [o for o in group if p.index <= o.index <= q.index]
                    parts = []
                    for uid in uids:
                        copies = [o for o in window if o.uid == uid]
                        rep = self.snap.happening(uid)
                        if rep.is_ic:
                            parts.append(
                                FOr(
                                    tuple(
                                        FCmp(
                                            "=",
                                            o.t(),
                                            _rel_term(rep.start, p.t(), q.t()),
                                        )
                                        for o in copies
                                    )
                                )
                            )
                            parts.append(
                                FOr(
                                    tuple(
                                        FCmp(
                                            "=",
                                            o.te(),
                                            _rel_term(rep.end, p.t(), q.t()),
                                        )
                                        for o in copies
                                    )
                                )
                            )
                        else:
                            parts.append(
                                FOr(
                                    tuple(
                                        FCmp(
                                            "=",
                                            o.t(),
                                            _rel_term(rep.start, p.t(), q.t()),
                                        )
                                        for o in copies
                                    )
                                )
                            )
                    self.put(
                        FImp(
                            FAnd((FCmp("=", p.h(), q.h()), _h_pos(p))),
                            FAnd(tuple(parts)),
                        )
                    )

        for occ in occs:
            self.put(FIff(_h_zero(occ), FCmp("=", occ.t(), zero)))
            if occ.tevar:
                self.put(FIff(_h_zero(occ), FCmp("=", occ.te(), zero)))
            if occ.dvar:
                action = self.task.action(occ.owner)
                self.put(FImp(_h_zero(occ), FCmp("=", occ.d(), zero)))
                self.put(
                    FImp(
                        _h_pos(occ),
                        FAnd(
                            (
                                FCmp(">=", occ.d(), TConst(Fraction(action.lower))),
                                FCmp("<=", occ.d(), TConst(Fraction(action.upper))),
                            )
                        ),
                    )
                )
                later = [
                    q
                    for q in occs
                    if q.is_end and q.owner == occ.owner and q.index > occ.index
                ]
                self.put(
                    FImp(
                        _h_pos(occ),
                        FOr(
                            tuple(
                                FCmp("=", q.t(), TAdd((occ.t(), occ.d())))
                                for q in later
                            )
                        ),
                    )
                )

        self._separation()
        self._no_overlap()

    def _separation(self):
        eps = TConst(self.eps)
        occs = self.occs
        for a in range(len(occs)):
            for b in range(a + 1, len(occs)):
                i, j = occs[a], occs[b]
                same_owner = i.owner is not None and i.owner == j.owner
                is_mutex = _mutex_happenings(i.happening, j.happening)
                if not same_owner and is_mutex:
                    self._separate_once(i, j, eps)
                if self.rolling:
                    same_uid = i.uid == j.uid
                    if same_uid or (is_mutex and not same_owner):
                        self._separate_rolling(i, j, eps)

    def _separate_once(self, i, j, eps):
        both = FAnd((_h_pos(i), _h_pos(j)))
        if i.is_ic and j.is_ic:
            return
        if i.is_ic:
            self.put(FImp(both, FCmp(">=", j.t(), i.te())))
        elif not j.is_ic:
            self.put(FImp(both, FCmp(">=", j.t(), TAdd((i.t(), eps)))))
        else:
            snapshot = self.snapshots[i.index - 1]
            already = self.conds_formula(j.happening.conds, snapshot)
            self.put(
                FImp(
                    FAnd((_h_pos(i), _h_pos(j), FNot(already))),
                    FCmp(">=", j.t(), TAdd((i.t(), eps))),
                )
            )

    def _separate_rolling(self, i, j, eps):
        one = TConst(Fraction(1))
        if i.owner is not None and self.rollable.get(i.owner):
            shift = TMul(
                (
                    TAdd((self._delta_before(i), TConst(self.eps_b[i.owner]))),
                    TAdd((i.h(), TConst(Fraction(-1)))),
                )
            )
            guard = FAnd((FCmp(">", i.h(), one), _h_pos(j)))
            if i.is_ic:
                self.put(FImp(guard, FCmp(">=", j.t(), TAdd((i.te(), shift)))))
            elif not j.is_ic:
                self.put(
                    FImp(guard, FCmp(">=", j.t(), TAdd((i.t(), shift, eps))))
                )
        if (
            not i.is_ic
            and j.is_ic
            and j.owner is not None
            and self.rollable.get(j.owner)
        ):
            self.put(
                FImp(
                    FAnd((_h_pos(i), FCmp(">", j.h(), one))),
                    FCmp(">=", j.t(), TAdd((i.t(), eps))),
                )
            )

    def _delta_before(self, occ):
        term = TConst(Fraction(0))
        for p in self.occs:
            if p.index > occ.index:
                break
            if p.owner == occ.owner and p.is_start:
                term = TIte(_h_pos(p), p.d(), term)
        return term

    def _no_overlap(self):
        owned = {}
        for occ in self.occs:
            if occ.is_start:
                owned.setdefault(occ.owner, []).append(occ)
        for name, starts in owned.items():
            roll = self.rolling and self.rollable[name]
            eps_b = TConst(self.eps_b[name])
            for a in range(len(starts)):
                for b in range(a + 1, len(starts)):
                    i, j = starts[a], starts[b]
                    guard = FAnd((_h_pos(i), _h_pos(j)))
                    if roll:
                        block = TMul((TAdd((i.d(), eps_b)), i.h()))
                        self.put(
                            FImp(guard, FCmp(">=", j.t(), TAdd((i.t(), block))))
                        )
                    else:
                        self.put(
                            FImp(
                                guard,
                                FCmp(">=", j.t(), TAdd((i.t(), i.d(), eps_b))),
                            )
                        )

    # -- final state and goals

    def _final(self):
        final_names = {}
        for var in self.task.variables:
            sym = "fin_%s" % _san(var.name)
            final_names[var.name] = sym
            if var.kind == "bool":
                self.declare(sym, "Bool")
                self.put(FIff(FVar(sym), self.bool_sigma[var.name]))
            else:
                self.declare(sym, "Real")
                self.put(
                    FCmp("=", TVar(sym, "Real"), self.num_sigma[var.name])
                )
        goals = []
        fb = {v: FVar(final_names[v]) for v in final_names}
        fn = {v: TVar(final_names[v], "Real") for v in final_names}
        for idx, cond in enumerate(self.task.goal):
            if isinstance(cond, BoolCond):
                f = fb[cond.var] if cond.value else FNot(fb[cond.var])
            else:
                term = self.lin(cond.expr, fn)
                f = FCmp(
                    ">" if cond.strict else ">=", term, TConst(Fraction(0))
                )
            goals.append(("goal%d" % idx, emit_formula(f)))
        return goals, final_names


def _sorted_conds(conds):
    return sorted(conds, key=lambda c: (c.__class__.__name__, repr(c)))


def _sorted_effs(effs):
    return sorted(effs, key=lambda e: (e.var, repr(e)))


def _rel_term(rt, lo_term, hi_term):
    off = TConst(Fraction(rt.offset))
    if rt.anchor in (START, ALPHA):
        if rt.offset == 0:
            return lo_term
        return TAdd((lo_term, off))
    if rt.offset == 0:
        return hi_term
    return TAdd((hi_term, TConst(Fraction(-rt.offset))))


def _mutex_happenings(hi: Happening, hj: Happening) -> bool:
    if hi.is_ic and hj.is_ic:
        return False
    if hi.is_ic:
        return _mutex_ic_ie(hi, hj)
    if hj.is_ic:
        return _mutex_ic_ie(hj, hi)
    return mutex_effsets(hi.effs, hj.effs)


def _mutex_ic_ie(ic: Happening, ie: Happening) -> bool:
    return bool(assigned_vars(ie.effs) & cond_vars(ic.conds))


def encode(
    task: PlanningTask,
    snap: SnapTask,
    pattern,
    rolling: bool = True,
) -> Encoding:
    return _Builder(task, snap, pattern, rolling).build()


def smt_script(enc: Encoding, include_goals: bool = False):
    """Declarations plus hard assertions; goal formulas are appended as plain
    assertions only on request."""
    lines = ["(set-logic %s)" % enc.logic]
    for name, sort in enc.decls:
        lines.append("(declare-fun %s () %s)" % (name, sort))
    lines.extend(enc.assertions)
    if include_goals:
        for _, formula in enc.goals:
            lines.append("(assert %s)" % formula)
    return lines
