"""The acceptance suite: one test per numbered criterion.

Run with -v to get one pass or fail line per criterion. Each test also
prints an explicit verdict line on its own behalf.
"""
import random
import time
from fractions import Fraction

from micro import random_micro_task, sigma_check

from tempus import domains
from tempus.arpg import compute_arpg, dump_cells, interval_eval
from tempus.encoding import encode, smt_script
from tempus.model import (
    ALPHA,
    BoolCond,
    BoolEff,
    END,
    LinearExpr,
    NumCond,
    NumEff,
    START,
    State,
    TimedPlan,
    Variable,
    apply_effects,
    make_action,
    make_snap_action,
    make_task,
    plan_entry,
    rel,
)
from tempus.planner import extract_plan, solve_task
from tempus.smtlib import SolverCrash, _verdict_of, max_solve, shared_process
from tempus.snap import build_snap, plan_happenings, roll_expr
from tempus.validator import validate_plan


def _report(num, ok):
    print("criterion %d: %s" % (num, "PASS" if ok else "FAIL"))


def _inc(var, k):
    return NumEff(var, LinearExpr.constant(k), increment=True)


def _ge(var, bound):
    return NumCond(LinearExpr.var(var).shifted(-bound), False)


def _le(var, bound):
    return NumCond(LinearExpr.var(var).scaled(-1).shifted(bound), False)


# ---------------------------------------------------------------------------
# criterion 1: the worked plan and five broken variants

def _mutated(plan, moves=(), drop=(), extra=()):
    moves = dict(moves)
    entries = []
    for e in plan.entries:
        if e.action in drop:
            continue
        if e.action in moves:
            entries.append(plan_entry(moves[e.action], e.action, e.d))
        else:
            entries.append(e)
    entries.extend(extra)
    return TimedPlan.of(entries)


def test_criterion_1_reference_plan_and_perturbations():
    ok = False
    try:
        started = time.monotonic()
        task = domains.instradi(2)
        plan = domains.eq7_plan()

        res = validate_plan(task, plan)
        assert res.valid, [v.message for v in res.violations]
        by_name = {e.action: e for e in plan.entries}
        # plan times are exact rationals, no floating point anywhere
        assert by_name["move_blue_03-21"].t == Fraction(5001, 1000)
        assert by_name["exit_red_22-02"].t == Fraction(75003, 1000)
        assert by_name["depart_blue_I_21-02"].d == Fraction(10)

        # early departure runs the red train through the protected window
        p1 = _mutated(
            plan,
            moves={
                "depart_red_II_22-02": Fraction(31),
                "move_red_22-02": Fraction(31001, 1000),
            },
        )
        r1 = validate_plan(task, p1)
        assert not r1.valid
        assert r1.kinds() == {"intermediate-condition"}
        # the train reaches the protected circuit 15 units into its move
        assert any(
            v.uid == ":c0" and v.time == Fraction(46001, 1000)
            for v in r1.violations
        )

        # two interfering instant effects closer than the separation gap
        p2 = _mutated(plan, moves={"move_blue_03-21": Fraction(10001, 2000)})
        r2 = validate_plan(task, p2)
        assert not r2.valid
        assert r2.kinds() == {"epsilon-separation"}

        # the same action overlapping its own execution
        p3 = _mutated(
            plan, extra=[plan_entry(Fraction(105), "depart_blue_I_21-02", 10)]
        )
        r3 = validate_plan(task, p3)
        assert not r3.valid
        assert "self-overlap" in r3.kinds()

        # dropping the final exit leaves a goal unmet
        p4 = _mutated(plan, drop={"exit_blue_23-02"})
        r4 = validate_plan(task, p4)
        assert not r4.valid
        assert r4.kinds() == {"goal"}

        # exits taken in the wrong order break the exit bookkeeping
        p5 = _mutated(
            plan,
            moves={
                "exit_red_22-02": Fraction(115003, 1000),
                "exit_blue_23-02": Fraction(75003, 1000),
            },
        )
        r5 = validate_plan(task, p5)
        assert not r5.valid
        assert r5.kinds() == {"intermediate-condition"}

        assert time.monotonic() - started < 1.0
        ok = True
    finally:
        _report(1, ok)


# ---------------------------------------------------------------------------
# criterion 2: bound reproduction on the benchmark families

def test_criterion_2_bound_reproduction():
    ok = False
    try:
        cases = [
            ("instradi", (2,), 1),
            ("instradi", (3,), 1),
            ("shake", (1,), 2),
            ("shake", (2,), 2),
            ("shake", (3,), 2),
            ("pour", (1, 1, 3), 2),
            ("pour", (1, 1, 5), 2),
            ("pour", (1, 2, 3), 2),
            ("match", (1,), 4),
            ("match", (2,), 4),
            ("match", (3,), 4),
            ("match", (4,), 4),
        ]
        for kind, args, cap in cases:
            task = getattr(domains, kind)(*args)
            started = time.monotonic()
            res = solve_task(task, rolling=True, max_rounds=10)
            elapsed = time.monotonic() - started
            label = "%s%r" % (kind, args)
            assert res.solved, label
            assert res.bound <= cap, (label, res.bound)
            check = validate_plan(task, res.plan)
            assert check.valid, (label, [v.message for v in check.violations])
            assert elapsed < 300, (label, elapsed)
        ok = True
    finally:
        _report(2, ok)


# ---------------------------------------------------------------------------
# criterion 3: every model extracts to a plan the validator accepts

def test_criterion_3_models_extract_to_valid_plans():
    ok = False
    try:
        rng = random.Random(20250822)
        tasks = models = 0
        while models < 100 and tasks < 400:
            task = random_micro_task(rng)
            tasks += 1
            snap = build_snap(task)
            pattern = compute_arpg(snap).pattern
            enc = encode(task, snap, pattern, rolling=True)
            res = max_solve(enc)
            if res.status != "sat":
                continue
            models += 1
            plan = extract_plan(enc, res.model, task)
            check = validate_plan(task, plan)
            if res.achieved == len(task.goal):
                assert check.valid, (
                    tasks,
                    [v.message for v in check.violations],
                )
            else:
                # the model may miss goals, but never structural validity
                assert set(check.kinds()) <= {"goal"}, (
                    tasks,
                    [v.message for v in check.violations],
                )
        assert tasks >= 100
        assert models >= 100, (models, tasks)
        ok = True
    finally:
        _report(3, ok)


# ---------------------------------------------------------------------------
# criterion 4: agreement with an exhaustive oracle on tiny tasks

def _count_vectors(sizes, budget):
    if not sizes:
        yield ()
        return
    first, rest = sizes[0], sizes[1:]
    for k in range(budget // first + 1):
        for tail in _count_vectors(rest, budget - k * first):
            yield (k,) + tail


def _interleavings(chains):
    chains = [c for c in chains if c]
    if not chains:
        yield ()
        return
    seen = set()
    for i, ch in enumerate(chains):
        key = tuple(h.uid for h in ch)
        if key in seen:
            continue
        seen.add(key)
        rest = chains[:i] + [ch[1:]] + chains[i + 1 :]
        for tail in _interleavings(rest):
            yield (ch[0],) + tail


def _solver_verdict(script):
    last = None
    for _ in range(3):
        try:
            return _verdict_of(shared_process().request(script))
        except SolverCrash as exc:
            last = exc
    raise last


def _sequence_feasible(task, snap, seq):
    enc = encode(task, snap, tuple(seq), rolling=False)
    script = ["(reset)"] + smt_script(enc, include_goals=True)
    for occ in enc.occurrences:
        script.append("(assert (>= %s 1))" % occ.hvar)
    script.append("(check-sat)")
    return _solver_verdict(script) == "sat"


def _oracle_solvable(task, max_len=6):
    """Ground truth by brute force: try every way of interleaving up to
    max_len happenings drawn from whole action applications plus the
    mandatory plan items, asking the solver to schedule each candidate."""
    snap = build_snap(task)
    flats = [tuple(snap.seqs[n].flat()) for n in sorted(snap.seqs)]
    units = [(h,) for h in plan_happenings(task)]
    budget = max_len - len(units)
    assert budget >= 0, "task too large for the oracle"
    for vec in _count_vectors([len(f) for f in flats], budget):
        chains = list(units)
        for flat, k in zip(flats, vec):
            chains.extend([flat] * k)
        for seq in _interleavings(chains):
            if _sequence_feasible(task, snap, seq):
                return True
    return False


def _c4_suite():
    s, e = rel(START), rel(END)
    suite = []

    def add(name, solvable, prune, actions, init, goal, plan_ics=(), plan_ies=()):
        names = {}
        for a in actions:
            for ic in a.ics:
                for c in ic.conds:
                    _collect_kind(names, c)
            for ie in a.ies:
                for eff in ie.effs:
                    _collect_eff_kind(names, eff)
        for c in goal:
            _collect_kind(names, c)
        for _, _, conds in plan_ics:
            for c in conds:
                _collect_kind(names, c)
        for _, effs in plan_ies:
            for eff in effs:
                _collect_eff_kind(names, eff)
        for var, val in init.items():
            names[var] = "bool" if isinstance(val, bool) else "num"
        variables = [Variable(n, k) for n, k in sorted(names.items())]
        values = {
            n: (init.get(n, False) if k == "bool" else Fraction(init.get(n, 0)))
            for n, k in names.items()
        }
        task = make_task(
            variables, actions, State(values), goal, plan_ics, plan_ies
        )
        suite.append((name, task, solvable, prune))

    on = make_action("on", 2, 2, ies=[(e, [BoolEff("p", True)])])
    bump = make_snap_action("bump", effs=[_inc("x", 1)])
    bump2 = make_snap_action("bump2", effs=[_inc("x", 2)])

    add("switch", True, False, [on], {}, [BoolCond("p", True)])
    add("already-done", True, False, [on], {}, [BoolCond("p", False)])
    add(
        "chain",
        True,
        False,
        [
            on,
            make_action(
                "use",
                2,
                2,
                ics=[(s, s, [BoolCond("p", True)])],
                ies=[(e, [BoolEff("q", True)])],
            ),
        ],
        {},
        [BoolCond("q", True)],
    )
    add("count-two", True, False, [bump], {}, [_ge("x", 2)])
    add("count-three", True, False, [bump], {}, [_ge("x", 3)])
    add("no-setter", False, True, [bump], {}, [BoolCond("p", True)])
    add("wrong-direction", False, True, [bump], {}, [_le("x", -1)])
    add(
        "circular",
        False,
        True,
        [
            make_snap_action("setq", pre=[BoolCond("r", True)], effs=[BoolEff("q", True)]),
            make_snap_action("setr", pre=[BoolCond("q", True)], effs=[BoolEff("r", True)]),
        ],
        {},
        [BoolCond("q", True)],
    )
    add(
        "gated",
        False,
        True,
        [make_snap_action("gbump", pre=[_ge("y", 1)], effs=[_inc("x", 1)])],
        {},
        [_ge("x", 1)],
    )
    add(
        "conflict",
        False,
        False,
        [
            make_snap_action("seta", effs=[BoolEff("p", True), BoolEff("q", False)]),
            make_snap_action("setb", effs=[BoolEff("q", True), BoolEff("p", False)]),
        ],
        {},
        [BoolCond("p", True), BoolCond("q", True)],
    )
    add(
        "deadline",
        False,
        False,
        [on],
        {},
        [BoolCond("p", True)],
        plan_ics=[(rel(ALPHA, 1), rel(ALPHA, 2), [BoolCond("p", True)])],
    )
    add(
        "handout",
        True,
        False,
        [bump],
        {},
        [BoolCond("p", True)],
        plan_ies=[(rel(ALPHA, 1), [BoolEff("p", True)])],
    )
    add("stride", True, False, [bump2], {}, [_ge("x", 4)])
    add("parity", False, False, [bump2], {}, [_ge("x", 3), _le("x", 3)])
    add("half-dead", False, True, [bump], {}, [_ge("x", 1), BoolCond("p", True)])
    add(
        "clear-mark",
        True,
        False,
        [
            make_snap_action("mk", effs=[BoolEff("p", True)]),
            make_snap_action(
                "sweep",
                pre=[BoolCond("p", True)],
                effs=[BoolEff("p", False), BoolEff("q", True)],
            ),
        ],
        {},
        [BoolCond("p", False), BoolCond("q", True)],
    )
    add("exactly-two", True, False, [bump], {}, [_ge("x", 2), _le("x", 2)])
    add(
        "mid-check",
        True,
        False,
        [
            make_action(
                "onc",
                2,
                2,
                ics=[(rel(START, 1), rel(START, 1), [_ge("y", 0)])],
                ies=[(e, [BoolEff("p", True)])],
            )
        ],
        {},
        [BoolCond("p", True)],
    )
    add(
        "chain-three",
        True,
        False,
        [
            make_snap_action("s1", effs=[BoolEff("a", True)]),
            make_snap_action("s2", pre=[BoolCond("a", True)], effs=[BoolEff("b", True)]),
            make_snap_action("s3", pre=[BoolCond("b", True)], effs=[BoolEff("c", True)]),
        ],
        {},
        [BoolCond("c", True)],
    )
    add(
        "window-pass",
        True,
        False,
        [on],
        {},
        [BoolCond("p", True)],
        plan_ics=[(rel(ALPHA, 1), rel(ALPHA, 2), [BoolCond("q", False)])],
    )
    return suite


def _collect_kind(names, cond):
    if isinstance(cond, BoolCond):
        names[cond.var] = "bool"
    else:
        for v in cond.expr.vars():
            names[v] = "num"


def _collect_eff_kind(names, eff):
    if isinstance(eff, BoolEff):
        names[eff.var] = "bool"
    else:
        names[eff.var] = "num"
        for v in eff.expr.vars():
            names[v] = "num"


def test_criterion_4_completeness_against_oracle():
    ok = False
    try:
        suite = _c4_suite()
        assert len(suite) == 20
        for name, task, solvable, prune in suite:
            assert _oracle_solvable(task) is solvable, name
            res = solve_task(task, rolling=True, max_rounds=10)
            if solvable:
                assert res.solved, name
                check = validate_plan(task, res.plan)
                assert check.valid, (name, [v.message for v in check.violations])
            else:
                assert not res.solved, name
                if prune:
                    assert res.proven_unsolvable, name
                else:
                    assert not res.proven_unsolvable, name
        ok = True
    finally:
        _report(4, ok)


# ---------------------------------------------------------------------------
# criterion 5: repetition algebra against direct simulation

def test_criterion_5_rolling_matches_simulation():
    ok = False
    try:
        task = domains.pour(1, 1, 5)
        action = task.action("pour_1_1")
        level = LinearExpr.var("level_1")
        litres = LinearExpr.var("litres_1")
        psis = [
            level,
            litres,
            level.minus(litres),
            level.plus(litres.scaled(2)).shifted(-3),
        ]
        # state after k whole applications, k = 0..5
        states = [task.init]
        for _ in range(5):
            state = states[-1]
            for ie in action.ies:
                state = apply_effects(state, ie.effs)
            states.append(state)
        for r in range(1, 6):
            for psi in psis:
                # the r-th repetition reads the state left by the r-1 before it
                rolled = roll_expr(psi, r, action)
                assert rolled.evaluate(task.init) == psi.evaluate(states[r - 1]), (r, psi)

        rolled_res = solve_task(task, rolling=True, max_rounds=10)
        plain_res = solve_task(task, rolling=False, max_rounds=10)
        for res in (rolled_res, plain_res):
            assert res.solved
            check = validate_plan(task, res.plan)
            assert check.valid, [v.message for v in check.violations]
        assert rolled_res.bound <= plain_res.bound
        ok = True
    finally:
        _report(5, ok)


# ---------------------------------------------------------------------------
# criterion 6: interval arithmetic is sound and matches the stated rules

def test_criterion_6_interval_soundness():
    ok = False
    try:
        rng = random.Random(6021023)
        names = ("x", "y", "z")
        fractions_of = (Fraction(0), Fraction(1), Fraction(1, 2), Fraction(1, 3))
        for _ in range(10000):
            coeffs = {
                v: Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for v in names
            }
            expr = LinearExpr.build(coeffs, Fraction(rng.randint(-9, 9), 2))
            box = {}
            point = {}
            for v in names:
                lo = Fraction(rng.randint(-20, 20), rng.randint(1, 3))
                hi = lo + Fraction(rng.randint(0, 12))
                box[v] = (lo, hi)
                point[v] = lo + (hi - lo) * rng.choice(fractions_of)
            low, high = interval_eval(expr, box)
            value = expr.evaluate(State(point))
            assert low <= value <= high

        X = (Fraction(-2), Fraction(3))
        Y = (Fraction(1), Fraction(5))
        box = {"x": X, "y": Y, "z": (Fraction(0), Fraction(0))}
        x, y = LinearExpr.var("x"), LinearExpr.var("y")
        assert interval_eval(x.plus(y), box) == (X[0] + Y[0], X[1] + Y[1])
        assert interval_eval(x.minus(y), box) == (X[0] - Y[1], X[1] - Y[0])
        assert interval_eval(x.scaled(3), box) == (3 * X[0], 3 * X[1])
        assert interval_eval(x.scaled(-2), box) == (-2 * X[1], -2 * X[0])
        assert interval_eval(x.shifted(7), box) == (X[0] + 7, X[1] + 7)
        ok = True
    finally:
        _report(6, ok)


# ---------------------------------------------------------------------------
# criterion 7: reachability layers on the worked example

def test_criterion_7_reachability_layers():
    ok = False
    try:
        started = time.monotonic()
        res = compute_arpg(build_snap(domains.instradi(2)))
        cells = dict(dump_cells(res))
        assert cells["5"] == ["E[A+5]"]
        assert cells["6"] == [
            "move_blue_03-21[S,S]",
            "move_blue_03-23[S,S]",
            "move_blue_03-21[S]",
            "move_blue_03-23[S]",
        ]
        assert cells["30"] == ["C[A+30,A+50]", "E[A+30]"]
        assert cells["31"] == [
            "depart_red_II_22-02[S,S]",
            "depart_red_II_22-02[S]",
        ]
        assert time.monotonic() - started < 10.0
        ok = True
    finally:
        _report(7, ok)


# ---------------------------------------------------------------------------
# criterion 8: symbolic state chains agree with direct replay

def test_criterion_8_state_chain_replay():
    ok = False
    try:
        rng = random.Random(8675309)
        compared = 0
        while compared < 1000:
            task = random_micro_task(rng)
            out = sigma_check(task, rng, rolling=rng.random() < 0.5)
            if out is None:
                continue
            sym, conc = out
            assert sym == conc, (compared, sym, conc)
            compared += 1
        ok = True
    finally:
        _report(8, ok)
