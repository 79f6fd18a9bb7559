"""Deterministic benchmark task generators.

Every generator assembles actions first and derives the variable set from
whatever the conditions, effects, init and goal mention, with booleans
defaulting to false and numerics to zero.
"""
from __future__ import annotations

from fractions import Fraction

from .model import (
    ALPHA,
    BoolCond,
    BoolEff,
    END,
    LinearExpr,
    ModelError,
    NumCond,
    NumEff,
    PlanningTask,
    START,
    State,
    TimedPlan,
    Variable,
    make_action,
    make_snap_action,
    make_task,
    plan_entry,
    rat,
    rel,
)


def _bc(var, value=True):
    return BoolCond(var, value)


def _be(var, value=True):
    return BoolEff(var, value)


def _inc(var, amount):
    return NumEff(var, LinearExpr.constant(amount), increment=True)


def _set(var, amount):
    return NumEff(var, LinearExpr.constant(amount), increment=False)


def _ge(expr, bound=0):
    return NumCond(expr.shifted(-bound), False)


def _eq0(expr):
    return [NumCond(expr, False), NumCond(expr.scaled(-1), False)]


def _collect_variables(actions, init, goal, plan_ics, plan_ies):
    kinds = {}

    def put(name, kind):
        old = kinds.get(name)
        if old is not None and old != kind:
            raise ModelError("variable %s used as both %s and %s" % (name, old, kind))
        kinds[name] = kind

    def walk_conds(conds):
        for c in conds:
            if isinstance(c, BoolCond):
                put(c.var, "bool")
            else:
                for v in c.expr.vars():
                    put(v, "num")

    def walk_effs(effs):
        for e in effs:
            if isinstance(e, BoolEff):
                put(e.var, "bool")
            else:
                put(e.var, "num")
                for v in e.expr.vars():
                    put(v, "num")

    for a in actions:
        for c in a.ics:
            walk_conds(c.conds)
        for e in a.ies:
            walk_effs(e.effs)
    walk_conds(goal)
    for _, _, conds in plan_ics:
        walk_conds(conds)
    for _, effs in plan_ies:
        walk_effs(effs)
    for name, value in init.items():
        put(name, "bool" if isinstance(value, bool) else "num")
    return kinds


def _assemble(actions, init, goal, plan_ics=(), plan_ies=(), epsilon="0.001"):
    plan_ics = tuple(plan_ics)
    plan_ies = tuple(plan_ies)
    kinds = _collect_variables(actions, init, goal, plan_ics, plan_ies)
    variables = [Variable(n, kinds[n]) for n in sorted(kinds)]
    values = {
        n: False if kinds[n] == "bool" else Fraction(0) for n in kinds
    }
    for name, value in init.items():
        values[name] = value if isinstance(value, bool) else rat(value)
    return make_task(
        variables, actions, State(values), goal, plan_ics, plan_ies, epsilon
    )


# ---------------------------------------------------------------------------
# the station

_SIDES = {
    "A": {
        "entry": "03",
        "exit": "02",
        "platforms": {
            "I": ("104", "105", "106"),
            "II": ("114", "115", "116"),
            "III": ("124", "123"),
        },
        "signals": {"I": "21", "II": "22", "III": "23"},
        "entry_routes": {
            "03-21": (("109", "108", "107", "104", "105", "106"), 30),
            "03-22": (("109", "108", "118", "114", "115", "116"), 30),
            "03-23": (("109", "108", "118", "119", "124", "123"), 30),
        },
        "exit_routes": {
            "21-02": (("103", "102", "101"), 15),
            "22-02": (("113", "117", "103", "102", "101"), 25),
            "23-02": (("133", "103", "102", "101"), 20),
        },
        "exit_of": {"I": "21-02", "II": "22-02", "III": "23-02"},
        "stop_dur": {"I": 10, "II": 35, "III": 35},
    },
    "B": {
        "entry": "05",
        "exit": "04",
        "platforms": {
            "IV": ("204", "205", "206"),
            "V": ("214", "215", "216"),
            "VI": ("224", "223"),
        },
        "signals": {"IV": "41", "V": "42", "VI": "43"},
        "entry_routes": {
            "05-41": (("209", "208", "207", "204", "205", "206"), 30),
            "05-42": (("209", "208", "218", "214", "215", "216"), 30),
            "05-43": (("209", "208", "218", "219", "224", "223"), 30),
        },
        "exit_routes": {
            "41-04": (("203", "202", "201"), 15),
            "42-04": (("213", "217", "203", "202", "201"), 25),
            "43-04": (("233", "203", "202", "201"), 20),
        },
        "exit_of": {"IV": "41-04", "V": "42-04", "VI": "43-04"},
        "stop_dur": {"IV": 10, "V": 35, "VI": 35},
    },
}


def _move_action(train, rname, tcs, dur):
    src, dst = rname.split("-")
    s = rel(START)
    conds = [_bc("inFront_%s_%s" % (train, src)), _bc("green_%s_%s" % (train, src))]
    conds += [_bc("occ_%s" % c, False) for c in tcs]
    start_effs = [
        _be("green_%s_%s" % (train, src), False),
        _be("inFront_%s_%s" % (train, src), False),
        _be("moved_%s_%s" % (train, rname)),
    ]
    start_effs += [_be("occ_%s" % c) for c in tcs]
    ies = [(s, start_effs)]
    for i, c in enumerate(tcs[:-1], 1):
        ies.append((rel(START, 5 * i), [_be("occ_%s" % c, False)]))
    ies.append((rel(END), [_be("inFront_%s_%s" % (train, dst))]))
    return make_action("move_%s_%s" % (train, rname), dur, dur, [(s, s, conds)], ies)


def _stop_action(train, sig, platform, dur):
    s = rel(START)
    conds = [
        _bc("inFront_%s_%s" % (train, sig)),
        _bc("stopped_%s" % train, False),
        _bc("stopping_%s_%s" % (train, platform), False),
    ]
    ies = [
        (s, [_be("stopping_%s_%s" % (train, platform))]),
        (
            rel(END),
            [
                _be("stopped_%s" % train),
                _be("stopping_%s_%s" % (train, platform), False),
                _be("stoppedAt_%s_%s" % (train, platform)),
            ],
        ),
    ]
    return make_action(
        "stop_%s_%s_%s" % (train, sig, platform), dur, dur, [(s, s, conds)], ies
    )


def _depart_action(train, platform, route, sig, platform_tcs, epsilon):
    s = rel(START)
    probe = rel(START, 2 * epsilon)
    ics = [
        (
            s,
            s,
            [
                _bc("inFront_%s_%s" % (train, sig)),
                _bc("stoppedAt_%s_%s" % (train, platform)),
                _bc("timetable_%s" % train),
            ],
        ),
        (probe, probe, [_bc("moved_%s_%s" % (train, route))]),
    ]
    ies = [
        (s, [_be("green_%s_%s" % (train, sig))]),
        (rel(END), [_be("occ_%s" % c, False) for c in platform_tcs]),
    ]
    return make_action(
        "depart_%s_%s_%s" % (train, platform, route), 10, 10, ics, ies
    )


def _exit_action(train, route, exit_point, last_tc, order_var):
    counter = "exitCounter_%s" % exit_point
    diff = LinearExpr.var(counter).minus(LinearExpr.var(order_var))
    pre = [_bc("inFront_%s_%s" % (train, exit_point))] + _eq0(diff)
    effs = [
        _be("left_%s_%s" % (train, exit_point)),
        _be("inFront_%s_%s" % (train, exit_point), False),
        _inc(counter, 1),
        _be("occ_%s" % last_tc, False),
    ]
    return make_snap_action("exit_%s_%s" % (train, route), pre, effs)


def _full_train(side, train, epsilon):
    actions = []
    for rname, (tcs, dur) in side["entry_routes"].items():
        actions.append(_move_action(train, rname, tcs, dur))
    for platform, sig in side["signals"].items():
        actions.append(_stop_action(train, sig, platform, side["stop_dur"][platform]))
        route = side["exit_of"][platform]
        actions.append(
            _depart_action(
                train, platform, route, sig, side["platforms"][platform], epsilon
            )
        )
    for rname, (tcs, dur) in side["exit_routes"].items():
        actions.append(_move_action(train, rname, tcs, dur))
        actions.append(
            _exit_action(train, rname, side["exit"], tcs[-1], "order_%s" % train)
        )
    return actions


def instradi(size: int, epsilon="0.001") -> PlanningTask:
    """A terminal with incoming and outgoing trains on a fixed timetable."""
    if size not in (2, 3):
        raise ModelError("station instance supports sizes 2 and 3")
    eps = rat(epsilon)
    side_a = _SIDES["A"]

    actions = _full_train(side_a, "blue", eps)
    # the second train starts parked at platform II and only leaves
    red_route = "22-02"
    actions.append(
        _depart_action("red", "II", red_route, "22", side_a["platforms"]["II"], eps)
    )
    rtcs, rdur = side_a["exit_routes"][red_route]
    actions.append(_move_action("red", red_route, rtcs, rdur))
    actions.append(_exit_action("red", red_route, "02", rtcs[-1], "order_red"))

    init = {
        "stoppedAt_red_II": True,
        "stopped_red": True,
        "inFront_red_22": True,
        "occ_114": True,
        "occ_115": True,
        "occ_116": True,
        "exitCounter_02": 0,
        "order_red": 0,
        "order_blue": 1,
    }
    goal = [
        _bc("stopped_red"),
        _bc("stopped_blue"),
        _bc("left_red_02"),
        _bc("left_blue_02"),
    ]
    plan_ics = [(rel(ALPHA, 30), rel(ALPHA, 50), [_bc("occ_102", False)])]
    plan_ies = [
        (rel(ALPHA, 5), [_be("inFront_blue_03"), _be("green_blue_03")]),
        (rel(ALPHA, 30), [_be("timetable_red")]),
        (rel(ALPHA, 100), [_be("timetable_blue")]),
    ]

    if size == 3:
        side_b = _SIDES["B"]
        actions += _full_train(side_b, "green", eps)
        init["exitCounter_04"] = 0
        init["order_green"] = 0
        goal += [_bc("stopped_green"), _bc("left_green_04")]
        plan_ies.append(
            (rel(ALPHA, 5), [_be("inFront_green_05"), _be("green_green_05")])
        )
        plan_ies.append((rel(ALPHA, 30), [_be("timetable_green")]))

    return _assemble(actions, init, goal, plan_ics, plan_ies, eps)


def eq7_plan() -> TimedPlan:
    """The reference plan for the size-2 station instance."""
    return TimedPlan.of(
        [
            plan_entry("5.001", "move_blue_03-21", 30),
            plan_entry("35.002", "stop_blue_21_I", 10),
            plan_entry("50.001", "depart_red_II_22-02", 10),
            plan_entry("50.002", "move_red_22-02", 25),
            plan_entry("75.003", "exit_red_22-02", 0),
            plan_entry("100.001", "depart_blue_I_21-02", 10),
            plan_entry("100.002", "move_blue_21-02", 15),
            plan_entry("115.003", "exit_blue_23-02", 0),
        ]
    )


# ---------------------------------------------------------------------------
# small numeric benchmarks

def shake(n: int, litres=3) -> PlanningTask:
    """Bottles must be capped to shake and end up empty and open."""
    actions = []
    init = {}
    goal = []
    s, e = rel(START), rel(END)
    for i in range(1, n + 1):
        capped, amount = "capped_%d" % i, "litres_%d" % i
        actions.append(
            make_action(
                "cap_%d" % i, 5, 5, ies=[(s, [_be(capped)]), (e, [_be(capped, False)])]
            )
        )
        actions.append(
            make_action(
                "shake_%d" % i,
                4,
                4,
                ics=[(s, s, [_bc(capped)]), (e, e, [_bc(capped, False)])],
                ies=[(e, [_set(amount, 0)])],
            )
        )
        init[amount] = rat(litres)
        goal += _eq0(LinearExpr.var(amount))
    return _assemble(actions, init, goal)


def pour(p: int, q: int, litres: int) -> PlanningTask:
    """Repeatedly pour single litres from source bottles into open targets."""
    actions = []
    init = {}
    s, e = rel(START), rel(END)
    for j in range(1, q + 1):
        uncapped = "uncapped_%d" % j
        actions.append(
            make_action(
                "uncap_%d" % j,
                5,
                5,
                ies=[(s, [_be(uncapped)]), (e, [_be(uncapped, False)])],
            )
        )
    for i in range(1, p + 1):
        source = "litres_%d" % i
        init[source] = rat(litres)
        for j in range(1, q + 1):
            actions.append(
                make_action(
                    "pour_%d_%d" % (i, j),
                    1,
                    1,
                    ics=[
                        (
                            s,
                            s,
                            [
                                _bc("uncapped_%d" % j),
                                _ge(LinearExpr.var(source), 1),
                            ],
                        )
                    ],
                    ies=[(e, [_inc(source, -1), _inc("level_%d" % j, 1)])],
                )
            )
    total = LinearExpr.build(
        {"level_%d" % j: Fraction(1) for j in range(1, q + 1)},
        -Fraction(p * litres),
    )
    goal = _eq0(total)
    return _assemble(actions, init, goal)


def match(k: int) -> PlanningTask:
    """Mending fuses in the dark under burning matches."""
    actions = []
    goal = []
    s, e = rel(START), rel(END)
    for m in range(1, k + 1):
        unused = "unused_%d" % m
        actions.append(
            make_action(
                "light_%d" % m,
                70,
                70,
                ics=[(s, s, [_bc(unused)])],
                ies=[(s, [_be(unused, False), _be("lit")]), (e, [_be("lit", False)])],
            )
        )
    init = {"unused_%d" % m: True for m in range(1, k + 1)}
    for f in range(1, k + 1):
        mended = "mended_%d" % f
        actions.append(
            make_action(
                "mend_%d" % f,
                10,
                10,
                ics=[(s, e, [_bc("lit")])],
                ies=[(e, [_be(mended)])],
            )
        )
        goal.append(_bc(mended))
    return _assemble(actions, init, goal)


def pack(n: int) -> PlanningTask:
    """Insert items two at a time, close a box per pair."""
    s, e = rel(START), rel(END)
    insert = make_action("insert", 2, 2, ies=[(e, [_inc("count", 1)])])
    close_box = make_snap_action(
        "close_box",
        pre=_eq0(LinearExpr.var("count").shifted(-2)),
        effs=[_inc("boxes", 1), _set("count", 0)],
    )
    goal = [_ge(LinearExpr.var("boxes"), n)]
    return _assemble([insert, close_box], {}, goal)


def painter(c: int) -> PlanningTask:
    """Apply coats that each need a dry surface, with drying of free length."""
    actions = []
    s, e = rel(START), rel(END)
    for i in range(1, c + 1):
        conds = [_bc("wet", False)]
        if i > 1:
            conds.append(_bc("coat_%d" % (i - 1)))
        actions.append(
            make_action(
                "paint_%d" % i,
                5,
                5,
                ics=[(s, s, conds)],
                ies=[(e, [_be("coat_%d" % i), _be("wet")])],
            )
        )
    actions.append(
        make_action(
            "dry", 10, 50, ics=[(s, s, [_bc("wet")])], ies=[(e, [_be("wet", False)])]
        )
    )
    return _assemble(actions, {}, [_bc("coat_%d" % c)])


def oversub_lite(k: int) -> PlanningTask:
    """Independent counters, one goal each; handy for partial goal credit."""
    actions = [
        make_snap_action("bump_%d" % i, effs=[_inc("x_%d" % i, 1)])
        for i in range(1, k + 1)
    ]
    goal = [_ge(LinearExpr.var("x_%d" % i), 1) for i in range(1, k + 1)]
    return _assemble(actions, {}, goal)


GENERATORS = {
    "instradi": (instradi, 1),
    "shake": (shake, 1),
    "pour": (pour, 3),
    "match": (match, 1),
    "pack": (pack, 1),
    "painter": (painter, 1),
    "oversub-lite": (oversub_lite, 1),
}


def generate_instance(kind: str, args, seed: int = 0) -> PlanningTask:
    """Build a named benchmark instance. The seed is accepted for interface
    stability; generation is fully deterministic."""
    del seed
    if kind not in GENERATORS:
        raise ModelError(
            "unknown instance kind %r (choose from %s)"
            % (kind, ", ".join(sorted(GENERATORS)))
        )
    fn, arity = GENERATORS[kind]
    args = [int(a) for a in args]
    if len(args) != arity:
        raise ModelError("%s takes %d size argument(s)" % (kind, arity))
    return fn(*args)
