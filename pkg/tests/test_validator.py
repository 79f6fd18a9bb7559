"""Plan validation semantics on hand-built tasks.

The reference plan for the two-train terminal instance gets its own workout
in test_acceptance; here we cover each violation kind on small tasks where
the expected outcome can be worked out by hand.
"""
from fractions import Fraction

import pytest

from tempus.model import (
    ALPHA,
    BoolCond,
    BoolEff,
    END,
    LinearExpr,
    ModelError,
    NumCond,
    NumEff,
    START,
    State,
    TimedPlan,
    Variable,
    absolute_ices,
    make_action,
    make_snap_action,
    make_task,
    parallelize_effects,
    plan_entry,
    rat,
    rel,
)
from tempus.validator import final_state, validate_plan
from tempus import domains


def _plan(*entries):
    return TimedPlan.of([plan_entry(*e) for e in entries])


def switch_task(**kw):
    """One action that turns p on at its end."""
    a = make_action(
        "on",
        2,
        2,
        ics=[(rel(START), rel(START), [BoolCond("p", False)])],
        ies=[(rel(END), [BoolEff("p", True)])],
    )
    return make_task(
        [Variable("p", "bool")],
        [a],
        State({"p": False}),
        goal=[BoolCond("p", True)],
        **kw,
    )


def test_empty_plan_fails_goal_only():
    res = validate_plan(switch_task(), _plan())
    assert not res.valid
    assert res.kinds() == {"goal"}


def test_single_action_plan_is_valid():
    res = validate_plan(switch_task(), _plan((1, "on", 2)))
    assert res.valid
    assert res.kinds() == set()


def test_unknown_action_is_malformed():
    res = validate_plan(switch_task(), _plan((1, "off", 2)))
    assert res.kinds() == {"malformed"}


def test_nonpositive_start_is_malformed():
    res = validate_plan(switch_task(), _plan((0, "on", 2)))
    assert res.kinds() == {"malformed"}


def test_duration_outside_bounds_is_malformed():
    res = validate_plan(switch_task(), _plan((1, "on", 3)))
    assert res.kinds() == {"malformed"}


def test_final_state_raises_on_malformed():
    with pytest.raises(ModelError):
        final_state(switch_task(), _plan((1, "nope", 2)))


def test_final_state_of_valid_plan():
    s = final_state(switch_task(), _plan((1, "on", 2)))
    assert s.flag("p")


def test_condition_checked_in_state_before_effect_instant():
    # p becomes true strictly after time 3; a start condition on p at
    # exactly 3 still sees it false
    t = switch_task()
    a2 = make_action(
        "need_p",
        1,
        1,
        ics=[(rel(START), rel(START), [BoolCond("p", True)])],
        ies=[(rel(END), [BoolEff("p", True)])],
    )
    t2 = make_task(
        t.variables, list(t.actions) + [a2], t.init, t.goal
    )
    res = validate_plan(t2, _plan((1, "on", 2), (3, "need_p", 1)))
    assert "intermediate-condition" in res.kinds()
    ok = validate_plan(t2, _plan((1, "on", 2), ("3.5", "need_p", 1)))
    assert ok.valid


def test_violation_reports_uid_and_time():
    t = switch_task()
    a2 = make_action(
        "need_p",
        1,
        1,
        ics=[(rel(START), rel(START), [BoolCond("p", True)])],
        ies=[(rel(END), [BoolEff("p", True)])],
    )
    t2 = make_task(t.variables, list(t.actions) + [a2], t.init, t.goal)
    res = validate_plan(t2, _plan((1, "on", 2), (2, "need_p", 1)))
    bad = [v for v in res.violations if v.kind == "intermediate-condition"]
    assert bad and bad[0].uid == "need_p:c0"
    # the reported time is the left edge of the state segment the
    # condition fails in: p stays false on (0, 3]
    assert bad[0].time == 0


def test_self_overlap_detected():
    res = validate_plan(
        switch_task(), _plan((1, "on", 2), (2, "on", 2))
    )
    assert "self-overlap" in res.kinds()


def test_self_overlap_touching_allowed():
    t = switch_task()
    res = validate_plan(t, _plan((1, "on", 2), (3, "on", 2)))
    # second start sees p already true
    assert "self-overlap" not in res.kinds()


def test_zero_duration_same_instant_not_self_overlap():
    bump = make_snap_action("bump", effs=[NumEff("x", LinearExpr.constant(1), increment=True)])
    t = make_task([Variable("x", "num")], [bump], State({"x": 0}))
    res = validate_plan(t, _plan((1, "bump", 0), (1, "bump", 0)))
    assert "self-overlap" not in res.kinds()


def _two_writer_task():
    w1 = make_action("w1", 1, 1, ies=[(rel(START), [BoolEff("p", True)])])
    w2 = make_action("w2", 1, 1, ies=[(rel(START), [BoolEff("p", False)])])
    return make_task(
        [Variable("p", "bool")], [w1, w2], State({"p": False})
    )


def test_epsilon_separation_violated():
    t = _two_writer_task()
    res = validate_plan(t, _plan((1, "w1", 1), ("1.0005", "w2", 1)))
    assert res.kinds() == {"epsilon-separation"}


def test_epsilon_separation_boundary_is_fine():
    t = _two_writer_task()
    res = validate_plan(t, _plan((1, "w1", 1), ("1.001", "w2", 1)))
    assert res.valid


def test_epsilon_override_parameter():
    t = _two_writer_task()
    res = validate_plan(t, _plan((1, "w1", 1), ("1.0005", "w2", 1)), epsilon="0.0001")
    assert res.valid


def test_same_instant_distinct_writers_malformed():
    t = _two_writer_task()
    res = validate_plan(t, _plan((1, "w1", 1), (1, "w2", 1)))
    assert "malformed" in res.kinds()


def test_same_instant_identical_writers():
    # two actions writing the same value at the same instant: still a
    # collision under the separation rule, and with epsilon = 0 the
    # simultaneous distinct writers are flagged as malformed instead
    w1 = make_action("w1", 1, 1, ies=[(rel(START), [BoolEff("p", True)])])
    w3 = make_action("w3", 1, 1, ies=[(rel(START), [BoolEff("p", True)])])
    t = make_task([Variable("p", "bool")], [w1, w3], State({"p": False}))
    res = validate_plan(t, _plan((1, "w1", 1), (1, "w3", 1)))
    assert "epsilon-separation" in res.kinds()
    res0 = validate_plan(t, _plan((1, "w1", 1), (1, "w3", 1)), epsilon=0)
    assert res0.kinds() == {"malformed"}


def test_plan_ic_window_checked_against_all_crossed_states():
    # p must stay false over [2, 5]; an action sets it true at 3
    t = make_task(
        [Variable("p", "bool")],
        [make_action("set", 1, 1, ies=[(rel(START, 0), [BoolEff("p", True)])])],
        State({"p": False}),
        plan_ics=[(rel(ALPHA, 2), rel(ALPHA, 5), [BoolCond("p", False)])],
    )
    res = validate_plan(t, _plan((3, "set", 1)))
    assert "intermediate-condition" in res.kinds()
    v = [x for x in res.violations if x.kind == "intermediate-condition"][0]
    assert v.uid == ":c0"
    # keeping the window clear is fine even if p flips later
    ok = validate_plan(t, _plan((6, "set", 1)))
    assert ok.valid


def test_plan_ic_lower_boundary_state():
    # effect exactly at the window opening takes effect strictly after it,
    # so the state checked at the opening instant predates the effect
    t = make_task(
        [Variable("p", "bool")],
        [make_action("set", 1, 1, ies=[(rel(START), [BoolEff("p", True)])])],
        State({"p": False}),
        plan_ics=[(rel(ALPHA, 2), rel(ALPHA, 5), [BoolCond("p", True)])],
    )
    # p turns true only after t=4: window [2,5] crosses states where p
    # is still false
    res = validate_plan(t, _plan((4, "set", 1)))
    assert "intermediate-condition" in res.kinds()
    # p true from just after t=1 covers the whole window
    ok = validate_plan(t, _plan((1, "set", 1)))
    assert ok.valid


def test_plan_ie_applies_at_absolute_time():
    t = make_task(
        [Variable("p", "bool"), Variable("q", "bool")],
        [
            make_action(
                "use",
                1,
                1,
                ics=[(rel(START), rel(START), [BoolCond("p", True)])],
                ies=[(rel(END), [BoolEff("q", True)])],
            )
        ],
        State({"p": False, "q": False}),
        goal=[BoolCond("q", True)],
        plan_ies=[(rel(ALPHA, 3), [BoolEff("p", True)])],
    )
    assert validate_plan(t, _plan((4, "use", 1))).valid
    res = validate_plan(t, _plan((2, "use", 1)))
    assert "intermediate-condition" in res.kinds()


def test_omega_anchor_resolves_from_makespan():
    # plan effect 1 before the plan end; the condition sits at the end of
    # "use", so its outcome depends on where the full plan finishes
    t = make_task(
        [Variable("p", "bool"), Variable("q", "bool")],
        [
            make_action(
                "use",
                1,
                1,
                ics=[(rel(END), rel(END), [BoolCond("p", True)])],
                ies=[(rel(START), [BoolEff("q", True)])],
            ),
            make_action("wait", 5, 5, ies=[]),
        ],
        State({"p": False, "q": False}),
        plan_ies=[(rel("OMEGA", 1), [BoolEff("p", True)])],
    )
    # wait ends at 5.5, so the plan effect lands at 4.5; the check at 5.0
    # sees p true
    res = validate_plan(t, _plan(("0.5", "wait", 5), (4, "use", 1)))
    assert res.valid
    # checking at 4.0 instead predates the effect
    res2 = validate_plan(t, _plan(("0.5", "wait", 5), (3, "use", 1)))
    assert "intermediate-condition" in res2.kinds()


def test_negative_plan_ice_resolution_is_malformed():
    t = make_task(
        [Variable("p", "bool")],
        [make_action("a", 1, 1)],
        State({"p": False}),
        plan_ies=[(rel("OMEGA", 10), [BoolEff("p", True)])],
    )
    # makespan 2 puts the effect at -8
    res = validate_plan(t, _plan((1, "a", 1)))
    assert res.kinds() == {"malformed"}


def test_goal_violation_names_the_condition():
    t = make_task(
        [Variable("x", "num")],
        [make_snap_action("noop")],
        State({"x": 0}),
        goal=[NumCond(LinearExpr.var("x").shifted(-5), False)],
    )
    res = validate_plan(t, _plan((1, "noop", 0)))
    assert res.kinds() == {"goal"}
    assert "x" in res.violations[0].message


def test_empty_plan_makespan_zero():
    # no entries: plan-relative OMEGA times resolve against 0, goal checked
    # on the initial state
    t = make_task(
        [Variable("p", "bool")],
        [make_action("a", 1, 1)],
        State({"p": True}),
        goal=[BoolCond("p", True)],
    )
    assert validate_plan(t, _plan()).valid


# ---------------------------------------------------------------------------
# absolute ICE expansion and effect parallelization

def test_absolute_ices_resolve_action_anchors():
    a = make_action(
        "a",
        4,
        4,
        ics=[(rel(START, 1), rel(END, 1), [BoolCond("p", True)])],
        ies=[(rel(START, 2), [BoolEff("p", False)])],
    )
    t = make_task([Variable("p", "bool")], [a], State({"p": True}))
    ics, ies = absolute_ices(t, _plan((10, "a", 4)))
    spans = {(c.t_start, c.t_end) for c in ics}
    assert (rat(11), rat(13)) in spans  # START+1 .. END-1
    assert {e.t for e in ies} == {rat(12)}


def test_reference_plan_effect_timeline_has_28_instants():
    """Count distinct effect instants of the reference two-train plan.

    Oracle: walk the plan entries with the route tables and offsets written
    out independently of the parallelize helper.
    """
    task = domains.instradi(2)
    plan = domains.eq7_plan()
    _, abs_ies = absolute_ices(task, plan)
    rows, conflicts = parallelize_effects(abs_ies)
    assert conflicts == []
    times = {e.t for e in abs_ies}

    # independent expectation: per entry, effect offsets from the action
    # definitions (start, intermediate frees, end), plus the three plan
    # effects at 5, 30, 100
    route_len = {
        "move_blue_03-21": 6,
        "move_red_22-02": 5,
        "move_blue_21-02": 3,
    }
    expect = {rat(5), rat(30), rat(100)}
    for e in plan.entries:
        if e.action.startswith("move"):
            expect.add(e.t)  # start occupation
            for i in range(1, route_len[e.action]):
                expect.add(e.t + 5 * i)  # progressive frees
            expect.add(e.t + e.d)  # arrival
        elif e.action.startswith("stop"):
            expect.add(e.t)
            expect.add(e.t + e.d)
        elif e.action.startswith("depart"):
            expect.add(e.t)
            expect.add(e.t + e.d)
        elif e.action.startswith("exit"):
            expect.add(e.t)
    assert times == expect
    assert len(rows) == len(times) == 28


def test_parallelize_merges_same_instant():
    e1 = make_action("e1", 1, 1, ies=[(rel(START), [BoolEff("p", True)])])
    e2 = make_action("e2", 1, 1, ies=[(rel(START), [BoolEff("q", True)])])
    t = make_task(
        [Variable("p", "bool"), Variable("q", "bool")],
        [e1, e2],
        State({"p": False, "q": False}),
    )
    _, ies = absolute_ices(t, _plan((1, "e1", 1), (1, "e2", 1)))
    rows, conflicts = parallelize_effects(ies)
    assert conflicts == []
    assert [t for t, _ in rows] == [1]  # both starts merge; no end effects
    assert len(rows[0][1]) == 2


def test_parallelize_reports_conflicts():
    e1 = make_action("e1", 1, 1, ies=[(rel(START), [BoolEff("p", True)])])
    e2 = make_action("e2", 1, 1, ies=[(rel(START), [BoolEff("p", False)])])
    t = make_task(
        [Variable("p", "bool")], [e1, e2], State({"p": False})
    )
    _, ies = absolute_ices(t, _plan((1, "e1", 1), (1, "e2", 1)))
    _, conflicts = parallelize_effects(ies)
    assert conflicts == [(1, "p")]
