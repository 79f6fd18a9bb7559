"""tempus: a ground temporal-numeric planner with intermediate conditions
and effects, built on pattern-based SMT encodings."""

from .model import (
    ALPHA,
    END,
    OMEGA,
    START,
    BoolCond,
    BoolEff,
    DurativeAction,
    IC,
    IE,
    LinearExpr,
    ModelError,
    NumCond,
    NumEff,
    PlanEntry,
    PlanningTask,
    RelTime,
    State,
    TimedPlan,
    Variable,
    absolute_ices,
    apply_effects,
    dump_plan,
    dump_task,
    load_plan,
    load_task,
    make_action,
    make_snap_action,
    make_task,
    parse_condition,
    parse_conditions,
    parse_effect,
    plan_entry,
    rat,
    rel,
    satisfies,
)
from .validator import Violation, validate_plan
from .planner import PlannerResult, solve_task

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
