"""btv: behavior tree verifier.

Validates tree well-formedness, executes guarded-event tick semantics over
user-modeled environments, and exhaustively explores the reachable state
space to prove or refute safety invariants with counterexample traces.
"""

from .checker import ExploreOptions, Status, Verdict, cycle_outcomes, explore, replay
from .core import (
    NodeType,
    TickResult,
    TreeSpec,
    ValidationReport,
    ordered_children,
    transitive_closure,
    validate_tree,
)
from .envmodel import EnvSpec, EnvState, apply_effects, check_invariants, eval_predicate
from .frontend import bundled_model_path, elaborate, load_model, parse, render_model
from .semantics import (
    Event,
    EventKind,
    MachineState,
    Model,
    apply_event,
    enabled_events,
    initial_state,
    reference_tick,
    tick_cycle,
)

__version__ = "0.1.0"

__all__ = [
    "EnvSpec", "EnvState", "Event", "EventKind", "ExploreOptions",
    "MachineState", "Model", "NodeType", "Status", "TickResult", "TreeSpec",
    "ValidationReport", "Verdict", "apply_effects", "apply_event",
    "bundled_model_path", "check_invariants", "cycle_outcomes", "elaborate",
    "enabled_events", "eval_predicate", "explore", "initial_state",
    "load_model", "ordered_children", "parse", "reference_tick", "render_model",
    "replay", "tick_cycle", "transitive_closure", "validate_tree",
]
