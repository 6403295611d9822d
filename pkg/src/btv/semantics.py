"""Guarded-event tick semantics over a behavior tree.

The machine state is (ticked?, result, analyzing-subtree?) per node plus the
environment valuation. Each event is enabled by a guard over that state and
rewrites it atomically. Control nodes advance left-to-right through their
children by n_id: the next child to tick is the minimal-id unticked child,
the child just analyzed is the maximal-id ticked child.

A tick cycle runs from an all-unticked state until ROOT_REINITIALIZE fires;
the root result of the cycle is the one copied up by RESULT_ARRIVED, which
also runs the model's root-result hook (e.g. timestep bookkeeping).

reference_tick is a deliberately separate implementation (plain recursion,
no events) used to cross-check the machine.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

from .core import ModelError, NodeType, TickResult, TreeSpec
from .envmodel import (
    ActionBehavior,
    ConditionBehavior,
    EnvSpec,
    EnvState,
    LeafBehavior,
    apply_effects,
    eval_predicate,
)


class EventNotEnabledError(ModelError):
    pass


class DeadlockError(ModelError):
    def __init__(self, msg: str, trace: list["Event"]):
        super().__init__(msg)
        self.trace = trace


class NonterminationError(ModelError):
    def __init__(self, msg: str, trace: list["Event"]):
        super().__init__(msg)
        self.trace = trace


class OracleInapplicableError(ModelError):
    pass


class EventKind(Enum):
    # Declaration order is the canonical enumeration order used for
    # deterministic tie-breaking everywhere.
    TICK_ROOT = "TICK_ROOT"
    ROOT_TICKED = "ROOT_TICKED"
    RESULT_ARRIVED = "RESULT_ARRIVED"
    ROOT_REINITIALIZE = "ROOT_REINITIALIZE"
    FB_INITIAL = "FB_INITIAL"
    FB_SUCCESS = "FB_SUCCESS"
    FB_RUNNING = "FB_RUNNING"
    FB_FAILURE = "FB_FAILURE"
    FB_CONTINUE = "FB_CONTINUE"
    SEQ_INITIAL = "SEQ_INITIAL"
    SEQ_SUCCESS = "SEQ_SUCCESS"
    SEQ_RUNNING = "SEQ_RUNNING"
    SEQ_FAILURE = "SEQ_FAILURE"
    SEQ_CONTINUE = "SEQ_CONTINUE"
    COND_OUTCOME = "COND_OUTCOME"
    ACT_OUTCOME = "ACT_OUTCOME"


_KIND_ORDER = {k: i for i, k in enumerate(EventKind)}

# Events that bind a child parameter.
CHILD_EVENTS = frozenset({
    EventKind.ROOT_TICKED, EventKind.RESULT_ARRIVED,
    EventKind.FB_INITIAL, EventKind.FB_CONTINUE,
    EventKind.SEQ_INITIAL, EventKind.SEQ_CONTINUE,
})


@dataclass(frozen=True)
class Event:
    kind: EventKind
    node: str
    child: str | None = None
    outcome: tuple[TickResult, int] | None = None  # (result, rule index) for leaves

    def sort_key(self, tree: TreeSpec) -> tuple:
        rule = self.outcome[1] if self.outcome else -1
        return (_KIND_ORDER[self.kind], tree.n_id[self.node], rule)

    def describe(self) -> str:
        parts = [self.kind.value, self.node]
        if self.child:
            parts.append(f"-> {self.child}")
        if self.outcome:
            parts.append(f"[{self.outcome[0].value}]")
        return " ".join(parts)


@dataclass(frozen=True)
class Model:
    """An elaborated model: topology, environment, and leaf behaviors."""

    tree: TreeSpec
    env: EnvSpec
    behaviors: Mapping[str, LeafBehavior]
    source_sha256: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class MachineState:
    """Per-node dynamic state plus environment, aligned with tree.node_order."""

    ticks: tuple[bool, ...]
    results: tuple[TickResult, ...]
    analyzing: tuple[bool, ...]
    env: EnvState


def initial_state(model: Model) -> MachineState:
    n = len(model.tree.node_order)
    return MachineState(
        ticks=(False,) * n,
        results=(TickResult.UNKNOWN,) * n,
        analyzing=(False,) * n,
        env=model.env.initial_state(),
    )


def _min_unticked_child(model: Model, state: MachineState, node: str) -> str | None:
    for c in model.tree.children[node]:  # already ordered by n_id
        if not state.ticks[model.tree.node_index[c]]:
            return c
    return None


def _last_ticked_child(model: Model, state: MachineState, node: str) -> str | None:
    last = None
    for c in model.tree.children[node]:
        if state.ticks[model.tree.node_index[c]]:
            last = c
    return last


def enabled_events(model: Model, state: MachineState) -> list[Event]:
    """All events whose guard holds, in canonical enumeration order."""
    tree = model.tree
    idx = tree.node_index
    events: list[Event] = []

    for node in tree.node_order:
        i = idx[node]
        ntype = tree.n_type[node]
        ticked = state.ticks[i]
        result = state.results[i]

        if ntype is NodeType.ROOT:
            if not ticked and result is TickResult.UNKNOWN:
                events.append(Event(EventKind.TICK_ROOT, node))
            if ticked:
                child = _min_unticked_child(model, state, node)
                if child is not None:
                    events.append(Event(EventKind.ROOT_TICKED, node, child))
                if result is TickResult.UNKNOWN:
                    for c in tree.children[node]:
                        if state.results[idx[c]] is not TickResult.UNKNOWN:
                            events.append(Event(EventKind.RESULT_ARRIVED, node, c))
                else:
                    events.append(Event(EventKind.ROOT_REINITIALIZE, node))

        elif ntype in (NodeType.SEQUENCE, NodeType.FALLBACK):
            if not ticked or result is not TickResult.UNKNOWN:
                continue
            fb = ntype is NodeType.FALLBACK
            last = _last_ticked_child(model, state, node)
            if last is None:
                child = _min_unticked_child(model, state, node)
                kind = EventKind.FB_INITIAL if fb else EventKind.SEQ_INITIAL
                events.append(Event(kind, node, child))
                continue
            last_result = state.results[idx[last]]
            next_child = _min_unticked_child(model, state, node)
            if last_result is TickResult.RUNNING:
                events.append(Event(EventKind.FB_RUNNING if fb else EventKind.SEQ_RUNNING, node))
            elif last_result is TickResult.SUCCESS:
                if fb:
                    events.append(Event(EventKind.FB_SUCCESS, node))
                elif next_child is None:
                    events.append(Event(EventKind.SEQ_SUCCESS, node))
                else:
                    events.append(Event(EventKind.SEQ_CONTINUE, node, next_child))
            elif last_result is TickResult.FAILURE:
                if not fb:
                    events.append(Event(EventKind.SEQ_FAILURE, node))
                elif next_child is None:
                    events.append(Event(EventKind.FB_FAILURE, node))
                else:
                    events.append(Event(EventKind.FB_CONTINUE, node, next_child))
            # last child still UNKNOWN: subtree being analyzed, nothing enabled

        elif ntype is NodeType.CONDITION:
            if ticked and result is TickResult.UNKNOWN:
                behavior = model.behaviors[node]
                assert isinstance(behavior, ConditionBehavior)
                if eval_predicate(behavior.success_when, state.env):
                    events.append(Event(EventKind.COND_OUTCOME, node,
                                        outcome=(TickResult.SUCCESS, 0)))
                else:
                    events.append(Event(EventKind.COND_OUTCOME, node,
                                        outcome=(TickResult.FAILURE, 1)))

        elif ntype is NodeType.ACTION:
            if ticked and result is TickResult.UNKNOWN:
                behavior = model.behaviors[node]
                assert isinstance(behavior, ActionBehavior)
                for rule_i, outcome in enumerate(behavior.outcomes):
                    if eval_predicate(outcome.guard, state.env):
                        events.append(Event(EventKind.ACT_OUTCOME, node,
                                            outcome=(outcome.result, rule_i)))

    events.sort(key=lambda e: e.sort_key(tree))
    return events


def _with(state: MachineState, *, ticks=None, results=None, analyzing=None, env=None):
    return MachineState(
        ticks=ticks if ticks is not None else state.ticks,
        results=results if results is not None else state.results,
        analyzing=analyzing if analyzing is not None else state.analyzing,
        env=env if env is not None else state.env,
    )


def _set(tup: tuple, i: int, value) -> tuple:
    return tup[:i] + (value,) + tup[i + 1:]


def apply_event(model: Model, state: MachineState, e: Event) -> MachineState:
    """Successor state for an enabled event; the input state is not mutated.

    Raises EventNotEnabledError when the guard does not hold (a scheduler
    bug) and DomainViolationError when an action effect leaves a domain.
    """
    if e not in enabled_events(model, state):
        raise EventNotEnabledError(f"event not enabled: {e.describe()}")

    tree = model.tree
    idx = tree.node_index
    i = idx[e.node]
    k = e.kind

    if k is EventKind.TICK_ROOT:
        return _with(state, ticks=_set(state.ticks, i, True))

    if k is EventKind.ROOT_TICKED:
        ci = idx[e.child]
        return _with(state, ticks=_set(state.ticks, ci, True),
                     analyzing=_set(state.analyzing, ci, True))

    if k is EventKind.RESULT_ARRIVED:
        child_result = state.results[idx[e.child]]
        env = apply_effects(model.env, model.env.root_result_hook, state.env, wrap=True)
        return _with(state, results=_set(state.results, i, child_result), env=env)

    if k is EventKind.ROOT_REINITIALIZE:
        n = len(tree.node_order)
        return _with(state, ticks=(False,) * n, results=(TickResult.UNKNOWN,) * n)

    if k in (EventKind.FB_INITIAL, EventKind.SEQ_INITIAL,
             EventKind.FB_CONTINUE, EventKind.SEQ_CONTINUE):
        ci = idx[e.child]
        return _with(state, ticks=_set(state.ticks, ci, True),
                     analyzing=_set(state.analyzing, i, True))

    if k in (EventKind.FB_SUCCESS, EventKind.SEQ_SUCCESS):
        return _resolve(model, state, e.node, TickResult.SUCCESS)
    if k in (EventKind.FB_RUNNING, EventKind.SEQ_RUNNING):
        return _resolve(model, state, e.node, TickResult.RUNNING)
    if k in (EventKind.FB_FAILURE, EventKind.SEQ_FAILURE):
        return _resolve(model, state, e.node, TickResult.FAILURE)

    if k is EventKind.COND_OUTCOME:
        return _resolve(model, state, e.node, e.outcome[0])

    if k is EventKind.ACT_OUTCOME:
        behavior = model.behaviors[e.node]
        rule = behavior.outcomes[e.outcome[1]]
        env = apply_effects(model.env, rule.effects, state.env)
        return _resolve(model, _with(state, env=env), e.node, e.outcome[0])

    raise AssertionError(f"unhandled event kind {k}")


def _resolve(model: Model, state: MachineState, node: str, result: TickResult) -> MachineState:
    """Record a node's result and clear the parent's analyzing flag."""
    idx = model.tree.node_index
    analyzing = state.analyzing
    parent = model.tree.parent.get(node)
    if parent is not None:
        analyzing = _set(analyzing, idx[parent], False)
    return _with(state, results=_set(state.results, idx[node], result),
                 analyzing=analyzing)


# --- schedulers and cycles --------------------------------------------------

Policy = Callable[[list[Event], "Model", MachineState], Event]


def deterministic_policy(enabled: list[Event], model: Model, state: MachineState) -> Event:
    """Fixed priority: TICK_ROOT, then control events deepest-first, then
    leaf outcomes; ties broken by minimal n_id, then rule index."""
    def key(e: Event):
        if e.kind is EventKind.TICK_ROOT:
            group = 0
        elif e.kind in (EventKind.COND_OUTCOME, EventKind.ACT_OUTCOME):
            group = 2
        else:
            group = 1
        depth = model.tree.depth.get(e.node, 0)
        rule = e.outcome[1] if e.outcome else -1
        return (group, -depth, model.tree.n_id[e.node], rule)
    return min(enabled, key=key)


def random_policy(rng: random.Random) -> Policy:
    def pick(enabled: list[Event], model: Model, state: MachineState) -> Event:
        return rng.choice(enabled)
    return pick


def cycle_step_budget(tree: TreeSpec) -> int:
    # Each node ticks at most once and resolves at most once per cycle.
    return 4 * len(tree.node_order) + 2


def tick_cycle(model: Model, state: MachineState,
               policy: Policy = deterministic_policy,
               ) -> tuple[MachineState, TickResult, list[Event]]:
    """Run one full cycle from an all-unticked state until reinitialization.

    Returns the post-reinitialize state, the root result that arrived, and
    the fired event trace.
    """
    if any(state.ticks):
        raise ValueError("tick_cycle requires a cycle-start state (all unticked)")
    budget = cycle_step_budget(model.tree)
    trace: list[Event] = []
    root_result = None
    while True:
        enabled = enabled_events(model, state)
        if not enabled:
            raise DeadlockError("no event enabled before cycle completion", trace)
        e = policy(enabled, model, state)
        if e.kind is EventKind.RESULT_ARRIVED:
            root_result = state.results[model.tree.node_index[e.child]]
        state = apply_event(model, state, e)
        trace.append(e)
        if e.kind is EventKind.ROOT_REINITIALIZE:
            return state, root_result, trace
        if len(trace) > budget:
            raise NonterminationError(
                f"cycle exceeded step budget of {budget} events", trace)


# --- independent reference interpreter --------------------------------------

def reference_tick(model: Model, env: EnvState) -> tuple[TickResult, EnvState]:
    """Classic recursive tick, used only as an oracle for the event machine.

    Sequences run children left-to-right until a non-SUCCESS result;
    fallbacks until a non-FAILURE result. Requires deterministic leaves:
    an action with zero or several enabled outcomes is outside the oracle's
    domain. The root-result hook is applied after the pass, mirroring the
    machine's RESULT_ARRIVED.
    """
    tree = model.tree

    def tick(node: str, env: EnvState) -> tuple[TickResult, EnvState]:
        ntype = tree.n_type[node]
        if ntype is NodeType.ROOT:
            return tick(tree.children[node][0], env)
        if ntype is NodeType.CONDITION:
            behavior = model.behaviors[node]
            ok = eval_predicate(behavior.success_when, env)
            return (TickResult.SUCCESS if ok else TickResult.FAILURE), env
        if ntype is NodeType.ACTION:
            behavior = model.behaviors[node]
            live = [o for o in behavior.outcomes if eval_predicate(o.guard, env)]
            if len(live) != 1:
                raise OracleInapplicableError(
                    f"action {node!r} has {len(live)} enabled outcomes; oracle "
                    "requires exactly one")
            return live[0].result, apply_effects(model.env, live[0].effects, env)
        stop = TickResult.SUCCESS if ntype is NodeType.SEQUENCE else TickResult.FAILURE
        for child in tree.children[node]:
            result, env = tick(child, env)
            if result is not stop:
                return result, env
        return stop, env

    result, env = tick(tree.root, env)
    env = apply_effects(model.env, model.env.root_result_hook, env, wrap=True)
    return result, env
