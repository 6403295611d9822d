"""Exhaustive explicit-state exploration of the tick semantics.

Breadth-first search over all event interleavings from the initial state,
with global deduplication of states. Every discovered state (including the
initial one) is checked against the model's invariants; the first problem in
BFS order wins, tie-broken by the canonical event enumeration order, so
counterexamples are minimal in transition count and reproducible.

Frontier expansion can be spread over worker threads; layers are merged
sequentially in frontier order, so verdicts and state counts do not depend
on scheduling.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from .core import TickResult
from .envmodel import DomainViolationError, check_invariants
from .semantics import (
    Event,
    EventKind,
    EventNotEnabledError,
    MachineState,
    Model,
    apply_event,
    enabled_events,
    initial_state,
)


class ReplayError(Exception):
    def __init__(self, msg: str, step: int | None = None):
        super().__init__(msg)
        self.step = step


class Status(Enum):
    HOLDS = "HOLDS"
    VIOLATED = "VIOLATED"
    DEADLOCK = "DEADLOCK"
    DOMAIN_VIOLATION = "DOMAIN_VIOLATION"
    BOUND_EXCEEDED = "BOUND_EXCEEDED"


@dataclass
class ExploreOptions:
    max_states: int = 1_000_000
    max_depth: int | None = None
    workers: int = 1


@dataclass
class TraceStep:
    event: Event
    state_delta: dict


@dataclass
class Stats:
    peak_frontier: int = 0
    wall_time_s: float = 0.0
    depth: int = 0


@dataclass
class Verdict:
    status: Status
    states_explored: int
    transitions: int
    violated_invariant: str | None = None
    counterexample: list[TraceStep] | None = None
    # For DOMAIN_VIOLATION: the event whose effect left the domain. It is not
    # part of the counterexample so that the trace replays cleanly to the
    # state the event fires from.
    violating_event: Event | None = None
    detail: str | None = None
    stats: Stats = field(default_factory=Stats)


class _DomainHit:
    """Marker for a transition whose effect left a variable's domain."""

    def __init__(self, event: Event, error: DomainViolationError):
        self.event = event
        self.error = error


def _expand(model: Model, state: MachineState):
    """Enabled events of one state with successors or domain-hit markers."""
    events = enabled_events(model, state)
    out = []
    for e in events:
        try:
            out.append((e, apply_event(model, state, e)))
        except DomainViolationError as err:
            out.append((e, _DomainHit(e, err)))
    return out


def explore(model: Model, options: ExploreOptions | None = None,
            on_state=None) -> Verdict:
    """Breadth-first exploration of every reachable machine state.

    Returns HOLDS with the exact reachable-state count, or the first
    VIOLATED / DEADLOCK / DOMAIN_VIOLATION in BFS order with a replayable
    counterexample, or BOUND_EXCEEDED when max_states/max_depth cut the
    search short. `on_state` is called once per discovered state.
    """
    opts = options or ExploreOptions()
    started = time.perf_counter()
    stats = Stats()

    init = initial_state(model)
    visited: dict[MachineState, int] = {init: 0}
    parents: dict[MachineState, tuple[MachineState, Event]] = {}
    transitions = 0
    if on_state:
        on_state(init)

    def finish(status: Status, *, bad_state=None, violating_event=None,
               invariant=None, detail=None) -> Verdict:
        stats.wall_time_s = time.perf_counter() - started
        trace = None
        if bad_state is not None:
            trace = _trace_to(model, init, parents, bad_state)
        return Verdict(status, len(visited), transitions,
                       violated_invariant=invariant, counterexample=trace,
                       violating_event=violating_event, detail=detail, stats=stats)

    violated = check_invariants(model.env, init.env)
    if violated:
        return finish(Status.VIOLATED, bad_state=init, invariant=violated[0],
                      detail=f"invariant {violated[0]!r} false in the initial state")

    frontier = [init]
    depth = 0
    pool = ThreadPoolExecutor(opts.workers) if opts.workers > 1 else None
    try:
        while frontier:
            stats.peak_frontier = max(stats.peak_frontier, len(frontier))
            stats.depth = depth
            if opts.max_depth is not None and depth >= opts.max_depth:
                return finish(Status.BOUND_EXCEEDED,
                              detail=f"max depth {opts.max_depth} reached with "
                                     f"{len(frontier)} frontier states unexplored")
            if pool is not None:
                expansions = list(pool.map(lambda s: _expand(model, s), frontier))
            else:
                expansions = [_expand(model, s) for s in frontier]

            next_frontier: list[MachineState] = []
            for state, expansion in zip(frontier, expansions):
                if not expansion:
                    return finish(Status.DEADLOCK, bad_state=state,
                                  detail="no event enabled in a non-final state")
                for event, successor in expansion:
                    transitions += 1
                    if isinstance(successor, _DomainHit):
                        err = successor.error
                        return finish(
                            Status.DOMAIN_VIOLATION, bad_state=state,
                            violating_event=event,
                            detail=f"{event.describe()}: {err.name} := {err.value} "
                                   "leaves the declared domain")
                    if successor in visited:
                        continue
                    if len(visited) >= opts.max_states:
                        return finish(Status.BOUND_EXCEEDED,
                                      detail=f"max states {opts.max_states} reached")
                    visited[successor] = depth + 1
                    parents[successor] = (state, event)
                    if on_state:
                        on_state(successor)
                    violated = check_invariants(model.env, successor.env)
                    if violated:
                        return finish(Status.VIOLATED, bad_state=successor,
                                      invariant=violated[0])
                    next_frontier.append(successor)
            frontier = next_frontier
            depth += 1
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    stats.wall_time_s = time.perf_counter() - started
    return Verdict(Status.HOLDS, len(visited), transitions, stats=stats)


def _trace_to(model: Model, init: MachineState, parents,
              target: MachineState) -> list[TraceStep]:
    """Rebuild the event path to `target`, annotating each step with deltas."""
    events: list[Event] = []
    cursor = target
    while cursor != init:
        prev, event = parents[cursor]
        events.append(event)
        cursor = prev
    events.reverse()
    steps = []
    state = init
    for event in events:
        successor = apply_event(model, state, event)
        steps.append(TraceStep(event, _state_delta(model, state, successor)))
        state = successor
    return steps


def _state_delta(model: Model, before: MachineState, after: MachineState) -> dict:
    order = model.tree.node_order
    delta: dict = {}
    for attr, label in (("ticks", "n_tick"), ("results", "n_result"),
                        ("analyzing", "analyzing_subtree")):
        changed = {}
        for i, node in enumerate(order):
            b, a = getattr(before, attr)[i], getattr(after, attr)[i]
            if b != a:
                changed[node] = a.value if isinstance(a, TickResult) else a
        if changed:
            delta[label] = changed
    env_changed = {name: after_v for (name, after_v), (_, before_v)
                   in zip(after.env.values, before.env.values) if after_v != before_v}
    if env_changed:
        delta["env"] = env_changed
    return delta


def cycle_outcomes(model: Model, start: MachineState) -> set[tuple[TickResult, tuple]]:
    """All (root result, env) pairs reachable by interleavings of one cycle.

    Explores every enabled-event branch from a cycle-start state until each
    path fires ROOT_REINITIALIZE. Deterministic-leaf models must yield a
    singleton (confluence).
    """
    if any(start.ticks):
        raise ValueError("cycle_outcomes requires a cycle-start state")
    root_index = model.tree.node_index[model.tree.root]
    outcomes: set[tuple[TickResult, tuple]] = set()
    seen = {start}
    frontier = [start]
    while frontier:
        next_frontier = []
        for state in frontier:
            for event in enabled_events(model, state):
                successor = apply_event(model, state, event)
                if event.kind is EventKind.ROOT_REINITIALIZE:
                    outcomes.add((state.results[root_index], successor.env.values))
                    continue
                if successor not in seen:
                    seen.add(successor)
                    next_frontier.append(successor)
        frontier = next_frontier
    return outcomes


def replay(model: Model, trace, *, trace_sha256: str | None = None) -> MachineState:
    """Re-apply a trace from the initial state, checking each guard.

    `trace` is a list of Event or TraceStep. Raises ReplayError with the
    failing step index when an event is not enabled, and on a model hash
    mismatch when both hashes are known.
    """
    if trace_sha256 is not None and model.source_sha256 is not None \
            and trace_sha256 != model.source_sha256:
        raise ReplayError("trace was produced against a different model "
                          f"(trace {trace_sha256[:12]}, model {model.source_sha256[:12]})")
    state = initial_state(model)
    for k, step in enumerate(trace):
        event = step.event if isinstance(step, TraceStep) else step
        try:
            state = apply_event(model, state, event)
        except EventNotEnabledError:
            raise ReplayError(f"event {event.describe()} not enabled at step {k}",
                              step=k) from None
    return state


# --- JSON trace format --------------------------------------------------------

def step_to_json(step: TraceStep) -> dict:
    e = step.event
    out = {"event": e.kind.value, "node": e.node, "child": e.child,
           "state_delta": step.state_delta}
    out["outcome"] = ({"result": e.outcome[0].value, "rule": e.outcome[1]}
                      if e.outcome else None)
    return out


def step_from_json(data: dict) -> Event:
    outcome = None
    if data.get("outcome"):
        outcome = (TickResult(data["outcome"]["result"]), data["outcome"]["rule"])
    return Event(EventKind(data["event"]), data["node"], data.get("child"), outcome)


def verdict_to_json(verdict: Verdict, model: Model | None = None) -> dict:
    violating = None
    if verdict.violating_event is not None:
        violating = step_to_json(TraceStep(verdict.violating_event, {}))
    return {
        "status": verdict.status.value,
        "states_explored": verdict.states_explored,
        "transitions": verdict.transitions,
        "violated_invariant": verdict.violated_invariant,
        "detail": verdict.detail,
        "counterexample": ([step_to_json(s) for s in verdict.counterexample]
                           if verdict.counterexample is not None else None),
        "violating_event": violating,
        "stats": {
            "peak_frontier": verdict.stats.peak_frontier,
            "wall_time_s": round(verdict.stats.wall_time_s, 6),
            "depth": verdict.stats.depth,
        },
        "model_sha256": model.source_sha256 if model else None,
    }


def load_trace_file(path) -> tuple[list[Event], str | None]:
    """Events and model hash from a trace JSON file (verdict or simulation)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    steps = data.get("counterexample") or data.get("trace") or []
    return [step_from_json(s) for s in steps], data.get("model_sha256")
