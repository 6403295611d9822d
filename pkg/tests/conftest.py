"""Shared fixtures and independent oracles.

The enumeration helpers here deliberately avoid checker.py's machinery
(layers, dedup bookkeeping, workers, verdicts): they walk the raw
semantics so the checker has something independent to be compared against.
"""

from __future__ import annotations

import pytest

from btv import bundled_model_path, load_model
from btv.core import TickResult
from btv.semantics import Model, apply_event, enabled_events, initial_state


@pytest.fixture(scope="session")
def robot_wall() -> Model:
    return load_model(bundled_model_path("robot_wall.bt"))


@pytest.fixture(scope="session")
def robot_wall_buggy() -> Model:
    return load_model(bundled_model_path("robot_wall_buggy.bt"))


@pytest.fixture(scope="session")
def fallback_running() -> Model:
    return load_model(bundled_model_path("fallback_running.bt"))


def naive_reachable(model: Model, cap: int = 50_000) -> set:
    """Depth-first enumeration of reachable states with a plain visited set."""
    init = initial_state(model)
    seen = {init}
    stack = [init]
    while stack:
        state = stack.pop()
        for event in enabled_events(model, state):
            succ = apply_event(model, state, event)
            if succ not in seen:
                seen.add(succ)
                stack.append(succ)
                if len(seen) > cap:
                    raise AssertionError("oracle cap exceeded")
    return seen


def bfs_depth_of_first(model: Model, predicate) -> int:
    """Transition count to the first state satisfying `predicate`, by level."""
    init = initial_state(model)
    if predicate(init):
        return 0
    seen = {init}
    frontier = [init]
    depth = 0
    while frontier:
        depth += 1
        nxt = []
        for state in frontier:
            for event in enabled_events(model, state):
                succ = apply_event(model, state, event)
                if succ in seen:
                    continue
                seen.add(succ)
                if predicate(succ):
                    return depth
                nxt.append(succ)
        frontier = nxt
    raise AssertionError("no state satisfies the predicate")


def no_dedup_states(model: Model, depth: int) -> set:
    """States reachable within `depth` transitions, no visited set at all."""
    out = set()

    def walk(state, remaining):
        out.add(state)
        if remaining == 0:
            return
        for event in enabled_events(model, state):
            walk(apply_event(model, state, event), remaining - 1)

    walk(initial_state(model), depth)
    return out


def machine_invariant_checker(model: Model):
    """Callback asserting result=>ticked and ticked=>parent-ticked."""
    tree = model.tree
    idx = tree.node_index

    def check(state):
        for i, node in enumerate(tree.node_order):
            if state.results[i] is not TickResult.UNKNOWN:
                assert state.ticks[i], f"{node} has a result but is not ticked"
            parent = tree.parent.get(node)
            if state.ticks[i] and parent is not None:
                assert state.ticks[idx[parent]], \
                    f"{node} is ticked but its parent {parent} is not"

    return check
