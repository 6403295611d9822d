"""Command-line entry point: validate, check, and simulate model files.

Exit codes: 0 ok/holds, 1 violated/deadlock/domain-violation/failed
validation, 2 usage/parse/I-O error, 3 bound exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from .checker import (
    ExploreOptions,
    Status,
    TraceStep,
    Verdict,
    explore,
    step_to_json,
    verdict_to_json,
)
from .core import ModelError, validate_tree
from .frontend import build_tree, load_model, parse
from .semantics import (
    DeadlockError,
    Model,
    NonterminationError,
    deterministic_policy,
    initial_state,
    random_policy,
    tick_cycle,
)

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_USAGE = 2
EXIT_BOUND = 3

_STATUS_EXIT = {
    Status.HOLDS: EXIT_OK,
    Status.VIOLATED: EXIT_VIOLATED,
    Status.DEADLOCK: EXIT_VIOLATED,
    Status.DOMAIN_VIOLATION: EXIT_VIOLATED,
    Status.BOUND_EXCEEDED: EXIT_BOUND,
}


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btv", description="Behavior tree verifier")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("model", help="path to a .bt model file")
        p.add_argument("--output", choices=("text", "json"), default="text")

    p_validate = sub.add_parser("validate", help="check tree well-formedness")
    common(p_validate)

    p_check = sub.add_parser("check", help="exhaustively verify invariants")
    common(p_check)
    p_check.add_argument("--max-states", type=positive_int, default=1_000_000)
    p_check.add_argument("--max-depth", type=int, default=None)
    p_check.add_argument("--workers", type=positive_int, default=os.cpu_count() or 1)
    p_check.add_argument("--trace-out", default=None,
                         help="write the verdict (with any counterexample) as JSON")

    p_sim = sub.add_parser("simulate", help="run tick cycles and print results")
    common(p_sim)
    p_sim.add_argument("--ticks", type=positive_int, default=10)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--policy", choices=("deterministic", "random"),
                       default="deterministic")
    p_sim.add_argument("--trace-out", default=None,
                       help="write the fired events as a JSON trace")
    return parser


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def cmd_validate(args) -> int:
    doc = parse(_read_text(args.model))
    tree = build_tree(doc)
    report = validate_tree(tree)
    if args.output == "json":
        payload = {
            "ok": report.ok,
            "nodes": len(tree.nodes),
            "violations": [{"tag": tag, "detail": detail}
                           for tag, detail in report.violations],
        }
        print(json.dumps(payload, indent=2))
    else:
        warned = any(tag == "ID_BFS_WARN" for tag, _ in report.violations)
        if report.ok:
            suffix = "ids not BFS-ordered (warning)" if warned else "ids BFS-consistent"
            print(f"OK: {len(tree.nodes)} nodes, {suffix}")
        else:
            print(f"INVALID: {len(tree.nodes)} nodes")
        for tag, detail in report.violations:
            print(f"  {tag}: {detail}")
    return EXIT_OK if report.ok else EXIT_VIOLATED


def _print_verdict_text(verdict: Verdict, model: Model) -> None:
    names = ", ".join(name for name, _ in model.env.invariants) or "none declared"
    if verdict.status is Status.HOLDS:
        print(f"HOLDS: invariants [{names}] hold in all {verdict.states_explored} "
              f"reachable states ({verdict.transitions} transitions)")
        return
    print(f"{verdict.status.value}: {verdict.detail or verdict.violated_invariant or ''}"
          .rstrip(": "))
    if verdict.status is Status.VIOLATED:
        print(f"  invariant {verdict.violated_invariant!r} is false after "
              f"{len(verdict.counterexample)} transitions")
    print(f"  states explored: {verdict.states_explored}, "
          f"transitions: {verdict.transitions}")
    if verdict.counterexample:
        print("  counterexample:")
        for i, step in enumerate(verdict.counterexample, 1):
            env_delta = step.state_delta.get("env", {})
            env_text = ""
            if env_delta:
                env_text = "  " + " ".join(f"{k}={v}" for k, v in sorted(env_delta.items()))
            print(f"    {i:3d}. {step.event.describe()}{env_text}")
    if verdict.violating_event is not None:
        print(f"  violating event: {verdict.violating_event.describe()}")


def cmd_check(args) -> int:
    model = load_model(args.model)
    options = ExploreOptions(max_states=args.max_states, max_depth=args.max_depth,
                             workers=args.workers)
    verdict = explore(model, options)
    payload = verdict_to_json(verdict, model)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    if args.output == "json":
        print(json.dumps(payload, indent=2))
    else:
        _print_verdict_text(verdict, model)
    return _STATUS_EXIT[verdict.status]


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    if args.policy == "random":
        policy = random_policy(random.Random(args.seed))
    else:
        policy = deterministic_policy
    state = initial_state(model)
    all_steps: list[TraceStep] = []
    results = []
    snapshots = []
    failed = False
    error_text = None
    for cycle in range(1, args.ticks + 1):
        try:
            state, result, events = tick_cycle(model, state, policy)
        except (DeadlockError, NonterminationError) as err:
            all_steps.extend(TraceStep(e, {}) for e in err.trace)
            error_text = str(err)
            if args.output == "text":
                print(f"cycle {cycle}: ERROR {err}")
            failed = True
            break
        all_steps.extend(TraceStep(e, {}) for e in events)
        results.append(result)
        snapshots.append(dict(state.env.values))
        if args.output == "text":
            env_text = " ".join(f"{k}={v}" for k, v in state.env.values)
            print(f"cycle {cycle}: {result.value}  {env_text}")
    payload = {
        "status": "SIMULATED" if not failed else "ABORTED",
        "cycles": len(results),
        "results": [r.value for r in results],
        "env_per_cycle": snapshots,
        "error": error_text,
        "trace": [step_to_json(s) for s in all_steps],
        "model_sha256": model.source_sha256,
    }
    if args.output == "json":
        print(json.dumps(payload, indent=2))
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    return EXIT_VIOLATED if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "check":
            return cmd_check(args)
        return cmd_simulate(args)
    except (ModelError, OSError, UnicodeDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
