"""Seeded random model generator for cross-checking the event machine.

Generates small .bt sources: a random tree of sequences/fallbacks over
condition and action leaves, 1-3 bounded variables, and guard/effect pairs
built so that action outcomes are exhaustive and effects can never leave a
domain. With deterministic=True the outcome guards are also mutually
exclusive, which is what the reference interpreter requires.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass
class GenParams:
    max_nodes: int = 10
    max_depth: int = 4
    max_vars: int = 3
    max_domain: int = 20  # domain cardinality
    deterministic: bool = True
    with_hook_chance: float = 0.25


class _Gen:
    def __init__(self, rng: random.Random, params: GenParams):
        self.rng = rng
        self.params = params
        self.counter = 0
        self.int_vars: list[tuple[str, int, int]] = []
        self.bool_vars: list[str] = []
        self.lines: list[str] = []
        self.behavior_lines: list[str] = []

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}_{self.counter}"

    def make_vars(self) -> None:
        n = self.rng.randint(1, self.params.max_vars)
        for k in range(n):
            name = self.fresh("v")
            # the first variable is always an integer so guards and effects
            # have something numeric to work with
            if k > 0 and self.rng.random() < 0.25:
                self.bool_vars.append(name)
            else:
                size = self.rng.randint(2, self.params.max_domain)
                self.int_vars.append((name, 0, size - 1))

    def random_predicate(self) -> str:
        choices = ["cmp"]
        if self.bool_vars:
            choices += ["bool", "notbool"]
        if self.rng.random() < 0.3:
            choices.append("conj")
        kind = self.rng.choice(choices)
        if kind == "bool":
            return self.rng.choice(self.bool_vars)
        if kind == "notbool":
            return f"!{self.rng.choice(self.bool_vars)}"
        if kind == "conj":
            op = self.rng.choice(["&&", "||"])
            return f"({self.random_predicate()}) {op} ({self.random_predicate()})"
        name, lo, hi = self.rng.choice(self.int_vars)
        op = self.rng.choice([">=", "<=", ">", "<", "==", "!="])
        bound = self.rng.randint(lo, hi)
        return f"{name} {op} {bound}"

    def condition_decl(self, name: str) -> None:
        self.behavior_lines.append(
            f"condition {name} {{ success_when: {self.random_predicate()}; }}")

    def action_decl(self, name: str) -> None:
        """Outcome rules split some variable's domain at a threshold.

        Low branch may increment (stays <= hi), high branch may decrement
        (stays >= lo), so effects are domain-safe by construction.
        """
        rng = self.rng
        results = ["SUCCESS", "RUNNING", "FAILURE"]
        lines = [f"action {name} {{"]
        if rng.random() < 0.3:
            effect = self.safe_constant_effect()
            lines.append(f"  outcome {rng.choice(results)} when true{effect}")
        else:
            var, lo, hi = rng.choice(self.int_vars)
            mid = rng.randint(lo, hi - 1)
            low_guard = f"{var} <= {mid}"
            high_guard = f"{var} > {mid}"
            low_effect = f" {{ {var} := {var} + 1; }}" if rng.random() < 0.7 else \
                self.safe_constant_effect()
            high_effect = f" {{ {var} := {var} - 1; }}" if rng.random() < 0.7 else \
                self.safe_constant_effect()
            lines.append(f"  outcome {rng.choice(results)} when {low_guard}{low_effect}")
            lines.append(f"  outcome {rng.choice(results)} when {high_guard}{high_effect}")
            if not self.params.deterministic and rng.random() < 0.7:
                # Overlapping rule: enabled alongside one of the two above.
                lines.append(f"  outcome {rng.choice(results)} when "
                             f"{var} >= {lo}{self.safe_constant_effect()}")
        lines.append("}")
        self.behavior_lines.extend(lines)

    def safe_constant_effect(self) -> str:
        rng = self.rng
        if rng.random() < 0.3:
            return ";"
        if self.bool_vars and rng.random() < 0.3:
            var = rng.choice(self.bool_vars)
            value = rng.choice(["true", "false", f"!{var}"])
            return f" {{ {var} := {value}; }}"
        var, lo, hi = rng.choice(self.int_vars)
        return f" {{ {var} := {rng.randint(lo, hi)}; }}"

    def grow(self, depth: int, budget: int) -> tuple[str, list[str]]:
        """One node declaration; returns (name, lines). Consumes from budget."""
        rng = self.rng
        make_leaf = depth >= self.params.max_depth or budget <= 1 or rng.random() < 0.4
        if make_leaf:
            if rng.random() < 0.5:
                name = self.fresh("cond")
                self.condition_decl(name)
                return name, [f"condition {name};"]
            name = self.fresh("act")
            self.action_decl(name)
            return name, [f"action {name};"]
        kind = rng.choice(["sequence", "fallback"])
        name = self.fresh(kind[:3])
        n_children = rng.randint(1, min(3, budget - 1))
        lines = [f"{kind} {name} {{"]
        remaining = budget - 1
        for k in range(n_children):
            share = max(1, remaining // (n_children - k))
            _, child_lines = self.grow(depth + 1, share)
            remaining -= _count_nodes(child_lines)
            lines.extend("  " + l for l in child_lines)
        lines.append("}")
        return name, lines

    def generate(self) -> str:
        self.make_vars()
        budget = self.rng.randint(1, self.params.max_nodes - 1)  # minus root
        _, body = self.grow(1, budget)
        out = ["tree {", "  root {"]
        out.extend("    " + l for l in body)
        out.extend(["  }", "}", "env {"])
        for name, lo, hi in self.int_vars:
            init = self.rng.randint(lo, hi)
            out.append(f"  var {name}: int in {lo}..{hi} = {init};")
        for name in self.bool_vars:
            out.append(f"  var {name}: bool = {self.rng.choice(['true', 'false'])};")
        out.append("}")
        out.extend(self.behavior_lines)
        if self.rng.random() < self.params.with_hook_chance:
            name, lo, hi = self.rng.choice(self.int_vars)
            out.append(f"on_root_result {{ {name} := {name} + 1; }}")
        return "\n".join(out) + "\n"


def _count_nodes(lines: list[str]) -> int:
    return sum(1 for l in lines
               if l.lstrip().startswith(("sequence", "fallback", "condition", "action")))


def random_model_source(seed: int, params: GenParams | None = None) -> str:
    """Deterministic .bt source for a seed; same seed, same bytes."""
    rng = random.Random(seed)
    return _Gen(rng, params or GenParams()).generate()
