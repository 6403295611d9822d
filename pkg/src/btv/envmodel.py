"""Environment model: bounded variables, predicates, and leaf behaviors.

Variables are integers over a declared finite interval, or booleans.
Conditions succeed when their predicate holds (failure is the negation, so
conditions are exhaustive by construction). Actions carry guarded outcome
rules; guards must cover every reachable valuation, which is checked by
enumeration at load time for small domains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Union

from .core import ModelError, TickResult

# Load-time exhaustiveness enumeration is skipped above this many valuations.
EXHAUSTIVENESS_ENUM_LIMIT = 10**6


class ExpressionTypeError(ModelError):
    pass


class UnknownVariableError(ModelError):
    pass


class DomainViolationError(ModelError):
    """An assignment left a variable's declared domain."""

    def __init__(self, name: str, value: int):
        super().__init__(f"assignment leaves domain: {name} := {value}")
        self.name = name
        self.value = value


class ExhaustivenessError(ModelError):
    pass


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class VarRef:
    name: str
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # + - < <= > >= == != && ||
    left: "Expr"
    right: "Expr"
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NotOp:
    operand: "Expr"
    span: object = field(default=None, compare=False, repr=False)


Expr = Union[IntLit, BoolLit, VarRef, BinOp, NotOp]

ARITH_OPS = ("+", "-")
CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")
BOOL_OPS = ("&&", "||")


@dataclass(frozen=True)
class Assignment:
    name: str
    expr: Expr
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class VarDecl:
    """Integer variable over [lo, hi], or boolean when lo/hi are None."""

    name: str
    lo: int | None
    hi: int | None
    initial: int | bool

    @property
    def is_bool(self) -> bool:
        return self.lo is None

    def contains(self, value) -> bool:
        if self.is_bool:
            return isinstance(value, bool)
        return isinstance(value, int) and not isinstance(value, bool) \
            and self.lo <= value <= self.hi

    def wrap(self, value: int) -> int:
        size = self.hi - self.lo + 1
        return self.lo + (value - self.lo) % size


@dataclass(frozen=True)
class EnvSpec:
    variables: tuple[VarDecl, ...]
    invariants: tuple[tuple[str, Expr], ...] = ()
    root_result_hook: tuple[Assignment, ...] = ()

    def decl(self, name: str) -> VarDecl:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariableError(f"unknown variable {name!r}")

    def has(self, name: str) -> bool:
        return any(v.name == name for v in self.variables)

    def initial_state(self) -> "EnvState":
        for v in self.variables:
            if not v.contains(v.initial):
                raise DomainViolationError(v.name, v.initial)
        return EnvState(tuple((v.name, v.initial) for v in self.variables))

    def domain_product_size(self) -> int:
        size = 1
        for v in self.variables:
            size *= 2 if v.is_bool else (v.hi - v.lo + 1)
        return size

    def valuations(self, names: Iterable[str]) -> Iterable[dict]:
        """All valuations of the given variables over their domains."""
        decls = [self.decl(n) for n in names]
        ranges = [(False, True) if d.is_bool else range(d.lo, d.hi + 1) for d in decls]
        for combo in product(*ranges):
            yield {d.name: val for d, val in zip(decls, combo)}


@dataclass(frozen=True)
class EnvState:
    """A concrete valuation, stored as (name, value) pairs in declaration order."""

    values: tuple[tuple[str, int | bool], ...]

    def get(self, name: str):
        for n, val in self.values:
            if n == name:
                return val
        raise UnknownVariableError(f"unknown variable {name!r}")

    def as_dict(self) -> dict:
        return dict(self.values)


# --- leaf behaviors --------------------------------------------------------

@dataclass(frozen=True)
class ConditionBehavior:
    success_when: Expr


@dataclass(frozen=True)
class ActionOutcome:
    guard: Expr
    result: TickResult
    effects: tuple[Assignment, ...] = ()


@dataclass(frozen=True)
class ActionBehavior:
    outcomes: tuple[ActionOutcome, ...]


LeafBehavior = Union[ConditionBehavior, ActionBehavior]


# --- evaluation ------------------------------------------------------------

def eval_expr(e: Expr, env: EnvState):
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, VarRef):
        return env.get(e.name)
    if isinstance(e, NotOp):
        return not eval_expr(e.operand, env)
    if isinstance(e, BinOp):
        l = eval_expr(e.left, env)
        if e.op == "&&":  # short-circuit
            return bool(l) and bool(eval_expr(e.right, env))
        if e.op == "||":
            return bool(l) or bool(eval_expr(e.right, env))
        r = eval_expr(e.right, env)
        if e.op == "+":
            return l + r
        if e.op == "-":
            return l - r
        if e.op == "<":
            return l < r
        if e.op == "<=":
            return l <= r
        if e.op == ">":
            return l > r
        if e.op == ">=":
            return l >= r
        if e.op == "==":
            return l == r
        if e.op == "!=":
            return l != r
    raise TypeError(f"not an expression node: {e!r}")


def eval_predicate(p: Expr, env: EnvState) -> bool:
    value = eval_expr(p, env)
    if not isinstance(value, bool):
        raise ExpressionTypeError(f"predicate evaluated to non-boolean {value!r}")
    return value


def infer_type(e: Expr, spec: EnvSpec) -> str:
    """Return "int" or "bool"; raise ExpressionTypeError on ill-typed trees."""
    if isinstance(e, IntLit):
        return "int"
    if isinstance(e, BoolLit):
        return "bool"
    if isinstance(e, VarRef):
        try:
            decl = spec.decl(e.name)
        except UnknownVariableError:
            raise UnknownVariableError(_at(e.span, f"unknown variable {e.name!r}")) from None
        return "bool" if decl.is_bool else "int"
    if isinstance(e, NotOp):
        if infer_type(e.operand, spec) != "bool":
            raise ExpressionTypeError(_at(e.span, "'!' needs a boolean operand"))
        return "bool"
    if isinstance(e, BinOp):
        lt = infer_type(e.left, spec)
        rt = infer_type(e.right, spec)
        if e.op in ARITH_OPS:
            if lt != "int" or rt != "int":
                raise ExpressionTypeError(_at(e.span, f"'{e.op}' needs integer operands"))
            return "int"
        if e.op in CMP_OPS:
            if lt != "int" or rt != "int":
                raise ExpressionTypeError(
                    _at(e.span, f"comparison '{e.op}' needs integer operands"))
            return "bool"
        if e.op in BOOL_OPS:
            if lt != "bool" or rt != "bool":
                raise ExpressionTypeError(_at(e.span, f"'{e.op}' needs boolean operands"))
            return "bool"
    raise TypeError(f"not an expression node: {e!r}")


def _at(span, msg: str) -> str:
    return f"{span}: {msg}" if span is not None else msg


def expr_variables(e: Expr) -> set[str]:
    if isinstance(e, VarRef):
        return {e.name}
    if isinstance(e, NotOp):
        return expr_variables(e.operand)
    if isinstance(e, BinOp):
        return expr_variables(e.left) | expr_variables(e.right)
    return set()


def apply_effects(spec: EnvSpec, effects: Iterable[Assignment], env: EnvState,
                  *, wrap: bool = False) -> EnvState:
    """Apply assignments with simultaneous-read, sequential-write semantics.

    Every right-hand side is evaluated against the incoming env, then values
    are written in listed order. Out-of-domain integer results raise
    DomainViolationError, or wrap into the domain when `wrap` is set (used
    for root-result hooks).
    """
    staged = [(a.name, eval_expr(a.expr, env)) for a in effects]
    out = dict(env.values)
    for name, value in staged:
        decl = spec.decl(name)
        if not decl.contains(value):
            if wrap and not decl.is_bool and isinstance(value, int):
                value = decl.wrap(value)
            else:
                raise DomainViolationError(name, value)
        out[name] = value
    return EnvState(tuple(out.items()))


def check_invariants(spec: EnvSpec, env: EnvState) -> list[str]:
    """Names of invariant predicates that evaluate to false."""
    return [name for name, pred in spec.invariants
            if not eval_predicate(pred, env)]


def check_outcome_exhaustiveness(spec: EnvSpec, leaf: str, behavior: ActionBehavior) -> None:
    """Verify at least one outcome guard holds for every valuation.

    Enumerates only the variables the guards mention (other variables cannot
    influence them). Skipped when the full declared domain product exceeds
    EXHAUSTIVENESS_ENUM_LIMIT; non-exhaustive actions then surface at run
    time as deadlocks.
    """
    if spec.domain_product_size() > EXHAUSTIVENESS_ENUM_LIMIT:
        return
    names = sorted(set().union(*[expr_variables(o.guard) for o in behavior.outcomes]))
    for valuation in spec.valuations(names):
        probe = EnvState(tuple(valuation.items()))
        if not any(eval_predicate(o.guard, probe) for o in behavior.outcomes):
            raise ExhaustivenessError(
                f"action {leaf!r}: no outcome guard holds for {valuation}")
