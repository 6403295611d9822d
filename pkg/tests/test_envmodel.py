import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from btv.envmodel import (
    Assignment,
    BinOp,
    BoolLit,
    DomainViolationError,
    EnvSpec,
    EnvState,
    ExhaustivenessError,
    ExpressionTypeError,
    IntLit,
    NotOp,
    UnknownVariableError,
    VarDecl,
    VarRef,
    ActionBehavior,
    ActionOutcome,
    apply_effects,
    check_invariants,
    check_outcome_exhaustiveness,
    eval_expr,
    eval_predicate,
    infer_type,
)
from btv.core import TickResult


def env_of(**values):
    return EnvState(tuple(values.items()))


def spec_of(*decls, invariants=(), hook=()):
    return EnvSpec(tuple(decls), tuple(invariants), tuple(hook))


DIST = VarDecl("distance_to_object", 0, 10, 10)


def test_eval_distance_threshold():
    pred = BinOp(">=", VarRef("distance_to_object"), IntLit(5))
    assert eval_predicate(pred, env_of(distance_to_object=10)) is True
    assert eval_predicate(pred, env_of(distance_to_object=4)) is False


def test_eval_boundary_of_ge():
    pred = BinOp(">=", VarRef("x"), IntLit(5))
    assert eval_predicate(pred, env_of(x=5)) is True


def test_eval_boolean_identity():
    pred = NotOp(BinOp("&&", VarRef("a"), VarRef("b")))
    assert eval_predicate(pred, env_of(a=True, b=False)) is True


def test_eval_unknown_variable():
    with pytest.raises(UnknownVariableError):
        eval_expr(VarRef("ghost"), env_of(x=1))


def test_apply_effects_decrement():
    spec = spec_of(DIST)
    out = apply_effects(spec, [Assignment("distance_to_object",
                                          BinOp("-", VarRef("distance_to_object"),
                                                IntLit(1)))],
                        env_of(distance_to_object=10))
    assert out.get("distance_to_object") == 9


def test_apply_effects_empty():
    env = env_of(distance_to_object=7)
    assert apply_effects(spec_of(DIST), [], env) == env


def test_apply_effects_simultaneous_read():
    spec = spec_of(VarDecl("x", 0, 9, 1), VarDecl("y", 0, 9, 2))
    out = apply_effects(spec, [Assignment("x", VarRef("y")),
                               Assignment("y", VarRef("x"))],
                        env_of(x=1, y=2))
    assert out.as_dict() == {"x": 2, "y": 1}


def test_apply_effects_does_not_mutate_input():
    spec = spec_of(VarDecl("x", 0, 9, 0))
    env = env_of(x=3)
    apply_effects(spec, [Assignment("x", IntLit(5))], env)
    assert env.get("x") == 3


def test_apply_effects_domain_violation():
    spec = spec_of(VarDecl("x", 0, 3, 0))
    with pytest.raises(DomainViolationError) as err:
        apply_effects(spec, [Assignment("x", BinOp("-", VarRef("x"), IntLit(1)))],
                      env_of(x=0))
    assert err.value.name == "x"
    assert err.value.value == -1


def test_apply_effects_wrap_mode():
    spec = spec_of(VarDecl("t", 0, 100, 0))
    out = apply_effects(spec, [Assignment("t", BinOp("+", VarRef("t"), IntLit(1)))],
                        env_of(t=100), wrap=True)
    assert out.get("t") == 0


def test_apply_effects_bool_assignment():
    spec = spec_of(VarDecl("f", None, None, False))
    out = apply_effects(spec, [Assignment("f", NotOp(VarRef("f")))], env_of(f=False))
    assert out.get("f") is True


def test_check_invariants_case_study():
    safe = ("safe", BinOp(">=", VarRef("distance_to_object"), IntLit(3)))
    spec = spec_of(DIST, invariants=[safe])
    assert check_invariants(spec, env_of(distance_to_object=4)) == []
    assert check_invariants(spec, env_of(distance_to_object=2)) == ["safe"]
    assert check_invariants(spec_of(DIST), env_of(distance_to_object=0)) == []


def test_exhaustiveness_rejects_false_guard():
    spec = spec_of(VarDecl("x", 0, 5, 0))
    behavior = ActionBehavior((ActionOutcome(BoolLit(False), TickResult.SUCCESS),))
    with pytest.raises(ExhaustivenessError):
        check_outcome_exhaustiveness(spec, "a1", behavior)


def test_exhaustiveness_accepts_threshold_split():
    spec = spec_of(VarDecl("x", 0, 5, 0))
    behavior = ActionBehavior((
        ActionOutcome(BinOp("<=", VarRef("x"), IntLit(2)), TickResult.SUCCESS),
        ActionOutcome(BinOp(">", VarRef("x"), IntLit(2)), TickResult.FAILURE),
    ))
    check_outcome_exhaustiveness(spec, "a1", behavior)


def test_exhaustiveness_gap_is_found():
    spec = spec_of(VarDecl("x", 0, 5, 0))
    behavior = ActionBehavior((
        ActionOutcome(BinOp("<", VarRef("x"), IntLit(2)), TickResult.SUCCESS),
        ActionOutcome(BinOp(">", VarRef("x"), IntLit(2)), TickResult.FAILURE),
    ))
    with pytest.raises(ExhaustivenessError) as err:
        check_outcome_exhaustiveness(spec, "a1", behavior)
    assert "'x': 2" in str(err.value)


def test_exhaustiveness_skipped_for_huge_domains():
    spec = spec_of(VarDecl("x", 0, 200, 0), VarDecl("y", 0, 200, 0),
                   VarDecl("z", 0, 200, 0))
    behavior = ActionBehavior((ActionOutcome(BoolLit(False), TickResult.SUCCESS),))
    # product 201^3 > 10^6: deferred to runtime, no error here
    check_outcome_exhaustiveness(spec, "a1", behavior)


def test_infer_type_rules():
    spec = spec_of(VarDecl("x", 0, 9, 0), VarDecl("f", None, None, True))
    assert infer_type(BinOp("+", VarRef("x"), IntLit(1)), spec) == "int"
    assert infer_type(BinOp("<", VarRef("x"), IntLit(1)), spec) == "bool"
    assert infer_type(BinOp("&&", VarRef("f"), BoolLit(True)), spec) == "bool"
    with pytest.raises(ExpressionTypeError):
        infer_type(BinOp("==", VarRef("f"), BoolLit(True)), spec)
    with pytest.raises(ExpressionTypeError):
        infer_type(BinOp("&&", VarRef("x"), VarRef("f")), spec)
    with pytest.raises(ExpressionTypeError):
        infer_type(NotOp(VarRef("x")), spec)
    with pytest.raises(UnknownVariableError) as err:
        infer_type(VarRef("ghost"), spec)
    assert "ghost" in str(err.value)


# --- evaluator vs CPython ----------------------------------------------------

int_exprs = st.recursive(
    st.one_of(st.integers(-20, 20).map(IntLit),
              st.sampled_from(["x", "y"]).map(VarRef)),
    lambda sub: st.tuples(st.sampled_from(["+", "-"]), sub, sub)
    .map(lambda t: BinOp(t[0], t[1], t[2])),
    max_leaves=8,
)

bool_exprs = st.recursive(
    st.one_of(st.booleans().map(BoolLit),
              st.tuples(st.sampled_from(["<", "<=", ">", ">=", "==", "!="]),
                        int_exprs, int_exprs).map(lambda t: BinOp(t[0], t[1], t[2]))),
    lambda sub: st.one_of(
        sub.map(NotOp),
        st.tuples(st.sampled_from(["&&", "||"]), sub, sub)
        .map(lambda t: BinOp(t[0], t[1], t[2]))),
    max_leaves=8,
)


def to_python(e) -> str:
    if isinstance(e, IntLit):
        return f"({e.value})"
    if isinstance(e, BoolLit):
        return str(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, NotOp):
        return f"(not {to_python(e.operand)})"
    op = {"&&": "and", "||": "or"}.get(e.op, e.op)
    return f"({to_python(e.left)} {op} {to_python(e.right)})"


@given(bool_exprs, st.integers(-20, 20), st.integers(-20, 20))
@settings(max_examples=300)
def test_eval_matches_cpython(expr, x, y):
    env = env_of(x=x, y=y)
    expected = eval(to_python(expr), {}, {"x": x, "y": y})
    assert eval_expr(expr, env) == expected
