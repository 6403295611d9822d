"""Parser and elaborator for the .bt model format.

The format mirrors the tree shape with nested braces and declares the
environment, leaf behaviors, invariants, and the root-result hook in
separate blocks:

    tree {
      root {
        sequence sequence_1 {
          condition condition_1;
          action action_1;
        }
      }
    }
    env { var distance_to_object: int in 0..10 = 10; }
    condition condition_1 { success_when: distance_to_object >= 5; }
    action action_1 {
      outcome SUCCESS when true { distance_to_object := distance_to_object - 1; }
    }
    on_root_result { }
    invariant safe { distance_to_object >= 3; }

Node ids are assigned breadth-first, left-to-right with root = 0; optional
`id = N` annotations are verified against that numbering, never trusted.
Line comments start with //.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources

from .core import (
    ModelError,
    NodeType,
    TickResult,
    TreeSpec,
    ValidationReport,
    validate_tree,
)
from .envmodel import (
    ActionBehavior,
    ActionOutcome,
    Assignment,
    BinOp,
    BoolLit,
    ConditionBehavior,
    EnvSpec,
    Expr,
    IntLit,
    LeafBehavior,
    NotOp,
    VarDecl,
    VarRef,
    check_outcome_exhaustiveness,
    infer_type,
)
from .semantics import Model


class ParseError(ModelError):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class ElaborationError(ModelError):
    def __init__(self, msg: str, report: ValidationReport | None = None):
        super().__init__(msg)
        self.report = report


KEYWORDS = {
    "tree", "root", "sequence", "fallback", "condition", "action",
    "env", "var", "int", "bool", "in", "outcome", "when",
    "on_root_result", "invariant", "success_when",
    "SUCCESS", "RUNNING", "FAILURE", "true", "false",
}

NODE_KINDS = {
    "root": NodeType.ROOT,
    "sequence": NodeType.SEQUENCE,
    "fallback": NodeType.FALLBACK,
    "condition": NodeType.CONDITION,
    "action": NodeType.ACTION,
}

_TWO_CHAR = (":=", "==", "!=", "<=", ">=", "&&", "||", "..")
_ONE_CHAR = "{}();:=<>+-!,"


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | punct | eof
    text: str
    line: int
    col: int

    @property
    def span(self) -> str:
        return f"{self.line}:{self.col}"


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR:
            tokens.append(Token("punct", two, line, start_col))
            i += 2
            col += 2
            continue
        if c in _ONE_CHAR:
            tokens.append(Token("punct", c, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(line, start_col, f"unexpected character {c!r}")
    tokens.append(Token("eof", "", line, col))
    return tokens


# --- syntax tree ------------------------------------------------------------

@dataclass
class NodeDecl:
    kind: NodeType
    name: str
    explicit_id: int | None
    children: list["NodeDecl"]
    span: str


@dataclass
class ParsedVar:
    decl: VarDecl
    span: str


@dataclass
class ConditionDecl:
    name: str
    success_when: Expr
    span: str


@dataclass
class ActionDecl:
    name: str
    outcomes: list[ActionOutcome]
    span: str


@dataclass
class ModelDocument:
    tree_root: NodeDecl
    variables: list[ParsedVar] = field(default_factory=list)
    conditions: list[ConditionDecl] = field(default_factory=list)
    actions: list[ActionDecl] = field(default_factory=list)
    hook: list[Assignment] = field(default_factory=list)
    invariants: list[tuple[str, Expr, str]] = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    # token helpers

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, expected: str) -> ParseError:
        tok = self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(tok.line, tok.col, f"expected {expected}, found {found}")

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == text or \
           tok.kind == "ident" and tok.text == text:
            return self.next()
        raise self.error(f"'{text}'")

    def expect_name(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise self.error("a name")
        return self.next()

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("punct", "ident") and tok.text == text

    def expect_int(self) -> int:
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        tok = self.peek()
        if tok.kind != "int":
            raise self.error("an integer")
        self.next()
        value = int(tok.text)
        return -value if neg else value

    # document

    def parse_document(self) -> ModelDocument:
        tree_root = None
        doc_parts = ModelDocument(tree_root=None)  # type: ignore[arg-type]
        declared_names: dict[str, str] = {}
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.text == "tree":
                if tree_root is not None:
                    raise ParseError(tok.line, tok.col, "duplicate tree block")
                tree_root = self.parse_tree_block(declared_names)
            elif tok.text == "env":
                self.parse_env_block(doc_parts)
            elif tok.text == "condition":
                doc_parts.conditions.append(self.parse_condition_block())
            elif tok.text == "action":
                doc_parts.actions.append(self.parse_action_block())
            elif tok.text == "on_root_result":
                if doc_parts.hook:
                    raise ParseError(tok.line, tok.col, "duplicate on_root_result block")
                self.next()
                self.expect("{")
                doc_parts.hook = self.parse_assignments()
                self.expect("}")
            elif tok.text == "invariant":
                self.next()
                name = self.expect_name()
                if any(name.text == existing for existing, _, _ in doc_parts.invariants):
                    raise ParseError(name.line, name.col,
                                     f"duplicate invariant name {name.text!r}")
                self.expect("{")
                pred = self.parse_expr()
                self.expect(";")
                self.expect("}")
                doc_parts.invariants.append((name.text, pred, name.span))
            else:
                raise self.error("'tree', 'env', 'condition', 'action', "
                                 "'on_root_result' or 'invariant'")
        if tree_root is None:
            tok = self.peek()
            raise ParseError(tok.line, tok.col, "expected a tree block")
        doc_parts.tree_root = tree_root
        return doc_parts

    # tree topology

    def parse_tree_block(self, declared: dict[str, str]) -> NodeDecl:
        self.expect("tree")
        self.expect("{")
        root_tok = self.expect("root")
        declared["root"] = root_tok.span
        explicit_id = self.parse_id_annotation()
        self.expect("{")
        children = []
        while not self.at("}"):
            children.append(self.parse_node_decl(declared))
        self.expect("}")
        self.expect("}")
        return NodeDecl(NodeType.ROOT, "root", explicit_id, children, root_tok.span)

    def parse_id_annotation(self) -> int | None:
        if self.peek().kind == "ident" and self.peek().text == "id":
            self.next()
            self.expect("=")
            return self.expect_int()
        return None

    def parse_node_decl(self, declared: dict[str, str]) -> NodeDecl:
        tok = self.peek()
        if tok.kind != "ident" or tok.text not in NODE_KINDS:
            if tok.kind == "ident" and tok.text not in KEYWORDS:
                raise ParseError(tok.line, tok.col, f"unknown node kind {tok.text!r}")
            raise self.error("a node kind (sequence, fallback, condition, action)")
        self.next()
        name = self.expect_name()
        if name.text in declared:
            raise ParseError(name.line, name.col,
                             f"duplicate node name {name.text!r} "
                             f"(first declared at {declared[name.text]})")
        declared[name.text] = name.span
        explicit_id = self.parse_id_annotation()
        children: list[NodeDecl] = []
        if self.at("{"):
            self.next()
            while not self.at("}"):
                children.append(self.parse_node_decl(declared))
            self.expect("}")
        else:
            self.expect(";")
        return NodeDecl(NODE_KINDS[tok.text], name.text, explicit_id, children, name.span)

    # environment

    def parse_env_block(self, doc: ModelDocument) -> None:
        self.expect("env")
        self.expect("{")
        while not self.at("}"):
            self.expect("var")
            name = self.expect_name()
            self.expect(":")
            if self.at("bool"):
                self.next()
                lo = hi = None
                self.expect("=")
                initial: int | bool = self.parse_bool_literal()
            elif self.at("int"):
                self.next()
                self.expect("in")
                lo = self.expect_int()
                self.expect("..")
                hi = self.expect_int()
                self.expect("=")
                initial = self.expect_int()
            else:
                raise self.error("'int' or 'bool'")
            self.expect(";")
            doc.variables.append(
                ParsedVar(VarDecl(name.text, lo, hi, initial), name.span))
        self.expect("}")

    def parse_bool_literal(self) -> bool:
        if self.at("true"):
            self.next()
            return True
        if self.at("false"):
            self.next()
            return False
        raise self.error("'true' or 'false'")

    # behaviors

    def parse_condition_block(self) -> ConditionDecl:
        self.expect("condition")
        name = self.expect_name()
        self.expect("{")
        self.expect("success_when")
        self.expect(":")
        pred = self.parse_expr()
        self.expect(";")
        self.expect("}")
        return ConditionDecl(name.text, pred, name.span)

    def parse_action_block(self) -> ActionDecl:
        self.expect("action")
        name = self.expect_name()
        self.expect("{")
        outcomes = []
        while not self.at("}"):
            self.expect("outcome")
            tok = self.peek()
            if tok.text not in ("SUCCESS", "RUNNING", "FAILURE"):
                raise self.error("'SUCCESS', 'RUNNING' or 'FAILURE'")
            self.next()
            result = TickResult(tok.text)
            self.expect("when")
            guard = self.parse_expr()
            effects: list[Assignment] = []
            if self.at("{"):
                self.next()
                effects = self.parse_assignments()
                self.expect("}")
            else:
                self.expect(";")
            outcomes.append(ActionOutcome(guard, result, tuple(effects)))
        self.expect("}")
        if not outcomes:
            raise ParseError(name.line, name.col,
                             f"action {name.text!r} declares no outcomes")
        return ActionDecl(name.text, outcomes, name.span)

    def parse_assignments(self) -> list[Assignment]:
        out = []
        while not self.at("}"):
            name = self.expect_name()
            self.expect(":=")
            expr = self.parse_expr()
            self.expect(";")
            out.append(Assignment(name.text, expr, name.span))
        return out

    # expressions: || < && < ! < comparison < additive < atom

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at("||"):
            tok = self.next()
            left = BinOp("||", left, self.parse_and(), tok.span)
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.at("&&"):
            tok = self.next()
            left = BinOp("&&", left, self.parse_not(), tok.span)
        return left

    def parse_not(self) -> Expr:
        if self.at("!"):
            tok = self.next()
            return NotOp(self.parse_not(), tok.span)
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("<", "<=", ">", ">=", "==", "!="):
            self.next()
            return BinOp(tok.text, left, self.parse_additive(), tok.span)
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_atom()
        while self.at("+") or self.at("-"):
            tok = self.next()
            left = BinOp(tok.text, left, self.parse_atom(), tok.span)
        return left

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return IntLit(int(tok.text), tok.span)
        if tok.text == "-":
            self.next()
            operand = self.parse_atom()
            if isinstance(operand, IntLit):
                return IntLit(-operand.value, tok.span)
            return BinOp("-", IntLit(0, tok.span), operand, tok.span)
        if tok.text == "true":
            self.next()
            return BoolLit(True, tok.span)
        if tok.text == "false":
            self.next()
            return BoolLit(False, tok.span)
        if tok.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            return VarRef(tok.text, tok.span)
        raise self.error("an expression")


def parse(text: str) -> ModelDocument:
    """Parse .bt source into a ModelDocument; diagnostics carry line:col."""
    return _Parser(text).parse_document()


# --- elaboration ------------------------------------------------------------

def build_tree(doc: ModelDocument) -> TreeSpec:
    """Assign breadth-first ids and build the TreeSpec (no validation)."""
    n_type: dict[str, NodeType] = {}
    parent: dict[str, str] = {}
    order: list[NodeDecl] = []
    queue = [doc.tree_root]
    while queue:
        decl = queue.pop(0)
        order.append(decl)
        n_type[decl.name] = decl.kind
        for child in decl.children:
            parent[child.name] = decl.name
            queue.append(child)
    n_id = {decl.name: i for i, decl in enumerate(order)}
    for decl in order:
        if decl.explicit_id is not None and decl.explicit_id != n_id[decl.name]:
            raise ElaborationError(
                f"{decl.span}: node {decl.name!r} declares id {decl.explicit_id}, "
                f"breadth-first numbering assigns {n_id[decl.name]}")
    return TreeSpec.build(n_type, n_id, parent)


def _build_env(doc: ModelDocument) -> EnvSpec:
    seen: dict[str, str] = {}
    for pv in doc.variables:
        if pv.decl.name in seen:
            raise ElaborationError(
                f"{pv.span}: duplicate variable {pv.decl.name!r} "
                f"(first declared at {seen[pv.decl.name]})")
        seen[pv.decl.name] = pv.span
        d = pv.decl
        if not d.is_bool:
            if d.lo > d.hi:
                raise ElaborationError(f"{pv.span}: empty domain {d.lo}..{d.hi}")
            if not d.contains(d.initial):
                raise ElaborationError(
                    f"{pv.span}: initial value {d.initial} outside {d.lo}..{d.hi}")
    return EnvSpec(
        variables=tuple(pv.decl for pv in doc.variables),
        invariants=tuple((name, pred) for name, pred, _ in doc.invariants),
        root_result_hook=tuple(doc.hook),
    )


def _check_assignment(env: EnvSpec, a: Assignment) -> None:
    decl = env.decl(a.name) if env.has(a.name) else None
    if decl is None:
        raise ElaborationError(f"{a.span}: assignment to undeclared variable {a.name!r}")
    expr_type = infer_type(a.expr, env)
    var_type = "bool" if decl.is_bool else "int"
    if expr_type != var_type:
        raise ElaborationError(
            f"{a.span}: {a.name} is {var_type} but the assigned expression is {expr_type}")


def elaborate(doc: ModelDocument) -> Model:
    """Type-check and cross-link a parsed document into a runnable Model.

    Fails on any error-level tree violation, on type errors in expressions,
    on missing or duplicated leaf behaviors, and on actions whose outcome
    guards are not exhaustive over the declared domains.
    """
    tree = build_tree(doc)
    report = validate_tree(tree)
    if not report.ok:
        lines = "; ".join(f"{tag}: {detail}" for tag, detail in report.violations)
        raise ElaborationError(f"tree is not well formed: {lines}", report)

    env = _build_env(doc)

    behaviors: dict[str, LeafBehavior] = {}
    for cond in doc.conditions:
        if tree.n_type.get(cond.name) is not NodeType.CONDITION:
            raise ElaborationError(
                f"{cond.span}: condition block for {cond.name!r}, which is not a "
                "condition node in the tree")
        if cond.name in behaviors:
            raise ElaborationError(f"{cond.span}: duplicate behavior for {cond.name!r}")
        if infer_type(cond.success_when, env) != "bool":
            raise ElaborationError(
                f"{cond.span}: success_when of {cond.name!r} is not boolean")
        behaviors[cond.name] = ConditionBehavior(cond.success_when)
    for act in doc.actions:
        if tree.n_type.get(act.name) is not NodeType.ACTION:
            raise ElaborationError(
                f"{act.span}: action block for {act.name!r}, which is not an "
                "action node in the tree")
        if act.name in behaviors:
            raise ElaborationError(f"{act.span}: duplicate behavior for {act.name!r}")
        for outcome in act.outcomes:
            if infer_type(outcome.guard, env) != "bool":
                raise ElaborationError(
                    f"{act.span}: an outcome guard of {act.name!r} is not boolean")
            for assignment in outcome.effects:
                _check_assignment(env, assignment)
        behaviors[act.name] = ActionBehavior(tuple(act.outcomes))

    for node in tree.node_order:
        ntype = tree.n_type[node]
        if ntype in (NodeType.CONDITION, NodeType.ACTION) and node not in behaviors:
            raise ElaborationError(
                f"{ntype.value.lower()} node {node!r} has no behavior block")

    for assignment in env.root_result_hook:
        _check_assignment(env, assignment)
    for name, pred, span in doc.invariants:
        if infer_type(pred, env) != "bool":
            raise ElaborationError(f"{span}: invariant {name!r} is not boolean")

    for node, behavior in behaviors.items():
        if isinstance(behavior, ActionBehavior):
            check_outcome_exhaustiveness(env, node, behavior)

    return Model(tree=tree, env=env, behaviors=behaviors)


def load_model(path) -> Model:
    """Parse and elaborate a model file; the Model remembers the source hash."""
    with open(path, "rb") as fh:
        data = fh.read()
    doc = parse(data.decode("utf-8"))
    model = elaborate(doc)
    return Model(model.tree, model.env, model.behaviors,
                 source_sha256=hashlib.sha256(data).hexdigest())


def bundled_model_path(name: str):
    """Filesystem path of a model shipped with the package (e.g. robot_wall.bt)."""
    return resources.files("btv.models").joinpath(name)


# --- rendering (round-trip support) ------------------------------------------

_PREC = {"||": 1, "&&": 2, "<": 4, "<=": 4, ">": 4, ">=": 4, "==": 4, "!=": 4,
         "+": 5, "-": 5}


def render_expr(e: Expr, parent_prec: int = 0, right: bool = False) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, NotOp):
        text = "!" + render_expr(e.operand, 3)
        return f"({text})" if parent_prec > 3 else text
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        text = (f"{render_expr(e.left, prec)} {e.op} "
                f"{render_expr(e.right, prec, right=True)}")
        if parent_prec > prec or (right and parent_prec == prec):
            return f"({text})"
        return text
    raise TypeError(f"not an expression node: {e!r}")


def render_model(model: Model) -> str:
    """Serialize an elaborated model back to .bt source."""
    tree = model.tree
    lines: list[str] = ["tree {"]

    def emit_node(node: str, indent: int) -> None:
        pad = "  " * indent
        kind = tree.n_type[node].value.lower()
        kids = tree.children[node]
        head = "root" if tree.n_type[node] is NodeType.ROOT else f"{kind} {node}"
        if kids:
            lines.append(f"{pad}{head} {{")
            for c in kids:
                emit_node(c, indent + 1)
            lines.append(f"{pad}}}")
        else:
            lines.append(f"{pad}{head};")

    emit_node(tree.root, 1)
    lines.append("}")

    lines.append("env {")
    for v in model.env.variables:
        if v.is_bool:
            init = "true" if v.initial else "false"
            lines.append(f"  var {v.name}: bool = {init};")
        else:
            lines.append(f"  var {v.name}: int in {v.lo}..{v.hi} = {v.initial};")
    lines.append("}")

    for node in tree.node_order:
        behavior = model.behaviors.get(node)
        if isinstance(behavior, ConditionBehavior):
            lines.append(f"condition {node} {{ success_when: "
                         f"{render_expr(behavior.success_when)}; }}")
        elif isinstance(behavior, ActionBehavior):
            lines.append(f"action {node} {{")
            for outcome in behavior.outcomes:
                head = f"  outcome {outcome.result.value} when {render_expr(outcome.guard)}"
                if outcome.effects:
                    body = " ".join(f"{a.name} := {render_expr(a.expr)};"
                                    for a in outcome.effects)
                    lines.append(f"{head} {{ {body} }}")
                else:
                    lines.append(f"{head};")
            lines.append("}")

    if model.env.root_result_hook:
        body = " ".join(f"{a.name} := {render_expr(a.expr)};"
                        for a in model.env.root_result_hook)
        lines.append(f"on_root_result {{ {body} }}")
    for name, pred in model.env.invariants:
        lines.append(f"invariant {name} {{ {render_expr(pred)}; }}")
    return "\n".join(lines) + "\n"
