"""Syntax tree, visitor traversal and per-module symbol tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .lexer import Diagnostic, SourceLoc

REGISTER = "register"
NET = "net"
INTEGER = "integer"


@dataclass(frozen=True, eq=False, kw_only=True)
class Node:
    """Base of every tree node.  Nodes compare by identity."""

    loc: SourceLoc

    def children(self) -> tuple[Node, ...]:
        return ()

    @property
    def kind(self) -> str:
        return type(self).__name__


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True, eq=False, kw_only=True)
class Expr(Node):
    pass


@dataclass(frozen=True, eq=False, kw_only=True)
class IdRef(Expr):
    name: str
    macro: str | None = None


@dataclass(frozen=True, eq=False, kw_only=True)
class IndexedRef(Expr):
    base: IdRef
    selects: tuple[Expr, ...]
    index_text: str

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def full_name(self) -> str:
        return self.base.name + self.index_text

    def children(self):
        return (self.base, *self.selects)


@dataclass(frozen=True, eq=False, kw_only=True)
class Const(Expr):
    text: str
    width: int | None
    base: str  # one of b, o, d, h
    value: int | None  # None when the literal has x/z digits or is not integral
    macro: str | None = None

    @property
    def is_constant(self) -> bool:
        return self.value is not None


@dataclass(frozen=True, eq=False, kw_only=True)
class StringLit(Expr):
    text: str


@dataclass(frozen=True, eq=False, kw_only=True)
class Unary(Expr):
    op: str
    operand: Expr

    def children(self):
        return (self.operand,)


@dataclass(frozen=True, eq=False, kw_only=True)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True, eq=False, kw_only=True)
class Ternary(Expr):
    cond: Expr
    then_e: Expr
    else_e: Expr

    def children(self):
        return (self.cond, self.then_e, self.else_e)


@dataclass(frozen=True, eq=False, kw_only=True)
class Concat(Expr):
    parts: tuple[Expr, ...]
    repeat: Expr | None = None

    def children(self):
        return (self.repeat, *self.parts) if self.repeat is not None else self.parts


@dataclass(frozen=True, eq=False, kw_only=True)
class Range(Expr):
    """``[msb:lsb]``, ``[base+:width]`` or ``[base-:width]`` part select."""

    op: str
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, eq=False, kw_only=True)
class Call(Expr):
    """Function-call-shaped expression; the callee is not resolved."""

    name: str
    args: tuple[Expr, ...]

    def children(self):
        return self.args


# -- statements ----------------------------------------------------------------


@dataclass(frozen=True, eq=False, kw_only=True)
class Stmt(Node):
    pass


@dataclass(frozen=True, eq=False, kw_only=True)
class SeqBlock(Stmt):
    stmts: tuple[Stmt, ...]
    label: str | None = None

    def children(self):
        return self.stmts


@dataclass(frozen=True, eq=False, kw_only=True)
class ConditionalStatement(Stmt):
    if_expr: Expr
    then_stmt: Stmt | None
    else_stmt: Stmt | None = None

    def children(self):
        return tuple(c for c in (self.if_expr, self.then_stmt, self.else_stmt) if c is not None)


@dataclass(frozen=True, eq=False, kw_only=True)
class CaseItem(Node):
    labels: tuple[Expr, ...]  # empty for the default item
    stmt: Stmt | None
    is_default: bool = False

    def children(self):
        return (*self.labels, self.stmt) if self.stmt is not None else self.labels


@dataclass(frozen=True, eq=False, kw_only=True)
class CaseStatement(Stmt):
    case_kind: str  # case, casez or casex
    cond_expr: Expr
    case_items: tuple[CaseItem, ...]

    @property
    def has_default(self) -> bool:
        return any(item.is_default for item in self.case_items)

    def children(self):
        return (self.cond_expr, *self.case_items)


@dataclass(frozen=True, eq=False, kw_only=True)
class Assignment(Stmt):
    """Procedural assignment; shared handler hook for both flavours."""

    lhs: Expr
    rhs: Expr

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True, eq=False, kw_only=True)
class BlockingAssign(Assignment):
    pass


@dataclass(frozen=True, eq=False, kw_only=True)
class NonBlockingAssign(Assignment):
    pass


@dataclass(frozen=True, eq=False, kw_only=True)
class SensItem:
    edge: str | None  # posedge, negedge or None
    expr: Expr

    @property
    def names(self) -> list[str]:
        return [r.name for r in iter_idrefs(self.expr)]


@dataclass(frozen=True, eq=False, kw_only=True)
class EventControlStatement(Stmt):
    sens_list: tuple[SensItem, ...]
    star: bool
    body: Stmt | None

    def children(self):
        return (self.body,) if self.body is not None else ()


@dataclass(frozen=True, eq=False, kw_only=True)
class NullStatement(Stmt):
    pass


@dataclass(frozen=True, eq=False, kw_only=True)
class TaskCall(Stmt):
    name: str
    args: tuple[Expr, ...]

    def children(self):
        return self.args


# -- module items ----------------------------------------------------------------


@dataclass(frozen=True, eq=False, kw_only=True)
class DeclaredId:
    name: str
    loc: SourceLoc
    is_variable: bool
    width_bits: int | None
    init: Expr | None = None
    unpacked: tuple[Range, ...] = ()


@dataclass(frozen=True, eq=False, kw_only=True)
class DataDecl(Node):
    storage: str  # register, net or integer
    direction: str | None  # input, output, inout or None
    width: tuple[int, int] | None
    ids: tuple[DeclaredId, ...]
    range_expr: Range | None = None
    # set when a port direction had no explicit data type
    implicit: bool = False

    @property
    def is_register(self) -> bool:
        return self.storage == REGISTER

    def children(self):
        return tuple(d.init for d in self.ids if d.init is not None)


@dataclass(frozen=True, eq=False, kw_only=True)
class ParamDecl(Node):
    name: str
    value: Expr
    local: bool

    def children(self):
        return (self.value,)


@dataclass(frozen=True, eq=False, kw_only=True)
class AlwaysConstruct(Node):
    always_kind: str
    body: Stmt | None

    @property
    def sens_list(self) -> tuple[SensItem, ...]:
        if isinstance(self.body, EventControlStatement):
            return self.body.sens_list
        return ()

    @property
    def sens_names(self) -> list[str]:
        return [n for item in self.sens_list for n in item.names]

    def children(self):
        return (self.body,) if self.body is not None else ()


@dataclass(frozen=True, eq=False, kw_only=True)
class ContinuousAssign(Node):
    lhs: Expr
    rhs: Expr

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True, eq=False, kw_only=True)
class PortConnection:
    port: str | None  # None for positional connections
    expr: Expr | None


@dataclass(frozen=True, eq=False, kw_only=True)
class ModuleInstance(Node):
    module_name: str
    instance_name: str
    connections: tuple[PortConnection, ...]
    params: tuple[PortConnection, ...] = ()

    def children(self):
        exprs = [c.expr for c in self.params if c.expr is not None]
        exprs += [c.expr for c in self.connections if c.expr is not None]
        return tuple(exprs)


@dataclass(frozen=True, eq=False, kw_only=True)
class Module(Node):
    name: str
    port_names: tuple[str, ...]
    ports: tuple[Node, ...]  # ANSI port declarations and header parameters
    items: tuple[Node, ...]

    def children(self):
        return (*self.ports, *self.items)


# -- traversal ---------------------------------------------------------------------

_HANDLERS: dict[tuple[type, type], object] = {}


def _handler(visitor_cls: type, node_cls: type):
    key = (visitor_cls, node_cls)
    try:
        return _HANDLERS[key]
    except KeyError:
        pass
    found = None
    for klass in node_cls.__mro__:
        fn = getattr(visitor_cls, "visit_" + klass.__name__, None)
        if fn is not None:
            found = fn
            break
        if klass is Node:
            break
    _HANDLERS[key] = found
    return found


class Visitor:
    """Depth-first visitor.

    A ``visit_<Kind>`` method, looked up along the node class's MRO (so
    ``visit_Assignment`` catches both assignment flavours), takes over the
    node and decides which children to descend into via ``self.visit``.
    Nodes without a handler have their children visited in source order.
    """

    def __init__(self) -> None:
        self.visits = 0
        self.handled = 0

    def visit(self, node: Node | None) -> None:
        if node is None:
            return
        self.visits += 1
        fn = _handler(type(self), type(node))
        if fn is None:
            for child in node.children():
                self.visit(child)
        else:
            self.handled += 1
            fn(self, node)

    def generic_visit(self, node: Node) -> None:
        for child in node.children():
            self.visit(child)


def accept(root: Node, visitor: Visitor) -> Visitor:
    visitor.visit(root)
    return visitor


def walk(node: Node) -> Iterator[Node]:
    """Pre-order iteration over ``node`` and all of its descendants."""
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(cur.children()))


def count_nodes(node: Node) -> int:
    return sum(1 for _ in walk(node))


def iter_idrefs(expr: Node | None) -> Iterator[IdRef]:
    if expr is None:
        return
    for n in walk(expr):
        if isinstance(n, IdRef):
            yield n


# -- symbol table --------------------------------------------------------------------


@dataclass
class Scope:
    module: str
    ids: dict[str, DeclaredId] = field(default_factory=dict)
    storage: dict[str, str] = field(default_factory=dict)
    params: dict[str, ParamDecl] = field(default_factory=dict)
    param_values: dict[str, int] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def lookup(self, name: str) -> DeclaredId | None:
        return self.ids.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.ids

    def resolves(self, name: str) -> bool:
        return name in self.ids or name in self.params


def const_value(expr: Expr | None, params: dict[str, int] | None = None) -> int | None:
    """Fold a constant integer expression, or None if it is not constant."""
    if expr is None:
        return None
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, IdRef):
        return (params or {}).get(expr.name)
    if isinstance(expr, Unary):
        v = const_value(expr.operand, params)
        if v is None:
            return None
        if expr.op == "-":
            return -v
        if expr.op == "+":
            return v
        return None
    if isinstance(expr, Binary):
        a = const_value(expr.lhs, params)
        b = const_value(expr.rhs, params)
        if a is None or b is None:
            return None
        try:
            match expr.op:
                case "+":
                    return a + b
                case "-":
                    return a - b
                case "*":
                    return a * b
                case "/":
                    return a // b if b else None
                case "%":
                    return a % b if b else None
                case "**":
                    return a**b if 0 <= b <= 64 else None
                case "<<":
                    return a << b if 0 <= b <= 64 else None
                case ">>":
                    return a >> b if 0 <= b <= 64 else None
        except (ValueError, OverflowError):
            return None
        return None
    return None


def build_scope(module: Module) -> Scope:
    """Collect ports, declarations and parameters of one module."""
    scope = Scope(module.name)
    decls = []
    for node in (*module.ports, *module.items):
        if isinstance(node, ParamDecl):
            if node.name in scope.params:
                scope.diagnostics.append(
                    Diagnostic(node.loc, f"duplicate parameter {node.name}")
                )
                continue
            scope.params[node.name] = node
            v = const_value(node.value, scope.param_values)
            if v is not None:
                scope.param_values[node.name] = v
        elif isinstance(node, DataDecl):
            decls.append(node)
    for decl in decls:
        for did in decl.ids:
            prev = scope.ids.get(did.name)
            if prev is not None:
                # non-ANSI style: "output x;" followed by "reg x;"
                if scope.storage.get(did.name) == "implicit" and not decl.implicit:
                    scope.ids[did.name] = did
                    scope.storage[did.name] = decl.storage
                    continue
                if decl.implicit:
                    continue
                scope.diagnostics.append(
                    Diagnostic(did.loc, f"duplicate declaration of {did.name}")
                )
                continue
            scope.ids[did.name] = did
            scope.storage[did.name] = "implicit" if decl.implicit else decl.storage
    for name, kind in scope.storage.items():
        if kind == "implicit":
            scope.storage[name] = NET
    return scope


# -- rendering -------------------------------------------------------------------------

_PREC = {
    "||": 1, "&&": 2, "|": 3, "~|": 3, "^": 4, "~^": 4, "^~": 4, "&": 5, "~&": 5,
    "==": 6, "!=": 6, "===": 6, "!==": 6, "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, "<<<": 8, ">>>": 8, "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
    "**": 11,
}


def expr_text(expr: Node | None) -> str:
    """Compact source-like text of an expression."""
    return _text(expr, 0)


def _text(e: Node | None, parent_prec: int) -> str:
    if e is None:
        return ""
    if isinstance(e, IdRef):
        return e.name
    if isinstance(e, IndexedRef):
        return e.full_name
    if isinstance(e, Const):
        return e.text
    if isinstance(e, StringLit):
        return e.text
    if isinstance(e, Unary):
        return e.op + _text(e.operand, 12)
    if isinstance(e, Binary):
        p = _PREC.get(e.op, 0)
        s = f"{_text(e.lhs, p)} {e.op} {_text(e.rhs, p + 1)}"
        return f"({s})" if p < parent_prec else s
    if isinstance(e, Ternary):
        s = f"{_text(e.cond, 1)} ? {_text(e.then_e, 0)} : {_text(e.else_e, 0)}"
        return f"({s})" if parent_prec > 0 else s
    if isinstance(e, Concat):
        inner = ", ".join(_text(p, 0) for p in e.parts)
        if e.repeat is not None:
            return "{" + _text(e.repeat, 0) + "{" + inner + "}}"
        return "{" + inner + "}"
    if isinstance(e, Range):
        sep = ":" if e.op in (":", "index") else e.op
        return f"{_text(e.left, 0)}{sep}{_text(e.right, 0)}"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(_text(a, 0) for a in e.args)})"
    return e.kind
