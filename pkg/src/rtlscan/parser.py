"""Recursive-descent parser producing one :class:`Module` per ``module``.

Anything outside the supported subset aborts the file: the outcome is
marked ``skipped`` and carries a diagnostic naming the construct.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .lexer import (
    IDENTIFIER,
    KEYWORD,
    NUMBER,
    OPERATOR,
    STRING,
    Diagnostic,
    SourceLoc,
    Token,
    tokenize,
)
from .preprocess import Preprocessor
from .tree import (
    INTEGER,
    NET,
    REGISTER,
    AlwaysConstruct,
    BlockingAssign,
    Binary,
    Call,
    CaseItem,
    CaseStatement,
    Concat,
    ConditionalStatement,
    Const,
    ContinuousAssign,
    DataDecl,
    DeclaredId,
    EventControlStatement,
    Expr,
    IdRef,
    IndexedRef,
    Module,
    ModuleInstance,
    NonBlockingAssign,
    NullStatement,
    ParamDecl,
    PortConnection,
    Range,
    SensItem,
    SeqBlock,
    Stmt,
    StringLit,
    TaskCall,
    Ternary,
    Unary,
    const_value,
)


class ParseError(Exception):
    def __init__(self, loc: SourceLoc, message: str):
        super().__init__(f"{loc}: {message}")
        self.loc = loc
        self.message = message


@dataclass
class ParseOutcome:
    modules: list[Module] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    skipped: bool = False


_BINARY_PREC = {
    "||": 1,
    "&&": 2,
    "|": 3, "~|": 3,
    "^": 4, "~^": 4, "^~": 4,
    "&": 5, "~&": 5,
    "==": 6, "!=": 6, "===": 6, "!==": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, "<<<": 8, ">>>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
    "**": 11,
}
_UNARY_OPS = frozenset({"!", "~", "&", "|", "^", "-", "+", "~&", "~|", "~^", "^~"})
_DIRECTIONS = frozenset({"input", "output", "inout"})
_DATA_TYPES = {"wire": NET, "reg": REGISTER, "logic": REGISTER, "integer": INTEGER}
_ALWAYS = frozenset({"always", "always_comb", "always_ff", "always_latch"})
_CASES = frozenset({"case", "casez", "casex"})
_RADIX = {"b": 2, "o": 8, "d": 10, "h": 16}


def parse_number(text: str) -> tuple[int | None, str, int | None]:
    """Return (width, base, value) for a numeric literal.

    ``value`` is None for literals with x/z/? digits and for reals.
    """
    t = text.replace("_", "").replace(" ", "").replace("\t", "")
    if "'" not in t:
        if "." in t or "e" in t.lower():
            return None, "d", None
        return None, "d", int(t)
    size, _, rest = t.partition("'")
    width = int(size) if size else None
    if width == 0:
        width = None
    if len(rest) == 1:  # '0 '1 'x 'z fill literal
        return None, "b", 0 if rest == "0" else None
    if rest[0] in "sS":
        rest = rest[1:]
    base = rest[0].lower()
    digits = rest[1:].lower()
    if not digits or any(c in "xz?" for c in digits):
        return width, base, None
    try:
        value = int(digits, _RADIX[base])
    except ValueError:
        return width, base, None
    if width is not None:
        value &= (1 << width) - 1
    return width, base, value


class Parser:
    def __init__(self, tokens: list[Token], file: str = "<input>"):
        self.toks = tokens
        self.pos = 0
        self.file = file
        self._params: dict[str, int] = {}

    # -- token helpers ----------------------------------------------------------

    def peek(self, k: int = 0) -> Token | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, *lexemes: str) -> bool:
        t = self.peek()
        return t is not None and t.lexeme in lexemes and t.kind != STRING

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            raise ParseError(self._eof_loc(), "unexpected end of input")
        self.pos += 1
        return t

    def expect(self, lexeme: str) -> Token:
        t = self.peek()
        if t is None:
            raise ParseError(self._eof_loc(), f"expected '{lexeme}' but input ended")
        if t.lexeme != lexeme or t.kind == STRING:
            raise ParseError(t.loc, f"expected '{lexeme}', found '{t.lexeme}'")
        self.pos += 1
        return t

    def accept(self, lexeme: str) -> Token | None:
        if self.at(lexeme):
            return self.next()
        return None

    def ident(self) -> Token:
        t = self.next()
        if t.kind != IDENTIFIER:
            raise self._unexpected(t, "identifier")
        return t

    def _eof_loc(self) -> SourceLoc:
        if self.toks:
            return self.toks[-1].loc
        return SourceLoc(self.file, 1, 1)

    def _unexpected(self, t: Token, wanted: str) -> ParseError:
        if t.kind == KEYWORD:
            return ParseError(t.loc, f"unsupported construct '{t.lexeme}'")
        return ParseError(t.loc, f"expected {wanted}, found '{t.lexeme}'")

    # -- top level ----------------------------------------------------------------

    def parse_file(self) -> list[Module]:
        modules = []
        while self.peek() is not None:
            if self.accept(";"):
                continue
            if self.at("module", "macromodule"):
                modules.append(self.parse_module())
                continue
            t = self.next()
            raise ParseError(t.loc, f"unsupported construct '{t.lexeme}' outside module")
        return modules

    def parse_module(self) -> Module:
        start = self.next()
        name = self.ident().lexeme
        self._params = {}
        ports: list = []
        port_names: list[str] = []
        if self.accept("#"):
            self.expect("(")
            if not self.at(")"):
                ports.extend(self.parse_param_list())
            self.expect(")")
        if self.accept("("):
            if not self.at(")"):
                if self.at(*_DIRECTIONS):
                    for decl in self.parse_ansi_ports():
                        ports.append(decl)
                        port_names.extend(d.name for d in decl.ids)
                else:
                    port_names.append(self.ident().lexeme)
                    while self.accept(","):
                        port_names.append(self.ident().lexeme)
            self.expect(")")
        self.expect(";")
        items = []
        while not self.at("endmodule"):
            if self.peek() is None:
                raise ParseError(start.loc, f"module {name} has no endmodule")
            items.extend(self.parse_module_item())
        self.expect("endmodule")
        if self.accept(":"):
            self.ident()
        return Module(
            loc=start.loc,
            name=name,
            port_names=tuple(port_names),
            ports=tuple(ports),
            items=tuple(items),
        )

    def parse_ansi_ports(self) -> list[DataDecl]:
        decls = []
        while True:
            t = self.peek()
            if t is None or not self.at(*_DIRECTIONS):
                raise self._unexpected(t or self.next(), "port direction")
            decls.append(self.parse_data_decl(port=True))
            if not self.accept(","):
                break
        return decls

    def parse_param_list(self) -> list[ParamDecl]:
        out = []
        local = False
        while True:
            if self.at("parameter", "localparam"):
                local = self.next().lexeme == "localparam"
            self._skip_param_type()
            out.append(self._param_assign(local))
            if not self.accept(","):
                break
        return out

    def _skip_param_type(self) -> None:
        if self.at("integer"):
            self.next()
        if self.at("signed", "unsigned"):
            self.next()
        if self.at("["):
            self.parse_range()

    def _param_assign(self, local: bool) -> ParamDecl:
        name_tok = self.ident()
        self.expect("=")
        value = self.parse_expr()
        v = const_value(value, self._params)
        if v is not None:
            self._params[name_tok.lexeme] = v
        return ParamDecl(loc=name_tok.loc, name=name_tok.lexeme, value=value, local=local)

    def parse_module_item(self) -> list:
        t = self.peek()
        lex = t.lexeme
        if t.kind == KEYWORD:
            if lex in _DIRECTIONS or lex in _DATA_TYPES:
                decl = self.parse_data_decl(port=False)
                self.expect(";")
                return [decl]
            if lex in ("parameter", "localparam"):
                local = self.next().lexeme == "localparam"
                self._skip_param_type()
                decls = [self._param_assign(local)]
                while self.accept(","):
                    self._skip_param_type()
                    decls.append(self._param_assign(local))
                self.expect(";")
                return decls
            if lex == "assign":
                return self.parse_continuous_assign()
            if lex in _ALWAYS:
                kw = self.next()
                body = self.parse_statement()
                return [AlwaysConstruct(loc=kw.loc, always_kind=kw.lexeme, body=body)]
            raise ParseError(t.loc, f"unsupported construct '{lex}'")
        if lex == ";":
            self.next()
            return []
        if t.kind == IDENTIFIER:
            return self.parse_instances()
        raise ParseError(t.loc, f"unexpected '{lex}' in module body")

    def parse_data_decl(self, port: bool) -> DataDecl:
        first = self.peek()
        direction = None
        if self.at(*_DIRECTIONS):
            direction = self.next().lexeme
        storage = None
        if self.at(*_DATA_TYPES):
            storage = _DATA_TYPES[self.next().lexeme]
        implicit = storage is None
        if storage is None:
            if direction is None:
                raise self._unexpected(self.next(), "data type")
            storage = NET
        if self.at("signed", "unsigned"):
            self.next()
        rng = None
        width = None
        if self.at("["):
            rng = self.parse_range()
            msb = const_value(rng.left, self._params)
            lsb = const_value(rng.right, self._params)
            if msb is not None and lsb is not None and rng.op == ":":
                width = (msb, lsb)
        if rng is None:
            bits = 32 if storage == INTEGER else 1
        else:
            bits = abs(width[0] - width[1]) + 1 if width is not None else None
        ids = []
        while True:
            name_tok = self.ident()
            unpacked = []
            while self.at("["):
                unpacked.append(self.parse_range())
            init = None
            if self.accept("="):
                init = self.parse_expr()
            ids.append(
                DeclaredId(
                    name=name_tok.lexeme,
                    loc=name_tok.loc,
                    is_variable=storage in (REGISTER, INTEGER),
                    width_bits=bits,
                    init=init,
                    unpacked=tuple(unpacked),
                )
            )
            nxt = self.peek(1)
            if not self.at(","):
                break
            # in an ANSI header a new direction starts a new declaration
            if port and nxt is not None and nxt.lexeme in _DIRECTIONS:
                break
            self.next()
        return DataDecl(
            loc=first.loc,
            storage=storage,
            direction=direction,
            width=width,
            ids=tuple(ids),
            range_expr=rng,
            implicit=implicit and not port,
        )

    def parse_range(self) -> Range:
        lb = self.expect("[")
        left = self.parse_expr()
        op = ":"
        if self.at(":", "+:", "-:"):
            op = self.next().lexeme
            right = self.parse_expr()
        else:
            right = left
            op = "index"
        self.expect("]")
        return Range(loc=lb.loc, op=op, left=left, right=right)

    def parse_continuous_assign(self) -> list[ContinuousAssign]:
        self.expect("assign")
        out = []
        while True:
            lhs = self.parse_lvalue()
            self.expect("=")
            rhs = self.parse_expr()
            out.append(ContinuousAssign(loc=lhs.loc, lhs=lhs, rhs=rhs))
            if not self.accept(","):
                break
        self.expect(";")
        return out

    def parse_instances(self) -> list[ModuleInstance]:
        mod_tok = self.ident()
        params: tuple[PortConnection, ...] = ()
        if self.accept("#"):
            self.expect("(")
            params = self.parse_connections()
            self.expect(")")
        out = []
        while True:
            inst_tok = self.next()
            if inst_tok.kind != IDENTIFIER:
                raise ParseError(
                    inst_tok.loc,
                    f"unsupported statement starting with '{mod_tok.lexeme}' in module body",
                )
            if self.at("["):
                raise ParseError(self.peek().loc, "unsupported construct 'instance array'")
            self.expect("(")
            conns = self.parse_connections()
            self.expect(")")
            out.append(
                ModuleInstance(
                    loc=mod_tok.loc,
                    module_name=mod_tok.lexeme,
                    instance_name=inst_tok.lexeme,
                    connections=conns,
                    params=params,
                )
            )
            if not self.accept(","):
                break
        self.expect(";")
        return out

    def parse_connections(self) -> tuple[PortConnection, ...]:
        conns = []
        if self.at(")"):
            return ()
        while True:
            if self.accept("."):
                if self.at("*"):
                    raise ParseError(self.peek().loc, "unsupported construct '.*'")
                port = self.ident().lexeme
                expr = None
                if self.accept("("):
                    if not self.at(")"):
                        expr = self.parse_expr()
                    self.expect(")")
                conns.append(PortConnection(port=port, expr=expr))
            elif self.at(",", ")"):
                conns.append(PortConnection(port=None, expr=None))
            else:
                conns.append(PortConnection(port=None, expr=self.parse_expr()))
            if not self.accept(","):
                break
        return tuple(conns)

    # -- statements ---------------------------------------------------------------

    def parse_statement(self) -> Stmt:
        t = self.peek()
        if t is None:
            raise ParseError(self._eof_loc(), "expected statement but input ended")
        lex = t.lexeme
        if t.kind == KEYWORD:
            if lex == "begin":
                return self.parse_block()
            if lex in ("unique", "priority"):
                self.next()
                if not self.at("if", *_CASES):
                    raise self._unexpected(self.next(), "'if' or 'case'")
                return self.parse_statement()
            if lex == "if":
                return self.parse_if()
            if lex in _CASES:
                return self.parse_case()
            raise ParseError(t.loc, f"unsupported construct '{lex}'")
        if lex == "@" and t.kind != STRING:
            return self.parse_event_control()
        if lex == ";" and t.kind != STRING:
            self.next()
            return NullStatement(loc=t.loc)
        if lex == "#" and t.kind != STRING:
            raise ParseError(t.loc, "unsupported construct 'delay control'")
        if t.kind == IDENTIFIER and lex.startswith("$"):
            return self.parse_task_call()
        return self.parse_assignment()

    def parse_block(self) -> SeqBlock:
        begin = self.expect("begin")
        label = None
        if self.accept(":"):
            label = self.ident().lexeme
        stmts = []
        while not self.at("end"):
            if self.peek() is None:
                raise ParseError(begin.loc, "begin without matching end")
            stmts.append(self.parse_statement())
        self.expect("end")
        if self.accept(":"):
            self.ident()
        return SeqBlock(loc=begin.loc, stmts=tuple(stmts), label=label)

    def parse_if(self) -> ConditionalStatement:
        kw = self.expect("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then_stmt = self.parse_statement()
        else_stmt = None
        if self.accept("else"):
            else_stmt = self.parse_statement()
        return ConditionalStatement(
            loc=kw.loc, if_expr=cond, then_stmt=then_stmt, else_stmt=else_stmt
        )

    def parse_case(self) -> CaseStatement:
        kw = self.next()
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        items = []
        while not self.at("endcase"):
            t = self.peek()
            if t is None:
                raise ParseError(kw.loc, "case without endcase")
            if self.accept("default"):
                self.accept(":")
                stmt = self.parse_statement()
                items.append(CaseItem(loc=t.loc, labels=(), stmt=stmt, is_default=True))
                continue
            labels = [self.parse_expr()]
            while self.accept(","):
                labels.append(self.parse_expr())
            self.expect(":")
            stmt = self.parse_statement()
            items.append(CaseItem(loc=t.loc, labels=tuple(labels), stmt=stmt))
        self.expect("endcase")
        return CaseStatement(
            loc=kw.loc, case_kind=kw.lexeme, cond_expr=cond, case_items=tuple(items)
        )

    def parse_event_control(self) -> EventControlStatement:
        at = self.expect("@")
        items: list[SensItem] = []
        star = False
        if self.accept("*"):
            star = True
        elif self.accept("("):
            if self.accept("*"):
                star = True
            else:
                while True:
                    edge = None
                    if self.at("posedge", "negedge"):
                        edge = self.next().lexeme
                    expr = self.parse_expr()
                    items.append(SensItem(edge=edge, expr=expr))
                    if not (self.accept("or") or self.accept(",")):
                        break
            self.expect(")")
        else:
            ref = self.ident()
            items.append(SensItem(edge=None, expr=IdRef(loc=ref.loc, name=ref.lexeme)))
        body = self.parse_statement()
        return EventControlStatement(loc=at.loc, sens_list=tuple(items), star=star, body=body)

    def parse_task_call(self) -> TaskCall:
        name = self.next()
        args: list[Expr] = []
        if self.accept("("):
            if not self.at(")"):
                args.append(self.parse_expr())
                while self.accept(","):
                    args.append(self.parse_expr())
            self.expect(")")
        self.expect(";")
        return TaskCall(loc=name.loc, name=name.lexeme, args=tuple(args))

    def parse_assignment(self) -> Stmt:
        lhs = self.parse_lvalue()
        t = self.next()
        if t.lexeme == "=" and t.kind == OPERATOR:
            cls = BlockingAssign
        elif t.lexeme == "<=" and t.kind == OPERATOR:
            cls = NonBlockingAssign
        else:
            raise ParseError(t.loc, f"expected assignment, found '{t.lexeme}'")
        if self.at("#"):
            raise ParseError(self.peek().loc, "unsupported construct 'intra-assignment delay'")
        rhs = self.parse_expr()
        self.expect(";")
        return cls(loc=lhs.loc, lhs=lhs, rhs=rhs)

    def parse_lvalue(self) -> Expr:
        t = self.peek()
        if t is None:
            raise ParseError(self._eof_loc(), "expected assignment target")
        if t.lexeme == "{" and t.kind != STRING:
            node = self.parse_concat()
            for part in node.parts:
                if not isinstance(part, (IdRef, IndexedRef, Concat)):
                    raise ParseError(part.loc, "invalid assignment target")
            return node
        if t.kind != IDENTIFIER:
            raise self._unexpected(self.next(), "assignment target")
        node = self.parse_primary()
        if not isinstance(node, (IdRef, IndexedRef)):
            raise ParseError(t.loc, "invalid assignment target")
        return node

    # -- expressions --------------------------------------------------------------

    def parse_expr(self) -> Expr:
        cond = self.parse_binary(1)
        if self.at("?"):
            self.next()
            then_e = self.parse_expr()
            self.expect(":")
            else_e = self.parse_expr()
            return Ternary(loc=cond.loc, cond=cond, then_e=then_e, else_e=else_e)
        return cond

    def parse_binary(self, min_prec: int) -> Expr:
        lhs = self.parse_unary()
        while True:
            t = self.peek()
            if t is None or t.kind != OPERATOR:
                return lhs
            prec = _BINARY_PREC.get(t.lexeme)
            if prec is None or prec < min_prec:
                return lhs
            self.next()
            # ** is right associative, the rest left associative
            rhs = self.parse_binary(prec if t.lexeme == "**" else prec + 1)
            lhs = Binary(loc=lhs.loc, op=t.lexeme, lhs=lhs, rhs=rhs)

    def parse_unary(self) -> Expr:
        t = self.peek()
        if t is not None and t.kind == OPERATOR and t.lexeme in _UNARY_OPS:
            self.next()
            operand = self.parse_unary()
            return Unary(loc=t.loc, op=t.lexeme, operand=operand)
        return self.parse_primary()

    def parse_concat(self) -> Concat:
        lb = self.expect("{")
        first = self.parse_expr()
        if self.at("{"):
            inner = self.parse_concat()
            self.expect("}")
            return Concat(loc=lb.loc, parts=inner.parts, repeat=first)
        parts = [first]
        while self.accept(","):
            parts.append(self.parse_expr())
        self.expect("}")
        return Concat(loc=lb.loc, parts=tuple(parts))

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t is None:
            raise ParseError(self._eof_loc(), "expected expression but input ended")
        if t.kind == NUMBER:
            self.next()
            width, base, value = parse_number(t.lexeme)
            return Const(
                loc=t.loc, text=t.lexeme, width=width, base=base, value=value, macro=t.macro
            )
        if t.kind == STRING:
            self.next()
            return StringLit(loc=t.loc, text=t.lexeme)
        if t.lexeme == "(":
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.lexeme == "{":
            return self.parse_concat()
        if t.kind == IDENTIFIER:
            self.next()
            name = t.lexeme
            while self.at(".", "::"):
                sep = self.next().lexeme
                name += sep + self.ident().lexeme
            if self.at("("):
                self.next()
                args: list[Expr] = []
                if not self.at(")"):
                    args.append(self.parse_expr())
                    while self.accept(","):
                        args.append(self.parse_expr())
                self.expect(")")
                return Call(loc=t.loc, name=name, args=tuple(args))
            ref = IdRef(loc=t.loc, name=name, macro=t.macro)
            if not self.at("["):
                return ref
            selects = []
            start = self.pos
            while self.at("["):
                rng = self.parse_range()
                selects.append(rng.left if rng.op == "index" else rng)
            text = "".join(tok.lexeme for tok in self.toks[start : self.pos])
            return IndexedRef(loc=t.loc, base=ref, selects=tuple(selects), index_text=text)
        raise self._unexpected(self.next(), "expression")


def parse(tokens: list[Token], file: str = "<input>") -> ParseOutcome:
    """Parse a preprocessed token stream."""
    outcome = ParseOutcome()
    try:
        outcome.modules = Parser(tokens, file).parse_file()
    except ParseError as exc:
        outcome.diagnostics.append(Diagnostic(exc.loc, exc.message))
        outcome.modules = []
        outcome.skipped = True
    except RecursionError:
        loc = tokens[0].loc if tokens else SourceLoc(file, 1, 1)
        outcome.diagnostics.append(Diagnostic(loc, "expression nesting too deep"))
        outcome.modules = []
        outcome.skipped = True
    return outcome


def parse_source(
    source: str,
    file: str = "<input>",
    macros: dict[str, list[Token]] | None = None,
    include_dirs: list[str] | None = None,
    preprocessor: Preprocessor | None = None,
) -> ParseOutcome:
    """Tokenize, preprocess and parse ``source``."""
    diags: list[Diagnostic] = []
    tokens = tokenize(source, file, diags)
    pp = preprocessor or Preprocessor(macros, include_dirs, diags)
    pp.diagnostics = diags
    pp._stack.append(os.path.normpath(file))
    try:
        tokens = pp.run(tokens)
    finally:
        pp._stack.pop()
    outcome = parse(tokens, file)
    outcome.diagnostics[:0] = diags
    return outcome


def parse_file(path: str, **kwargs) -> ParseOutcome:
    """Read and parse one file; undecodable files are skipped."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        return ParseOutcome(
            diagnostics=[Diagnostic(SourceLoc(path, 1, 1), f"cannot read file: {exc}")],
            skipped=True,
        )
    return parse_bytes(data, path, **kwargs)


def parse_bytes(data: bytes, file: str, **kwargs) -> ParseOutcome:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        return ParseOutcome(
            diagnostics=[Diagnostic(SourceLoc(file, 1, 1), f"file is not UTF-8: {exc.reason}")],
            skipped=True,
        )
    return parse_source(text, file, **kwargs)
