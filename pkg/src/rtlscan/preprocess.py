"""Token-level macro expansion and include resolution.

Only object-like macros are supported.  Conditional compilation
(```ifdef`` and friends) is honoured because real RTL guards
almost every include with it.
"""

from __future__ import annotations

import os
from dataclasses import replace

from .lexer import IDENTIFIER, STRING, Diagnostic, SourceLoc, Token, tokenize

# directives whose remaining line carries no tokens we want
_LINE_DIRECTIVES = frozenset(
    {
        "`timescale", "`default_nettype", "`resetall", "`celldefine",
        "`endcelldefine", "`line", "`pragma", "`nounconnected_drive",
        "`unconnected_drive", "`begin_keywords", "`end_keywords",
    }
)
_CONDITIONALS = frozenset({"`ifdef", "`ifndef", "`elsif", "`else", "`endif"})


def _rest_of_line(tokens: list[Token], i: int) -> int:
    """Index of the first token after ``tokens[i]``'s line."""
    line = tokens[i].loc.line
    file = tokens[i].loc.file
    j = i + 1
    while j < len(tokens) and tokens[j].loc.line == line and tokens[j].loc.file == file:
        j += 1
    return j


class Preprocessor:
    """Expands macros; holds the macro table and the include graph."""

    def __init__(
        self,
        macros: dict[str, list[Token]] | None = None,
        include_dirs: list[str] | None = None,
        diagnostics: list[Diagnostic] | None = None,
    ):
        self.macros: dict[str, list[Token]] = macros if macros is not None else {}
        self.include_dirs = list(include_dirs or [])
        self.diagnostics: list[Diagnostic] = diagnostics if diagnostics is not None else []
        self.included: set[str] = set()
        self._stack: list[str] = []

    def run(self, tokens: list[Token]) -> list[Token]:
        out: list[Token] = []
        # each entry: (currently emitting, some branch already taken)
        cond: list[tuple[bool, bool]] = []
        active = True
        i = 0
        n = len(tokens)
        while i < n:
            tok = tokens[i]
            lex = tok.lexeme
            if tok.kind == IDENTIFIER and lex.startswith("`"):
                if lex in _CONDITIONALS:
                    i = self._conditional(tokens, i, cond)
                    active = all(c[0] for c in cond)
                    continue
                if not active:
                    i += 1
                    continue
                if lex == "`define":
                    i = self._define(tokens, i)
                    continue
                if lex == "`undef":
                    if i + 1 < n:
                        self.macros.pop(tokens[i + 1].lexeme, None)
                    i += 2
                    continue
                if lex == "`include":
                    out.extend(self._include(tokens, i))
                    i += 2
                    continue
                if lex in _LINE_DIRECTIVES:
                    i = _rest_of_line(tokens, i)
                    continue
                out.extend(self._expand(tok))
                i += 1
                continue
            if active:
                out.append(tok)
            i += 1
        if cond:
            self.diagnostics.append(
                Diagnostic(tokens[-1].loc, "unterminated `ifdef block")
            )
        return out

    def _conditional(self, tokens, i, cond) -> int:
        tok = tokens[i]
        lex = tok.lexeme
        name = tokens[i + 1].lexeme if i + 1 < len(tokens) else ""
        if lex in ("`ifdef", "`ifndef"):
            defined = name in self.macros
            take = defined if lex == "`ifdef" else not defined
            cond.append((take, take))
            return i + 2
        if not cond:
            self.diagnostics.append(Diagnostic(tok.loc, f"{lex} without `ifdef"))
            return i + (2 if lex == "`elsif" else 1)
        emitting, taken = cond[-1]
        if lex == "`elsif":
            take = not taken and name in self.macros
            cond[-1] = (take, taken or take)
            return i + 2
        if lex == "`else":
            cond[-1] = (not taken, True)
            return i + 1
        cond.pop()
        return i + 1

    def _define(self, tokens: list[Token], i: int) -> int:
        end = _rest_of_line(tokens, i)
        if i + 1 >= end:
            self.diagnostics.append(Diagnostic(tokens[i].loc, "`define without a name"))
            return end
        name = tokens[i + 1].lexeme
        body = tokens[i + 2 : end]
        if body and body[0].lexeme == "(" and body[0].loc.col == tokens[i + 1].loc.col + len(name):
            self.diagnostics.append(
                Diagnostic(tokens[i].loc, f"macro arguments are not supported (`{name})")
            )
        self.macros[name] = list(body)
        return end

    def _expand(self, tok: Token, depth: int = 0) -> list[Token]:
        name = tok.lexeme[1:]
        body = self.macros.get(name)
        if body is None:
            self.diagnostics.append(
                Diagnostic(tok.loc, f"undefined macro `{name}, kept as identifier")
            )
            return [Token(IDENTIFIER, name, tok.loc, macro=name)]
        if depth > 32:
            self.diagnostics.append(Diagnostic(tok.loc, f"macro `{name} expands recursively"))
            return [Token(IDENTIFIER, name, tok.loc, macro=name)]
        out: list[Token] = []
        for b in body:
            if b.kind == IDENTIFIER and b.lexeme.startswith("`") and b.lexeme[1:] in self.macros:
                out.extend(replace(t, macro=name) for t in self._expand(b, depth + 1))
            else:
                # expansion keeps the use site's position
                out.append(Token(b.kind, b.lexeme, tok.loc, macro=name))
        return out

    def resolve_include(self, target: str, including_file: str) -> str | None:
        base = os.path.dirname(including_file)
        for d in [base, *self.include_dirs]:
            cand = os.path.normpath(os.path.join(d, target))
            if os.path.isfile(cand):
                return cand
        return None

    def _include(self, tokens: list[Token], i: int) -> list[Token]:
        tok = tokens[i]
        if i + 1 >= len(tokens) or tokens[i + 1].kind != STRING:
            self.diagnostics.append(Diagnostic(tok.loc, "`include expects a quoted file name"))
            return []
        target = tokens[i + 1].lexeme[1:-1]
        path = self.resolve_include(target, tok.loc.file)
        if path is None:
            self.diagnostics.append(Diagnostic(tok.loc, f"include file not found: {target}"))
            return []
        if path in self._stack:
            self.diagnostics.append(Diagnostic(tok.loc, f"include cycle through {target}"))
            return []
        self.included.add(path)
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except (OSError, UnicodeDecodeError) as exc:
            self.diagnostics.append(Diagnostic(tok.loc, f"cannot read include {target}: {exc}"))
            return []
        self._stack.append(path)
        try:
            return self.run(tokenize(text, path, self.diagnostics))
        finally:
            self._stack.pop()


def preprocess(
    tokens: list[Token],
    macros: dict[str, list[Token]] | None = None,
    diagnostics: list[Diagnostic] | None = None,
) -> list[Token]:
    """Expand directives in ``tokens``; ``macros`` is updated in place."""
    pp = Preprocessor(macros, diagnostics=diagnostics)
    if tokens:
        pp._stack.append(os.path.normpath(tokens[0].loc.file))
    return pp.run(tokens)


__all__ = ["Preprocessor", "preprocess", "SourceLoc"]
