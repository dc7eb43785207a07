"""Tokenizer for the supported Verilog subset."""

from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORD = "keyword"
IDENTIFIER = "identifier"
NUMBER = "number"
OPERATOR = "operator"
PUNCTUATION = "punctuation"
STRING = "string-literal"

KEYWORDS = frozenset(
    {
        "module", "endmodule", "macromodule", "input", "output", "inout",
        "wire", "reg", "logic", "integer", "signed", "unsigned",
        "parameter", "localparam", "assign",
        "always", "always_comb", "always_ff", "always_latch",
        "begin", "end", "if", "else", "case", "casez", "casex", "endcase",
        "default", "posedge", "negedge", "or", "unique", "priority",
        # recognised so the parser can name them when rejecting a file
        "initial", "function", "endfunction", "task", "endtask", "generate",
        "endgenerate", "genvar", "for", "while", "repeat", "forever",
        "interface", "endinterface", "class", "endclass", "package",
        "endpackage", "typedef", "enum", "struct", "import", "program",
        "endprogram", "fork", "join",
    }
)

PUNCTUATION_CHARS = frozenset("()[]{};,.:#@'")


@dataclass(frozen=True)
class SourceLoc:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    loc: SourceLoc
    # name of the macro this token was expanded from, if any
    macro: str | None = None

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.lexeme!r}, L{self.loc.line}:{self.loc.col})"


@dataclass(frozen=True)
class Diagnostic:
    loc: SourceLoc
    message: str

    def __str__(self) -> str:
        return f"{self.loc}: {self.message}"


_OPERATORS = [
    "<<<", ">>>", "===", "!==",
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "**",
    "~&", "~|", "~^", "^~", "+:", "-:", "::",
    "+", "-", "*", "/", "%", "<", ">", "!", "~", "&", "|", "^", "?", "=",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<block_open>/\*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<string_open>")
  | (?P<based>(?:[0-9][0-9_]*[ \t]*)?'[sS]?[bBoOdDhH][ \t]*[0-9a-fA-FxXzZ?_]+)
  | (?P<fill>'[01xXzZ](?![0-9a-zA-Z_]))
  | (?P<real>[0-9][0-9_]*\.[0-9][0-9_]*(?:[eE][+-]?[0-9]+)?)
  | (?P<decimal>[0-9][0-9_]*)
  | (?P<directive>`[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<system>\$[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<escaped>\\[^ \t\r\n]+)
  | (?P<op>"""
    + "|".join(re.escape(op) for op in _OPERATORS)
    + r""")
  | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(
    source: str, file: str, diagnostics: list[Diagnostic] | None = None
) -> list[Token]:
    """Split ``source`` into tokens, dropping whitespace and comments.

    Unterminated block comments and strings are reported in ``diagnostics``
    and lexing resumes on the next line.
    """
    if diagnostics is None:
        diagnostics = []
    tokens: list[Token] = []
    line = 1
    line_start = 0
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
            pos = m.end()
            continue
        if kind in ("ws", "line_comment"):
            pos = m.end()
            continue
        if kind == "block_comment":
            newlines = text.count("\n")
            if newlines:
                line += newlines
                line_start = pos + text.rindex("\n") + 1
            pos = m.end()
            continue
        if kind in ("block_open", "string_open"):
            what = "block comment" if kind == "block_open" else "string"
            diagnostics.append(Diagnostic(SourceLoc(file, line, col), f"unterminated {what}"))
            nl = source.find("\n", pos)
            pos = n if nl < 0 else nl
            continue

        loc = SourceLoc(file, line, col)
        if kind == "based" and "\n" in text:
            # the regex cannot cross newlines, kept for safety
            text = text.split("\n", 1)[0]
        if kind in ("based", "fill", "real", "decimal"):
            tokens.append(Token(NUMBER, text, loc))
        elif kind == "string":
            tokens.append(Token(STRING, text, loc))
        elif kind in ("directive", "system", "escaped"):
            tokens.append(Token(IDENTIFIER, text, loc))
        elif kind == "ident":
            tokens.append(Token(KEYWORD if text in KEYWORDS else IDENTIFIER, text, loc))
        elif kind == "op":
            tokens.append(Token(OPERATOR, text, loc))
        elif text in PUNCTUATION_CHARS:
            tokens.append(Token(PUNCTUATION, text, loc))
        else:
            # stray character: kept so the parser rejects the file at this spot
            tokens.append(Token(PUNCTUATION, text, loc))
        pos = m.end()
    return tokens
