from __future__ import annotations

import os

from rtlscan.lexer import IDENTIFIER, NUMBER, tokenize
from rtlscan.parser import parse_file
from rtlscan.preprocess import preprocess


def run(src, macros=None):
    diags = []
    toks = preprocess(tokenize(src, "p.v", diags), macros, diags)
    return toks, diags


def test_define_substitution():
    toks, diags = run("`define W 8\nx = `W;")
    assert [(t.kind, t.lexeme) for t in toks] == [
        (IDENTIFIER, "x"), ("operator", "="), (NUMBER, "8"), ("punctuation", ";")
    ]
    assert toks[2].macro == "W"
    assert diags == []


def test_unknown_macro_becomes_identifier_with_diagnostic():
    toks, diags = run("state <= `HOLD;")
    hold = toks[2]
    assert (hold.kind, hold.lexeme, hold.macro) == (IDENTIFIER, "HOLD", "HOLD")
    assert len(diags) == 1 and "HOLD" in diags[0].message


def test_no_directives_is_identity():
    src = "module m; reg [1:0] a; endmodule"
    toks, _ = run(src)
    assert [(t.kind, t.lexeme, t.loc) for t in toks] == [
        (t.kind, t.lexeme, t.loc) for t in tokenize(src, "p.v")
    ]


def test_macro_table_shared_across_calls():
    table = {}
    run("`define S1 2'd1\n", table)
    toks, diags = run("x = `S1;", table)
    assert toks[2].lexeme == "2'd1" and not diags


def test_undef_and_conditionals():
    toks, _ = run("`define A\n`ifdef A\nx\n`else\ny\n`endif\n`undef A\n`ifdef A\nz\n`endif\n")
    assert [t.lexeme for t in toks] == ["x"]
    toks, _ = run("`ifndef B\np\n`elsif C\nq\n`endif")
    assert [t.lexeme for t in toks] == ["p"]


def test_include_relative_and_cycle(tmp_path):
    (tmp_path / "defs.vh").write_text("`define WIDTH 4\n")
    (tmp_path / "top.v").write_text(
        '`include "defs.vh"\nmodule top(input [`WIDTH-1:0] a); endmodule\n'
    )
    out = parse_file(str(tmp_path / "top.v"))
    assert not out.skipped
    assert out.modules[0].ports[0].ids[0].width_bits == 4

    (tmp_path / "a.vh").write_text('`include "b.vh"\n')
    (tmp_path / "b.vh").write_text('`include "a.vh"\n')
    (tmp_path / "c.v").write_text('`include "a.vh"\nmodule c; endmodule\n')
    out = parse_file(str(tmp_path / "c.v"))
    assert not out.skipped
    assert any("cycle" in d.message for d in out.diagnostics)


def test_missing_include_is_diagnostic_only(tmp_path):
    p = tmp_path / "m.v"
    p.write_text('`include "nope.vh"\nmodule m; endmodule\n')
    out = parse_file(str(p))
    assert not out.skipped and [m.name for m in out.modules] == ["m"]
    assert any("nope.vh" in d.message for d in out.diagnostics)


def test_timescale_dropped():
    toks, _ = run("`timescale 1ns/1ps\nmodule m; endmodule")
    assert toks[0].lexeme == "module"
    assert os.path.basename(toks[0].loc.file) == "p.v"
