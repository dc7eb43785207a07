from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_files, parse_one
from regen_golden import GOLDEN, build
from rtlscan.parser import parse_bytes, parse_number, parse_source
from rtlscan.tree import (
    AlwaysConstruct,
    BlockingAssign,
    CaseStatement,
    ConditionalStatement,
    ContinuousAssign,
    DataDecl,
    EventControlStatement,
    IndexedRef,
    ModuleInstance,
    NonBlockingAssign,
    ParamDecl,
    SeqBlock,
    Ternary,
    walk,
)

SUM = """module sum(input wire [7:0] a, output [7:0] out);
    always @(a) begin
        out = a + 1;
    end
endmodule
"""


def test_sum_module_structure():
    m = parse_one(SUM, "sum.v")
    assert m.name == "sum" and m.port_names == ("a", "out")
    (always,) = [i for i in m.items if isinstance(i, AlwaysConstruct)]
    assert isinstance(always.body, EventControlStatement)
    assert always.sens_names == ["a"]
    block = always.body.body
    assert isinstance(block, SeqBlock) and len(block.stmts) == 1
    assign = block.stmts[0]
    assert isinstance(assign, BlockingAssign)
    assert assign.lhs.name == "out" and assign.loc.line == 3


def test_empty_module():
    m = parse_one("module m; endmodule")
    assert m.name == "m" and m.items == ()


def test_interface_is_skipped_with_one_diagnostic():
    out = parse_source("interface bus; logic a; endinterface\n", "i.sv")
    assert out.skipped and out.modules == []
    assert len(out.diagnostics) == 1
    assert "interface" in out.diagnostics[0].message
    assert out.diagnostics[0].loc.line == 1


@pytest.mark.parametrize(
    "src,construct",
    [
        ("module m; initial a = 0; endmodule", "initial"),
        ("module m; genvar i; endmodule", "genvar"),
        ("module m; function f; endfunction endmodule", "function"),
        ("module m(input clk); always @(posedge clk) for (;;) ; endmodule", "for"),
    ],
)
def test_unsupported_constructs_named(src, construct):
    out = parse_source(src, "u.v")
    assert out.skipped and construct in out.diagnostics[-1].message


def test_ansi_and_non_ansi_ports():
    m = parse_one("module m(a, b); input a; output reg [3:0] b; endmodule")
    assert m.port_names == ("a", "b")
    decls = [i for i in m.items if isinstance(i, DataDecl)]
    assert [d.direction for d in decls] == ["input", "output"]
    assert decls[1].storage == "register" and decls[1].ids[0].width_bits == 4


def test_declarations_and_widths():
    m = parse_one(
        "module m #(parameter W = 6) (); localparam N = W - 2;"
        " reg [W-1:0] a, b; wire [0:N] c; logic d; integer i; reg [7:0] mem [0:3];"
        " endmodule"
    )
    decls = {d.name: d for i in m.items if isinstance(i, DataDecl) for d in i.ids}
    assert decls["a"].width_bits == 6 and decls["b"].width_bits == 6
    assert decls["c"].width_bits == 5 and not decls["c"].is_variable
    assert decls["d"].width_bits == 1 and decls["d"].is_variable
    assert decls["i"].width_bits == 32 and decls["i"].is_variable
    assert decls["mem"].width_bits == 8 and len(decls["mem"].unpacked) == 1
    params = [p for p in list(m.ports) + list(m.items) if isinstance(p, ParamDecl)]
    assert [(p.name, p.local) for p in params] == [("W", False), ("N", True)]


def test_always_variants_and_statements():
    m = parse_one(
        """module m(input logic clk, input logic rst_n, input [1:0] sel);
  logic [1:0] q; logic y;
  always_ff @(posedge clk or negedge rst_n)
    if (!rst_n) q <= '0;
    else unique case (sel)
      2'b00, 2'b01: q <= sel;
      default: ;
    endcase
  always_comb y = sel[0] ? q[1] : 1'b0;
  assign {q[0], y} = 2'b10;
  sub #(.W(2)) u0 (.a(q), .b());
endmodule"""
    )
    kinds = {type(n) for n in walk(m)}
    assert {ConditionalStatement, CaseStatement, NonBlockingAssign, Ternary,
            ContinuousAssign, ModuleInstance, IndexedRef} <= kinds
    always = [i for i in m.items if isinstance(i, AlwaysConstruct)]
    assert [a.always_kind for a in always] == ["always_ff", "always_comb"]
    assert always[0].sens_names == ["clk", "rst_n"]
    case = next(n for n in walk(m) if isinstance(n, CaseStatement))
    assert case.has_default and len(case.case_items[0].labels) == 2
    inst = next(n for n in walk(m) if isinstance(n, ModuleInstance))
    assert (inst.module_name, inst.instance_name) == ("sub", "u0")
    assert [c.port for c in inst.connections] == ["a", "b"]


def test_precedence():
    m = parse_one("module m; assign x = a | b & c == d + e * f; endmodule")
    rhs = m.items[0].rhs
    assert rhs.op == "|"
    assert rhs.rhs.op == "&"
    assert rhs.rhs.rhs.op == "=="
    assert rhs.rhs.rhs.rhs.op == "+"
    assert rhs.rhs.rhs.rhs.rhs.op == "*"


def test_indexed_ref_text():
    m = parse_one("module m; assign x = mem[3][7:4] + v[i +: 2]; endmodule")
    refs = [n for n in walk(m) if isinstance(n, IndexedRef)]
    assert [r.full_name for r in refs] == ["mem[3][7:4]", "v[i+:2]"]
    assert [r.name for r in refs] == ["mem", "v"]


@pytest.mark.parametrize(
    "text,expected",
    [
        ("8'hFF", (8, "h", 255)),
        ("2'b10", (2, "b", 2)),
        ("'d7", (None, "d", 7)),
        ("42", (None, "d", 42)),
        ("4'b1x0z", (4, "b", None)),
        ("16'd1_000", (16, "d", 1000)),
    ],
)
def test_parse_number(text, expected):
    assert parse_number(text) == expected


def test_every_node_location_in_file():
    for path in corpus_files():
        src = open(path, encoding="utf-8").read()
        nlines = src.count("\n") + 1
        out = parse_source(src, path)
        assert not out.skipped, path
        for m in out.modules:
            for n in walk(m):
                assert n.loc.file == path
                assert 1 <= n.loc.line <= nlines


def test_golden_shapes():
    with open(GOLDEN, encoding="utf-8") as fh:
        golden = json.load(fh)
    assert build() == golden


def test_deterministic():
    for path in corpus_files()[:10]:
        data = open(path, "rb").read()
        a = parse_bytes(data, path)
        b = parse_bytes(data, path)
        sa = [(n.kind, n.loc) for m in a.modules for n in walk(m)]
        sb = [(n.kind, n.loc) for m in b.modules for n in walk(m)]
        assert sa == sb


def test_non_utf8_is_skipped():
    out = parse_bytes(b"module m; \xff\xfe endmodule", "bad.v")
    assert out.skipped and out.diagnostics


def test_deep_nesting_does_not_crash():
    src = "module m; assign x = " + "(" * 5000 + "a" + ")" * 5000 + "; endmodule"
    out = parse_source(src, "deep.v")
    assert out.skipped or out.modules


@settings(max_examples=150, deadline=None)
@given(st.binary(max_size=300))
def test_arbitrary_bytes(data):
    out = parse_bytes(data, "fz.v")
    if out.skipped:
        assert out.modules == [] and out.diagnostics
