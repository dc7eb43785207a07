"""Reads that precede a blocking write of the same signal in one block."""

from __future__ import annotations

from dataclasses import dataclass

from ..lexer import SourceLoc
from ..report import Finding
from ..tree import AlwaysConstruct, BlockingAssign, IdRef, IndexedRef, Module, SeqBlock, Visitor


@dataclass(frozen=True)
class AccessRecord:
    id: str
    block: SeqBlock
    line: int
    loc: SourceLoc


class Visitor1280(Visitor):
    def __init__(self):
        super().__init__()
        self.sens_list: list[str] = []
        self.last_block: SeqBlock | None = None
        self.is_b_assign = False
        self.is_lhs = False
        self.reads: list[AccessRecord] = []
        self.writes: list[AccessRecord] = []

    def visit_AlwaysConstruct(self, node: AlwaysConstruct) -> None:
        self.sens_list = node.sens_names
        self.visit(node.body)
        self.sens_list = []

    def visit_SeqBlock(self, node: SeqBlock) -> None:
        last = self.last_block
        self.last_block = node
        for stmt in node.stmts:
            self.visit(stmt)
        self.last_block = last

    def visit_BlockingAssign(self, node: BlockingAssign) -> None:
        self.is_b_assign = True
        self.is_lhs = True
        self.visit(node.lhs)
        self.is_lhs = False
        self.visit(node.rhs)
        self.is_b_assign = False

    def visit_IndexedRef(self, node: IndexedRef) -> None:
        # the base is the access target; index expressions are always reads
        self.visit(node.base)
        lhs = self.is_lhs
        self.is_lhs = False
        for sel in node.selects:
            self.visit(sel)
        self.is_lhs = lhs

    def visit_IdRef(self, node: IdRef) -> None:
        if not self.is_b_assign or node.name in self.sens_list:
            return
        if self.last_block is None:
            return  # a lone statement outside begin/end has nothing to order against
        rec = AccessRecord(node.name, self.last_block, node.loc.line, node.loc)
        (self.writes if self.is_lhs else self.reads).append(rec)


def collect_accesses(module: Module) -> Visitor1280:
    v = Visitor1280()
    v.visit(module)
    return v


def detect_pairs(reads, writes) -> list[tuple[AccessRecord, AccessRecord]]:
    seen = set()
    pairs = []
    for w in writes:
        for r in reads:
            if r.id == w.id and r.block is w.block and r.line < w.line:
                key = (r.id, id(r.block), r.line, w.line)
                if key not in seen:
                    seen.add(key)
                    pairs.append((r, w))
    pairs.sort(key=lambda p: (p[0].line, p[1].line, p[0].id))
    return pairs


def scan_1280(module: Module) -> list[tuple[AccessRecord, AccessRecord]]:
    v = collect_accesses(module)
    return detect_pairs(v.reads, v.writes)


def findings_1280(module: Module, pairs) -> list[Finding]:
    return [
        Finding(
            cwe_id=1280,
            kind="read-before-write",
            module_name=module.name,
            primary_loc=r.loc,
            secondary_loc=w.loc,
            message=(
                f"'{r.id}' is read at line {r.line} before its blocking update at "
                f"line {w.line} in the same block"
            ),
            signals=(r.id,),
            severity="info",
        )
        for r, w in pairs
    ]
