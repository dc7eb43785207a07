"""Security-relevant registers never assigned inside a reset block."""

from __future__ import annotations

from dataclasses import dataclass

from ..lexer import SourceLoc
from ..report import Finding
from ..rules import Rulebook
from ..tree import Assignment, ConditionalStatement, DataDecl, IdRef, IndexedRef, Module, Visitor, iter_idrefs


@dataclass
class SensitiveRegister:
    name: str
    decl_loc: SourceLoc
    initialized: bool = False
    init_loc: SourceLoc | None = None


class Visitor1271(Visitor):
    def __init__(self, rules: Rulebook):
        super().__init__()
        self.rules = rules
        self.sr_vec: list[SensitiveRegister] = []
        self.is_reset_block = False
        self.is_reset_lhs = False
        self.loc_init_sr: SourceLoc | None = None
        self.gated = 0

    def visit_DataDecl(self, node: DataDecl) -> None:
        if not node.is_register:
            return
        hit = False
        for did in node.ids:
            if self.rules.matches(did.name, "security_register"):
                hit = True
                sr = SensitiveRegister(did.name, did.loc)
                if did.init is not None:
                    sr.initialized = True
                    sr.init_loc = did.loc
                self.sr_vec.append(sr)
        if hit:
            self.gated += 1

    def visit_ConditionalStatement(self, node: ConditionalStatement) -> None:
        outer = self.is_reset_block
        is_reset = any(self.rules.matches(r.name, "reset") for r in iter_idrefs(node.if_expr))
        if is_reset:
            self.gated += 1
            self.is_reset_block = True
        self.visit(node.then_stmt)
        # the else branch of a reset test is the non-reset path
        self.is_reset_block = False if is_reset else outer
        self.visit(node.else_stmt)
        self.is_reset_block = outer

    def visit_Assignment(self, node: Assignment) -> None:
        if not self.is_reset_block:
            return
        self.gated += 1
        self.is_reset_lhs = True
        self.loc_init_sr = node.lhs.loc
        self.visit(node.lhs)
        self.is_reset_lhs = False

    def visit_IndexedRef(self, node: IndexedRef) -> None:
        # only the base name is initialized by mem[i] <= ...
        self.visit(node.base)

    def visit_IdRef(self, node: IdRef) -> None:
        if not self.is_reset_lhs:
            return
        self.gated += 1
        for sr in self.sr_vec:
            if sr.name == node.name:
                sr.initialized = True
                sr.init_loc = self.loc_init_sr


def run_1271(module: Module, rules: Rulebook) -> Visitor1271:
    v = Visitor1271(rules)
    v.visit(module)
    return v


def scan_1271(module: Module, rules: Rulebook) -> list[SensitiveRegister]:
    """All candidate registers; the uninitialized ones are the weaknesses."""
    return run_1271(module, rules).sr_vec


def findings_1271(module: Module, registers: list[SensitiveRegister], rules: Rulebook) -> list[Finding]:
    out = []
    for sr in registers:
        if sr.initialized:
            continue
        kws = tuple(k for k in rules["security_register"].match_list if k in sr.name.lower())
        out.append(
            Finding(
                cwe_id=1271,
                kind="uninitialized-security-register",
                module_name=module.name,
                primary_loc=sr.decl_loc,
                message=f"security-relevant register '{sr.name}' is not assigned in any reset block",
                signals=(sr.name,),
                matched_keywords=kws,
            )
        )
    return out
