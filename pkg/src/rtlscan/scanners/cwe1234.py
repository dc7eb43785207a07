"""Debug signals able to override a lock inside an ``if`` condition."""

from __future__ import annotations

from dataclasses import dataclass

from ..lexer import SourceLoc
from ..report import Finding
from ..rules import Rulebook
from ..tree import Binary, ConditionalStatement, IndexedRef, Module, Visitor, expr_text, iter_idrefs, walk

OVERRIDE_OPS = ("||", "|")


@dataclass(frozen=True)
class OverrideHit:
    loc: SourceLoc
    lock_names: tuple[str, ...]
    debug_names: tuple[str, ...]
    operator_found: str
    condition: str


class Visitor1234(Visitor):
    def __init__(self, rules: Rulebook):
        super().__init__()
        self.rules = rules
        self.results: list[OverrideHit] = []
        self.gated = 0

    def visit_ConditionalStatement(self, node: ConditionalStatement) -> None:
        expr = node.if_expr
        lock, dbg = [], []
        for ref in iter_idrefs(expr):
            if self.rules.matches(ref.name, "lock") and ref.name not in lock:
                lock.append(ref.name)
            if self.rules.matches(ref.name, "debug") and ref.name not in dbg:
                dbg.append(ref.name)
        if lock or dbg:
            self.gated += 1
        if lock and dbg:
            op = next(
                (n.op for n in walk(expr) if isinstance(n, Binary) and n.op in OVERRIDE_OPS),
                None,
            )
            if op is not None:
                self.results.append(
                    OverrideHit(expr.loc, tuple(lock), tuple(dbg), op, expr_text(expr))
                )
        # else branch first, as in the reference traversal order
        self.visit(node.else_stmt)
        self.visit(node.then_stmt)


def scan_1234(module: Module, rules: Rulebook) -> list[OverrideHit]:
    return run_1234(module, rules).results


def run_1234(module: Module, rules: Rulebook) -> Visitor1234:
    v = Visitor1234(rules)
    v.visit(module)
    v.results.sort(key=lambda h: (h.loc.line, h.loc.col))
    return v


def findings_1234(module: Module, hits: list[OverrideHit]) -> list[Finding]:
    return [
        Finding(
            cwe_id=1234,
            kind="debug-overrides-lock",
            module_name=module.name,
            primary_loc=h.loc,
            message=(
                f"debug signal(s) {', '.join(h.debug_names)} can override lock "
                f"{', '.join(h.lock_names)} via '{h.operator_found}' in condition '{h.condition}'"
            ),
            signals=tuple(sorted({*h.lock_names, *h.debug_names})),
            matched_keywords=(*h.lock_names, *h.debug_names),
        )
        for h in hits
    ]
