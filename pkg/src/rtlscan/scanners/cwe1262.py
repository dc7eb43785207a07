"""Control signals guarding writes of ``wdata`` into registers."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..lexer import SourceLoc
from ..report import Finding
from ..rules import Rulebook
from ..tree import (
    AlwaysConstruct,
    ConditionalStatement,
    IdRef,
    IndexedRef,
    Module,
    NonBlockingAssign,
    Ternary,
    Visitor,
)


@dataclass(frozen=True)
class ControlEntry:
    key: str
    base: str
    index_text: str
    controls: tuple[str, ...]
    loc: SourceLoc


@dataclass
class ControlMap:
    entries: list[ControlEntry] = field(default_factory=list)

    def add(self, entry: ControlEntry) -> None:
        self.entries.append(entry)

    def __getitem__(self, key: str) -> ControlEntry:
        for e in reversed(self.entries):
            if e.key == key:
                return e
        raise KeyError(key)

    def __contains__(self, key: str) -> bool:
        return any(e.key == key for e in self.entries)

    def keys(self) -> list[str]:
        return list(dict.fromkeys(e.key for e in self.entries))


@dataclass(frozen=True)
class ProtectionIssue:
    kind: str  # unprotected-register, less-protected-register, non-identical-control-sets
    signals: tuple[str, ...]
    loc: SourceLoc
    detail: str


class Visitor1262(Visitor):
    def __init__(self, rules: Rulebook):
        super().__init__()
        self.rules = rules
        self.controlV: list[str] = []
        self.count = 0
        self.is_control = False
        self.is_rhs = False
        self.is_lhs = False
        self.is_wdata = False
        self.sigM = ControlMap()
        self.gated = 0
        self._assign_loc: SourceLoc | None = None
        self.max_depth_after_always = 0

    def visit_AlwaysConstruct(self, node: AlwaysConstruct) -> None:
        self.controlV = []
        self.count = 0
        self.visit(node.body)
        self.max_depth_after_always = max(self.max_depth_after_always, len(self.controlV))

    def visit_Ternary(self, node: Ternary) -> None:
        if not self.is_rhs:
            # only a ternary feeding a mapped write acts as a guard
            self.generic_visit(node)
            return
        self.visit(node.then_e)
        self.visit(node.else_e)
        prev = self.is_control
        self.is_control = True
        self.visit(node.cond)
        self.is_control = prev

    def visit_NonBlockingAssign(self, node: NonBlockingAssign) -> None:
        mark = len(self.controlV)
        self.is_wdata = False
        self.is_rhs = True
        self.visit(node.rhs)
        self.is_rhs = False
        if self.is_wdata:
            self.gated += 1
            self.is_lhs = True
            self._assign_loc = node.loc
            self.visit(node.lhs)
            self.is_lhs = False
        # ternary conditions only guard this one assignment
        del self.controlV[mark:]

    def visit_ConditionalStatement(self, node: ConditionalStatement) -> None:
        mark = len(self.controlV)
        prev = self.is_control
        self.is_control = True
        self.visit(node.if_expr)
        self.is_control = prev
        self.visit(node.then_stmt)
        self.visit(node.else_stmt)
        del self.controlV[mark:]

    def _ref(self, name: str, base: str, index_text: str, loc: SourceLoc) -> None:
        if self.is_rhs and self.rules.matches(name, "wdata"):
            self.is_wdata = True
        elif self.is_control:
            self.controlV.append(name)
            self.count += 1
        elif self.is_lhs:
            self.sigM.add(ControlEntry(name, base, index_text, tuple(self.controlV), self._assign_loc or loc))

    def visit_IdRef(self, node: IdRef) -> None:
        self._ref(node.name, node.name, "", node.loc)

    def visit_IndexedRef(self, node: IndexedRef) -> None:
        self._ref(node.full_name, node.name, node.index_text, node.loc)


def run_1262(module: Module, rules: Rulebook) -> Visitor1262:
    v = Visitor1262(rules)
    v.visit(module)
    return v


def build_control_map(module: Module, rules: Rulebook) -> ControlMap:
    return run_1262(module, rules).sigM


def prune(controls, rules: Rulebook) -> tuple[str, ...]:
    """Drop clock/reset-like names; order-preserving and duplicate-free."""
    return tuple(
        dict.fromkeys(c for c in controls if not rules.matches(c, "control_prune"))
    )


def analyze_protection(cmap: ControlMap, rules: Rulebook) -> list[ProtectionIssue]:
    issues = []
    weakest: dict[str, tuple[ControlEntry, tuple[str, ...]]] = {}
    for e in cmap.entries:
        pruned = prune(e.controls, rules)
        if not pruned:
            issues.append(
                ProtectionIssue(
                    "unprotected-register",
                    (e.key,),
                    e.loc,
                    f"register '{e.key}' takes wdata with no controlling signal",
                )
            )
        cur = weakest.get(e.key)
        if cur is None or len(pruned) < len(cur[1]):
            weakest[e.key] = (e, pruned)

    arrays: dict[str, list[tuple[ControlEntry, tuple[str, ...]]]] = {}
    for e, pruned in weakest.values():
        if e.index_text:
            arrays.setdefault(e.base, []).append((e, pruned))
    for base, members in arrays.items():
        if len(members) < 2:
            continue
        top = max(len(p) for _, p in members)
        for e, pruned in members:
            if len(pruned) < top:
                issues.append(
                    ProtectionIssue(
                        "less-protected-register",
                        (e.key,),
                        e.loc,
                        f"'{e.key}' has {len(pruned)} control signal(s); other entries of "
                        f"'{base}' have up to {top}",
                    )
                )
        sets = [frozenset(p) for _, p in members]
        if len(set(sets)) > 1:
            common, freq = Counter(sets).most_common(1)[0]
            if freq > 1:
                odd = [(e, p) for (e, p), s in zip(members, sets) if s != common]
            else:
                odd = members
            names = tuple(e.key for e, _ in odd)
            detail = "; ".join(f"{e.key}: {{{', '.join(p)}}}" for e, p in odd)
            issues.append(
                ProtectionIssue(
                    "non-identical-control-sets",
                    (base, *names),
                    odd[0][0].loc,
                    f"entries of '{base}' are guarded by different control sets ({detail})",
                )
            )
    return issues


def findings_1262(module: Module, issues: list[ProtectionIssue], rules: Rulebook) -> list[Finding]:
    kws = rules["wdata"].match_list
    return [
        Finding(
            cwe_id=1262,
            kind=i.kind,
            module_name=module.name,
            primary_loc=i.loc,
            message=i.detail,
            signals=i.signals,
            matched_keywords=kws,
        )
        for i in issues
    ]
