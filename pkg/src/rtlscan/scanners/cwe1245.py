"""Explicit FSM extraction and checks for unreachable states, deadlocks
and incomplete case statements."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..lexer import Diagnostic, SourceLoc
from ..report import Finding
from ..tree import (
    Assignment,
    Binary,
    CaseStatement,
    ConditionalStatement,
    Const,
    Expr,
    IdRef,
    Module,
    Scope,
    Visitor,
    build_scope,
    expr_text,
    walk,
)

EQ_OPS = ("==", "===")
_COMPARE_OPS = ("==", "===", "!=", "!==")
BAD_LABEL = object()


@dataclass(frozen=True)
class Transition:
    state_var: str
    from_state: str
    to_state: str
    loc: SourceLoc
    conditions: tuple[str, ...] = ()


@dataclass(frozen=True)
class StateReset:
    state_var: str
    value: str
    loc: SourceLoc


@dataclass
class FsmModel:
    state_var_names: tuple[str, ...]
    transitions: list[Transition] = field(default_factory=list)
    resets: list[StateReset] = field(default_factory=list)

    @property
    def states(self) -> set[str]:
        out = {t.from_state for t in self.transitions} | {t.to_state for t in self.transitions}
        return out | {r.value for r in self.resets}


@dataclass(frozen=True)
class FsmIssue:
    kind: str  # fsm-unreachable-state or fsm-deadlock
    state: str
    loc: SourceLoc


@dataclass(frozen=True)
class IncompleteCase:
    loc: SourceLoc
    variable: str
    width: int
    covered: int

    @property
    def missing(self) -> int:
        return (1 << self.width) - self.covered


def state_label(expr: Expr | None, scope: Scope):
    """Label text for a state constant, None if ``expr`` is not a label,
    or BAD_LABEL for a literal with x/z digits."""
    if isinstance(expr, Const):
        if expr.macro:
            return expr.macro
        if expr.value is None:
            return BAD_LABEL
        return str(expr.value)
    if isinstance(expr, IdRef):
        if expr.macro:
            return expr.macro
        if expr.name in scope.params or expr.name not in scope.ids:
            return expr.name
    return None


def _is_label(expr, scope) -> bool:
    lab = state_label(expr, scope)
    return lab is not None and lab is not BAD_LABEL


def find_fsm_variables(module: Module, scope: Scope | None = None) -> list[tuple[str, ...]]:
    """Groups of linked state variables (e.g. ``state`` with ``next_state``)."""
    scope = scope or build_scope(module)
    eligible = {
        name
        for name, did in scope.ids.items()
        if did.is_variable and did.width_bits is not None and did.width_bits >= 2
    }
    compared: set[str] = set()
    label_assigned: set[str] = set()
    has_assign: set[str] = set()
    disqualified: set[str] = set()
    links: list[tuple[str, str]] = []

    for node in walk(module):
        if isinstance(node, Binary) and node.op in _COMPARE_OPS:
            for var, other in ((node.lhs, node.rhs), (node.rhs, node.lhs)):
                if isinstance(var, IdRef) and var.name in eligible and _is_label(other, scope):
                    compared.add(var.name)
        elif isinstance(node, CaseStatement):
            cond = node.cond_expr
            if isinstance(cond, IdRef) and cond.name in eligible:
                compared.add(cond.name)
        elif isinstance(node, Assignment):
            lhs, rhs = node.lhs, node.rhs
            if not (isinstance(lhs, IdRef) and lhs.name in eligible):
                continue
            has_assign.add(lhs.name)
            lab = state_label(rhs, scope)
            if lab is BAD_LABEL:
                continue
            if lab is not None:
                label_assigned.add(lhs.name)
            elif isinstance(rhs, IdRef) and rhs.name in eligible:
                links.append((lhs.name, rhs.name))
            else:
                disqualified.add(lhs.name)

    ok = has_assign - disqualified
    parent = {name: name for name in ok}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in links:
        if a in ok and b in ok:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
    components: dict[str, list[str]] = {}
    order = list(scope.ids)
    for name in order:
        if name in ok:
            components.setdefault(find(name), []).append(name)
    groups = []
    for members in components.values():
        if any(m in compared for m in members) and any(m in label_assigned for m in members):
            groups.append(tuple(members))
    return groups


def _wildcard_values(c: Const, width: int, case_kind: str) -> set[int] | None:
    """Values matched by a casez/casex label with wildcard digits."""
    text = c.text.replace("_", "").replace(" ", "").lower()
    digits = text.split("'", 1)[1].lstrip("s")[1:] if "'" in text else text
    bits_per = {"b": 1, "o": 3, "h": 4}.get(c.base)
    if bits_per is None:
        return None
    wild = {"z", "?"} | ({"x"} if case_kind == "casex" else set())
    fixed_mask = 0
    fixed_val = 0
    for ch in digits:
        fixed_mask <<= bits_per
        fixed_val <<= bits_per
        if ch in wild:
            continue
        if ch == "x":
            return set()
        fixed_mask |= (1 << bits_per) - 1
        fixed_val |= int(ch, 16)
    full = (1 << width) - 1
    fixed_mask &= full
    fixed_val &= full
    if width > 16:
        return None
    return {v for v in range(1 << width) if v & fixed_mask == fixed_val & fixed_mask}


def check_complete_case(
    case_node: CaseStatement,
    scope: Scope,
    diagnostics: list[Diagnostic] | None = None,
) -> IncompleteCase | None:
    cond = case_node.cond_expr
    did = scope.lookup(cond.name) if isinstance(cond, IdRef) else None
    if did is None or did.width_bits is None:
        if diagnostics is not None:
            diagnostics.append(Diagnostic(case_node.loc, "indeterminate width of case condition"))
        return None
    if case_node.has_default:
        return None
    width = did.width_bits
    mask = (1 << width) - 1
    covered: set = set()
    extra = 0
    for item in case_node.case_items:
        for label in item.labels:
            if isinstance(label, Const):
                if label.value is not None:
                    covered.add(label.value & mask)
                elif case_node.case_kind in ("casez", "casex"):
                    vals = _wildcard_values(label, width, case_node.case_kind)
                    if vals is None:
                        extra += 1
                    else:
                        covered |= vals
                continue
            if isinstance(label, IdRef) and label.name in scope.param_values:
                covered.add(scope.param_values[label.name] & mask)
            else:
                covered.add(("label", expr_text(label)))
    count = len(covered) + extra
    if count >= (1 << width):
        return None
    return IncompleteCase(case_node.loc, cond.name, width, count)


class Visitor1245(Visitor):
    def __init__(self, group: tuple[str, ...], scope: Scope):
        super().__init__()
        self.group = set(group)
        self.scope = scope
        self.fsm = FsmModel(tuple(group))
        self.present_state: tuple[str, ...] | None = None
        self.present_state_var: str | None = None
        self.conditions: list[str] = []
        self.pushes = 0
        self.pops = 0
        self.in_default = 0
        self.incomplete: list[IncompleteCase] = []
        self.diagnostics: list[Diagnostic] = []

    def push_condition(self, text: str) -> None:
        self.conditions.append(text)
        self.pushes += 1

    def pop_condition(self) -> None:
        self.conditions.pop()
        self.pops += 1

    def _state_compare(self, cond: Expr):
        if not (isinstance(cond, Binary) and cond.op in EQ_OPS):
            return None
        for var, other in ((cond.lhs, cond.rhs), (cond.rhs, cond.lhs)):
            if isinstance(var, IdRef) and var.name in self.group:
                lab = state_label(other, self.scope)
                if lab is not None and lab is not BAD_LABEL:
                    return var.name, lab
        return None

    def visit_ConditionalStatement(self, node: ConditionalStatement) -> None:
        hit = self._state_compare(node.if_expr)
        if hit is not None:
            saved = (self.present_state, self.present_state_var)
            self.present_state_var, label = hit
            self.present_state = (label,)
            self.visit(node.then_stmt)
            self.present_state, self.present_state_var = saved
            self.visit(node.else_stmt)
            return
        text = expr_text(node.if_expr)
        self.push_condition(text)
        self.visit(node.then_stmt)
        self.pop_condition()
        self.push_condition(f"!({text})")
        self.visit(node.else_stmt)
        self.pop_condition()

    def visit_CaseStatement(self, node: CaseStatement) -> None:
        cond = node.cond_expr
        cond_text = expr_text(cond)
        is_fsm = isinstance(cond, IdRef) and cond.name in self.group
        if is_fsm:
            issue = check_complete_case(node, self.scope, self.diagnostics)
            if issue is not None:
                self.incomplete.append(issue)
        for item in node.case_items:
            if item.is_default:
                self.push_condition(f"{cond_text} == default")
                self.in_default += 1
                self.visit(item.stmt)
                self.in_default -= 1
                self.pop_condition()
                continue
            label_text = ", ".join(expr_text(lab) for lab in item.labels)
            labels = []
            if is_fsm:
                for lab in item.labels:
                    s = state_label(lab, self.scope)
                    if s is BAD_LABEL or s is None:
                        self.diagnostics.append(
                            Diagnostic(lab.loc, f"case label '{expr_text(lab)}' is not a state constant")
                        )
                    else:
                        labels.append(s)
            if labels and self.present_state_var is None:
                saved = (self.present_state, self.present_state_var)
                self.present_state = tuple(labels)
                self.present_state_var = cond.name
                self.visit(item.stmt)
                self.present_state, self.present_state_var = saved
            else:
                self.push_condition(f"{cond_text} == {label_text}")
                self.visit(item.stmt)
                self.pop_condition()

    def visit_Assignment(self, node: Assignment) -> None:
        lhs = node.lhs
        if not (isinstance(lhs, IdRef) and lhs.name in self.group):
            return
        lab = state_label(node.rhs, self.scope)
        if lab is BAD_LABEL:
            self.diagnostics.append(
                Diagnostic(node.loc, f"state assignment '{expr_text(node.rhs)}' skipped: x/z digits")
            )
            return
        if lab is None:
            return  # state <= next_state link, or a non-constant expression
        if self.present_state is not None:
            for src in self.present_state:
                self.fsm.transitions.append(
                    Transition(lhs.name, src, lab, node.loc, tuple(self.conditions))
                )
        elif self.in_default == 0:
            self.fsm.resets.append(StateReset(lhs.name, lab, node.loc))


def extract_transitions(
    module: Module, group: tuple[str, ...], scope: Scope | None = None
) -> Visitor1245:
    scope = scope or build_scope(module)
    v = Visitor1245(group, scope)
    v.visit(module)
    return v


def analyze_transitions(fsm: FsmModel) -> list[FsmIssue]:
    from_states: dict[str, SourceLoc] = {}
    to_states: dict[str, SourceLoc] = {}
    for t in fsm.transitions:
        from_states.setdefault(t.from_state, t.loc)
        to_states.setdefault(t.to_state, t.loc)
    reset_values = {r.value for r in fsm.resets}
    issues = []
    for s, loc in from_states.items():
        if s not in to_states and s not in reset_values:
            issues.append(FsmIssue("fsm-unreachable-state", s, loc))
    for s, loc in to_states.items():
        if s not in from_states:
            issues.append(FsmIssue("fsm-deadlock", s, loc))
    issues.sort(key=lambda i: (i.kind, i.state))
    return issues


@dataclass
class Result1245:
    groups: list[tuple[str, ...]]
    models: list[FsmModel]
    issues: list[tuple[tuple[str, ...], FsmIssue]]
    incomplete: list[tuple[tuple[str, ...], IncompleteCase]]
    relevant: int
    diagnostics: list[Diagnostic]


def run_1245(module: Module, scope: Scope | None = None) -> Result1245:
    scope = scope or build_scope(module)
    groups = find_fsm_variables(module, scope)
    res = Result1245(groups, [], [], [], 0, [])
    for group in groups:
        v = extract_transitions(module, group, scope)
        res.relevant += v.handled
        res.models.append(v.fsm)
        res.diagnostics.extend(v.diagnostics)
        res.issues.extend((group, i) for i in analyze_transitions(v.fsm))
        res.incomplete.extend((group, c) for c in v.incomplete)
    return res


def findings_1245(module: Module, res: Result1245) -> list[Finding]:
    out = []
    for group, issue in res.issues:
        fsm_name = "/".join(group)
        if issue.kind == "fsm-deadlock":
            msg = f"state {issue.state} of FSM '{fsm_name}' is entered but has no outgoing transition"
        else:
            msg = (
                f"state {issue.state} of FSM '{fsm_name}' has outgoing transitions "
                "but is never entered or reset to"
            )
        out.append(
            Finding(
                cwe_id=1245,
                kind=issue.kind,
                module_name=module.name,
                primary_loc=issue.loc,
                message=msg,
                signals=(*group, issue.state),
            )
        )
    for group, case in res.incomplete:
        out.append(
            Finding(
                cwe_id=1245,
                kind="incomplete-case",
                module_name=module.name,
                primary_loc=case.loc,
                message=(
                    f"case on '{case.variable}' ({case.width} bits) covers {case.covered} of "
                    f"{1 << case.width} values with no default; {case.missing} missing"
                ),
                signals=(case.variable,),
            )
        )
    return out
