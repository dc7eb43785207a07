"""The five CWE scanners and a common entry point."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..lexer import Diagnostic
from ..report import Finding
from ..rules import Rulebook
from ..tree import Module, Scope, build_scope
from .cwe1234 import findings_1234, run_1234
from .cwe1245 import findings_1245, run_1245
from .cwe1262 import analyze_protection, findings_1262, run_1262
from .cwe1271 import findings_1271, run_1271
from .cwe1280 import collect_accesses, detect_pairs, findings_1280

ALL_CWES = (1234, 1271, 1245, 1280, 1262)
# scanners whose traversal is narrowed by keyword matches
KEYWORD_GATED = (1234, 1271, 1262)


@dataclass
class ModuleScan:
    findings: list[Finding] = field(default_factory=list)
    relevant: dict[int, int] = field(default_factory=dict)
    gated: dict[int, int] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)


def scan_module(
    module: Module,
    rules: Rulebook,
    enabled=ALL_CWES,
    scope: Scope | None = None,
) -> ModuleScan:
    """Run every enabled scanner over one module."""
    scope = scope or build_scope(module)
    out = ModuleScan(diagnostics=list(scope.diagnostics))
    if 1234 in enabled:
        v = run_1234(module, rules)
        out.findings += findings_1234(module, v.results)
        out.relevant[1234], out.gated[1234] = v.handled, v.gated
    if 1271 in enabled:
        v = run_1271(module, rules)
        out.findings += findings_1271(module, v.sr_vec, rules)
        out.relevant[1271], out.gated[1271] = v.handled, v.gated
    if 1245 in enabled:
        res = run_1245(module, scope)
        out.findings += findings_1245(module, res)
        out.relevant[1245], out.gated[1245] = res.relevant, 0
        out.diagnostics += res.diagnostics
    if 1280 in enabled:
        v = collect_accesses(module)
        out.findings += findings_1280(module, detect_pairs(v.reads, v.writes))
        out.relevant[1280], out.gated[1280] = v.handled, 0
    if 1262 in enabled:
        v = run_1262(module, rules)
        out.findings += findings_1262(module, analyze_protection(v.sigM, rules), rules)
        out.relevant[1262], out.gated[1262] = v.handled, v.gated
    return out
