"""Finding model, report rendering and suppression baselines."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, replace
from functools import cached_property

from .lexer import SourceLoc
from .stats import ScanStats

CWE_IDS = (1234, 1271, 1245, 1280, 1262)
SEVERITIES = ("warning", "info")
DEFAULT_SEVERITY = {1234: "warning", 1271: "warning", 1245: "warning", 1280: "info", 1262: "warning"}

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def normalize_path(path: str) -> str:
    return os.path.normpath(path).replace(os.sep, "/")


@dataclass(frozen=True)
class Finding:
    cwe_id: int
    kind: str
    module_name: str
    primary_loc: SourceLoc
    message: str
    signals: tuple[str, ...] = ()
    matched_keywords: tuple[str, ...] = ()
    secondary_loc: SourceLoc | None = None
    severity: str = "warning"
    rel_path: str | None = None

    def __post_init__(self):
        if not self.message:
            raise ValueError("finding message must not be empty")
        if self.severity not in SEVERITIES:
            raise ValueError(f"unknown severity {self.severity!r}")

    @property
    def file(self) -> str:
        return self.primary_loc.file

    @property
    def line(self) -> int:
        return self.primary_loc.line

    @cached_property
    def fingerprint(self) -> str:
        """16 hex digits; line numbers are deliberately not part of it."""
        path = normalize_path(self.rel_path if self.rel_path is not None else self.file)
        canon = "\x1f".join(
            [str(self.cwe_id), self.kind, self.module_name, "\x1e".join(self.signals), path]
        )
        return f"{fnv1a_64(canon.encode('utf-8')):016x}"

    def sort_key(self):
        return (self.file, self.line, self.cwe_id, self.kind, self.module_name, self.signals)


def sort_findings(findings) -> list[Finding]:
    return sorted(findings, key=Finding.sort_key)


def with_severity(findings, policy: dict[int, str]) -> list[Finding]:
    return [replace(f, severity=policy.get(f.cwe_id, f.severity)) for f in findings]


# -- rendering -------------------------------------------------------------------------


def render_text(findings, stats: ScanStats | None = None, show_stats: bool = False) -> str:
    stats = stats or ScanStats()
    lines = []
    for f in sort_findings(findings):
        where = f"{f.file}:{f.line}"
        if f.secondary_loc is not None:
            where += f"->{f.secondary_loc.line}"
        sig = ", ".join(f.signals)
        lines.append(
            f"CWE-{f.cwe_id} {f.severity} {where} [{f.kind}] {f.message} (signals: {sig})"
        )
    for d in stats.diagnostics:
        lines.append(f"skipped {d}")
    counts = {cwe: 0 for cwe in CWE_IDS}
    for f in findings:
        counts[f.cwe_id] = counts.get(f.cwe_id, 0) + 1
    lines.append("-- summary --")
    lines.append(
        f"files analyzed: {stats.files_analyzed}, skipped: {stats.files_skipped}, "
        f"lines: {stats.loc}"
    )
    lines.append(" ".join(f"CWE-{cwe}: {counts[cwe]}" for cwe in CWE_IDS) + f" total: {len(findings)}")
    if stats.suppressed or stats.stale_suppressions:
        lines.append(
            f"suppressed: {stats.suppressed}, stale suppressions: {len(stats.stale_suppressions)}"
        )
    lines.append(f"time: parse {stats.parse_ms:.1f} ms, scan {stats.scan_ms:.1f} ms")
    if show_stats:
        lines.append(f"nodes: {stats.total_nodes}")
        for cwe in CWE_IDS:
            rel = stats.relevant_nodes.get(cwe, 0)
            gated = stats.keyword_gated_nodes.get(cwe, 0)
            total = stats.total_nodes or 1
            lines.append(
                f"  {cwe}: relevant {rel} ({100.0 * rel / total:.2f}%), "
                f"keyword-gated {gated} ({100.0 * gated / total:.3f}%)"
            )
    return "\n".join(lines) + "\n"


def finding_to_json(f: Finding) -> dict:
    out = {
        "cwe": f.cwe_id,
        "kind": f.kind,
        "module": f.module_name,
        "file": f.file,
        "line": f.line,
    }
    if f.secondary_loc is not None:
        out["line2"] = f.secondary_loc.line
    out["signals"] = list(f.signals)
    out["keywords"] = list(f.matched_keywords)
    out["severity"] = f.severity
    out["message"] = f.message
    out["fingerprint"] = f.fingerprint
    return out


def stats_to_json(stats: ScanStats, findings) -> dict:
    hits = {cwe: 0 for cwe in CWE_IDS}
    for f in findings:
        hits[f.cwe_id] = hits.get(f.cwe_id, 0) + 1
    return {
        "files_analyzed": stats.files_analyzed,
        "files_skipped": stats.files_skipped,
        "loc": stats.loc,
        "parse_ms": round(stats.parse_ms, 3),
        "scan_ms": round(stats.scan_ms, 3),
        "per_scanner": {
            str(cwe): {
                "relevant_nodes": stats.relevant_nodes.get(cwe, 0),
                "keyword_gated_nodes": stats.keyword_gated_nodes.get(cwe, 0),
                "hits": hits[cwe],
            }
            for cwe in CWE_IDS
        },
    }


def render_json(findings, stats: ScanStats | None = None) -> str:
    stats = stats or ScanStats()
    doc = {
        "version": 1,
        "findings": [finding_to_json(f) for f in sort_findings(findings)],
        "stats": stats_to_json(stats, findings),
        "diagnostics": [
            {"file": d.loc.file, "line": d.loc.line, "message": d.message}
            for d in stats.diagnostics
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# -- suppressions ----------------------------------------------------------------------

_FP_RE = re.compile(r"^[0-9a-fA-F]{16}$")


class SuppressionError(ValueError):
    pass


@dataclass
class SuppressionFile:
    entries: dict[str, str] = field(default_factory=dict)  # fingerprint -> reason

    @classmethod
    def parse(cls, text: str, name: str = "<suppressions>") -> SuppressionFile:
        entries: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            body, _, reason = raw.partition("#")
            body = body.strip()
            if not body:
                continue
            if not _FP_RE.match(body):
                raise SuppressionError(f"{name}:{lineno}: not a 16-digit hex fingerprint: {body!r}")
            entries[body.lower()] = reason.strip()
        return cls(entries)

    @classmethod
    def load(cls, path: str) -> SuppressionFile:
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.parse(fh.read(), path)
        except OSError as exc:
            raise SuppressionError(f"cannot read suppression file {path}: {exc}") from exc

    def dumps(self) -> str:
        return "".join(
            f"{fp}  # {reason}\n" if reason else f"{fp}\n" for fp, reason in self.entries.items()
        )


def apply_suppressions(findings, supp: SuppressionFile):
    """Return (kept findings, suppressed count, stale fingerprints)."""
    kept = []
    used = set()
    suppressed = 0
    for f in findings:
        if f.fingerprint in supp.entries:
            suppressed += 1
            used.add(f.fingerprint)
        else:
            kept.append(f)
    stale = sorted(fp for fp in supp.entries if fp not in used)
    return kept, suppressed, stale
