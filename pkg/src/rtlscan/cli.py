"""Command line entry point: discover, parse, scan, report."""

from __future__ import annotations

import argparse
import heapq
import os
import re
import sys
import time
from dataclasses import dataclass, field, replace

from .parser import parse_file
from .preprocess import Preprocessor
from .report import (
    CWE_IDS,
    DEFAULT_SEVERITY,
    SEVERITIES,
    Finding,
    SuppressionError,
    SuppressionFile,
    apply_suppressions,
    normalize_path,
    render_json,
    render_text,
    sort_findings,
    with_severity,
)
from .rules import RulebookError, load_rulebook
from .scanners import scan_module
from .stats import FileStats, ScanStats
from .tree import build_scope, count_nodes

EXTENSIONS = (".v", ".sv")

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2


class DiscoveryError(OSError):
    pass


@dataclass
class ScanConfig:
    roots: list[str]
    cwes: tuple[int, ...] = CWE_IDS
    rules_path: str | None = None
    output_format: str = "text"
    show_stats: bool = False
    suppressions: str | None = None
    fail_on_findings: bool = False
    stable_output: bool = False
    severity: dict[int, str] = field(default_factory=dict)
    include_dirs: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.roots:
            raise ValueError("at least one path is required")
        bad = set(self.cwes) - set(CWE_IDS)
        if bad:
            raise ValueError(f"unsupported CWE id(s): {sorted(bad)}")


@dataclass
class ScanResult:
    findings: list[Finding]
    stats: ScanStats
    exit_code: int
    output: str
    error: str | None = None


# -- discovery -----------------------------------------------------------------------

_DEFINE_RE = re.compile(r"^\s*`define\s+([A-Za-z_][A-Za-z0-9_$]*)", re.M)
_INCLUDE_RE = re.compile(r'`include\s+"([^"]+)"')
_MACRO_USE_RE = re.compile(r"`([A-Za-z_][A-Za-z0-9_$]*)")
_DIRECTIVE_NAMES = frozenset(
    {"define", "undef", "include", "ifdef", "ifndef", "elsif", "else", "endif", "timescale",
     "default_nettype", "resetall", "celldefine", "endcelldefine", "line", "pragma"}
)


def _collect(roots) -> list[tuple[str, str]]:
    """(path, path relative to its root) for every source file under roots."""
    found: dict[str, str] = {}
    for root in roots:
        if os.path.isfile(root):
            if root.endswith(EXTENSIONS):
                found.setdefault(os.path.normpath(root), os.path.basename(root))
            continue
        if not os.path.isdir(root) or not os.access(root, os.R_OK | os.X_OK):
            raise DiscoveryError(f"cannot read {root}")
        for dirpath, dirnames, filenames in os.walk(root):
            dirnames.sort()
            for fn in filenames:
                if fn.endswith(EXTENSIONS):
                    path = os.path.normpath(os.path.join(dirpath, fn))
                    found.setdefault(path, normalize_path(os.path.relpath(path, root)))
    return sorted(found.items(), key=lambda kv: normalize_path(kv[0]))


def order_files(paths: list[str]) -> list[str]:
    """Macro definers and included files first, lexicographic otherwise."""
    texts = {}
    for p in paths:
        try:
            with open(p, encoding="utf-8", errors="replace") as fh:
                texts[p] = fh.read()
        except OSError:
            texts[p] = ""
    definers: dict[str, str] = {}
    for p in sorted(paths):
        for name in _DEFINE_RE.findall(texts[p]):
            definers.setdefault(name, p)
    by_name = {os.path.basename(p): p for p in paths}
    deps: dict[str, set[str]] = {p: set() for p in paths}
    for p in paths:
        text = texts[p]
        own = set(_DEFINE_RE.findall(text))
        for inc in _INCLUDE_RE.findall(text):
            cand = os.path.normpath(os.path.join(os.path.dirname(p), inc))
            target = cand if cand in deps else by_name.get(os.path.basename(inc))
            if target and target != p:
                deps[p].add(target)
        for name in set(_MACRO_USE_RE.findall(text)):
            if name in _DIRECTIVE_NAMES or name in own:
                continue
            d = definers.get(name)
            if d and d != p:
                deps[p].add(d)
    users: dict[str, set[str]] = {p: set() for p in paths}
    for p, ds in deps.items():
        for d in ds:
            users[d].add(p)
    indeg = {p: len(ds) for p, ds in deps.items()}
    key = normalize_path
    heap = [(key(p), p) for p, n in indeg.items() if n == 0]
    heapq.heapify(heap)
    out = []
    done = set()
    while len(out) < len(paths):
        if not heap:
            # dependency cycle: release the lexicographically first file
            rest = min((p for p in paths if p not in done), key=key)
            heapq.heappush(heap, (key(rest), rest))
            indeg[rest] = 0
        _, p = heapq.heappop(heap)
        if p in done:
            continue
        done.add(p)
        out.append(p)
        for u in users[p]:
            if u in done:
                continue
            indeg[u] -= 1
            if indeg[u] == 0:
                heapq.heappush(heap, (key(u), u))
    return out


def discover(roots) -> list[str]:
    """Source files under ``roots`` in analysis order."""
    return order_files([p for p, _ in _collect(roots)])


# -- scanning ------------------------------------------------------------------------


def _count_lines(path: str) -> int:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError:
        return 0
    return data.count(b"\n") + (1 if data and not data.endswith(b"\n") else 0)


def scan_paths(config: ScanConfig, rules, files: list[str], rel: dict[str, str]):
    stats = ScanStats()
    findings: list[Finding] = []
    pp = Preprocessor(include_dirs=config.include_dirs)
    for path in files:
        t0 = time.perf_counter()
        outcome = parse_file(path, preprocessor=pp)
        t1 = time.perf_counter()
        stats.parse_ms += (t1 - t0) * 1000.0
        if outcome.skipped:
            stats.files_skipped += 1
            stats.diagnostics.extend(outcome.diagnostics[-1:])
            continue
        stats.files_analyzed += 1
        stats.loc += _count_lines(path)
        fs = FileStats(path)
        t0 = time.perf_counter()
        for module in outcome.modules:
            fs.total_nodes += count_nodes(module)
            ms = scan_module(module, rules, config.cwes, build_scope(module))
            for cwe, n in ms.relevant.items():
                fs.relevant_nodes[cwe] = fs.relevant_nodes.get(cwe, 0) + n
            for cwe, n in ms.gated.items():
                fs.keyword_gated_nodes[cwe] = fs.keyword_gated_nodes.get(cwe, 0) + n
            for f in ms.findings:
                findings.append(replace(f, rel_path=rel.get(normalize_path(f.file), f.file)))
        stats.scan_ms += (time.perf_counter() - t0) * 1000.0
        stats.add_file(fs)
    return findings, stats


def run_scan(config: ScanConfig) -> ScanResult:
    try:
        rules = load_rulebook(config.rules_path)
        supp = SuppressionFile.load(config.suppressions) if config.suppressions else None
        pairs = _collect(config.roots)
    except (RulebookError, SuppressionError, DiscoveryError) as exc:
        return ScanResult([], ScanStats(), EXIT_ERROR, "", str(exc))
    rel = {normalize_path(p): r for p, r in pairs}
    files = order_files([p for p, _ in pairs])
    findings, stats = scan_paths(config, rules, files, rel)

    policy = dict(DEFAULT_SEVERITY)
    policy.update(config.severity)
    findings = with_severity(findings, policy)
    if supp is not None:
        findings, stats.suppressed, stats.stale_suppressions = apply_suppressions(findings, supp)
    findings = sort_findings(findings)
    if config.stable_output:
        stats.parse_ms = stats.scan_ms = 0.0
    if config.output_format == "json":
        output = render_json(findings, stats)
    else:
        output = render_text(findings, stats, config.show_stats)
    code = EXIT_FINDINGS if (config.fail_on_findings and findings) else EXIT_OK
    return ScanResult(findings, stats, code, output)


# -- argument handling ---------------------------------------------------------------


def _cwe_list(text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip().upper().removeprefix("CWE-")
        if not part:
            continue
        try:
            cwe = int(part)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a CWE id: {part!r}") from None
        if cwe not in CWE_IDS:
            raise argparse.ArgumentTypeError(
                f"CWE-{cwe} has no scanner (choose from {', '.join(map(str, CWE_IDS))})"
            )
        out.append(cwe)
    if not out:
        raise argparse.ArgumentTypeError("empty CWE list")
    return tuple(dict.fromkeys(out))


def _severity(text: str) -> tuple[int, str]:
    cwe, sep, level = text.partition("=")
    if not sep or level not in SEVERITIES:
        raise argparse.ArgumentTypeError(f"expected CWE=warning|info, got {text!r}")
    return _cwe_list(cwe)[0], level


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rtlscan", description="Heuristic hardware CWE scanner for Verilog RTL."
    )
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("scan", help="scan Verilog/SystemVerilog sources")
    sp.add_argument("paths", nargs="+", help="files or directories to scan")
    sp.add_argument("--cwe", type=_cwe_list, default=CWE_IDS, help="comma-separated CWE ids")
    sp.add_argument("--rules", help="JSON rule file overriding keyword categories")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.add_argument("--suppressions", help="file of finding fingerprints to suppress")
    sp.add_argument("--stats", action="store_true", help="print node statistics")
    sp.add_argument("--fail-on-findings", action="store_true", help="exit 1 if findings remain")
    sp.add_argument("--stable-output", action="store_true", help="zero timing fields")
    sp.add_argument(
        "--severity", type=_severity, action="append", default=[], metavar="CWE=LEVEL",
        help="override the severity of one CWE (warning or info)",
    )
    sp.add_argument("-I", "--include-dir", action="append", default=[], dest="include_dirs")
    return ap


def main(argv=None) -> int:
    ap = build_arg_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    config = ScanConfig(
        roots=args.paths,
        cwes=args.cwe,
        rules_path=args.rules,
        output_format=args.format,
        show_stats=args.stats,
        suppressions=args.suppressions,
        fail_on_findings=args.fail_on_findings,
        stable_output=args.stable_output,
        severity=dict(args.severity),
        include_dirs=args.include_dirs,
    )
    result = run_scan(config)
    if result.error:
        print(f"rtlscan: error: {result.error}", file=sys.stderr)
        return result.exit_code
    sys.stdout.write(result.output)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
