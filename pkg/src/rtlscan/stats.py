from __future__ import annotations

from dataclasses import dataclass, field

from .lexer import Diagnostic


@dataclass
class FileStats:
    path: str
    total_nodes: int = 0
    relevant_nodes: dict[int, int] = field(default_factory=dict)
    keyword_gated_nodes: dict[int, int] = field(default_factory=dict)


@dataclass
class ScanStats:
    files_analyzed: int = 0
    files_skipped: int = 0
    loc: int = 0
    total_nodes: int = 0
    relevant_nodes: dict[int, int] = field(default_factory=dict)
    keyword_gated_nodes: dict[int, int] = field(default_factory=dict)
    parse_ms: float = 0.0
    scan_ms: float = 0.0
    suppressed: int = 0
    stale_suppressions: list[str] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    per_file: list[FileStats] = field(default_factory=list)

    def add_file(self, fs: FileStats) -> None:
        self.per_file.append(fs)
        self.total_nodes += fs.total_nodes
        for cwe, n in fs.relevant_nodes.items():
            self.relevant_nodes[cwe] = self.relevant_nodes.get(cwe, 0) + n
        for cwe, n in fs.keyword_gated_nodes.items():
            self.keyword_gated_nodes[cwe] = self.keyword_gated_nodes.get(cwe, 0) + n
