"""Heuristic static scanner for hardware CWEs in Verilog RTL."""

from __future__ import annotations

from .parser import ParseOutcome, parse_file, parse_source
from .report import Finding, render_json, render_text
from .rules import Rulebook, default_rulebook, load_rulebook
from .scanners import scan_module

__version__ = "0.1.0"

__all__ = [
    "Finding",
    "ParseOutcome",
    "Rulebook",
    "default_rulebook",
    "load_rulebook",
    "parse_file",
    "parse_source",
    "render_json",
    "render_text",
    "scan_module",
]
