from __future__ import annotations

import glob
import os

import pytest

from rtlscan.parser import parse_source
from rtlscan.rules import default_rulebook

TESTS = os.path.dirname(os.path.abspath(__file__))
CORPUS = os.path.join(TESTS, "corpus")

# criterion number -> (description, passed); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def corpus_files(sub: str = "") -> list[str]:
    return sorted(glob.glob(os.path.join(CORPUS, sub, "**", "*.v"), recursive=True))


def parse_one(src: str, file: str = "t.v"):
    """Parse ``src`` and return its single module."""
    out = parse_source(src, file)
    assert not out.skipped, [str(d) for d in out.diagnostics]
    assert len(out.modules) == 1
    return out.modules[0]


@pytest.fixture
def rules():
    return default_rulebook()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        desc, ok = ACCEPTANCE[num]
        terminalreporter.write_line(f"AC{num} {'PASS' if ok else 'FAIL'}: {desc}")
