"""Keyword categories with match and exclusion lists.

Every keyword decision made by a scanner goes through :func:`matches`:
a name hits a category when its lowercased form contains at least one
match entry and none of the exclude entries (substring containment).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

CATEGORIES = ("lock", "debug", "reset", "security_register", "wdata", "control_prune")

DEFAULTS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "lock": (("lock", "prot"), ("clock",)),
    "debug": (("debug", "dbg"), ()),
    "reset": (("rst", "reset"), ()),
    "security_register": (("lock", "prot"), ("clock",)),
    "wdata": (("wdata",), ()),
    "control_prune": (("clk", "clock", "rst", "reset"), ()),
}


class RulebookError(ValueError):
    pass


@dataclass(frozen=True)
class KeywordCategory:
    name: str
    match_list: tuple[str, ...]
    exclude_list: tuple[str, ...] = ()

    def matches(self, name: str) -> bool:
        return matches(name, self)


def matches(name: str, category: KeywordCategory) -> bool:
    low = name.lower()
    if not low:
        return False
    if not any(kw in low for kw in category.match_list):
        return False
    return not any(kw in low for kw in category.exclude_list)


@dataclass(frozen=True)
class Rulebook:
    categories: dict[str, KeywordCategory] = field(default_factory=dict)
    provenance: str = "defaults"

    def __getitem__(self, name: str) -> KeywordCategory:
        return self.categories[name]

    def matches(self, name: str, category: str) -> bool:
        return matches(name, self.categories[category])

    def with_category(self, name: str, match=None, exclude=None) -> Rulebook:
        """Copy of this rulebook with one category's lists replaced."""
        cur = self.categories[name]
        cats = dict(self.categories)
        cats[name] = KeywordCategory(
            name,
            _normalize(match, name) if match is not None else cur.match_list,
            _normalize(exclude, name) if exclude is not None else cur.exclude_list,
        )
        return Rulebook(cats, self.provenance)

    def to_json(self) -> dict:
        return {
            name: {"match": list(c.match_list), "exclude": list(c.exclude_list)}
            for name, c in self.categories.items()
        }


def default_rulebook() -> Rulebook:
    return Rulebook(
        {name: KeywordCategory(name, m, x) for name, (m, x) in DEFAULTS.items()}, "defaults"
    )


def _normalize(words, where: str) -> tuple[str, ...]:
    if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
        raise RulebookError(f"{where}: keyword lists must be arrays of strings")
    out = []
    for w in words:
        w = w.strip().lower()
        if not w or any(c.isspace() for c in w):
            raise RulebookError(f"{where}: invalid keyword {w!r}")
        out.append(w)
    return tuple(out)


def rulebook_from_dict(data, provenance: str = "<dict>") -> Rulebook:
    if not isinstance(data, dict):
        raise RulebookError(f"{provenance}: top level must be an object")
    book = default_rulebook()
    cats = dict(book.categories)
    for name, spec in data.items():
        if name not in CATEGORIES:
            raise RulebookError(f"{provenance}: unknown category {name!r}")
        if not isinstance(spec, dict):
            raise RulebookError(f"{provenance}: category {name!r} must be an object")
        extra = set(spec) - {"match", "exclude"}
        if extra:
            raise RulebookError(f"{provenance}: unknown key(s) {sorted(extra)} in {name!r}")
        default_match, default_exclude = DEFAULTS[name]
        cats[name] = KeywordCategory(
            name,
            _normalize(spec["match"], f"{provenance}:{name}.match") if "match" in spec else default_match,
            _normalize(spec["exclude"], f"{provenance}:{name}.exclude") if "exclude" in spec else default_exclude,
        )
    return Rulebook(cats, provenance)


def load_rulebook(path: str | None = None) -> Rulebook:
    """Load a JSON rule file; absent categories fall back to the defaults."""
    if path is None:
        return default_rulebook()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise RulebookError(f"cannot read rule file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RulebookError(f"{path}:{exc.lineno}: malformed JSON: {exc.msg}") from exc
    return rulebook_from_dict(data, path)
