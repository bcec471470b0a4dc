"""Machine-readable ERC rule catalogs.

A catalog file is one JSON document per ERC::

    {"version": ..., "erc": "ERC20", "doc": "<full ERC text>",
     "rules": [{"id", "category", "target", "param"?, "event"?, "callee"?,
                "getter"?, "returnType"?, "text", "impact"}, ...]}

The bundled catalogs live in ``ercfault/data/catalogs`` and are count-checked
on load against the per-category rule distribution they are meant to encode.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional

log = logging.getLogger(__name__)

ERCS = ("ERC20", "ERC721", "ERC1155")
CATEGORIES = ("Check", "API", "Value", "Call", "Return", "Logging", "Uncovered")
INJECTABLE = CATEGORIES[:-1]
IMPACTS = ("high", "medium", "low")
RETURN_TYPES = ("int", "bool", "address", "string")

# Injectable rules per category, plus the uncovered remainder.
EXPECTED_COUNTS: dict[str, dict[str, int]] = {
    "ERC20": {"Check": 1, "API": 9, "Value": 1, "Call": 0, "Return": 9, "Logging": 5, "Uncovered": 7},
    "ERC721": {"Check": 12, "API": 10, "Value": 0, "Call": 2, "Return": 4, "Logging": 10, "Uncovered": 22},
    "ERC1155": {"Check": 7, "API": 6, "Value": 0, "Call": 2, "Return": 0, "Logging": 7, "Uncovered": 18},
}

# category -> the one optional field it requires
_CATEGORY_FIELD = {
    "Check": "param",
    "Logging": "event",
    "Call": "callee",
    "Value": "getter",
    "Return": "returnType",
}
_OPTIONAL_FIELDS = ("param", "event", "callee", "getter", "returnType")

BUNDLED_DIR = Path(__file__).resolve().parent / "data" / "catalogs"


class SchemaError(ValueError):
    pass


class CountMismatch(ValueError):
    pass


class NotAnErcContract(ValueError):
    pass


_INT_ALIASES = {"uint": "uint256", "int": "int256", "byte": "bytes1"}
_LOCATIONS = {"memory", "calldata", "storage"}
_SIG_RE = re.compile(r"^\s*([A-Za-z_$][\w$]*)\s*\((.*?)\)\s*(?:returns\s*\((.*)\))?\s*$")


def _canonical(type_text: str) -> str:
    m = re.match(r"^([A-Za-z_$][\w$.]*)(.*)$", type_text)
    if not m:
        raise SchemaError(f"bad type {type_text!r}")
    base, suffix = m.groups()
    return _INT_ALIASES.get(base, base) + suffix.replace(" ", "")


def _split_params(text: str) -> tuple[tuple[str, ...], tuple[Optional[str], ...]]:
    types, names = [], []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        words = [w for w in chunk.split() if w not in _LOCATIONS and w not in ("indexed", "payable")]
        if not words:
            raise SchemaError(f"empty parameter in {text!r}")
        types.append(_canonical(words[0]))
        names.append(words[1] if len(words) > 1 else None)
    return tuple(types), tuple(names)


@dataclass(frozen=True)
class TargetSignature:
    """A rule's target function: ``name(type name, ...) returns (type)``."""

    name: str
    param_types: tuple[str, ...]
    param_names: tuple[Optional[str], ...]
    return_types: tuple[str, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "TargetSignature":
        m = _SIG_RE.match(text)
        if not m:
            raise SchemaError(f"unparseable target signature {text!r}")
        name, params, returns = m.groups()
        types, names = _split_params(params)
        ret_types, _ = _split_params(returns or "")
        return cls(name, types, names, ret_types)

    @property
    def signature(self) -> str:
        return f"{self.name}({','.join(self.param_types)})"

    def param_index(self, param: str) -> int:
        try:
            return self.param_names.index(param)
        except ValueError:
            raise KeyError(param) from None


@dataclass(frozen=True)
class Rule:
    id: str
    erc: str
    category: str
    text: str
    impact: str
    target: Optional[TargetSignature] = None
    param: Optional[str] = None
    event: Optional[str] = None
    callee: Optional[str] = None
    getter: Optional[TargetSignature] = None
    return_type: Optional[str] = None
    target_text: Optional[str] = field(default=None, compare=False)

    @property
    def injectable(self) -> bool:
        return self.category != "Uncovered"

    def to_dict(self) -> dict:
        d = {"id": self.id, "category": self.category}
        if self.target_text:
            d["target"] = self.target_text
        for key, value in (
            ("param", self.param), ("event", self.event), ("callee", self.callee),
            ("getter", self.getter.signature if self.getter else None), ("returnType", self.return_type),
        ):
            if value is not None:
                d[key] = value
        d["text"] = self.text
        d["impact"] = self.impact
        return d


def _rule_from_dict(raw: dict, erc: str, where: str) -> Rule:
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: rule must be an object")
    for key in ("id", "category", "text", "impact"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            raise SchemaError(f"{where}: field '{key}' missing or not a non-empty string")
    rid, category = raw["id"], raw["category"]
    where = f"{where} ({rid})"
    if category not in CATEGORIES:
        raise SchemaError(f"{where}: field 'category' must be one of {', '.join(CATEGORIES)}")
    if raw["impact"] not in IMPACTS:
        raise SchemaError(f"{where}: field 'impact' must be one of {', '.join(IMPACTS)}")
    unknown = set(raw) - {"id", "category", "target", "text", "impact", *_OPTIONAL_FIELDS}
    if unknown:
        raise SchemaError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")

    wanted = _CATEGORY_FIELD.get(category)
    for key in _OPTIONAL_FIELDS:
        present = raw.get(key) is not None
        if key == wanted and not present:
            raise SchemaError(f"{where}: field '{key}' is required for {category} rules")
        if key != wanted and present:
            raise SchemaError(f"{where}: field '{key}' is not allowed for {category} rules")

    target = None
    if category == "Uncovered":
        if raw.get("target") is not None:
            raise SchemaError(f"{where}: field 'target' is not allowed for Uncovered rules")
    else:
        if not isinstance(raw.get("target"), str):
            raise SchemaError(f"{where}: field 'target' is required for {category} rules")
        target = TargetSignature.parse(raw["target"])

    param = raw.get("param")
    if param is not None and param != "msg.sender" and param not in target.param_names:
        raise SchemaError(f"{where}: field 'param' names no parameter of the target")
    if category == "Return" and raw["returnType"] not in RETURN_TYPES:
        raise SchemaError(f"{where}: field 'returnType' must be one of {', '.join(RETURN_TYPES)}")
    getter = TargetSignature.parse(raw["getter"]) if raw.get("getter") else None

    return Rule(
        id=rid, erc=erc, category=category, text=raw["text"], impact=raw["impact"],
        target=target, param=param, event=raw.get("event"), callee=raw.get("callee"),
        getter=getter, return_type=raw.get("returnType"), target_text=raw.get("target"),
    )


@dataclass(frozen=True)
class Catalog:
    version: str
    rules_by_erc: dict = field(default_factory=dict)  # erc -> tuple[Rule, ...]
    docs: dict = field(default_factory=dict)  # erc -> document text

    def rules(self, erc: Optional[str] = None) -> tuple[Rule, ...]:
        if erc is not None:
            return self.rules_by_erc.get(erc, ())
        return tuple(r for e in ERCS for r in self.rules_by_erc.get(e, ()))

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules():
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def doc(self, erc: str) -> str:
        return self.docs.get(erc, "")

    def counts(self, erc: str) -> dict[str, int]:
        c = Counter(r.category for r in self.rules(erc))
        return {cat: c.get(cat, 0) for cat in CATEGORIES}

    def injectable(self, erc: Optional[str] = None) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules(erc) if r.injectable)

    def required_functions(self, erc: str) -> set[str]:
        return {r.target.name for r in self.rules(erc) if r.category == "API"}


def _parse_document(text: str, where: str) -> tuple[str, str, str, tuple[Rule, ...]]:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{where}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: top level must be an object")
    erc = raw.get("erc")
    if erc not in ERCS:
        raise SchemaError(f"{where}: field 'erc' must be one of {', '.join(ERCS)}")
    version = raw.get("version")
    if not isinstance(version, str):
        raise SchemaError(f"{where}: field 'version' missing or not a string")
    doc = raw.get("doc", "")
    if not isinstance(doc, str):
        raise SchemaError(f"{where}: field 'doc' must be a string")
    rules = raw.get("rules", [])
    if not isinstance(rules, list):
        raise SchemaError(f"{where}: field 'rules' must be a list")
    parsed = tuple(_rule_from_dict(r, erc, f"{where}: rules[{i}]") for i, r in enumerate(rules))
    return erc, version, doc, parsed


def _is_bundled(path: Path) -> bool:
    try:
        return path.resolve().parent == BUNDLED_DIR
    except OSError:
        return False


def _check_counts(erc: str, rules: Iterable[Rule], where: str) -> None:
    actual = Counter(r.category for r in rules)
    expected = EXPECTED_COUNTS[erc]
    diffs = [f"{c}: {actual.get(c, 0)} != {n}" for c, n in expected.items() if actual.get(c, 0) != n]
    if diffs:
        raise CountMismatch(f"{where}: {erc} category counts differ ({'; '.join(diffs)})")


def load_catalog(path: str | Path) -> Catalog:
    """Load one catalog file, or every ``*.json`` file in a directory."""
    path = Path(path)
    files = sorted(path.glob("*.json")) if path.is_dir() else [path]
    versions, by_erc, docs = [], {}, {}
    for f in files:
        text = f.read_text(encoding="utf-8")
        if not text.strip():
            log.info("catalog %s is empty", f)
            continue
        erc, version, doc, rules = _parse_document(text, str(f))
        if erc in by_erc:
            raise SchemaError(f"{f}: duplicate catalog for {erc}")
        if _is_bundled(f):
            _check_counts(erc, rules, str(f))
        by_erc[erc] = rules
        docs[erc] = doc
        versions.append(version)
    seen: set[str] = set()
    for rules in by_erc.values():
        for r in rules:
            if r.id in seen:
                raise SchemaError(f"duplicate rule id {r.id}")
            seen.add(r.id)
    version = "+".join(sorted(set(versions))) if versions else "empty"
    return Catalog(version=version, rules_by_erc=by_erc, docs=docs)


@lru_cache(maxsize=1)
def bundled_catalog() -> Catalog:
    return load_catalog(BUNDLED_DIR)


def applicable_rules(view, catalog: Catalog) -> list[Rule]:
    """Rules of the view's ERC whose injection operator finds something to edit."""
    from .injector import NotApplicable, plan_edits

    if view.erc == "Unknown":
        raise NotAnErcContract(view.name)
    out = []
    for rule in catalog.injectable(view.erc):
        try:
            plan_edits(view, rule)
        except NotApplicable as exc:
            log.debug("%s not applicable to %s: %s", rule.id, view.name, exc)
            continue
        out.append(rule)
    return out
