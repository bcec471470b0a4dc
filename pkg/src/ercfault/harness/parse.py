"""Turning model responses into claims and verdicts."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Optional

from ..catalog import Catalog, Rule, TargetSignature

log = logging.getLogger(__name__)

MATCH_THRESHOLD = 0.6

_LINE_RE = re.compile(
    r"^\s*(?:[-*•>]|\d+[.)])?\s*[*_`]*\s*(RULE|FUNCTION)\s*[*_`]*\s*[:：]\s*(.*?)\s*$",
    re.IGNORECASE,
)
_STRIP = " \t*_`\"'"
_WORD_RE = re.compile(r"[a-z0-9]+")
_IDENT_RE = re.compile(r"[A-Za-z_$][\w$]*")


@dataclass(frozen=True)
class Claim:
    rule_ref: Optional[str] = None
    function_ref: Optional[str] = None
    rule_id: Optional[str] = None
    rule_score: float = 0.0
    function: Optional[str] = None  # matched signature, or a bare name when unmatched in the view

    def __post_init__(self):
        if not self.rule_ref and not self.function_ref:
            raise ValueError("a claim needs a rule or a function reference")


def tokens(text: str) -> frozenset[str]:
    return frozenset(_WORD_RE.findall(text.lower()))


def dice(a: frozenset, b: frozenset) -> float:
    if not a or not b:
        return 0.0
    return 2 * len(a & b) / (len(a) + len(b))


def function_name(ref: str) -> str:
    m = _IDENT_RE.search(re.sub(r"^\s*function\s+", "", ref))
    return m.group(0) if m else ref.strip()


def match_rule(text: str, rules: list[Rule], function_hint: Optional[str] = None) -> tuple[Optional[str], float]:
    """Best catalog rule for a free-text rule reference, or (None, score) below threshold."""
    named = [r.id for r in rules if r.id in text]
    if named:
        return max(named, key=len), 1.0
    claim_tokens = tokens(text)
    # Above the threshold, a rule bound to the claimed function beats a closer textual match.
    best_id, best_key, best_score = None, (False, False, -1.0), 0.0
    for r in sorted(rules, key=lambda r: r.id):
        score = dice(claim_tokens, tokens(r.text))
        bound = bool(function_hint and r.target and r.target.name == function_hint)
        key = (score >= MATCH_THRESHOLD, bound and score >= MATCH_THRESHOLD, score)
        if key > best_key:
            best_id, best_key, best_score = r.id, key, score
    if best_id is None or not best_key[0]:
        return None, best_score
    return best_id, best_score


def match_function(ref: str, view=None) -> str:
    name = function_name(ref)
    if view is None:
        return name
    overloads = [m for m in view.functions.values() if m.name == name and m.node.kind == "function"]
    if len(overloads) == 1:
        return overloads[0].signature
    if len(overloads) > 1 and "(" in ref and ")" in ref:
        params = ref[ref.index("(") + 1:ref.index(")")]
        try:
            wanted = TargetSignature.parse(f"{name}({params})").signature
        except ValueError:
            return name
        for m in overloads:
            if m.signature == wanted:
                return m.signature
    return name


def parse_fullrule_response(text: str, catalog: Catalog, view=None, erc: Optional[str] = None) -> list[Claim]:
    """Extract RULE:/FUNCTION: pairs; anything else in the response is ignored."""
    erc = erc or (view.erc if view is not None else None)
    rules = list(catalog.rules(erc)) if erc else list(catalog.rules())
    pairs: list[list[Optional[str]]] = []
    for line in text.splitlines():
        m = _LINE_RE.match(line)
        if not m:
            continue
        kind, value = m.group(1).upper(), m.group(2).strip(_STRIP)
        if not value:
            continue
        if kind == "RULE":
            pairs.append([value, None])
        elif pairs and pairs[-1][1] is None:
            pairs[-1][1] = value
        else:
            pairs.append([None, value])

    claims = []
    for rule_ref, fn_ref in pairs:
        function = match_function(fn_ref, view) if fn_ref else None
        rule_id, score = (None, 0.0)
        if rule_ref:
            rule_id, score = match_rule(rule_ref, rules, function_name(fn_ref) if fn_ref else None)
            log.debug("rule ref %r -> %s (%.3f)", rule_ref[:60], rule_id, score)
        claims.append(Claim(rule_ref, fn_ref, rule_id, score, function))
    return claims


# -- oracle verdicts ----------------------------------------------------------

_ANSWER_RE = re.compile(r"ANSWER\s*[*_`]*\s*[:：]\s*[*_`\"']*\s*([A-Za-z]*)", re.IGNORECASE)
_LEADING_RE = re.compile(r"^[\s*_`>\"'#-]*([A-Za-z]+)")
_YES = {"yes", "true"}
_NO = {"no", "false"}


@dataclass(frozen=True)
class Verdict:
    violated: Optional[bool]  # None when no verdict could be read
    source: str  # marker | leading | none

    @property
    def ambiguous(self) -> bool:
        return self.violated is None


def oracle_verdict(text: str) -> Verdict:
    m = _ANSWER_RE.search(text)
    if m:
        word = m.group(1).lower()
        if word in _YES:
            return Verdict(True, "marker")
        if word in _NO:
            return Verdict(False, "marker")
        return Verdict(None, "marker")
    m = _LEADING_RE.match(text)
    if m:
        word = m.group(1).lower()
        if word in _YES:
            return Verdict(True, "leading")
        if word in _NO:
            return Verdict(False, "leading")
    return Verdict(None, "none")
