"""A declaration-level ERC checker used as a non-LLM baseline.

It looks only at what a syntactic tool can see: required functions and their
declared types, required events, and whether each function that must log an
event reaches an ``emit`` of it. Guards, state updates, return values and
external calls are outside its reach by design.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .analysis import ContractView, find_sites
from .catalog import Catalog, NotAnErcContract, Rule
from .solidity import ast as A
from .solidity.ast import canonical_type

log = logging.getLogger(__name__)

KINDS = ("missing-function", "bad-declaration", "missing-event-decl", "missing-emit")


@dataclass(frozen=True)
class Finding:
    kind: str
    rule_id: str
    function: Optional[str] = None
    details: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rule_id": self.rule_id, "function": self.function, "details": self.details}


def auto_getter(var: A.StateVariable) -> tuple[str, tuple[str, ...]]:
    """Signature and return types of the getter Solidity generates for a public state variable."""
    params, t = [], var.type_name
    while True:
        if isinstance(t, A.Mapping):
            params.append(canonical_type(t.key))
            t = t.value
        elif isinstance(t, A.ArrayTypeName):
            params.append("uint256")
            t = t.base
        else:
            break
    return f"{var.name}({','.join(params)})", (canonical_type(t),)


def _declared_returns(fn: A.FunctionDef) -> tuple[str, ...]:
    return tuple(canonical_type(p.type_name) for p in (fn.returns or ()))


def _check_api(view: ContractView, rule: Rule) -> Optional[Finding]:
    target = rule.target
    sig = target.signature
    member = view.functions.get(sig)
    if member is not None and isinstance(member.node, A.FunctionDef):
        fn = member.node
        if not fn.is_public:
            return Finding("bad-declaration", rule.id, sig, f"{sig} is {fn.visibility}, not public or external")
        returns = _declared_returns(fn)
        if returns != target.return_types:
            return Finding("bad-declaration", rule.id, sig, f"{sig} returns ({','.join(returns)}), expected ({','.join(target.return_types)})")
        return None
    ref = view.state_vars.get(target.name)
    if ref is not None and ref.node.visibility == "public":
        getter_sig, returns = auto_getter(ref.node)
        if getter_sig == sig and returns == target.return_types:
            return None
        return Finding("bad-declaration", rule.id, sig, f"public variable {target.name} yields {getter_sig} returns ({','.join(returns)})")
    same_name = sorted(m.signature for m in view.functions.values() if m.name == target.name and isinstance(m.node, A.FunctionDef))
    if same_name:
        return Finding("bad-declaration", rule.id, sig, f"found {', '.join(same_name)} instead of {sig}")
    return Finding("missing-function", rule.id, sig, f"{sig} is not defined")


def check_compliance(view: ContractView, catalog: Catalog, erc: Optional[str] = None) -> list[Finding]:
    """Declaration-level findings; ``erc`` overrides detection, which may fail on a contract missing functions."""
    erc = erc or view.erc
    if erc not in catalog.rules_by_erc:
        raise NotAnErcContract(view.name)
    rules = catalog.rules(erc)
    findings: list[Finding] = []

    for rule in rules:
        if rule.category == "API":
            f = _check_api(view, rule)
            if f is not None:
                findings.append(f)

    logging_rules = [r for r in rules if r.category == "Logging"]
    declared = set(view.events)
    reported_events = set()
    for rule in logging_rules:
        if rule.event not in declared and rule.event not in reported_events:
            reported_events.add(rule.event)
            findings.append(Finding("missing-event-decl", rule.id, None, f"event {rule.event} is not declared"))

    for rule in logging_rules:
        root = view.functions.get(rule.target.signature)
        if root is None or not isinstance(root.node, A.FunctionDef) or root.node.body is None:
            continue
        if not find_sites(view, root, rule.event, kind="event"):
            findings.append(Finding("missing-emit", rule.id, root.signature, f"{root.signature} never emits {rule.event}"))
    return findings
