"""Prompt templates and their instantiation."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from ..analysis import ContractView, UnknownFunction, code_slice
from ..catalog import ERCS, Catalog
from ..solidity.emit import function_header

FULL_RULE = "full-rule"
ORACLE = "oracle"
MODES = (FULL_RULE, ORACLE)

PLACEHOLDERS = {
    FULL_RULE: ("<ERC_type>", "<code>", "<ERC_content>"),
    ORACLE: ("<contract_name>", "<rule>", "<function_sig>", "<code>"),
}
_TOKEN_RE = re.compile(r"<[A-Za-z_]+>")


class TemplateError(ValueError):
    pass


class UnknownErc(ValueError):
    pass


@dataclass(frozen=True)
class Template:
    template_id: str
    mode: str
    text: str

    @classmethod
    def from_text(cls, text: str, mode: str, template_id: str = "inline") -> "Template":
        if mode not in MODES:
            raise TemplateError(f"unknown mode {mode!r}")
        allowed = PLACEHOLDERS[mode]
        found = set(_TOKEN_RE.findall(text))
        unknown = sorted(found - set(allowed))
        if unknown:
            raise TemplateError(f"{template_id}: unknown placeholder(s) {', '.join(unknown)}")
        missing = [p for p in allowed if p not in found]
        if missing:
            raise TemplateError(f"{template_id}: missing placeholder(s) {', '.join(missing)}")
        return cls(template_id, mode, text)

    @classmethod
    def load(cls, path: str | Path, mode: str) -> "Template":
        path = Path(path)
        return cls.from_text(path.read_text(encoding="utf-8"), mode, path.name)

    @classmethod
    def bundled(cls, mode: str) -> "Template":
        name = "fullrule.txt" if mode == FULL_RULE else "oracle.txt"
        text = resources.files("ercfault").joinpath("data", "templates", name).read_text(encoding="utf-8")
        return cls.from_text(text, mode, name)

    def fill(self, values: dict[str, str]) -> "PromptSpec":
        missing = [p for p in PLACEHOLDERS[self.mode] if p not in values]
        if missing:
            raise TemplateError(f"no value for {', '.join(missing)}")
        # one pass: substituted text is never rescanned for placeholders
        text = _TOKEN_RE.sub(lambda m: values[m.group(0)], self.text)
        return PromptSpec(self.mode, self.template_id, text, dict(values))


@dataclass(frozen=True)
class PromptSpec:
    mode: str
    template_id: str
    text: str = field(repr=False)
    placeholders: dict = field(default_factory=dict, repr=False, compare=False)
    contract_id: str = ""
    record_id: str = ""

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


def build_fullrule_prompt(entry, catalog: Catalog, template: Optional[Template] = None) -> PromptSpec:
    erc = entry.erc
    if erc not in ERCS or not catalog.doc(erc):
        raise UnknownErc(f"{entry.contract_id}: no ERC document for {erc!r}")
    template = template or Template.bundled(FULL_RULE)
    spec = template.fill({"<ERC_type>": erc, "<code>": entry.source, "<ERC_content>": catalog.doc(erc)})
    return PromptSpec(spec.mode, spec.template_id, spec.text, spec.placeholders, contract_id=entry.contract_id)


def build_oracle_prompt(
    record,
    view: ContractView,
    catalog: Catalog,
    source: str,
    template: Optional[Template] = None,
    graph=None,
) -> PromptSpec:
    """Ask about one known violation, showing the target function and its callees.

    ``source`` is the text ``view`` was parsed from (the mutant). When the
    record removed its function outright there is nothing to slice, so the
    whole contract is shown next to the ERC declaration instead.
    """
    rule = catalog.rule(record.rule_id)
    template = template or Template.bundled(ORACLE)
    member = view.functions.get(record.function)
    if member is not None:
        _, code = code_slice(view, member, source, graph)
        sig = function_header(member.node)
    elif record.category == "API" and rule.target_text:
        code = source
        sig = f"function {rule.target_text}"
    else:
        raise UnknownFunction(f"{view.name}: no function {record.function}")
    spec = template.fill({"<contract_name>": view.name, "<rule>": rule.text, "<function_sig>": sig, "<code>": code})
    return PromptSpec(
        spec.mode, spec.template_id, spec.text, spec.placeholders,
        contract_id=record.contract_id, record_id=record.record_id,
    )
