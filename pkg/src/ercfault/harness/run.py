"""Campaign-level evaluation: prompt every contract or record, then score the log offline."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from ..analysis import AnalysisError, ContractView, build_view
from ..catalog import Catalog
from ..corpus import CorpusEntry, count_lines
from ..injector import CampaignManifest
from ..solidity import parse
from ..solidity.errors import SolidityError
from .client import AuditLog, ClientConfig, QueryError, query_model
from .parse import parse_fullrule_response
from .prompts import FULL_RULE, ORACLE, PromptSpec, Template, build_fullrule_prompt, build_oracle_prompt
from .score import FN, Z, EvalOutcome, score_fullrule, score_oracle

log = logging.getLogger(__name__)


def load_mutants(manifest: CampaignManifest, mutant_dir: str | Path) -> dict[str, str]:
    root = Path(mutant_dir)
    return {c.contract_id: (root / c.mutant_path).read_text(encoding="utf-8") for c in manifest.contracts}


def _view(source: str, contract_id: str, contract: str, catalog: Catalog) -> Optional[ContractView]:
    try:
        return build_view(parse(source, contract_id), contract, catalog)
    except (SolidityError, AnalysisError) as exc:
        log.warning("%s: cannot analyse mutant (%s)", contract_id, exc)
        return None


def build_prompts(
    manifest: CampaignManifest,
    mutants: dict[str, str],
    catalog: Catalog,
    mode: str,
    template: Optional[Template] = None,
) -> list[PromptSpec]:
    prompts = []
    for c in manifest.contracts:
        source = mutants[c.contract_id]
        if mode == FULL_RULE:
            entry = CorpusEntry(c.contract_id, c.mutant_path, c.mutant_path, source, count_lines(source), c.erc, c.contract)
            prompts.append(build_fullrule_prompt(entry, catalog, template))
            continue
        view = _view(source, c.contract_id, c.contract, catalog)
        if view is None:
            continue
        for r in c.records:
            try:
                prompts.append(build_oracle_prompt(r, view, catalog, source, template))
            except AnalysisError as exc:
                log.warning("%s: no oracle prompt (%s)", r.record_id, exc)
    return prompts


@dataclass(frozen=True)
class QueryResult:
    prompt: PromptSpec
    response: Optional[str]
    error: Optional[str]


def run_queries(prompts: Iterable[PromptSpec], config: ClientConfig, transport, audit: AuditLog, jobs: int = 1) -> list[QueryResult]:
    """Query every prompt; failures are logged and reported, never raised."""

    def one(prompt: PromptSpec) -> QueryResult:
        try:
            return QueryResult(prompt, query_model(prompt, config, transport, audit), None)
        except QueryError as exc:
            log.error("%s %s: %s", prompt.contract_id, prompt.record_id, exc)
            return QueryResult(prompt, None, f"{type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        return list(pool.map(one, prompts))


def _latest(entries: Iterable[dict], mode: str, key: str) -> dict[str, dict]:
    out: dict[str, dict] = {}
    for e in entries:
        if e.get("mode") == mode and e.get("response") is not None:
            out[e.get(key, "")] = e
    return out


def score_log(
    manifest: CampaignManifest,
    entries: list[dict],
    mutants: dict[str, str],
    catalog: Catalog,
    mode: str,
    siblings: bool = True,
) -> list[EvalOutcome]:
    """Bucket every manifest record from logged responses; the last response per key wins."""
    outcomes: list[EvalOutcome] = []
    if mode == FULL_RULE:
        by_contract = _latest(entries, FULL_RULE, "contract_id")
        for c in manifest.contracts:
            entry = by_contract.get(c.contract_id)
            if entry is None:
                buckets, flags = [Z] * len(c.records), ("missing-response",)
                text, model, stamp = "", "", None
            else:
                text, model, stamp = entry["response"], entry.get("model", ""), entry.get("timestamp")
                view = _view(mutants[c.contract_id], c.contract_id, c.contract, catalog) if c.contract_id in mutants else None
                claims = parse_fullrule_response(text, catalog, view, erc=c.erc)
                buckets, flags = score_fullrule(claims, c.records, siblings), ()
            for r, b in zip(c.records, buckets):
                outcomes.append(EvalOutcome(r.record_id, c.contract_id, FULL_RULE, b, r.erc, r.impact, r.origin, model, text, stamp, flags))
    elif mode == ORACLE:
        by_record = _latest(entries, ORACLE, "record_id")
        for r in manifest.records:
            entry = by_record.get(r.record_id)
            if entry is None:
                outcomes.append(EvalOutcome(r.record_id, r.contract_id, ORACLE, FN, r.erc, r.impact, r.origin, flags=("missing-response",)))
                continue
            s = score_oracle(entry["response"], r)
            outcomes.append(EvalOutcome(
                r.record_id, r.contract_id, ORACLE, s.bucket, r.erc, r.impact, r.origin,
                entry.get("model", ""), entry["response"], entry.get("timestamp"), ("ambiguous",) if s.ambiguous else (),
            ))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return outcomes
