"""End-to-end acceptance criteria. Each test prints a single PASS/FAIL line."""

from __future__ import annotations

import contextlib
import itertools
import json
import random
import re
import time
from dataclasses import dataclass

import pytest

from conftest import CORPUS, REPLAY, read_fixture, sidecar, view_of
from ercfault.analysis import build_view
from ercfault.baseline import check_compliance
from ercfault.catalog import CATEGORIES, bundled_catalog
from ercfault.cli import main
from ercfault.corpus import compute_stats, ingest_local
from ercfault.harness.parse import Claim
from ercfault.harness.score import FN, TP, X, Y, Z, score_fullrule, score_oracle
from ercfault.injector import (
    K_MAX,
    CampaignConfig,
    apply_edits,
    inject_check,
    inject_return,
    run_campaign,
    verify_campaign,
)
from ercfault.solidity import parse


@contextlib.contextmanager
def criterion(capsys, number: int, title: str, limit: float | None = None):
    start = time.perf_counter()
    ok = False
    try:
        yield
        elapsed = time.perf_counter() - start
        assert limit is None or elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        with capsys.disabled():
            print(f"\n[acceptance] criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({elapsed:.2f}s)")


def changed_region(a: bytes, b: bytes) -> tuple[int, int, int]:
    """Common-prefix / common-suffix diff: (start, end in a, end in b)."""
    p = 0
    while p < min(len(a), len(b)) and a[p] == b[p]:
        p += 1
    s = 0
    while s < min(len(a), len(b)) - p and a[len(a) - 1 - s] == b[len(b) - 1 - s]:
        s += 1
    return p, len(a) - s, len(b) - s


def test_criterion_1_safe_batch_golden(capsys, catalog):
    with criterion(capsys, 1, "batch-transfer Check mutation deletes only the _to guard", limit=1.0):
        view, text = view_of("erc1155_safe_batch.sol")
        edits = inject_check(view, catalog.rule("erc1155.safeBatchTransferFrom.to-nonzero"))
        mutant = apply_edits(text, edits).encode()
        data = text.encode()
        stmt = re.search(rb"require\(_to != address\(0\)[^;]*;", data)
        assert stmt is not None and data[:stmt.start()].count(b"\n") + 1 == 9
        start, end_a, end_b = changed_region(data, mutant)
        line_start = data.rfind(b"\n", 0, stmt.start()) + 1
        line_end = data.index(b"\n", stmt.end()) + 1
        # a pure deletion of exactly that line's bytes; nothing inserted anywhere
        assert end_b == start and end_a - start == line_end - line_start
        assert data[line_start:stmt.start()].strip() == b"" and data[stmt.end():line_end].strip() == b""
        assert mutant == data[:line_start] + data[line_end:]


def test_criterion_2_balance_of_golden(capsys, catalog, compiler):
    with criterion(capsys, 2, "balanceOf Return mutation adds seeded K and compiles", limit=5.0):
        view, text = view_of("erc20_balance_of.sol")
        rule = catalog.rule("erc20.balanceOf.return")
        ks = []
        for seed in (1, 2, 42):
            mutant = apply_edits(text, inject_return(view, rule, random.Random(seed), text))
            line = mutant.splitlines()[4]
            m = re.fullmatch(r"(\s*)return _balances\[account\] \+ (\d+);", line)
            assert m and 1 <= int(m.group(2)) <= K_MAX
            assert mutant.splitlines()[:4] + mutant.splitlines()[5:] == text.splitlines()[:4] + text.splitlines()[5:]
            again = apply_edits(text, inject_return(view, rule, random.Random(seed), text))
            assert again == mutant
            ks.append(int(m.group(2)))
        assert len(set(ks)) > 1
        assert compiler.run(mutant, "balance_of_acceptance").ok


EXPECTED_COUNTS = {
    "ERC20": (1, 9, 1, 0, 9, 5),
    "ERC721": (12, 10, 0, 2, 4, 10),
    "ERC1155": (7, 6, 0, 2, 0, 7),
}


def test_criterion_3_catalog_counts(capsys):
    with criterion(capsys, 3, "bundled catalog counts"):
        catalog = bundled_catalog()
        injectable = CATEGORIES[:6]
        for erc, expected in EXPECTED_COUNTS.items():
            rules = catalog.rules(erc)
            assert tuple(sum(r.category == c for r in rules) for c in injectable) == expected
        totals = tuple(sum(col) for col in zip(*EXPECTED_COUNTS.values()))
        assert totals == (20, 25, 1, 4, 13, 22)
        assert sum(1 for erc in EXPECTED_COUNTS for r in catalog.rules(erc) if r.category in injectable) == 85
        assert sum(len(catalog.rules(erc)) for erc in EXPECTED_COUNTS) == 132


def test_criterion_4_campaign(capsys, catalog, compiler, tmp_path):
    with criterion(capsys, 4, "seed-42 campaign: bounds, determinism, compiles, soundness", limit=60.0):
        corpus = ingest_local(CORPUS, catalog=catalog)
        assert len(corpus) == 20
        runs = {}
        for label, jobs in (("a", 1), ("b", 1), ("c", 8)):
            out = tmp_path / label
            runs[label] = run_campaign(corpus.entries, catalog, CampaignConfig(seed=42, compiler=compiler, jobs=jobs), out)
        manifest = runs["a"]
        assert len(manifest.contracts) == 20 and not manifest.skipped
        assert all(1 <= len(c.records) <= 3 for c in manifest.contracts)
        blobs = {label: (tmp_path / label / "manifest.json").read_bytes() for label in runs}
        assert blobs["a"] == blobs["b"] == blobs["c"]
        for c in manifest.contracts:
            ref = (tmp_path / "a" / c.mutant_path).read_bytes()
            assert ref == (tmp_path / "b" / c.mutant_path).read_bytes() == (tmp_path / "c" / c.mutant_path).read_bytes()
        assert {c.validation for c in manifest.contracts} == {"ok"}
        originals = {e.contract_id: e.source for e in corpus.entries}
        mutants = {c.contract_id: (tmp_path / "a" / c.mutant_path).read_text() for c in manifest.contracts}
        verdicts = verify_campaign(manifest, originals, mutants, catalog)
        assert len(verdicts) == len(manifest.records) and all(ok for _, ok in verdicts)


def test_criterion_5_no_call_in_erc20(capsys, catalog):
    with criterion(capsys, 5, "ERC20-only campaign has no Call records"):
        erc20 = ingest_local(CORPUS, catalog=catalog).entries
        erc20 = [e for e in erc20 if e.erc == "ERC20"]
        assert len(erc20) >= 10
        for seed in (42, 0, 1, 2, 3):
            manifest = run_campaign(erc20, catalog, CampaignConfig(seed=seed, jobs=1))
            assert manifest.records
            assert sum(r.category == "Call" for r in manifest.records) == 0
            assert all(row.get("Call", 0) == 0 for row in manifest.summary.values())


# -- criterion 6 --------------------------------------------------------------


@dataclass(frozen=True)
class Rec:
    rule_id: str
    function: str
    also_violated: tuple = ()


RECORD_SETS = (
    (Rec("a", "f()", ("s",)),),
    (Rec("a", "f()", ("s",)), Rec("b", "g()")),
    (Rec("a", "f()", ("s",)), Rec("a", "g()")),
)
CLAIM_KINDS = [(rule, fn) for rule in ("a", "b", "s", "zzz", None) for fn in ("f", "g", "h", None)]


def expected_bucket(claim, record) -> str:
    """X: correct rule and function; Y: correct rule, wrong function; Z: anything else."""
    rule_ok = claim.rule_id is not None and (claim.rule_id == record.rule_id or claim.rule_id in record.also_violated)
    if not rule_ok:
        return Z
    return X if claim.function == record.function[:-2] else Y


def brute_force(claims, records) -> list[str]:
    best = None
    rank = {X: 2, Y: 1, Z: 0}
    for choice in itertools.product([None, *range(len(claims))], repeat=len(records)):
        used = [c for c in choice if c is not None]
        if len(used) != len(set(used)):
            continue
        buckets = [Z if c is None else expected_bucket(claims[c], records[i]) for i, c in enumerate(choice)]
        key = (buckets.count(X), buckets.count(Y), tuple(rank[b] for b in buckets))
        if best is None or key > best[0]:
            best = (key, buckets)
    return best[1]


def scoring_cases() -> list:
    singles = [((kind,), recs) for recs in RECORD_SETS for kind in CLAIM_KINDS]
    pairs = [(ks, recs) for recs in RECORD_SETS for ks in itertools.product(CLAIM_KINDS, repeat=2)]
    return singles + random.Random(6).sample(pairs, 200 - len(singles))


def as_claims(kinds) -> list[Claim]:
    return [Claim(rule or "text", fn or "", rule, 1.0 if rule else 0.0, fn) for rule, fn in kinds if rule or fn]


ORACLE_RESPONSES = [
    ("ANSWER: YES", True), ("ANSWER: NO", False), ("answer: yes", True), ("**ANSWER:** No", False),
    ("True", True), ("False.", False), ("Yes, the rule is violated.", True), ("No, it is not violated.", False),
    ("Reasoning...\nANSWER: YES", True), ("Reasoning...\nANSWER: NO", False),
    ("It depends on the caller.", None), ("", None), ("ANSWER: maybe", None),
]


def test_criterion_6_scoring_equivalence(capsys):
    with criterion(capsys, 6, "scorers agree with brute-force classifiers on 200 cases", limit=5.0):
        cases = scoring_cases()
        assert len(cases) == 200
        relations = set()
        for kinds, records in cases:
            claims = as_claims(kinds)
            assert score_fullrule(claims, list(records)) == brute_force(claims, list(records)), (kinds, records)
            for c in claims:
                relations |= {expected_bucket(c, r) for r in records}
                relations |= {"sibling" for r in records if c.rule_id in r.also_violated}
        assert relations == {X, Y, Z, "sibling"}
        for text, violated in ORACLE_RESPONSES:
            s = score_oracle(text)
            assert s.bucket == (TP if violated else FN), text
            assert s.ambiguous == (violated is None), text


# -- criterion 7 --------------------------------------------------------------

DECLARATION_LEVEL = {"API", "Logging"}


def _findings(source: str, contract: str, erc: str, catalog) -> set:
    view = build_view(parse(source, contract), contract, catalog)
    return {(f.kind, f.rule_id, f.function) for f in check_compliance(view, catalog, erc=erc)}


def test_criterion_7_baseline_gap(capsys, catalog):
    with criterion(capsys, 7, "baseline flags all API/Logging and no Check/Value/Return/Call mutants"):
        corpus = ingest_local(CORPUS, catalog=catalog).entries
        flagged = {c: [0, 0] for c in CATEGORIES[:6]}
        for seed in (42, 43, 44, 45):
            manifest = run_campaign(corpus, catalog, CampaignConfig(seed=seed, jobs=1))
            sources = {e.contract_id: e.source for e in corpus}
            for c in manifest.contracts:
                before = _findings(sources[c.contract_id], c.contract, c.erc, catalog)
                after = _findings(c.mutant_source, c.contract, c.erc, catalog)
                new = after - before
                if not any(r.category in DECLARATION_LEVEL for r in c.records):
                    assert after == before, c.contract_id
                for r in c.records:
                    hit = any(rule_id == r.rule_id for _, rule_id, _ in new)
                    flagged[r.category][0] += hit
                    flagged[r.category][1] += 1
        assert all(total > 0 for _, total in flagged.values()), flagged
        for category, (hits, total) in flagged.items():
            expected = total if category in DECLARATION_LEVEL else 0
            assert hits == expected, (category, hits, total)


def test_criterion_8_stats(capsys, catalog, campaign):
    with criterion(capsys, 8, "corpus statistics match the hand count"):
        expected = sidecar("loc.json")
        corpus = ingest_local(CORPUS, catalog=catalog).entries
        manifest, _ = campaign
        stats = compute_stats(corpus, manifest)
        assert stats.count == expected["n"]
        assert stats.mean_loc == pytest.approx(expected["mean"], rel=1e-9)
        assert stats.stddev_loc == pytest.approx(expected["population_stddev"], rel=1e-9)
        tally = {"high": 0, "medium": 0, "low": 0}
        for r in manifest.records:
            tally[catalog.rule(r.rule_id).impact] += 1
        assert stats.impact_histogram == tally


def test_criterion_9_replay_determinism(capsys, tmp_path):
    with criterion(capsys, 9, "reports from recorded logs are byte-identical"):
        for mode, log in (("full-rule", "fullrule.responses.log"), ("oracle", "oracle.responses.log")):
            outputs = []
            for n in range(2):
                out = tmp_path / f"{mode}-{n}"
                assert main(["score", "--manifest", str(REPLAY / "manifest.json"), "--responses", str(REPLAY / log),
                             "--mode", mode, "--out", str(out)]) == 0
                outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            assert outputs[0] == outputs[1]
            assert len(outputs[0]) == 5
        # replaying the log through the query path reproduces the same outcomes
        out = tmp_path / "rerun"
        assert main(["eval", "--manifest", str(REPLAY / "manifest.json"), "--mode", "oracle", "--out", str(out),
                     "--transport", "replay", "--replay", str(REPLAY / "oracle.responses.log")]) == 0
        assert main(["score", "--manifest", str(REPLAY / "manifest.json"), "--responses", str(out / "responses.log"),
                     "--mode", "oracle", "--out", str(out)]) == 0
        first = [json.loads(x) for x in (tmp_path / "oracle-0" / "outcomes.jsonl").read_text().splitlines()[1:]]
        again = [json.loads(x) for x in (out / "outcomes.jsonl").read_text().splitlines()[1:]]
        assert [(o["record_id"], o["bucket"]) for o in first] == [(o["record_id"], o["bucket"]) for o in again]
