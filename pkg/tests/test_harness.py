from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CORPUS, REPLAY, RESPONSES, view_of
from ercfault.corpus import make_entry
from ercfault.harness.client import (
    AuditLog,
    AuthError,
    ClientConfig,
    LiveTransport,
    ReplayMiss,
    ReplayTransport,
    SeededStub,
    ServiceError,
    SizeError,
    StubTransport,
    query_model,
    read_log,
)
from ercfault.harness.parse import Claim, oracle_verdict, parse_fullrule_response
from ercfault.harness.prompts import (
    FULL_RULE,
    ORACLE,
    PLACEHOLDERS,
    Template,
    TemplateError,
    build_fullrule_prompt,
    build_oracle_prompt,
)
from ercfault.harness.report import generate_report
from ercfault.harness.run import build_prompts, load_mutants, run_queries, score_log
from ercfault.harness.score import FN, TP, X, Y, Z, EvalOutcome, score_fullrule, score_oracle
from ercfault.injector import CampaignManifest, ViolationRecord


@dataclass(frozen=True)
class Rec:
    rule_id: str
    function: str
    also_violated: tuple = ()


def unchecked_entry(catalog):
    return make_entry((CORPUS / "erc20_unchecked_allowance.sol").read_text(), "unchecked", "erc20_unchecked_allowance.sol", catalog)


# -- templates ----------------------------------------------------------------


def test_template_typo_rejected():
    with pytest.raises(TemplateError, match="<ERC_typo>"):
        Template.from_text("<ERC_typo> <code> <ERC_content>", FULL_RULE)


def test_template_missing_placeholder():
    with pytest.raises(TemplateError, match="<code>"):
        Template.from_text("<ERC_type> <ERC_content>", FULL_RULE)


@pytest.mark.parametrize("mode", [FULL_RULE, ORACLE])
def test_bundled_templates_load(mode):
    assert Template.bundled(mode).mode == mode


@settings(max_examples=60, deadline=None)
@given(values=st.lists(st.text(max_size=30), min_size=3, max_size=3), repeat=st.integers(1, 3))
def test_prompt_length_identity(values, repeat):
    names = PLACEHOLDERS[FULL_RULE]
    text = "head " + " mid ".join(names * repeat) + " tail"
    prompt = Template.from_text(text, FULL_RULE).fill(dict(zip(names, values)))
    expected = len(text) + repeat * sum(len(v) - len(n) for n, v in zip(names, values))
    assert len(prompt.text) == expected


def test_substituted_values_not_rescanned():
    prompt = Template.from_text("<ERC_type>|<code>|<ERC_content>", FULL_RULE).fill(
        {"<ERC_type>": "<code>", "<code>": "c", "<ERC_content>": "d"}
    )
    assert prompt.text == "<code>|c|d"


def test_fullrule_prompt_contents(catalog):
    entry = unchecked_entry(catalog)
    prompt = build_fullrule_prompt(entry, catalog)
    assert entry.source in prompt.text
    assert catalog.doc("ERC20") in prompt.text
    assert prompt.contract_id == entry.contract_id == "erc20_unchecked_allowance"


def test_oracle_prompt_slice(catalog):
    view, source = view_of("erc20_unchecked_allowance.sol")
    record = ViolationRecord("unchecked", "erc20.transferFrom.fire-transfer", "Logging", "transferFrom(address,address,uint256)", ())
    prompt = build_oracle_prompt(record, view, catalog, source)
    code = prompt.placeholders["<code>"]
    assert "function transferFrom" in code and "function _transfer" in code
    assert catalog.rule("erc20.transferFrom.fire-transfer").text in prompt.text
    assert "mapping(address => uint256) private _balances" not in code


# -- transports ---------------------------------------------------------------


def test_stub_returns_verbatim(tmp_path, catalog):
    prompt = build_fullrule_prompt(unchecked_entry(catalog), catalog)
    audit = AuditLog(tmp_path / "log", clock=lambda: "T")
    reply = "  RULE: x\n\nFUNCTION: y  \n"
    assert query_model(prompt, ClientConfig(), StubTransport(reply), audit) == reply
    (entry,) = read_log(tmp_path / "log")
    assert entry["response"] == reply and entry["prompt_sha256"] == prompt.digest and entry["timestamp"] == "T"


def test_size_error_sends_nothing(tmp_path, catalog):
    prompt = build_fullrule_prompt(unchecked_entry(catalog), catalog)
    sent = []
    transport = StubTransport(lambda p: sent.append(p) or "x")
    with pytest.raises(SizeError):
        query_model(prompt, ClientConfig(max_context_tokens=10), transport, AuditLog(tmp_path / "log"))
    assert sent == []
    assert read_log(tmp_path / "log")[0]["error"].startswith("SizeError")


def test_seeded_stub_deterministic(catalog):
    prompt = build_fullrule_prompt(unchecked_entry(catalog), catalog)
    config = ClientConfig()
    assert SeededStub(3).complete(prompt, config) == SeededStub(3).complete(prompt, config)


def test_replay_transport(tmp_path, catalog):
    prompt = build_fullrule_prompt(unchecked_entry(catalog), catalog)
    query_model(prompt, ClientConfig(), StubTransport("recorded"), AuditLog(tmp_path / "log"))
    replay = ReplayTransport(tmp_path / "log")
    assert replay.complete(prompt, ClientConfig()) == "recorded"
    other = Template.from_text("<ERC_type><code><ERC_content>!", FULL_RULE)
    with pytest.raises(ReplayMiss):
        replay.complete(build_fullrule_prompt(unchecked_entry(catalog), catalog, other), ClientConfig())


class FakeResp:
    def __init__(self, status, payload=None):
        self.status_code, self._payload = status, payload

    def json(self):
        return self._payload


class FakeSession:
    def __init__(self, responses):
        self.responses, self.posts = list(responses), []

    def post(self, url, json=None, headers=None, timeout=None):
        self.posts.append((url, json, headers))
        return self.responses.pop(0)


def _completion(text):
    return FakeResp(200, {"choices": [{"message": {"content": text}}]})


def test_live_transport_request_shape(catalog):
    prompt = build_fullrule_prompt(unchecked_entry(catalog), catalog)
    session = FakeSession([FakeResp(503), _completion("NO VIOLATIONS")])
    slept = []
    config = ClientConfig(endpoint="https://llm.invalid/v1/chat", model_id="m", api_key="secret", requests_per_second=0)
    assert LiveTransport(session, sleep=slept.append).complete(prompt, config) == "NO VIOLATIONS"
    url, body, headers = session.posts[0]
    assert body["model"] == "m" and body["temperature"] == 0.0
    assert body["messages"] == [{"role": "user", "content": prompt.text}]
    assert headers["Authorization"] == "Bearer secret"
    assert slept == [2.0]


def test_live_transport_auth(catalog, monkeypatch):
    monkeypatch.delenv("SCB_MODEL_KEY", raising=False)
    prompt = build_fullrule_prompt(unchecked_entry(catalog), catalog)
    with pytest.raises(AuthError):
        LiveTransport(FakeSession([])).complete(prompt, ClientConfig(endpoint="e"))
    with pytest.raises(AuthError):
        LiveTransport(FakeSession([FakeResp(401)])).complete(prompt, ClientConfig(endpoint="e", api_key="k", requests_per_second=0))


def test_live_transport_gives_up(catalog):
    prompt = build_fullrule_prompt(unchecked_entry(catalog), catalog)
    config = ClientConfig(endpoint="e", api_key="k", max_retries=2, requests_per_second=0)
    with pytest.raises(ServiceError):
        LiveTransport(FakeSession([FakeResp(500)] * 3), sleep=lambda s: None).complete(prompt, config)


# -- parsing ------------------------------------------------------------------


def test_parse_two_claims(catalog):
    claims = parse_fullrule_response((RESPONSES / "approve_missing.txt").read_text(), catalog, erc="ERC20")
    assert [(c.rule_id, c.function) for c in claims] == [
        ("erc20.approve.overwrite-allowance", "approve"),
        ("erc20.approve.emit-approval", "approve"),
    ]


def test_parse_no_violations(catalog):
    assert parse_fullrule_response((RESPONSES / "no_violations.txt").read_text(), catalog, erc="ERC20") == []


def test_verbatim_rule_real_function(catalog):
    view, _ = view_of("erc20_unchecked_allowance.sol")
    rule = catalog.rule("erc20.transferFrom.fire-transfer")
    (claim,) = parse_fullrule_response(f"RULE: {rule.text}\nFUNCTION: transferFrom", catalog, view)
    assert claim.rule_id == rule.id and claim.rule_score == 1.0
    assert claim.function == "transferFrom(address,address,uint256)"


def test_unmatched_rule_text(catalog):
    (claim,) = parse_fullrule_response("RULE: the owner can mint unlimited tokens\nFUNCTION: mint", catalog, erc="ERC20")
    assert claim.rule_id is None and claim.function == "mint"


# -- scoring ------------------------------------------------------------------

R = Rec("erc20.approve.emit-approval", "approve(address,uint256)")


@pytest.mark.parametrize(
    "claim, bucket",
    [
        (Claim("r", "approve", "erc20.approve.emit-approval", 1.0, "approve(address,uint256)"), X),
        (Claim("r", "approve", "erc20.approve.emit-approval", 1.0, "approve"), X),
        (Claim("r", "transfer", "erc20.approve.emit-approval", 1.0, "transfer"), Y),
        (Claim("r", None, "erc20.approve.emit-approval", 1.0, None), Y),
        (Claim(None, "approve", None, 0.0, "approve"), Z),
        (Claim("r", "approve", "erc20.transfer.fire-transfer", 1.0, "approve"), Z),
    ],
)
def test_score_examples(claim, bucket):
    assert score_fullrule([claim], [R]) == [bucket]


def test_sibling_credit():
    record = Rec("erc20.approve.api", "approve(address,uint256)", ("erc20.approve.emit-approval",))
    claim = Claim("r", "approve", "erc20.approve.emit-approval", 1.0, "approve")
    assert score_fullrule([claim], [record]) == [X]
    assert score_fullrule([claim], [record], siblings=False) == [Z]


def test_one_claim_credits_one_record():
    recs = [R, Rec("erc20.approve.emit-approval", "approve(address,uint256)")]
    claim = Claim("r", "approve", R.rule_id, 1.0, "approve")
    assert score_fullrule([claim], recs) == [X, Z]
    assert score_fullrule([claim, claim], recs) == [X, X]


def brute_force(levels_of, claims, records):
    """Enumerate every injective claim -> record credit and keep the lexicographically best."""
    best = None
    n = len(records)
    options = [None, *range(len(claims))]
    for choice in itertools.product(options, repeat=n):
        used = [c for c in choice if c is not None]
        if len(used) != len(set(used)):
            continue
        levels = tuple(0 if c is None else levels_of(claims[c], records[i]) for i, c in enumerate(choice))
        key = (levels.count(2), levels.count(1), levels)
        if best is None or key > best:
            best = key
    return [{2: X, 1: Y, 0: Z}[l] for l in best[2]]


def _level(claim, record):
    rule_ok = claim.rule_id is not None and (claim.rule_id == record.rule_id or claim.rule_id in record.also_violated)
    if not rule_ok:
        return 0
    fn_ok = claim.function is not None and claim.function == record.function.split("(")[0]
    return 2 if fn_ok else 1


RULE_POOL = ["a.f.x", "a.f.y", "a.g.x", "a.h.z"]
FN_POOL = ["f", "g", "h"]


def random_case(rng: random.Random):
    records = [
        Rec(rng.choice(RULE_POOL), rng.choice(FN_POOL) + "()", tuple(rng.sample(RULE_POOL, rng.randint(0, 1))))
        for _ in range(rng.randint(1, 4))
    ]
    claims = [
        Claim("r", "f", rng.choice(RULE_POOL + [None]), 1.0, rng.choice(FN_POOL + [None]))
        for _ in range(rng.randint(0, 4))
    ]
    return claims, records


def test_assignment_matches_brute_force():
    rng = random.Random(2024)
    for _ in range(200):
        claims, records = random_case(rng)
        assert score_fullrule(claims, records) == brute_force(_level, claims, records)


@pytest.mark.parametrize(
    "text, bucket, ambiguous",
    [
        ("Yes, the rule is violated.", TP, False),
        ("No.", FN, False),
        ("It depends on how the caller uses it.", FN, True),
        ("Some reasoning.\nANSWER: YES", TP, False),
        ("**ANSWER:** no", FN, False),
        ("True", TP, False),
    ],
)
def test_oracle_verdicts(text, bucket, ambiguous):
    s = score_oracle(text)
    assert (s.bucket, s.ambiguous) == (bucket, ambiguous)


def test_marker_beats_leading_word():
    assert oracle_verdict("Yes it looks fine.\nANSWER: NO").violated is False


# -- reports ------------------------------------------------------------------


def _manifest():
    return CampaignManifest.load(REPLAY / "manifest.json")


def _outcome(i, bucket, erc="ERC20", impact="high", mode=FULL_RULE):
    return EvalOutcome(f"c{i}:r", f"c{i}", mode, bucket, erc, impact, "injected")


def test_report_all_detected():
    report = generate_report([_outcome(i, X) for i in range(10)], _manifest())
    assert report.count() == (10, 0, 0)
    assert report.rate() == 1.0
    assert "10/10 (100.0%)" in report.to_text()


def test_report_totals_additive():
    rng = random.Random(5)
    outcomes = [
        _outcome(i, rng.choice([X, Y, Z]), rng.choice(["ERC20", "ERC721", "ERC1155"]), rng.choice(["high", "medium", "low"]))
        for i in range(60)
    ]
    report = generate_report(outcomes, _manifest())
    per_erc = [report.count(e) for e in ("ERC20", "ERC721", "ERC1155")]
    assert tuple(map(sum, zip(*per_erc))) == report.count()
    per_impact = [report.count(None, None, i) for i in ("high", "medium", "low")]
    assert tuple(map(sum, zip(*per_impact))) == report.count()
    assert sum(report.count()) == 60


def test_report_rejects_mixed_modes():
    with pytest.raises(ValueError):
        generate_report([_outcome(0, X), _outcome(1, TP, mode=ORACLE)], _manifest())


def test_outcome_round_trip():
    o = EvalOutcome("c:r", "c", ORACLE, TP, "ERC20", "low", "injected", "m", "ANSWER: YES", "T", ("ambiguous",))
    assert EvalOutcome.from_dict(json.loads(json.dumps(o.to_dict()))) == o


# -- end-to-end over the replay fixture ---------------------------------------

FULLRULE_EXPECTED = {
    "erc20_helpers:erc20.allowance.api": Z,
    "erc20_helpers:erc20.transfer.api": X,
    "erc20_helpers:erc20.transferFrom.api": Y,
    "erc20_unchecked_allowance:erc20.transferFrom.return": Z,
    "erc20_unchecked_allowance:erc20.transferFrom.transfer-event": X,
}
ORACLE_TP = {
    "erc20_helpers:erc20.allowance.api",
    "erc20_helpers:erc20.transferFrom.api",
    "erc20_unchecked_allowance:erc20.transferFrom.transfer-event",
    "erc1155_safe_batch:erc1155.setApprovalForAll.operator-event",
    "erc20_balance_of:erc20.decimals.api",
}


def _scored(catalog, mode, log_name):
    manifest = _manifest()
    mutants = load_mutants(manifest, REPLAY)
    return manifest, score_log(manifest, read_log(REPLAY / log_name), mutants, catalog, mode)


def test_replay_fullrule_buckets(catalog):
    manifest, outcomes = _scored(catalog, FULL_RULE, "fullrule.responses.log")
    got = {o.record_id: o.bucket for o in outcomes}
    assert len(got) == len(manifest.records) == 11
    for rid, bucket in got.items():
        assert bucket == FULLRULE_EXPECTED.get(rid, Z), rid


def test_replay_oracle_buckets(catalog):
    _, outcomes = _scored(catalog, ORACLE, "oracle.responses.log")
    assert {o.record_id for o in outcomes if o.bucket == TP} == ORACLE_TP
    flagged = {o.record_id for o in outcomes if "ambiguous" in o.flags}
    assert flagged == {"erc20_unchecked_allowance:erc20.transferFrom.return"}


def test_replay_prompts_match_log(catalog):
    """The fixture log was recorded from these exact prompts."""
    manifest = _manifest()
    mutants = load_mutants(manifest, REPLAY)
    for mode, log_name in ((FULL_RULE, "fullrule.responses.log"), (ORACLE, "oracle.responses.log")):
        replay = ReplayTransport(REPLAY / log_name)
        for prompt in build_prompts(manifest, mutants, catalog, mode):
            assert prompt.digest in replay.responses


def test_seeded_stub_report_deterministic(catalog, tmp_path):
    manifest = _manifest()
    mutants = load_mutants(manifest, REPLAY)
    texts = []
    for run in range(2):
        log = tmp_path / f"r{run}.log"
        prompts = build_prompts(manifest, mutants, catalog, FULL_RULE)
        results = run_queries(prompts, ClientConfig(), SeededStub(11), AuditLog(log, clock=lambda: "T"), jobs=run + 1)
        assert all(r.error is None for r in results)
        outcomes = score_log(manifest, read_log(log), mutants, catalog, FULL_RULE)
        texts.append(generate_report(outcomes, manifest).to_text())
    assert texts[0] == texts[1]


def test_missing_response_scores_worst(catalog):
    manifest = _manifest()
    outcomes = score_log(manifest, [], load_mutants(manifest, REPLAY), catalog, ORACLE)
    assert {o.bucket for o in outcomes} == {FN}
    assert all("missing-response" in o.flags for o in outcomes)
