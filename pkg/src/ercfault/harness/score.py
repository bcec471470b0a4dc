"""Scoring claims and verdicts against manifest ground truth.

Full-rule buckets: X when a claim names the record's rule and its function,
Y when a claim names only the rule, Z otherwise. A claim credits at most one
record. Among all credit assignments the scorer picks the one with the most X
buckets, then the most Y buckets, then the best bucket sequence in record
order, which makes the result unique.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .parse import Claim, oracle_verdict
from .prompts import FULL_RULE, ORACLE

log = logging.getLogger(__name__)

X, Y, Z = "X", "Y", "Z"
TP, FN = "TP", "FN"
BUCKETS = {FULL_RULE: (X, Y, Z), ORACLE: (TP, FN)}
_LEVEL_BUCKET = {2: X, 1: Y, 0: Z}
# Above this many records 3**R tie-break weights stop being exact in float64.
_TIEBREAK_LIMIT = 25


def rule_matches(claim: Claim, record, siblings: bool = True) -> bool:
    if claim.rule_id is None:
        return False
    return claim.rule_id == record.rule_id or (siblings and claim.rule_id in record.also_violated)


def function_matches(claim: Claim, record) -> bool:
    if not claim.function:
        return False
    if "(" in claim.function:
        return claim.function == record.function
    return claim.function == record.function.split("(", 1)[0]


def pair_level(claim: Claim, record, siblings: bool = True) -> int:
    if not rule_matches(claim, record, siblings):
        return 0
    return 2 if function_matches(claim, record) else 1


def _weight(level: int, index: int, n: int) -> float:
    if level == 0:
        return 0.0
    base = n + 1 if level == 2 else 1
    if n > _TIEBREAK_LIMIT:
        return float(base)
    return float(base * 3**n + level * 3 ** (n - 1 - index))


def assign(levels: Sequence[Sequence[int]], n_records: int) -> list[int]:
    """Per-record credited level given a claims x records level matrix."""
    out = [0] * n_records
    if not levels or n_records == 0:
        return out
    weights = np.array([[_weight(l, i, n_records) for i, l in enumerate(row)] for row in levels])
    rows, cols = linear_sum_assignment(weights, maximize=True)
    for c, r in zip(rows, cols):
        out[r] = levels[c][r]
    return out


def score_fullrule(claims: Sequence[Claim], records: Sequence, siblings: bool = True) -> list[str]:
    """Bucket (X/Y/Z) for each record, in record order."""
    levels = [[pair_level(c, r, siblings) for r in records] for c in claims]
    return [_LEVEL_BUCKET[l] for l in assign(levels, len(records))]


@dataclass(frozen=True)
class OracleScore:
    bucket: str
    ambiguous: bool
    source: str


def score_oracle(text: str, record=None) -> OracleScore:
    """TP when the response affirms the violation; everything else is FN."""
    verdict = oracle_verdict(text)
    return OracleScore(TP if verdict.violated else FN, verdict.ambiguous, verdict.source)


@dataclass
class EvalOutcome:
    record_id: str
    contract_id: str
    mode: str
    bucket: str
    erc: str
    impact: str
    origin: str
    model_id: str = ""
    raw_response: str = field(default="", repr=False)
    timestamp: Optional[str] = None
    flags: tuple = ()

    def __post_init__(self):
        if self.bucket not in BUCKETS[self.mode]:
            raise ValueError(f"bucket {self.bucket} is not valid for mode {self.mode}")

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "contract_id": self.contract_id,
            "mode": self.mode,
            "bucket": self.bucket,
            "erc": self.erc,
            "impact": self.impact,
            "origin": self.origin,
            "model_id": self.model_id,
            "timestamp": self.timestamp,
            "flags": list(self.flags),
            "raw_response": self.raw_response,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalOutcome":
        return cls(
            d["record_id"], d["contract_id"], d["mode"], d["bucket"], d["erc"], d["impact"], d["origin"],
            d.get("model_id", ""), d.get("raw_response", ""), d.get("timestamp"), tuple(d.get("flags", ())),
        )
