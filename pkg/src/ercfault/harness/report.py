"""Tabulated results: rows per ERC, columns per ground-truth source and impact."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..catalog import ERCS, IMPACTS
from .prompts import FULL_RULE, ORACLE
from .score import BUCKETS, EvalOutcome

SOURCES = (("human", "Manual Inspection"), ("injected", "Error Injection"))
_IMPACT_LABELS = {"high": "High", "medium": "Medium", "low": "Low"}


@dataclass
class Report:
    mode: str
    provenance: dict
    # (erc, origin, impact) -> {bucket: count}
    cells: dict = field(default_factory=dict)

    @property
    def buckets(self) -> tuple[str, ...]:
        return BUCKETS[self.mode]

    def count(self, erc: Optional[str] = None, origin: Optional[str] = None, impact: Optional[str] = None) -> tuple[int, ...]:
        totals = [0] * len(self.buckets)
        for (e, o, i), counts in self.cells.items():
            if (erc is None or e == erc) and (origin is None or o == origin) and (impact is None or i == impact):
                for k, b in enumerate(self.buckets):
                    totals[k] += counts.get(b, 0)
        return tuple(totals)

    def rate(self, erc: Optional[str] = None) -> Optional[float]:
        counts = self.count(erc)
        n = sum(counts)
        return counts[0] / n if n else None

    def _header_lines(self) -> list[str]:
        return [f"# {k}: {self.provenance[k]}" for k in sorted(self.provenance)]

    def to_text(self) -> str:
        title = "Full-rule prompting (x, y, z)" if self.mode == FULL_RULE else "Oracle prompting (TP, FN)"
        head = ["ERC"]
        for _, label in SOURCES:
            head += [f"{label} {_IMPACT_LABELS[i]}" for i in IMPACTS] + [f"{label} Total"]
        head.append("Total")
        rows = [head]
        for erc in (*ERCS, None):
            row = [erc or "Total"]
            for origin, _ in SOURCES:
                row += [_cell(self.count(erc, origin, i)) for i in IMPACTS]
                row.append(_cell(self.count(erc, origin)))
            row.append(_cell(self.count(erc)))
            rows.append(row)
        widths = [max(len(r[c]) for r in rows) for c in range(len(head))]
        lines = self._header_lines() + ["", title, ""]
        for n, r in enumerate(rows):
            lines.append(" | ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
            if n == 0 or n == len(ERCS):
                lines.append("-+-".join("-" * w for w in widths))
        lines += ["", "Detection rate (first bucket / records):"]
        for erc in (*ERCS, None):
            counts = self.count(erc)
            n = sum(counts)
            pct = f"{100 * counts[0] / n:.1f}%" if n else "n/a"
            lines.append(f"  {erc or 'Total'}: {counts[0]}/{n} ({pct})")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self._header_lines():
            buf.write(line + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["erc", "source", "impact", *[b.lower() for b in self.buckets]])
        for erc in ERCS:
            for origin, _ in SOURCES:
                for impact in IMPACTS:
                    writer.writerow([erc, origin, impact, *self.count(erc, origin, impact)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "mode": self.mode,
            "buckets": list(self.buckets),
            "cells": [
                {"erc": e, "source": o, "impact": i, **{b: self.count(e, o, i)[k] for k, b in enumerate(self.buckets)}}
                for e in ERCS for o, _ in SOURCES for i in IMPACTS
            ],
            "totals": {erc or "Total": list(self.count(erc)) for erc in (*ERCS, None)},
            "rates": {erc or "Total": self.rate(erc) for erc in (*ERCS, None)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _cell(counts: tuple[int, ...]) -> str:
    return "-" if not any(counts) else "(" + ",".join(str(c) for c in counts) + ")"


def generate_report(outcomes: Iterable[EvalOutcome], manifest, mode: Optional[str] = None, extra: Optional[dict] = None) -> Report:
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("no outcomes to report")
    modes = {o.mode for o in outcomes}
    mode = mode or (modes.pop() if len(modes) == 1 else None)
    if mode not in (FULL_RULE, ORACLE):
        raise ValueError("outcomes mix modes; pass mode explicitly")
    models = sorted({o.model_id for o in outcomes if o.mode == mode and o.model_id})
    provenance = {
        "tool_version": manifest.tool_version,
        "seed": manifest.seed,
        "catalog_version": manifest.catalog_version,
        "mode": mode,
        "model": ",".join(models) or "none",
        "records": sum(1 for o in outcomes if o.mode == mode),
        **(extra or {}),
    }
    report = Report(mode, provenance)
    for o in outcomes:
        if o.mode != mode:
            continue
        cell = report.cells.setdefault((o.erc, o.origin, o.impact), {})
        cell[o.bucket] = cell.get(o.bucket, 0) + 1
    return report
