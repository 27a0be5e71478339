"""JSON Lines report records.

Every record carries enough context (seed, engine, cap, lambda, instance
digest) to be re-run on its own. Keys are sorted so identical runs produce
identical bytes.
"""
from __future__ import annotations

import json
import math
from typing import Any, Iterable, TextIO

from .bbht_search import SearchConfig, SearchReport
from .recognizer import Discrepancy, RecognitionReport


def _num(x: float) -> Any:
    if isinstance(x, float) and math.isinf(x):
        return None
    return x


def run_context(config: SearchConfig, N: int, digest: str) -> dict[str, Any]:
    return {
        "seed": config.seed,
        "engine": config.engine,
        "lambda": config.lam,
        "cap_factor": _num(config.cap_factor),
        "cap": _num(config.query_cap(N)),
        "instance_digest": digest,
    }


def search_record(report: SearchReport, **context: Any) -> dict[str, Any]:
    return {
        "kind": "search",
        **context,
        "search_seed": report.seed,
        "found": report.found,
        "index": report.found_index,
        "verified": report.found,
        "terminated_by": report.terminated_by,
        "total_gpr": report.total_gpr,
        "rounds": [
            {"m": r.m, "j": r.j, "outcome_index": r.outcome_index, "verified": r.verified}
            for r in report.rounds
        ],
    }


def recognition_record(
    report: RecognitionReport, diff: list[Discrepancy], **context: Any
) -> dict[str, Any]:
    return {
        "kind": "recognition",
        **context,
        "results": [{"feature": e.feature, "indices": list(e.indices)} for e in report.entries],
        "total_gpr": report.total_gpr,
        "diff": [{"feature": d.feature, "kind": d.kind, "index": d.index} for d in diff],
    }


def dumps(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_records(records: Iterable[dict[str, Any]], out: TextIO) -> None:
    for rec in records:
        out.write(dumps(rec) + "\n")
