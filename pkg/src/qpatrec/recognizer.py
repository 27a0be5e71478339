"""Recognize every pattern that matches a codebook of target features."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

from .bbht_search import SearchConfig, SearchReport, derive_seed, run_search
from .pattern_model import (
    CodebookEntry,
    FeatureMode,
    PatternDatabase,
    check_alpha,
    check_feature,
    marked_set,
)
from .quantum_engine import QueryContext


@dataclass(frozen=True)
class RecognitionEntry:
    feature: int
    indices: tuple[int, ...]
    searches: tuple[SearchReport, ...]


@dataclass(frozen=True)
class RecognitionReport:
    entries: tuple[RecognitionEntry, ...]

    @property
    def total_gpr(self) -> int:
        return sum(s.total_gpr for e in self.entries for s in e.searches)

    def index_sets(self) -> list[tuple[int, frozenset[int]]]:
        return [(e.feature, frozenset(e.indices)) for e in self.entries]


@dataclass(frozen=True)
class Discrepancy:
    feature: int
    kind: str  # "missing" or "extra"
    index: int


def recognize_feature(
    db: PatternDatabase,
    feature: int,
    alpha: int,
    config: SearchConfig = SearchConfig(),
    exhaustive: bool = True,
    mode: FeatureMode | str = FeatureMode.IDEALIZED,
) -> tuple[list[int], list[SearchReport]]:
    """Find patterns within ``alpha`` of ``feature``.

    Non-exhaustive mode runs a single search. Exhaustive mode keeps searching,
    excluding every index already found, until a search comes back empty.
    Search ``k`` uses the seed derived from ``(config.seed, k)``.
    """
    ctx = QueryContext.for_database(db, alpha, feature, mode)
    found: list[int] = []
    reports: list[SearchReport] = []
    while True:
        cfg = replace(config, seed=derive_seed(config.seed, len(reports)))
        report = run_search(db, ctx, cfg, excluded=frozenset(found))
        reports.append(report)
        if not report.found:
            break
        assert report.found_index not in found
        found.append(report.found_index)
        if not exhaustive:
            break
    return found, reports


def recognize_all(
    db: PatternDatabase,
    codebook: Sequence[CodebookEntry],
    alpha: int,
    config: SearchConfig = SearchConfig(),
    mode: FeatureMode | str = FeatureMode.IDEALIZED,
    jobs: int = 1,
) -> RecognitionReport:
    """Exhaustively recognize each codebook entry, in codebook order.

    Entries are independent: a pattern may be reported under several
    features. Entry ``k`` searches with seeds derived from ``(config.seed, k)``,
    so the report does not depend on ``jobs``.
    """
    check_alpha(alpha, db.distance_bits)
    for entry in codebook:
        check_feature(entry.feature, db.feature_bits, "codebook feature")

    def one(k: int) -> RecognitionEntry:
        feature = codebook[k].feature
        cfg = replace(config, seed=derive_seed(config.seed, k))
        indices, reports = recognize_feature(db, feature, alpha, cfg, True, mode)
        return RecognitionEntry(feature, tuple(indices), tuple(reports))

    if jobs > 1 and len(codebook) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = tuple(pool.map(one, range(len(codebook))))
    else:
        entries = tuple(one(k) for k in range(len(codebook)))
    return RecognitionReport(entries)


def brute_force_recognize(
    db: PatternDatabase,
    codebook: Sequence[CodebookEntry],
    alpha: int,
    mode: FeatureMode | str = FeatureMode.IDEALIZED,
) -> list[tuple[int, frozenset[int]]]:
    return [(e.feature, marked_set(db, e.feature, alpha, mode)) for e in codebook]


def diff_reports(
    quantum: RecognitionReport | Sequence[tuple[int, frozenset[int]]],
    classical: Sequence[tuple[int, frozenset[int]]],
) -> list[Discrepancy]:
    """Compare per-entry index sets position by position."""
    if isinstance(quantum, RecognitionReport):
        quantum = quantum.index_sets()
    if len(quantum) != len(classical):
        raise ValueError(f"reports cover {len(quantum)} and {len(classical)} codebook entries")
    out: list[Discrepancy] = []
    for (fq, got), (fc, want) in zip(quantum, classical):
        if fq != fc:
            raise ValueError(f"codebook order differs: feature {fq} vs {fc}")
        out += [Discrepancy(fq, "missing", i) for i in sorted(set(want) - set(got))]
        out += [Discrepancy(fq, "extra", i) for i in sorted(set(got) - set(want))]
    return out
