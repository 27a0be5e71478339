"""Classical pattern sets, feature map, similarity measure and codebook.

Records are held in a padded database whose size is a power of two. Each
record is a target, a spurious echo, or a virtual filler. Features are
unsigned integers; the two highest codes are reserved as sentinels for
spurious and virtual records, and any distance involving a sentinel is the
maximum representable distance, so neither can ever fall under a valid
threshold.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "PatternError",
    "PatternClass",
    "FeatureMode",
    "PatternRecord",
    "PatternDatabase",
    "CodebookEntry",
    "Codebook",
    "build_database",
    "feature_of",
    "distance",
    "within_alpha",
    "marked_set",
    "sentinels",
    "d_max",
    "check_feature",
    "check_alpha",
    "distance_table",
]


class PatternError(ValueError):
    """Raised when a pattern set, feature or threshold violates a model rule."""


class PatternClass(str, enum.Enum):
    TARGET = "target"
    SPURIOUS = "spurious"
    VIRTUAL = "virtual"


class FeatureMode(str, enum.Enum):
    """How spurious records are featurized.

    ``IDEALIZED`` maps spurious records to their sentinel, ``EXTRACTOR`` runs
    them through the extractor like targets.
    """

    IDEALIZED = "idealized"
    EXTRACTOR = "extractor"


Extractor = Callable[[int], int]


def sentinels(feature_bits: int) -> tuple[int, int]:
    """Return ``(spurious_code, virtual_code)`` for the given feature width."""
    top = (1 << feature_bits) - 1
    return top, top - 1


def d_max(distance_bits: int) -> int:
    return (1 << distance_bits) - 1


def _is_sentinel(value: int, feature_bits: int) -> bool:
    return value >= (1 << feature_bits) - 2


def check_feature(value: int, feature_bits: int, what: str = "feature") -> int:
    """Validate a non-sentinel feature value and return it as ``int``."""
    value = int(value)
    if not 0 <= value < (1 << feature_bits):
        raise PatternError(f"{what} {value} does not fit in {feature_bits} bits")
    if _is_sentinel(value, feature_bits):
        raise PatternError(f"{what} {value} is a reserved sentinel code")
    return value


@dataclass(frozen=True)
class PatternRecord:
    index: int
    payload: int
    cls: PatternClass


@dataclass(frozen=True)
class CodebookEntry:
    feature: int
    exemplar_payload: Optional[int] = None


Codebook = Sequence[CodebookEntry]


@dataclass(frozen=True)
class PatternDatabase:
    records: tuple[PatternRecord, ...]
    n: int
    s: int
    v: int
    payload_bits: int
    feature_bits: int
    distance_bits: int
    extractor: Optional[Extractor] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        size = len(self.records)
        if size < 2 or size & (size - 1):
            raise PatternError(f"database size {size} is not a power of two >= 2")
        if size != self.n + self.s + self.v:
            raise PatternError("record count does not equal n + s + v")
        if min(self.payload_bits, self.distance_bits) < 1:
            raise PatternError("register widths must be positive")
        if self.feature_bits < 2:
            raise PatternError("feature_bits must be >= 2 to hold both sentinels")
        for k, rec in enumerate(self.records):
            if rec.index != k:
                raise PatternError(f"record at position {k} has index {rec.index}")
            if not 0 <= rec.payload < (1 << self.payload_bits):
                raise PatternError(
                    f"payload {rec.payload} at position {k} overflows {self.payload_bits} bits"
                )

    @property
    def N(self) -> int:
        return len(self.records)

    @property
    def index_bits(self) -> int:
        return self.N.bit_length() - 1

    @property
    def d_max(self) -> int:
        return d_max(self.distance_bits)

    @property
    def payloads(self) -> np.ndarray:
        return np.array([r.payload for r in self.records], dtype=np.int64)

    def extract(self, payload: int) -> int:
        """Run the extractor on one payload, saturating below the sentinels."""
        raw = payload if self.extractor is None else int(self.extractor(payload))
        if raw < 0:
            raise PatternError(f"extractor returned negative feature {raw}")
        return min(raw, (1 << self.feature_bits) - 3)

    @cached_property
    def _feature_tables(self) -> dict[FeatureMode, np.ndarray]:
        spurious_code, virtual_code = sentinels(self.feature_bits)
        tables = {}
        for mode in FeatureMode:
            out = np.empty(self.N, dtype=np.int64)
            for rec in self.records:
                if rec.cls is PatternClass.VIRTUAL:
                    out[rec.index] = virtual_code
                elif rec.cls is PatternClass.SPURIOUS and mode is FeatureMode.IDEALIZED:
                    out[rec.index] = spurious_code
                else:
                    out[rec.index] = self.extract(rec.payload)
            out.setflags(write=False)
            tables[mode] = out
        return tables

    def features(self, mode: FeatureMode | str) -> np.ndarray:
        """Feature value of every record, indexed by record index (read-only)."""
        return self._feature_tables[FeatureMode(mode)]


def build_database(
    target_payloads: Iterable[int],
    spurious_payloads: Iterable[int],
    payload_bits: int,
    feature_bits: int,
    distance_bits: int,
    extractor: Optional[Extractor] = None,
) -> PatternDatabase:
    """Pad targets and spurious records with virtual ones up to a power of two.

    Records are laid out targets first, then spurious, then virtual records
    with payload 0. The padded size is never below 2.
    """
    targets = [int(p) for p in target_payloads]
    spurious = [int(p) for p in spurious_payloads]
    if not targets and not spurious:
        raise PatternError("at least one target or spurious payload is required")
    if feature_bits < 2:
        raise PatternError("feature_bits must be >= 2 to hold both sentinels")
    limit = 1 << payload_bits
    for pos, payload in enumerate(targets + spurious):
        if not 0 <= payload < limit:
            raise PatternError(
                f"payload {payload} at position {pos} overflows {payload_bits} bits"
            )

    used = len(targets) + len(spurious)
    size = max(2, 1 << (used - 1).bit_length())
    classes = (
        [PatternClass.TARGET] * len(targets)
        + [PatternClass.SPURIOUS] * len(spurious)
        + [PatternClass.VIRTUAL] * (size - used)
    )
    payloads = targets + spurious + [0] * (size - used)
    records = tuple(
        PatternRecord(k, p, c) for k, (p, c) in enumerate(zip(payloads, classes))
    )
    return PatternDatabase(
        records=records,
        n=len(targets),
        s=len(spurious),
        v=size - used,
        payload_bits=payload_bits,
        feature_bits=feature_bits,
        distance_bits=distance_bits,
        extractor=extractor,
    )


def feature_of(db: PatternDatabase, i: int, mode: FeatureMode | str = FeatureMode.IDEALIZED) -> int:
    if not 0 <= i < db.N:
        raise PatternError(f"index {i} out of range [0, {db.N})")
    return int(db.features(mode)[i])


def distance(a: int, b: int, feature_bits: int, distance_bits: int) -> int:
    """Saturated absolute difference; any sentinel operand gives the maximum."""
    top = d_max(distance_bits)
    if _is_sentinel(a, feature_bits) or _is_sentinel(b, feature_bits):
        return top
    return min(abs(int(a) - int(b)), top)


def distance_table(query_feature: int, feature_bits: int, distance_bits: int) -> np.ndarray:
    """``distance(c, query_feature)`` for every feature code ``c``."""
    return np.array(
        [distance(c, query_feature, feature_bits, distance_bits) for c in range(1 << feature_bits)],
        dtype=np.int64,
    )


def within_alpha(d: int, alpha: int) -> bool:
    """The marking predicate ``0 <= d <= alpha``."""
    return 0 <= d <= alpha


def check_alpha(alpha: int, distance_bits: int) -> int:
    alpha = int(alpha)
    if not 0 <= alpha < d_max(distance_bits):
        raise PatternError(
            f"alpha {alpha} violates rule 'alpha < d_max' (d_max = {d_max(distance_bits)})"
        )
    return alpha


def marked_set(
    db: PatternDatabase,
    c_q: int,
    alpha: int,
    mode: FeatureMode | str = FeatureMode.IDEALIZED,
) -> frozenset[int]:
    """Indices whose feature lies within ``alpha`` of ``c_q``, by linear scan.

    This is the reference every quantum path is checked against, so it
    deliberately avoids the vectorized feature tables.
    """
    alpha = check_alpha(alpha, db.distance_bits)
    spurious_code, virtual_code = sentinels(db.feature_bits)
    hits = set()
    for rec in db.records:
        if rec.cls is PatternClass.VIRTUAL:
            feat = virtual_code
        elif rec.cls is PatternClass.SPURIOUS and FeatureMode(mode) is FeatureMode.IDEALIZED:
            feat = spurious_code
        else:
            feat = db.extract(rec.payload)
        if within_alpha(distance(feat, c_q, db.feature_bits, db.distance_bits), alpha):
            hits.add(rec.index)
    return frozenset(hits)
