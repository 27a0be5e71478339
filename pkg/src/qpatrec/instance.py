"""JSON instance files.

An instance holds the register widths, threshold, feature mode, the observed
patterns and the codebook::

    {"payload_bits": 4, "feature_bits": 4, "distance_bits": 4,
     "alpha": 0, "mode": "idealized",
     "patterns": [{"payload": 5, "class": "target"}, ...],
     "codebook": [{"feature": 5}, {"feature": 12, "exemplar_payload": 12}]}

Virtual records are never listed; padding is added on load.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union

from .pattern_model import (
    CodebookEntry,
    FeatureMode,
    PatternClass,
    PatternDatabase,
    PatternError,
    build_database,
    check_alpha,
    check_feature,
)


class InstanceError(ValueError):
    """Instance file could not be parsed or breaks a named rule."""

    def __init__(self, message: str, rule: str = "parse", where: str = "") -> None:
        self.rule = rule
        self.where = where
        prefix = f"{where}: " if where else ""
        super().__init__(f"{prefix}{message} [rule: {rule}]")


@dataclass(frozen=True)
class Instance:
    database: PatternDatabase
    codebook: tuple[CodebookEntry, ...]
    alpha: int
    mode: FeatureMode

    def to_dict(self) -> dict[str, Any]:
        db = self.database
        patterns = [
            {"payload": r.payload, "class": r.cls.value}
            for r in db.records
            if r.cls is not PatternClass.VIRTUAL
        ]
        codebook = []
        for e in self.codebook:
            item: dict[str, Any] = {"feature": e.feature}
            if e.exemplar_payload is not None:
                item["exemplar_payload"] = e.exemplar_payload
            codebook.append(item)
        return {
            "payload_bits": db.payload_bits,
            "feature_bits": db.feature_bits,
            "distance_bits": db.distance_bits,
            "alpha": self.alpha,
            "mode": self.mode.value,
            "patterns": patterns,
            "codebook": codebook,
        }

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (first 16 hex digits)."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _int_field(obj: dict, key: str, where: str, minimum: int = 0) -> int:
    if key not in obj:
        raise InstanceError(f"missing field {key!r}", "required field", where)
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceError(f"field {key!r} must be an integer", "integer field", f"{where}.{key}")
    if value < minimum:
        raise InstanceError(
            f"field {key!r} must be >= {minimum}", f"{key} >= {minimum}", f"{where}.{key}"
        )
    return value


def parse_instance(data: Any) -> Instance:
    """Validate a decoded JSON document and build the instance."""
    if not isinstance(data, dict):
        raise InstanceError("top level must be a JSON object")
    root = "$"
    payload_bits = _int_field(data, "payload_bits", root, 1)
    feature_bits = _int_field(data, "feature_bits", root, 2)
    distance_bits = _int_field(data, "distance_bits", root, 1)
    alpha = _int_field(data, "alpha", root)
    try:
        check_alpha(alpha, distance_bits)
    except PatternError as exc:
        raise InstanceError(str(exc), "alpha < d_max", "$.alpha") from None

    try:
        mode = FeatureMode(data.get("mode", FeatureMode.IDEALIZED.value))
    except ValueError:
        raise InstanceError(
            f"mode must be one of {[m.value for m in FeatureMode]}", "feature mode", "$.mode"
        ) from None

    patterns = data.get("patterns")
    if not isinstance(patterns, list):
        raise InstanceError("field 'patterns' must be a list", "required field", "$.patterns")
    targets, spurious = [], []
    limit = 1 << payload_bits
    for k, item in enumerate(patterns):
        where = f"$.patterns[{k}]"
        if not isinstance(item, dict):
            raise InstanceError("pattern must be an object", "pattern object", where)
        payload = _int_field(item, "payload", where)
        if payload >= limit:
            raise InstanceError(
                f"payload {payload} overflows {payload_bits} bits",
                "payload < 2^payload_bits",
                f"{where}.payload",
            )
        cls = item.get("class")
        if cls == PatternClass.TARGET.value:
            targets.append(payload)
        elif cls == PatternClass.SPURIOUS.value:
            spurious.append(payload)
        else:
            raise InstanceError(
                f"class must be 'target' or 'spurious', got {cls!r}", "pattern class", f"{where}.class"
            )
    if not targets and not spurious:
        raise InstanceError("at least one pattern is required", "nonempty patterns", "$.patterns")

    raw_codebook = data.get("codebook", [])
    if not isinstance(raw_codebook, list):
        raise InstanceError("field 'codebook' must be a list", "required field", "$.codebook")
    codebook = []
    for k, item in enumerate(raw_codebook):
        where = f"$.codebook[{k}]"
        if not isinstance(item, dict):
            raise InstanceError("codebook entry must be an object", "codebook object", where)
        feature = _int_field(item, "feature", where)
        try:
            check_feature(feature, feature_bits, "codebook feature")
        except PatternError as exc:
            raise InstanceError(str(exc), "codebook feature not sentinel", f"{where}.feature") from None
        exemplar = None
        if item.get("exemplar_payload") is not None:
            exemplar = _int_field(item, "exemplar_payload", where)
        codebook.append(CodebookEntry(feature, exemplar))

    db = build_database(targets, spurious, payload_bits, feature_bits, distance_bits)
    return Instance(db, tuple(codebook), alpha, mode)


def load_instance(path: Union[str, Path]) -> Instance:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(exc.msg, "valid JSON", f"{path}:{exc.lineno}:{exc.colno}") from None
    return parse_instance(data)


def synthesize(N: int, M: int) -> Instance:
    """Instance with exactly ``M`` matches for query feature 0 at ``alpha = 0``.

    ``M`` targets sit at feature 0 and the other ``N - M`` records are
    spurious, so no padding is needed.
    """
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of two >= 2, got {N}")
    if not 0 <= M <= N:
        raise ValueError(f"M must lie in [0, N], got {M}")
    db = build_database([0] * M, [0] * (N - M), payload_bits=1, feature_bits=2, distance_bits=1)
    return Instance(db, (CodebookEntry(0),), 0, FeatureMode.IDEALIZED)
