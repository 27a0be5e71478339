"""Randomized iteration schedule for search with an unknown number of matches.

Each round draws an iteration count ``j`` below the current bound ``m``,
runs ``j`` iterations from a fresh start state, observes the index register
and checks the outcome classically. On failure ``m`` grows by ``lam`` up to
``sqrt(N)``. A cumulative budget of ``ceil(cap_factor * sqrt(N))``
iterations ends searches that have no match.
"""
from __future__ import annotations

import math
from functools import partial
from dataclasses import dataclass
from typing import AbstractSet, Iterator, Optional

import numpy as np

from .pattern_model import PatternDatabase, PatternError, distance, feature_of, within_alpha
from .quantum_engine import (
    DEFAULT_CAP,
    QueryContext,
    RegisterLayout,
    apply_gpr,
    apply_gpr_reduced,
    build_reduced,
    measure_index,
    prepare_initial,
)

DEFAULT_LAMBDA = 6 / 5
DEFAULT_CAP_FACTOR = 8.0
ENGINES = ("full", "reduced")


class SearchConfigError(ValueError):
    pass


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic child seed for ``(seed, *path)``."""
    ss = np.random.SeedSequence([int(seed), *map(int, path)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def round_rng(seed: int, round_no: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(round_no)])


@dataclass(frozen=True)
class SearchConfig:
    lam: float = DEFAULT_LAMBDA
    seed: int = 0
    cap_factor: float = DEFAULT_CAP_FACTOR
    engine: str = "reduced"
    qubit_cap: int = DEFAULT_CAP

    def __post_init__(self) -> None:
        if not 1.0 < self.lam < 4.0 / 3.0:
            raise SearchConfigError(f"lambda must lie strictly between 1 and 4/3, got {self.lam}")
        if not self.cap_factor > 0:
            raise SearchConfigError(f"cap_factor must be positive, got {self.cap_factor}")
        if self.engine not in ENGINES:
            raise SearchConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.seed < 0:
            raise SearchConfigError("seed must be nonnegative")

    def query_cap(self, N: int) -> float:
        """Maximum cumulative iterations for one search; ``inf`` when uncapped."""
        if math.isinf(self.cap_factor):
            return math.inf
        return math.ceil(self.cap_factor * math.sqrt(N))


@dataclass(frozen=True)
class SearchRound:
    m: float
    j: int
    outcome_index: int
    verified: bool


@dataclass(frozen=True)
class SearchReport:
    rounds: tuple[SearchRound, ...]
    total_gpr: int
    found_index: Optional[int]
    seed: int
    cap: float

    @property
    def found(self) -> bool:
        return self.found_index is not None

    @property
    def terminated_by(self) -> str:
        return "verified" if self.found else "query_cap"


def next_m(m: float, lam: float, N: int) -> float:
    return min(lam * m, math.sqrt(N))


def m_schedule(lam: float, N: int) -> Iterator[float]:
    """The bound ``m`` for round 0, 1, 2, ... (depends on nothing else)."""
    m = 1.0
    while True:
        yield m
        m = next_m(m, lam, N)


def draw_j(m: float, rng: np.random.Generator) -> int:
    """Uniform over ``{0, ..., ceil(m) - 1}``."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return int(rng.integers(0, math.ceil(m)))


def verify_candidate(
    db: PatternDatabase,
    ctx: QueryContext,
    i0: int,
    excluded: AbstractSet[int] = frozenset(),
) -> bool:
    feat = feature_of(db, i0, ctx.mode)
    d = distance(feat, ctx.query_feature, db.feature_bits, db.distance_bits)
    return within_alpha(d, ctx.alpha) and i0 not in excluded


def run_search(
    db: PatternDatabase,
    ctx: QueryContext,
    config: SearchConfig = SearchConfig(),
    excluded: AbstractSet[int] = frozenset(),
) -> SearchReport:
    """Search for one index whose feature lies within ``ctx.alpha`` of the query.

    When the next draw would overrun the budget it is cut down to the
    iterations left, so a search without matches spends exactly the cap.
    """
    ctx.validate(db.feature_bits, db.distance_bits)
    excluded = frozenset(excluded)
    if any(not 0 <= i < db.N for i in excluded):
        raise PatternError(f"excluded indices out of range [0, {db.N})")
    if config.engine == "full":
        start = prepare_initial(RegisterLayout.for_database(db, config.qubit_cap))
        step = partial(apply_gpr, db=db, ctx=ctx, excluded=excluded)
    else:
        start = build_reduced(db, ctx, excluded)
        step = apply_gpr_reduced

    cap = config.query_cap(db.N)
    rounds: list[SearchRound] = []
    total = 0
    for round_no, m in enumerate(m_schedule(config.lam, db.N)):
        rng = round_rng(config.seed, round_no)
        j = min(draw_j(m, rng), cap - total)
        state = start
        for _ in range(j):
            state = step(state)
        outcome = measure_index(state, rng).index
        ok = verify_candidate(db, ctx, outcome, excluded)
        rounds.append(SearchRound(m, j, outcome, ok))
        total += j
        if ok:
            return SearchReport(tuple(rounds), total, outcome, config.seed, cap)
        if total >= cap:
            return SearchReport(tuple(rounds), total, None, config.seed, cap)
    raise AssertionError("unreachable")
