"""Statevector simulation of the pattern-recognition Grover iteration.

The full engine keeps one complex amplitude per basis state of the four
simulated registers ``|i>|x>|c>|d>`` (index, payload, feature, distance),
stored flat with ordinal ``((i * X + x) * C + c) * D + d``. The threshold and
query feature are classical and live in :class:`QueryContext`.

Every data-writing oracle XORs its output into its target register, so each
one is a permutation of basis states and its own inverse. The mark oracle is
a diagonal sign flip and the diffusion reflects the index register about its
uniform superposition.

The reduced engine tracks only the ``N`` index amplitudes. After each whole
iteration the ancillas are back to zero, so the index amplitudes carry the
complete state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import AbstractSet, Callable, Union

import numpy as np

from .pattern_model import (
    FeatureMode,
    PatternDatabase,
    check_alpha,
    check_feature,
    distance_table,
    marked_set,
    within_alpha,
)

DEFAULT_CAP = 24
NORM_TOL = 1e-12
# Accepted drift when sampling from a state; states reached by long chains of
# unitaries accumulate rounding error above NORM_TOL.
MEASURE_TOL = 1e-9


class EngineError(ValueError):
    """Raised for layout mismatches, size-cap violations and dirty ancillas."""


@dataclass(frozen=True)
class RegisterLayout:
    index_bits: int
    payload_bits: int
    feature_bits: int
    distance_bits: int
    cap: int = DEFAULT_CAP

    def __post_init__(self) -> None:
        if self.index_bits < 1:
            raise EngineError("index register needs at least one qubit")
        if self.total_bits > self.cap:
            raise EngineError(
                f"layout needs {self.total_bits} qubits, simulation cap is {self.cap}"
            )

    @classmethod
    def for_database(cls, db: PatternDatabase, cap: int = DEFAULT_CAP) -> "RegisterLayout":
        return cls(db.index_bits, db.payload_bits, db.feature_bits, db.distance_bits, cap)

    @property
    def total_bits(self) -> int:
        return self.index_bits + self.payload_bits + self.feature_bits + self.distance_bits

    @property
    def N(self) -> int:
        return 1 << self.index_bits

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (
            1 << self.index_bits,
            1 << self.payload_bits,
            1 << self.feature_bits,
            1 << self.distance_bits,
        )

    def ordinal(self, i: int, x: int, c: int, d: int) -> int:
        _, X, C, D = self.shape
        return ((i * X + x) * C + c) * D + d

    def check_database(self, db: PatternDatabase) -> None:
        ours = (self.N, self.payload_bits, self.feature_bits, self.distance_bits)
        theirs = (db.N, db.payload_bits, db.feature_bits, db.distance_bits)
        if ours != theirs:
            raise EngineError(f"layout {ours} does not match database {theirs}")


@dataclass(frozen=True)
class QueryContext:
    """Threshold, query feature and feature mode for one search."""

    alpha: int
    query_feature: int
    mode: FeatureMode = FeatureMode.IDEALIZED

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", FeatureMode(self.mode))

    @classmethod
    def for_database(
        cls,
        db: PatternDatabase,
        alpha: int,
        query_feature: int,
        mode: FeatureMode | str = FeatureMode.IDEALIZED,
    ) -> "QueryContext":
        ctx = cls(int(alpha), int(query_feature), FeatureMode(mode))
        ctx.validate(db.feature_bits, db.distance_bits)
        return ctx

    def validate(self, feature_bits: int, distance_bits: int) -> None:
        check_alpha(self.alpha, distance_bits)
        check_feature(self.query_feature, feature_bits, "query feature")


@dataclass(frozen=True)
class FullState:
    amplitudes: np.ndarray
    layout: RegisterLayout
    gpr_count: int = 0

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def ancilla_leak(self) -> float:
        """Largest amplitude magnitude on a basis state with nonzero ancillas."""
        t = np.abs(self.tensor)
        t[:, 0, 0, 0] = 0.0
        return float(t.max())

    def _with(self, tensor: np.ndarray) -> "FullState":
        return FullState(tensor.reshape(-1), self.layout, self.gpr_count)


@dataclass(frozen=True)
class ReducedState:
    amplitudes: np.ndarray
    marked: frozenset[int]
    gpr_count: int = 0
    _mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        mask = np.zeros(len(self.amplitudes), dtype=bool)
        mask[list(self.marked)] = True
        object.__setattr__(self, "_mask", mask)

    @classmethod
    def uniform(cls, N: int, marked: AbstractSet[int]) -> "ReducedState":
        if N < 2:
            raise EngineError("reduced state needs N >= 2")
        bad = [i for i in marked if not 0 <= i < N]
        if bad:
            raise EngineError(f"marked indices out of range: {sorted(bad)}")
        amps = np.full(N, 1.0 / math.sqrt(N), dtype=complex)
        return cls(amps, frozenset(marked))

    @property
    def N(self) -> int:
        return len(self.amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


State = Union[FullState, ReducedState]


@dataclass(frozen=True)
class MeasurementOutcome:
    index: int
    draw: float


def prepare_initial(layout: RegisterLayout) -> FullState:
    """Uniform superposition over indices with all ancillas zero."""
    amps = np.zeros(1 << layout.total_bits, dtype=complex)
    t = amps.reshape(layout.shape)
    t[:, 0, 0, 0] = 1.0 / math.sqrt(layout.N)
    return FullState(amps, layout)


def apply_load(state: FullState, db: PatternDatabase) -> FullState:
    """XOR each record's payload into the payload register, controlled on its index."""
    layout = state.layout
    layout.check_database(db)
    N, X, _, _ = layout.shape
    rows = np.arange(N)[:, None]
    cols = np.arange(X)[None, :] ^ db.payloads[:, None]
    return state._with(state.tensor[rows, cols])


def apply_feature_oracle(
    state: FullState, db: PatternDatabase, mode: FeatureMode | str = FeatureMode.IDEALIZED
) -> FullState:
    """XOR each record's feature into the feature register, controlled on its index."""
    layout = state.layout
    layout.check_database(db)
    N, _, C, _ = layout.shape
    feats = db.features(mode)
    rows = np.arange(N)[:, None]
    cols = np.arange(C)[None, :] ^ feats[:, None]
    swapped = state.tensor.transpose(0, 2, 1, 3)[rows, cols]
    return state._with(np.ascontiguousarray(swapped.transpose(0, 2, 1, 3)))


def apply_distance_oracle(state: FullState, ctx: QueryContext) -> FullState:
    """XOR ``distance(c, query_feature)`` into the distance register, controlled on ``c``."""
    layout = state.layout
    ctx.validate(layout.feature_bits, layout.distance_bits)
    _, _, C, D = layout.shape
    dist = distance_table(ctx.query_feature, layout.feature_bits, layout.distance_bits)
    feats = np.arange(C)[:, None]
    cols = np.arange(D)[None, :] ^ dist[:, None]
    return state._with(state.tensor[:, :, feats, cols])


def apply_mark_oracle(
    state: FullState,
    ctx: QueryContext,
    excluded: AbstractSet[int] = frozenset(),
    predicate: Callable[[int, int], bool] = within_alpha,
) -> FullState:
    """Flip the sign of every basis state whose distance register satisfies the predicate.

    Indices in ``excluded`` are never flipped; this lets a search skip
    patterns it has already reported.
    """
    layout = state.layout
    N, _, _, D = layout.shape
    flip = np.array([predicate(d, ctx.alpha) for d in range(D)], dtype=bool)
    phase = np.where(flip, -1.0, 1.0)[None, :].repeat(N, axis=0)
    if excluded:
        phase[sorted(excluded), :] = 1.0
    return state._with(state.tensor * phase[:, None, None, :])


def apply_diffusion(state: State) -> State:
    """Reflect the index register about its uniform superposition.

    Applied independently for each fixed ancilla configuration.
    """
    if isinstance(state, ReducedState):
        a = state.amplitudes
        return replace(state, amplitudes=2.0 * a.mean() - a)
    t = state.tensor
    return state._with(2.0 * t.mean(axis=0, keepdims=True) - t)


def compute_ancillas(state: FullState, db: PatternDatabase, ctx: QueryContext) -> FullState:
    """Load, featurize and measure distance: the forward half of one iteration."""
    state = apply_load(state, db)
    state = apply_feature_oracle(state, db, ctx.mode)
    return apply_distance_oracle(state, ctx)


def uncompute_ancillas(state: FullState, db: PatternDatabase, ctx: QueryContext) -> FullState:
    # each step is self-inverse; reverse order gives the adjoint
    state = apply_distance_oracle(state, ctx)
    state = apply_feature_oracle(state, db, ctx.mode)
    return apply_load(state, db)


def apply_gpr(
    state: FullState,
    db: PatternDatabase,
    ctx: QueryContext,
    excluded: AbstractSet[int] = frozenset(),
) -> FullState:
    """One pattern-recognition iteration on the full statevector."""
    leak = state.ancilla_leak()
    if leak > NORM_TOL:
        raise EngineError(f"state has ancilla support (max amplitude {leak:.3e})")
    count = state.gpr_count
    state = compute_ancillas(state, db, ctx)
    state = apply_mark_oracle(state, ctx, excluded)
    state = uncompute_ancillas(state, db, ctx)
    state = apply_diffusion(state)
    return replace(state, gpr_count=count + 1)


def build_reduced(
    db: PatternDatabase,
    ctx: QueryContext,
    excluded: AbstractSet[int] = frozenset(),
) -> ReducedState:
    ctx.validate(db.feature_bits, db.distance_bits)
    marked = marked_set(db, ctx.query_feature, ctx.alpha, ctx.mode) - frozenset(excluded)
    return ReducedState.uniform(db.N, marked)


def apply_gpr_reduced(state: ReducedState) -> ReducedState:
    a = np.where(state._mask, -state.amplitudes, state.amplitudes)
    return replace(state, amplitudes=2.0 * a.mean() - a, gpr_count=state.gpr_count + 1)


def index_marginal(state: State) -> np.ndarray:
    """Probability of observing each index in the index register."""
    if isinstance(state, ReducedState):
        return np.abs(state.amplitudes) ** 2
    return (np.abs(state.tensor) ** 2).sum(axis=(1, 2, 3))


def success_probability(state: ReducedState) -> float:
    return float(index_marginal(state)[state._mask].sum())


def closed_form_success(N: int, M: int, j: int) -> float:
    """``sin^2((2j + 1) * arcsin(sqrt(M / N)))``."""
    if N < 2 or not 0 <= M <= N or j < 0:
        raise ValueError(f"invalid arguments N={N}, M={M}, j={j}")
    if M == 0:
        return 0.0
    if M == N:
        return 1.0
    theta = math.asin(math.sqrt(M / N))
    return math.sin((2 * j + 1) * theta) ** 2


def measure_index(state: State, rng: np.random.Generator) -> MeasurementOutcome:
    """Sample the index register with a single uniform draw from ``rng``."""
    probs = index_marginal(state)
    total = float(probs.sum())
    if abs(total - 1.0) > MEASURE_TOL:
        raise EngineError(f"cannot measure unnormalized state (norm^2 = {total!r})")
    draw = float(rng.random())
    cdf = np.cumsum(probs)
    index = int(np.searchsorted(cdf, draw, side="right"))
    # draw can land above cdf[-1] when rounding leaves it just under 1
    last = int(np.flatnonzero(probs)[-1])
    return MeasurementOutcome(min(index, last), draw)


def random_state(layout: RegisterLayout, rng: np.random.Generator) -> FullState:
    """Normalized state with Gaussian random amplitudes over the whole space."""
    size = 1 << layout.total_bits
    amps = rng.normal(size=size) + 1j * rng.normal(size=size)
    return FullState(amps / np.linalg.norm(amps), layout)
