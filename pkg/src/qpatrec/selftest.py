"""Invariant suites shared by the ``selftest`` command and the test-suite.

Each check draws random instances or states from a seeded generator and
returns the worst deviation it saw; a suite passes when that deviation is
within its tolerance.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import quantum_engine as qe
from .instance import synthesize
from .pattern_model import FeatureMode, PatternDatabase, build_database, sentinels
from .quantum_engine import QueryContext, RegisterLayout

NORM_TOL = 1e-12
EQUIV_TOL = 1e-10
CLOSED_FORM_TOL = 1e-9


def random_database(
    rng: np.random.Generator,
    max_index_bits: int = 4,
    payload_bits: int = 4,
    feature_bits: int = 4,
    distance_bits: int = 4,
) -> PatternDatabase:
    """Random targets and spurious records; payloads cluster so that matches are common."""
    N = 1 << int(rng.integers(1, max_index_bits + 1))
    used = int(rng.integers(max(1, N // 2 + 1) if N > 2 else 1, N + 1))
    n = int(rng.integers(0, used + 1))
    top = 1 << payload_bits
    centre = int(rng.integers(0, top))
    spread = max(1, top // 4)
    payloads = np.clip(centre + rng.integers(-spread, spread + 1, size=used), 0, top - 1)
    return build_database(
        payloads[:n].tolist(), payloads[n:].tolist(), payload_bits, feature_bits, distance_bits
    )


def random_context(rng: np.random.Generator, db: PatternDatabase) -> QueryContext:
    spurious_code, virtual_code = sentinels(db.feature_bits)
    feats = [int(f) for f in db.features(FeatureMode.IDEALIZED) if f < virtual_code]
    # query near an existing feature half of the time
    if feats and rng.random() < 0.5:
        query = feats[int(rng.integers(len(feats)))]
    else:
        query = int(rng.integers(0, virtual_code))
    alpha = int(rng.integers(0, min(db.d_max, 4)))
    mode = FeatureMode.IDEALIZED if rng.random() < 0.5 else FeatureMode.EXTRACTOR
    return QueryContext.for_database(db, alpha, query, mode)


def _random_setup(rng: np.random.Generator):
    bits = [int(b) for b in rng.integers(1, 4, size=3)]
    bits[1] = max(bits[1], 2)
    db = random_database(rng, 3, *bits)
    ctx = random_context(rng, db)
    return db, ctx, RegisterLayout.for_database(db)


def _operations(db: PatternDatabase, ctx: QueryContext) -> dict[str, Callable]:
    return {
        "load": lambda s: qe.apply_load(s, db),
        "feature": lambda s: qe.apply_feature_oracle(s, db, ctx.mode),
        "distance": lambda s: qe.apply_distance_oracle(s, ctx),
        "mark": lambda s: qe.apply_mark_oracle(s, ctx),
        "diffusion": qe.apply_diffusion,
    }


def check_unitarity(rng: np.random.Generator, count: int = 100) -> float:
    worst = 0.0
    for _ in range(count):
        db, ctx, layout = _random_setup(rng)
        state = qe.random_state(layout, rng)
        for op in _operations(db, ctx).values():
            worst = max(worst, abs(op(state).norm() - 1.0))
    return worst


def check_involution(rng: np.random.Generator, count: int = 100) -> float:
    worst = 0.0
    for _ in range(count):
        db, ctx, layout = _random_setup(rng)
        state = qe.random_state(layout, rng)
        for op in _operations(db, ctx).values():
            back = op(op(state)).amplitudes
            worst = max(worst, float(np.abs(back - state.amplitudes).max()))
    return worst


def check_uncompute(rng: np.random.Generator, count: int = 100) -> float:
    worst = 0.0
    for _ in range(count):
        db, ctx, layout = _random_setup(rng)
        state = qe.random_state(layout, rng)
        back = qe.uncompute_ancillas(qe.compute_ancillas(state, db, ctx), db, ctx)
        worst = max(worst, float(np.abs(back.amplitudes - state.amplitudes).max()))
    return worst


def check_ancilla_clean(rng: np.random.Generator, count: int = 100, max_j: int = 10) -> float:
    worst = 0.0
    for _ in range(count):
        db, ctx, layout = _random_setup(rng)
        state = qe.prepare_initial(layout)
        for _ in range(max_j):
            state = qe.apply_gpr(state, db, ctx)
            worst = max(worst, state.ancilla_leak())
    return worst


def check_engine_equivalence(
    rng: np.random.Generator, count: int = 200, max_index_bits: int = 4, max_j: int = 10
) -> float:
    """Full vs reduced index marginals on random 4-bit-ancilla instances."""
    worst = 0.0
    for _ in range(count):
        db = random_database(rng, max_index_bits)
        ctx = random_context(rng, db)
        full = qe.prepare_initial(RegisterLayout.for_database(db))
        reduced = qe.build_reduced(db, ctx)
        for j in range(max_j + 1):
            if j:
                full = qe.apply_gpr(full, db, ctx)
                reduced = qe.apply_gpr_reduced(reduced)
            diff = np.abs(qe.index_marginal(full) - qe.index_marginal(reduced)).max()
            worst = max(worst, float(diff))
    return worst


def check_closed_form(
    sizes=(2, 4, 8, 16, 64), max_j: int = 10, full_sizes=(2, 4, 8, 16)
) -> float:
    """Success probability against the closed form on both engines.

    The reduced engine covers every ``M <= N/2`` for each size; the full
    engine runs the synthesized instances for the small sizes.
    """
    worst = 0.0
    for N in sizes:
        for M in range(N // 2 + 1):
            state = qe.ReducedState.uniform(N, set(range(M)))
            for j in range(max_j + 1):
                if j:
                    state = qe.apply_gpr_reduced(state)
                err = abs(qe.success_probability(state) - qe.closed_form_success(N, M, j))
                worst = max(worst, err)
    for N in full_sizes:
        for M in range(N // 2 + 1):
            inst = synthesize(N, M)
            db = inst.database
            ctx = QueryContext.for_database(db, inst.alpha, 0, inst.mode)
            state = qe.prepare_initial(RegisterLayout.for_database(db))
            for j in range(max_j + 1):
                if j:
                    state = qe.apply_gpr(state, db, ctx)
                p = float(qe.index_marginal(state)[:M].sum())
                worst = max(worst, abs(p - qe.closed_form_success(N, M, j)))
    return worst


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    seconds: float


def run_selftest(seed: int = 0) -> list[SuiteResult]:
    """Run every invariant suite at desk scale."""
    suites = [
        ("unitarity", NORM_TOL, lambda rng: check_unitarity(rng, 100)),
        ("involution", NORM_TOL, lambda rng: check_involution(rng, 100)),
        ("uncompute", NORM_TOL, lambda rng: check_uncompute(rng, 100)),
        ("ancilla_clean", NORM_TOL, lambda rng: check_ancilla_clean(rng, 100)),
        ("engine_equivalence", EQUIV_TOL, lambda rng: check_engine_equivalence(rng, 50)),
        ("closed_form", CLOSED_FORM_TOL, lambda rng: check_closed_form()),
    ]
    results = []
    for k, (name, tol, fn) in enumerate(suites):
        rng = np.random.default_rng([seed, k])
        start = time.perf_counter()
        try:
            worst = float(fn(rng))
            passed = worst <= tol
        except Exception:  # a crashing suite is a failing suite
            worst, passed = float("inf"), False
        results.append(SuiteResult(name, passed, worst, tol, time.perf_counter() - start))
    return results
