"""Seeded query-count sweeps over database size and match count."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .bbht_search import SearchConfig, derive_seed, run_search
from .instance import synthesize
from .quantum_engine import QueryContext


@dataclass(frozen=True)
class SweepRow:
    N: int
    M: int
    trials: int
    mean_gpr: float
    found_rate: float
    ratio: Optional[float]  # mean_gpr / sqrt(N / M); None when M = 0
    max_gpr: int
    false_positives: int
    instance_digest: str


def _trial_batch(N: int, M: int, config: SearchConfig, trials: range) -> list[tuple[int, bool, bool]]:
    inst = synthesize(N, M)
    db = inst.database
    ctx = QueryContext.for_database(db, inst.alpha, inst.codebook[0].feature, inst.mode)
    out = []
    for t in trials:
        report = run_search(db, ctx, replace(config, seed=derive_seed(config.seed, t)))
        # targets occupy indices 0..M-1 by construction
        false_pos = report.found and not report.found_index < M
        out.append((report.total_gpr, report.found, false_pos))
    return out


def sweep_row(
    N: int, M: int, trials: int, config: SearchConfig = SearchConfig(), jobs: int = 1
) -> SweepRow:
    """Run ``trials`` searches on the synthesized ``(N, M)`` instance.

    Trial ``t`` uses the seed derived from ``(config.seed, t)``; results are
    accumulated in trial order whatever ``jobs`` is.
    """
    if config.engine != "reduced":
        raise ValueError("sweeps run on the reduced engine only")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if jobs > 1:
        bounds = np.linspace(0, trials, min(jobs, trials) + 1).astype(int)
        chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_trial_batch, *zip(*[(N, M, config, c) for c in chunks]))
            results = [r for part in parts for r in part]
    else:
        results = _trial_batch(N, M, config, range(trials))

    gprs = np.array([r[0] for r in results], dtype=float)
    mean_gpr = float(gprs.mean())
    return SweepRow(
        N=N,
        M=M,
        trials=trials,
        mean_gpr=mean_gpr,
        found_rate=sum(r[1] for r in results) / trials,
        ratio=mean_gpr / math.sqrt(N / M) if M else None,
        max_gpr=int(gprs.max()),
        false_positives=sum(r[2] for r in results),
        instance_digest=synthesize(N, M).digest(),
    )


def run_sweep(
    n_list: Sequence[int],
    m_list: Sequence[int],
    trials: int,
    config: SearchConfig = SearchConfig(),
    jobs: int = 1,
) -> list[SweepRow]:
    """One row per ``(N, M)`` pair of the cartesian product, skipping ``M > N``."""
    return [
        sweep_row(N, M, trials, config, jobs)
        for N in n_list
        for M in m_list
        if M <= N
    ]
