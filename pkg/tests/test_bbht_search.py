import math

import numpy as np
import pytest

from qpatrec import quantum_engine as qe
from qpatrec.bbht_search import (
    SearchConfig,
    SearchConfigError,
    derive_seed,
    draw_j,
    m_schedule,
    next_m,
    run_search,
    verify_candidate,
)
from qpatrec.instance import synthesize
from qpatrec.quantum_engine import QueryContext


def sweep_case(N, M):
    inst = synthesize(N, M)
    return inst.database, QueryContext.for_database(inst.database, 0, 0)


@pytest.mark.parametrize("m, expected", [(1, 1.2), (7, 8), (8, 8)])
def test_next_m(m, expected):
    assert next_m(m, 6 / 5, 64) == pytest.approx(expected, rel=1e-12)


def test_m_schedule_prefix():
    it = m_schedule(6 / 5, 64)
    got = [next(it) for _ in range(20)]
    want = [min(1.2**k, 8.0) for k in range(20)]
    assert got == pytest.approx(want, rel=1e-12)
    assert got[-1] == 8.0


def test_draw_j_m1_is_zero():
    rng = np.random.default_rng(0)
    assert {draw_j(1.0, rng) for _ in range(100)} == {0}


def test_draw_j_fractional_m():
    rng = np.random.default_rng(1)
    draws = np.array([draw_j(1.2, rng) for _ in range(10_000)])
    assert set(draws.tolist()) == {0, 1}
    assert abs(draws.mean() - 0.5) < 0.02


def test_draw_j_uniform_chi_square():
    rng = np.random.default_rng(2)
    n = 100_000
    counts = np.bincount([draw_j(8.0, rng) for _ in range(n)], minlength=8)
    assert len(counts) == 8
    chi2 = ((counts - n / 8) ** 2 / (n / 8)).sum()
    # 99.9th percentile of chi-square with 7 degrees of freedom
    assert chi2 < 24.32


def test_draw_j_rejects_small_m():
    with pytest.raises(ValueError):
        draw_j(0.5, np.random.default_rng(0))


@pytest.mark.parametrize("i0, expected", [(0, True), (3, False), (1, False), (6, False)])
def test_verify_candidate(db, i0, expected):
    ctx = QueryContext.for_database(db, 0, 5)
    assert verify_candidate(db, ctx, i0) is expected


def test_verify_candidate_excluded(db):
    ctx = QueryContext.for_database(db, 0, 5)
    assert not verify_candidate(db, ctx, 0, excluded={0})


@pytest.mark.parametrize("lam, cap_factor", [(1.0, 8), (4 / 3, 8), (1.2, 0), (1.2, -1)])
def test_config_validation(lam, cap_factor):
    with pytest.raises(SearchConfigError):
        SearchConfig(lam=lam, cap_factor=cap_factor)


@pytest.mark.parametrize("engine", ["reduced", "full"])
@pytest.mark.parametrize("seed", range(25))
def test_run_search_single_match(db, engine, seed):
    ctx = QueryContext.for_database(db, 0, 5)
    report = run_search(db, ctx, SearchConfig(seed=seed, engine=engine))
    assert report.found_index == 0
    assert report.rounds[-1].verified
    assert not any(r.verified for r in report.rounds[:-1])
    assert report.total_gpr == sum(r.j for r in report.rounds)


@pytest.mark.parametrize("engine", ["reduced", "full"])
def test_run_search_no_match_hits_cap(db, engine):
    ctx = QueryContext.for_database(db, 0, 2)
    report = run_search(db, ctx, SearchConfig(seed=3, engine=engine))
    assert not report.found
    assert report.cap == math.ceil(8 * math.sqrt(8)) == 23
    assert report.total_gpr == 23
    assert report.terminated_by == "query_cap"


def test_run_search_engines_agree(db):
    # same seed, same draws: identical outcomes whenever the marginals agree
    ctx = QueryContext.for_database(db, 4, 5)
    for seed in range(10):
        a = run_search(db, ctx, SearchConfig(seed=seed, engine="reduced"))
        b = run_search(db, ctx, SearchConfig(seed=seed, engine="full"))
        assert a == b


def test_run_search_excluded_never_returned(db):
    ctx = QueryContext.for_database(db, 4, 5)
    for seed in range(30):
        report = run_search(db, ctx, SearchConfig(seed=seed), excluded={0})
        assert report.found_index == 1


def test_run_search_rejects_bad_exclusion(db):
    ctx = QueryContext.for_database(db, 0, 5)
    with pytest.raises(ValueError):
        run_search(db, ctx, excluded={8})


def test_run_search_is_deterministic(db):
    ctx = QueryContext.for_database(db, 4, 5)
    assert run_search(db, ctx, SearchConfig(seed=9)) == run_search(db, ctx, SearchConfig(seed=9))


def test_m_sequence_independent_of_seed():
    db, ctx = sweep_case(64, 0)
    expected = [min(1.2**k, 8.0) for k in range(200)]
    for seed in range(20):
        report = run_search(db, ctx, SearchConfig(seed=seed))
        ms = [r.m for r in report.rounds]
        assert ms == pytest.approx(expected[: len(ms)], rel=1e-12)
        assert all(r.j < math.ceil(r.m) for r in report.rounds)


def test_zero_iteration_round_is_uniform():
    db, ctx = sweep_case(16, 3)
    state = qe.build_reduced(db, ctx)
    assert qe.success_probability(state) == pytest.approx(3 / 16, abs=1e-15)
    report = run_search(db, ctx, SearchConfig(seed=0))
    assert report.rounds[0].j == 0


def test_n64_single_match_statistics():
    db, ctx = sweep_case(64, 1)
    reports = [run_search(db, ctx, SearchConfig(seed=derive_seed(0, t))) for t in range(1000)]
    mean_gpr = np.mean([r.total_gpr for r in reports])
    found = np.mean([r.found for r in reports])
    assert mean_gpr <= 5 * math.sqrt(64)
    assert found >= 0.95
    assert all(r.found_index in (None, 0) for r in reports)


def test_uncapped_search_terminates():
    db, ctx = sweep_case(256, 1)
    config = SearchConfig(cap_factor=math.inf)
    for t in range(1000):
        report = run_search(db, ctx, SearchConfig(seed=derive_seed(1, t), cap_factor=math.inf))
        assert report.found_index == 0
    assert config.query_cap(256) == math.inf


def test_derive_seed_is_stable():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert derive_seed(0, 1) != derive_seed(0, 2)
    assert derive_seed(0, 1) != derive_seed(1, 1)
