"""Event-driven simulation, threshold enumeration and empirical leakage."""

import io
import math

import numpy as np
import pytest

from src.cluster import ClusterPlan
from src.exceptions import InvalidParametersError
from src.field import FieldSpec
from src.matmul import BASIC, CYCLIC_GROUPS, M_SPLIT, MMScheme, part_width
from src.optimizer import solve_sss
from src.otp import semi_perfect_params
from src.sim import (CSV_COLUMNS, DETERMINISTIC, PER_WORKER_TABLE, LatencyModel, gen_matrix,
                     leakage_experiment, recovery_prefix_profile, run_campaign, run_trial, write_csv)
from src.sss import ShareParams
from src.stats import SourceModel


def _scheme(field, variant, N, m=1, sigma=0, x=1):
    params = ShareParams(field, part_width(variant, N, m, sigma, x), 0.9, 0.02)
    return MMScheme(variant, N, params, params, m=m, sigma=sigma, x=x)


def test_gen_matrix(gf89):
    zeros = gen_matrix(SourceModel(gf89, 1.0), 4, 5, seed=1)
    assert zeros.sparsity() == 1.0
    source = SourceModel(gf89, 0.8)
    assert gen_matrix(source, 50, 40, seed=2) == gen_matrix(source, 50, 40, seed=2)
    assert gen_matrix(source, 200, 100, seed=3).sparsity() == pytest.approx(0.8, abs=0.01)


def test_basic_deterministic_trial(gf89, source89):
    result = run_trial(_scheme(gf89, BASIC, 3), LatencyModel(kind=DETERMINISTIC), (8, 4, 8), 5, source89)
    assert result.recovered
    assert result.responses_used == 3
    assert result.completion_time == 1.0
    assert result.tolerance == "0"
    assert result.failure == ""


def test_slow_worker_is_skipped(gf89, source89):
    latency = LatencyModel.from_spec("per-worker-table:1,1,5,1")
    result = run_trial(_scheme(gf89, BASIC, 4), latency, (8, 4, 8), 0, source89)
    assert result.recovered
    assert result.completion_time == 1.0
    assert result.responses_used == 3


@pytest.mark.parametrize("straggler", [0, 3, 5])
def test_split_trial_with_full_straggler(gf89, source89, straggler):
    latency = LatencyModel(full_stragglers=frozenset({straggler}))
    result = run_trial(_scheme(gf89, M_SPLIT, 6, m=3, sigma=1), latency, (8, 6, 8), 7, source89)
    assert result.recovered
    assert result.tolerance == "1"


def test_split_trial_fails_beyond_tolerance(gf89, source89):
    latency = LatencyModel(kind=DETERMINISTIC, full_stragglers=frozenset({0, 1}))
    result = run_trial(_scheme(gf89, M_SPLIT, 6, m=3, sigma=1), latency, (8, 6, 8), 7, source89)
    assert not result.recovered
    assert math.isnan(result.completion_time)
    assert "parts [0, 1]" in result.failure


def test_partial_straggler_counts(gf89, source89):
    latency = LatencyModel(kind=DETERMINISTIC, partial=((0, 1),))
    result = run_trial(_scheme(gf89, M_SPLIT, 6, m=3, sigma=1), latency, (8, 6, 8), 2, source89)
    assert result.recovered


def test_cluster_trial(source89):
    plan = ClusterPlan(n1=3, n2=4, rho1=2, rho2=2, z=1, p=0.9)
    latency = LatencyModel(kind=DETERMINISTIC, full_stragglers=frozenset({0, 4}))
    result = run_trial(plan, latency, (12, 6, 5), 3, source89)
    assert result.recovered
    assert result.variant == "cluster"
    assert result.workers == 7
    assert result.tolerance == "2/2"
    assert result.completion_time == 2.0
    assert 0.0 < result.leak_analytic < 1.0


def test_measured_leakage_is_reported(gf89, source89):
    result = run_trial(_scheme(gf89, BASIC, 3), LatencyModel(), (20, 30, 4), 1, source89, measure_leakage=True)
    assert math.isfinite(result.leak_emp)
    assert 0.0 <= result.leak_analytic < 1.0


def test_latency_validation(gf89, source89):
    with pytest.raises(InvalidParametersError):
        LatencyModel.from_spec("gamma:shape=2")
    with pytest.raises(InvalidParametersError):
        LatencyModel.from_spec("shifted-exponential:scale=2")
    with pytest.raises(InvalidParametersError):
        LatencyModel(rate=0.0)
    with pytest.raises(InvalidParametersError):
        run_trial(_scheme(gf89, BASIC, 3), LatencyModel(full_stragglers=frozenset({3})), (4, 4, 4), 0, source89)
    with pytest.raises(InvalidParametersError):
        run_trial(_scheme(gf89, BASIC, 4), LatencyModel.from_spec(f"{PER_WORKER_TABLE}:1,2"), (4, 4, 4), 0, source89)


def test_latency_spec_options():
    latency = LatencyModel.from_spec("shifted-exponential:shift=0.5,rate=4", full_stragglers=[2], partial=[(1, 3)])
    assert latency.shift == 0.5 and latency.rate == 4.0
    assert latency.completed_tasks(2, 5) == 0
    assert latency.completed_tasks(1, 5) == 3
    assert latency.completed_tasks(0, 5) == 5


def test_campaign_is_thread_independent(gf89, source89):
    scheme = _scheme(gf89, M_SPLIT, 6, m=3, sigma=1)
    serial = run_campaign(scheme, LatencyModel(), (6, 6, 6), range(6), source89, threads=1)
    parallel = run_campaign(scheme, LatencyModel(), (6, 6, 6), range(6), source89, threads=3)
    assert [r.to_csv_row() for r in serial] == [r.to_csv_row() for r in parallel]
    assert all(r.recovered for r in serial)


def test_csv_output(gf89, source89):
    results = run_campaign(_scheme(gf89, BASIC, 3), LatencyModel(kind=DETERMINISTIC), (4, 4, 4), [0, 1], source89)
    stream = io.StringIO()
    write_csv(results, stream, digits=6)
    lines = stream.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    assert lines[1].split(",")[:7] == ["0", "basic", "3", "0", "true", "1", "3"]


@pytest.mark.parametrize("variant, N, m, sigma, x, expected", [
    (BASIC, 3, 1, 0, 1, (3, 3)),
    (BASIC, 5, 1, 0, 1, (3, 3)),
    (M_SPLIT, 6, 3, 1, 1, (5, 5)),
    (CYCLIC_GROUPS, 6, 2, 0, 1, (6, 6)),
])
def test_recovery_prefix_profile(gf89, variant, N, m, sigma, x, expected):
    assert recovery_prefix_profile(_scheme(gf89, variant, N, m, sigma, x)) == expected


def test_prefix_profile_enumeration_limit(gf89):
    with pytest.raises(InvalidParametersError):
        recovery_prefix_profile(_scheme(gf89, BASIC, 9))


def test_leakage_experiment_rejects_small_samples(gf7):
    source = SourceModel(gf7, 0.7)
    with pytest.raises(InvalidParametersError):
        leakage_experiment(ShareParams.uniform(gf7, 2), source, entries=500, seed=0)


@pytest.mark.slow
def test_empirical_leakage_matches_closed_form():
    field = FieldSpec.prime(7)
    source = SourceModel(field, 0.7)
    params = solve_sss(source, 0.6, 2).params
    comparison = leakage_experiment(params, source, entries=50_000, seed=3, replicates=100)
    assert comparison.analytical > 0.01
    assert comparison.within(3.0)
    assert comparison.plugin >= comparison.empirical


@pytest.mark.slow
def test_empirical_leakage_of_independent_share_is_small():
    field = FieldSpec.prime(7)
    source = SourceModel(field, 0.7)
    comparison = leakage_experiment(semi_perfect_params(0.6, field), source, entries=50_000, seed=4,
                                    share_index=1, replicates=100)
    assert comparison.analytical < 1e-12
    assert abs(comparison.empirical) < 5e-4
    assert np.isfinite(comparison.standard_error)


@pytest.mark.slow
def test_split_survives_every_single_full_straggler(gf89, source89):
    scheme = _scheme(gf89, M_SPLIT, 6, m=3, sigma=1)
    for seed in range(1000):
        latency = LatencyModel(full_stragglers=frozenset({seed % 6}))
        result = run_trial(scheme, latency, (4, 6, 4), seed, source89)
        assert result.recovered, (seed, result.failure)


@pytest.mark.slow
def test_empirical_leakage_at_optimum_over_large_field(gf89, source89):
    params = solve_sss(source89, 0.9, 2).params
    comparison = leakage_experiment(params, source89, entries=1_000_000, seed=11, replicates=50)
    assert comparison.within(3.0)


@pytest.mark.slow
def test_empirical_gap_shrinks_with_sample_size():
    source = SourceModel(FieldSpec.prime(7), 0.7)
    params = solve_sss(source, 0.6, 2).params
    small, large = (leakage_experiment(params, source, entries=entries, seed=12, replicates=100)
                    for entries in (10_000, 1_000_000))
    assert small.within(3.0) and large.within(3.0)
    # 样本量增加 100 倍, 标准误约缩小 10 倍
    assert 5.0 < small.standard_error / large.standard_error < 20.0
    assert large.gap < 3.0 * small.standard_error / 5.0
