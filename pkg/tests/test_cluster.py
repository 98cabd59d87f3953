"""Two-cluster layered scheme: thresholds, recovery, collusion leakage."""

import dataclasses
import itertools
import math

import pytest

from src.cluster import (TRUSTED, UNTRUSTED, ClusterCollector, ClusterPlan, cluster_leakage,
                         compute_cluster_response, layer_table, plan_cluster, prefix_covers,
                         recover_cluster, recovery_threshold, worst_case_pattern)
from src.exceptions import InvalidParametersError, RecoveryError
from src.optimizer import semi_perfect_leakage, solve_pstar
from src.sim import coverage_threshold, gen_matrix


@pytest.mark.parametrize("n, rho, expected", [(4, 1, 4), (4, 2, 6), (3, 3, 4), (100, 1, 100), (10, 3, 25)])
def test_recovery_threshold_values(n, rho, expected):
    assert recovery_threshold(n, rho) == expected


@pytest.mark.parametrize("n", range(1, 6))
def test_threshold_matches_enumeration(n):
    for rho in range(1, n + 1):
        assert coverage_threshold(n, rho) == recovery_threshold(n, rho)


@pytest.mark.parametrize("n, rho, block", [(5, 2, 0), (6, 3, 4), (4, 4, 1)])
def test_worst_case_pattern_misses_block(n, rho, block):
    counts = worst_case_pattern(n, rho, block)
    assert sum(counts) == recovery_threshold(n, rho) - 1
    assert not prefix_covers(counts, n, rho)
    raised = list(counts)
    raised[(block + rho - 1) % n] += 1
    assert prefix_covers(raised, n, rho)


def test_layer_table_rotates_blocks():
    assert layer_table(4, 2) == ((0, 3), (1, 0), (2, 1), (3, 2))


def _plan(**overrides):
    values = dict(n1=3, n2=4, rho1=2, rho2=2, z=1, p=0.9)
    values.update(overrides)
    return ClusterPlan(**values)


def _run(plan, source, skip=lambda cluster, worker, layer: False, seed=0):
    A = gen_matrix(source, 12, 6, seed)
    B = gen_matrix(source, 6, 5, seed + 1)
    tasks = plan_cluster(A, plan, seed=seed)
    responses = []
    for cluster in (UNTRUSTED, TRUSTED):
        for layer in range(plan.layers(cluster)):
            for worker in range(plan.cluster_size(cluster)):
                if not skip(cluster, worker, layer):
                    responses.append(compute_cluster_response(tasks, cluster, worker, layer, B, len(responses)))
    return A, B, responses


@pytest.mark.parametrize("untrusted_straggler, trusted_straggler", [(0, 0), (2, 3), (1, 2)])
def test_recovers_with_rho_minus_one_full_stragglers(source89, untrusted_straggler, trusted_straggler):
    plan = _plan()

    def skip(cluster, worker, layer):
        return worker == (untrusted_straggler if cluster == UNTRUSTED else trusted_straggler)

    A, B, responses = _run(plan, source89, skip)
    assert recover_cluster(responses, plan) == A @ B


def test_worst_case_pattern_blocks_recovery(source89):
    plan = _plan()
    counts = worst_case_pattern(plan.n2, plan.rho2, block=1)

    def skip(cluster, worker, layer):
        return cluster == TRUSTED and layer >= counts[worker]

    _, _, responses = _run(plan, source89, skip)
    with pytest.raises(RecoveryError) as excinfo:
        recover_cluster(responses, plan)
    assert excinfo.value.deficient == ((TRUSTED, 1),)


def test_collector_tracks_missing_blocks(source89):
    plan = _plan()
    _, _, responses = _run(plan, source89)
    collector = ClusterCollector(plan)
    assert collector.missing() == {UNTRUSTED: [0, 1, 2], TRUSTED: [0, 1, 2, 3]}
    assert not collector.can_still_complete([(UNTRUSTED, 0), (TRUSTED, 2)])
    with pytest.raises(RecoveryError):
        collector.result()
    for response in responses:
        if collector.add(response):
            break
    assert collector.is_complete()
    # untrusted layers arrive first: 2 x 3 untrusted + 4 trusted
    assert collector.responses_used == 10


def test_plan_validation():
    with pytest.raises(InvalidParametersError):
        _plan(rho1=4)
    with pytest.raises(InvalidParametersError):
        _plan(z=4)
    with pytest.raises(InvalidParametersError):
        _plan(p=1.0)
    assert _plan(p=None).p is None


def test_plan_cluster_requires_divisible_rows(source89):
    A = gen_matrix(source89, 10, 4, seed=0)
    with pytest.raises(InvalidParametersError):
        plan_cluster(A, _plan(), seed=0)
    with pytest.raises(InvalidParametersError):
        plan_cluster(gen_matrix(source89, 12, 4, seed=0), _plan(p=None), seed=0)


def test_colluder_leakage(source89):
    plan = _plan()
    per_entry = semi_perfect_leakage(plan.p, source89)
    entries = 12 * 6

    assert cluster_leakage(plan, source89, [(UNTRUSTED, 0), (UNTRUSTED, 1)], (12, 6)) == 0.0
    assert cluster_leakage(plan, source89, [], (12, 6)) == 0.0

    single = cluster_leakage(plan, source89, [(TRUSTED, 0)], (12, 6))
    assert single == pytest.approx(0.5 * entries * per_entry)
    assert cluster_leakage(plan, source89, [(TRUSTED, 0)], (12, 6), exact=True) == pytest.approx(single)

    bound = cluster_leakage(plan, source89, [(TRUSTED, 0), (TRUSTED, 1)], (12, 6))
    exact = cluster_leakage(plan, source89, [(TRUSTED, 0), (TRUSTED, 1)], (12, 6), exact=True)
    assert bound == pytest.approx(entries * per_entry)
    assert exact == pytest.approx(0.75 * entries * per_entry)


def test_cross_cluster_collusion_rejected(source89):
    with pytest.raises(InvalidParametersError):
        cluster_leakage(_plan(), source89, [(TRUSTED, 0), (UNTRUSTED, 0)], (12, 6))


def test_recovers_under_every_tolerated_straggler_pattern(source89):
    for n1, n2 in itertools.product(range(1, 6), range(2, 6)):
        for rho1, rho2 in itertools.product(range(1, min(3, n1) + 1), range(1, min(3, n2) + 1)):
            plan = ClusterPlan(n1=n1, n2=n2, rho1=rho1, rho2=rho2, z=1, p=0.9)
            A = gen_matrix(source89, math.lcm(n1, n2), 3, seed=n1 * 10 + n2)
            B = gen_matrix(source89, 3, 2, seed=rho1 * 10 + rho2)
            tasks = plan_cluster(A, plan, seed=0)
            responses = [compute_cluster_response(tasks, cluster, worker, layer, B)
                         for cluster in (UNTRUSTED, TRUSTED)
                         for layer in range(plan.layers(cluster))
                         for worker in range(plan.cluster_size(cluster))]
            for slow_u in itertools.combinations(range(n1), rho1 - 1):
                for slow_t in itertools.combinations(range(n2), rho2 - 1):
                    arrived = [r for r in responses
                               if r.worker not in (slow_u if r.cluster == UNTRUSTED else slow_t)]
                    assert recover_cluster(arrived, plan) == A @ B


@pytest.mark.parametrize("z", [1, 2, 3])
@pytest.mark.parametrize("eps_rel", [0.01, 0.05, 0.2])
def test_pstar_spends_the_whole_budget(source89, z, eps_rel):
    plan = ClusterPlan(n1=4, n2=4, rho1=2, rho2=2, z=z)
    p = solve_pstar(source89, plan, eps_rel)
    solved = dataclasses.replace(plan, p=p)
    colluders = [(TRUSTED, worker) for worker in range(z)]
    relative = cluster_leakage(solved, source89, colluders, (12, 6)) / (12 * 6 * source89.entry_entropy())
    assert relative <= eps_rel
    assert relative == pytest.approx(eps_rel, abs=1e-9)


def test_pstar_shrinks_with_colluders_and_layers(source89):
    plan = ClusterPlan(n1=10, n2=10, rho1=1, rho2=1, z=1)
    table = [[solve_pstar(source89, dataclasses.replace(plan, rho2=rho2), 0.05, z=z) for z in range(1, 6)]
             for rho2 in range(1, 6)]
    for row in table:
        assert all(a >= b for a, b in zip(row, row[1:]))
    for column in zip(*table):
        assert all(a >= b for a, b in zip(column, column[1:]))
    assert table[0][0] > table[-1][-1]
