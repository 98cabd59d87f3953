"""Straggler-tolerant private matrix multiplication."""

from itertools import combinations

import numpy as np
import pytest

from src.exceptions import InvalidParametersError, RecoveryError
from src.field import FieldMatrix, FieldSpec
from src.matmul import (BASIC, CYCLIC_GROUPS, M_SPLIT, MMScheme, WorkerResponse, compute_response,
                        deficient_parts, interpolate_at_zero, make_tasks, part_width, recover,
                        scheme_leakage, straggler_witness)
from src.sim import gen_matrix
from src.sss import ShareParams
from src.stats import SourceModel


def _scheme(field, variant, N, m=1, sigma=0, x=1, alphas=()):
    n = part_width(variant, N, m, sigma, x)
    params = ShareParams(field, n, 0.9, 0.02, alphas)
    return MMScheme(variant, N, params, params, m=m, sigma=sigma, x=x)


def _matrices(field, inner, seed=0):
    source = SourceModel(field, 0.9)
    return gen_matrix(source, 16, inner, seed), gen_matrix(source, inner, 16, seed + 1)


def _responses(bundle, stragglers=()):
    responses = []
    stamp = 0
    for worker in range(bundle.scheme.N):
        if worker in stragglers:
            continue
        for task in bundle.worker_tasks(worker):
            responses.append(compute_response(task, stamp))
            stamp += 1
    return responses


@pytest.mark.parametrize("q", [89, 256])
def test_any_three_basic_responses_recover(q):
    field = FieldSpec.from_q(q)
    scheme = _scheme(field, BASIC, 5)
    A, B = _matrices(field, 8)
    responses = _responses(make_tasks(A, B, scheme, seed=3))
    for subset in combinations(responses, 3):
        assert recover(list(subset), scheme) == A @ B


def test_split_assignment_layout(gf89):
    scheme = _scheme(gf89, M_SPLIT, 6, m=3, sigma=1)
    assert scheme.assignment == ((0, 1, 2, 3), (4, 5, 0, 1), (2, 3, 4, 5))
    assert scheme.tasks_per_worker() == (2,) * 6
    assert scheme.worker_parts(0) == [(0, 0), (1, 2)]
    assert scheme.claimed_tolerance == scheme.measured_tolerance == 1


@pytest.mark.parametrize("straggler", range(6))
def test_split_tolerates_any_single_straggler(gf89, straggler):
    scheme = _scheme(gf89, M_SPLIT, 6, m=3, sigma=1)
    A, B = _matrices(gf89, 12)
    bundle = make_tasks(A, B, scheme, seed=11)
    assert recover(_responses(bundle, {straggler}), scheme) == A @ B


def test_split_witness_breaks_recovery(gf89):
    scheme = _scheme(gf89, M_SPLIT, 6, m=3, sigma=1)
    A, B = _matrices(gf89, 12)
    witness = straggler_witness(scheme)
    assert len(witness) == 2
    responses = _responses(make_tasks(A, B, scheme, seed=11), set(witness))
    assert deficient_parts(responses, scheme)
    with pytest.raises(RecoveryError) as excinfo:
        recover(responses, scheme)
    assert 0 in excinfo.value.deficient


def test_cyclic_groups_tolerance(gf89):
    scheme = _scheme(gf89, CYCLIC_GROUPS, 12, m=3, x=2)
    assert scheme.assignment[2] == (8, 9, 10, 11, 0, 1, 2, 3)
    assert scheme.claimed_tolerance == 4
    assert scheme.measured_tolerance == 5
    A, B = _matrices(gf89, 6)
    bundle = make_tasks(A, B, scheme, seed=5)
    for stragglers in [(0, 1, 2, 3, 4), (3, 4, 7, 8, 11), (6, 7, 8, 9, 10)]:
        assert recover(_responses(bundle, set(stragglers)), scheme) == A @ B


def test_basic_tolerance_and_witness(gf89):
    scheme = _scheme(gf89, BASIC, 5)
    assert scheme.claimed_tolerance == scheme.measured_tolerance == 2
    assert straggler_witness(scheme) == (0, 1, 2)


def test_first_arrivals_win(gf89):
    scheme = _scheme(gf89, BASIC, 4)
    A, B = _matrices(gf89, 4)
    responses = _responses(make_tasks(A, B, scheme, seed=1))
    bogus = WorkerResponse(0, responses[0].alpha, FieldMatrix.zeros(gf89, 16, 16), 0, stamp=99)
    assert recover(responses + [bogus], scheme) == A @ B


def test_interpolation_needs_distinct_points(gf89):
    value = FieldMatrix.identity(gf89, 2)
    with pytest.raises(InvalidParametersError):
        interpolate_at_zero([(1, value), (1, value), (2, value)])
    with pytest.raises(InvalidParametersError):
        interpolate_at_zero([(1, value), (2, value)])


def test_interpolation_of_constant_polynomial(gf89):
    value = FieldMatrix([[3, 4]], gf89)
    assert interpolate_at_zero([(1, value), (5, value), (9, value)]) == value


def test_scheme_validation(gf89):
    with pytest.raises(InvalidParametersError):
        _scheme(gf89, BASIC, 5, m=2)
    with pytest.raises(InvalidParametersError):
        _scheme(gf89, M_SPLIT, 5, m=3, sigma=1)
    with pytest.raises(InvalidParametersError):
        _scheme(gf89, M_SPLIT, 6, m=3, sigma=3)
    with pytest.raises(InvalidParametersError):
        _scheme(gf89, CYCLIC_GROUPS, 6, m=3, x=1)
    with pytest.raises(InvalidParametersError):
        MMScheme(BASIC, 4, ShareParams(gf89, 3, 0.9, 0.02), ShareParams(gf89, 3, 0.9, 0.02))
    with pytest.raises(InvalidParametersError):
        MMScheme(BASIC, 3, ShareParams(gf89, 3, 0.9, 0.02), ShareParams(gf89, 3, 0.9, 0.02, (4, 5, 6)))


def test_make_tasks_requires_divisible_inner_dimension(gf89):
    scheme = _scheme(gf89, M_SPLIT, 6, m=3, sigma=1)
    A, B = _matrices(gf89, 8)
    with pytest.raises(InvalidParametersError):
        make_tasks(A, B, scheme, seed=0)


def test_scheme_leakage_counts_tasks(gf89, source89):
    scheme = _scheme(gf89, M_SPLIT, 6, m=3, sigma=1)
    leakage = scheme_leakage(scheme, source89, source89, (16, 12), (12, 16))
    assert leakage.per_worker_a[0] == pytest.approx(2 * 64 * leakage.per_entry_a)
    assert leakage.eps1 == pytest.approx(leakage.per_worker_a[3])
    assert leakage.eps1_relative == pytest.approx(2 / 3 * leakage.per_entry_a / source89.entry_entropy())


def test_part_pads_are_uncorrelated(gf89):
    scheme = _scheme(gf89, M_SPLIT, 6, m=3, sigma=1)
    source = SourceModel(gf89, 0.9)
    A = gen_matrix(source, 200, 300, seed=8)
    B = gen_matrix(source, 300, 3, seed=9)
    bundle = make_tasks(A, B, scheme, seed=10)
    pads = [dealt.pad.data.ravel().astype(np.float64) for dealt in bundle.shares_a]
    samples = pads[0].size
    for first, second in combinations(range(3), 2):
        r = np.corrcoef(pads[first], pads[second])[0, 1]
        assert abs(r) < 3 / np.sqrt(samples)
