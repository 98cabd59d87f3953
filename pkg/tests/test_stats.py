"""Exact information measures and sampled estimators."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.exceptions import FieldMismatchError, InvalidParametersError, SupportError
from src.field import FieldMatrix, FieldSpec
from src.stats import (ConditionalPmf, LeakageReport, Pmf, SourceModel, bootstrap_mi, empirical_mi,
                       entropy_q, kl_q, mutual_information_q)

GF7 = FieldSpec.prime(7)


@st.composite
def pmfs(draw, field=GF7):
    weights = draw(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=field.q, max_size=field.q))
    weights = np.array(weights) + 1e-3
    return Pmf(weights / weights.sum(), field)


@given(pmfs())
@settings(max_examples=100)
def test_entropy_bounds(p):
    value = entropy_q(p)
    assert -1e-12 <= value <= 1.0 + 1e-12


@given(pmfs(), pmfs())
@settings(max_examples=100)
def test_kl_non_negative_and_zero_on_self(p, r):
    assert kl_q(p, r) >= -1e-12
    assert abs(kl_q(p, p)) < 1e-12


def test_kl_non_negative_on_random_pairs(gf7):
    rng = np.random.default_rng(41)
    draws = rng.dirichlet(np.ones(7), size=(10_000, 2))
    for p, r in draws:
        assert kl_q(Pmf(p, gf7), Pmf(r, gf7)) >= -1e-12


def _double_sum_mi(source, channel, q):
    total = 0.0
    for a in range(q):
        for b in range(q):
            joint = source[a] * channel[a, b]
            if joint > 0:
                output = sum(source[x] * channel[x, b] for x in range(q))
                total += joint * math.log(joint / (source[a] * output), q)
    return total


@pytest.mark.parametrize("q", [3, 5, 7])
def test_mutual_information_matches_double_sum(q):
    field = FieldSpec.prime(q)
    rng = np.random.default_rng(q)
    for _ in range(50):
        source = rng.dirichlet(np.ones(q))
        channel = rng.dirichlet(np.ones(q), size=q)
        value = mutual_information_q(Pmf(source, field), ConditionalPmf(channel, field))
        assert abs(value - _double_sum_mi(source, channel, q)) < 1e-12


@pytest.mark.parametrize("q", [3, 5, 7])
def test_zero_information_exactly_for_identical_rows(q):
    field = FieldSpec.prime(q)
    rng = np.random.default_rng(100 + q)
    for _ in range(20):
        source = rng.dirichlet(np.ones(q))
        row = rng.dirichlet(np.ones(q))
        identical = np.tile(row, (q, 1))
        assert mutual_information_q(Pmf(source, field), ConditionalPmf(identical, field)) < 1e-10

        perturbed = identical.copy()
        perturbed[rng.integers(q)] = np.roll(row, 1) * 0.5 + np.eye(q)[0] * 0.5
        if np.allclose(perturbed, identical):
            continue
        assert mutual_information_q(Pmf(source, field), ConditionalPmf(perturbed, field)) > 1e-10

    # rows off the source support may differ freely
    source = np.zeros(q)
    source[:2] = 0.5
    channel = np.tile(np.full(q, 1 / q), (q, 1))
    channel[q - 1] = np.eye(q)[0]
    assert mutual_information_q(Pmf(source, field), ConditionalPmf(channel, field)) < 1e-10


def test_uniform_and_point_mass(gf89):
    assert math.isclose(entropy_q(Pmf.uniform(gf89)), 1.0, rel_tol=1e-12)
    assert entropy_q(Pmf.point_mass(gf89)) == 0.0


def test_kl_support_error_names_symbol(gf5):
    p = Pmf([0.5, 0.5, 0.0, 0.0, 0.0], gf5)
    r = Pmf([1.0, 0.0, 0.0, 0.0, 0.0], gf5)
    with pytest.raises(SupportError) as excinfo:
        kl_q(p, r)
    assert excinfo.value.symbol == 1


def test_pmf_validation(gf5):
    with pytest.raises(InvalidParametersError):
        Pmf([0.5, 0.5, 0.1, 0.0, 0.0], gf5)
    with pytest.raises(InvalidParametersError):
        Pmf([1.1, -0.1, 0.0, 0.0, 0.0], gf5)
    with pytest.raises(InvalidParametersError):
        Pmf([0.5, 0.5], gf5)


def test_mutual_information_extremes(gf7):
    source = Pmf.uniform(gf7)
    identity = ConditionalPmf(np.eye(7), gf7)
    constant = ConditionalPmf(np.tile(np.full(7, 1 / 7), (7, 1)), gf7)
    assert math.isclose(mutual_information_q(source, identity), 1.0, rel_tol=1e-12)
    assert mutual_information_q(source, constant) < 1e-12


def test_mutual_information_field_mismatch(gf5, gf7):
    with pytest.raises(FieldMismatchError):
        mutual_information_q(Pmf.uniform(gf5), ConditionalPmf(np.eye(7), gf7))


def test_source_model_bounds(gf89):
    with pytest.raises(InvalidParametersError, match="1/q"):
        SourceModel(gf89, 1.0 / 89)
    with pytest.raises(InvalidParametersError):
        SourceModel(gf89, 1.2)
    model = SourceModel(gf89, 0.95)
    assert math.isclose(model.pmf().probs.sum(), 1.0)
    assert math.isclose(model.entry_entropy(), entropy_q(model.pmf()), rel_tol=1e-12)


def test_fully_sparse_source_has_zero_entropy(gf89):
    assert SourceModel(gf89, 1.0).entry_entropy() == 0.0


def test_leakage_report_relative_values():
    report = LeakageReport(per_share=(0.1, 0.3), entry_entropy=0.5)
    assert math.isclose(report.total, 0.4)
    assert report.relative_per_share == pytest.approx((0.2, 0.6))
    assert math.isclose(report.relative_total, 0.4)
    assert report.max_channel_deviation() == 0.0


def test_empirical_mi_of_independent_and_identical_samples(gf7):
    rng = np.random.default_rng(1)
    x = FieldMatrix(rng.integers(0, 7, size=(200, 500)), gf7)
    y = FieldMatrix(rng.integers(0, 7, size=(200, 500)), gf7)
    assert empirical_mi(x, x) == pytest.approx(entropy_q(Pmf(np.bincount(x.data.ravel(), minlength=7) / x.data.size, gf7)))
    plugin = empirical_mi(x, y)
    corrected = empirical_mi(x, y, correction="miller-madow")
    assert 0.0 <= plugin < 1e-3
    assert corrected < plugin
    assert abs(corrected) < 1e-4


def test_unknown_correction_rejected(gf7):
    x = FieldMatrix(np.zeros((2, 2), dtype=np.int64), gf7)
    with pytest.raises(InvalidParametersError):
        empirical_mi(x, x, correction="jackknife")


def test_bootstrap_is_deterministic(gf7):
    rng = np.random.default_rng(2)
    x = FieldMatrix(rng.integers(0, 7, size=(50, 200)), gf7)
    y = FieldMatrix((x.data + rng.integers(0, 2, size=x.shape)) % 7, gf7)
    first = bootstrap_mi(x, y, replicates=50, seed=9)
    second = bootstrap_mi(x, y, replicates=50, seed=9)
    assert first == second
    estimate, error = first
    assert estimate == pytest.approx(empirical_mi(x, y))
    assert error > 0.0
