"""Shared fixtures: fields and source models used across the suite."""

import pytest

from src.field import FieldSpec
from src.stats import SourceModel


@pytest.fixture
def gf5():
    return FieldSpec.prime(5)


@pytest.fixture
def gf7():
    return FieldSpec.prime(7)


@pytest.fixture
def gf89():
    return FieldSpec.prime(89)


@pytest.fixture
def gf5081():
    return FieldSpec.prime(5081)


@pytest.fixture
def gf256():
    return FieldSpec.gf256()


@pytest.fixture
def source89(gf89):
    return SourceModel(gf89, 0.95)


@pytest.fixture
def source256(gf256):
    return SourceModel(gf256, 0.93)
