"""Finite field arithmetic: axioms, GF(2^8) tables, matrix products."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.exceptions import FieldMismatchError, InvalidParametersError
from src.field import (AES_MODULUS, FieldElement, FieldMatrix, FieldSpec, carryless_mul, inv, matmul)

FIELDS = [FieldSpec.prime(89), FieldSpec.prime(5081), FieldSpec.gf256()]


def elements(field):
    return st.integers(min_value=0, max_value=field.q - 1).map(field.element)


@pytest.mark.parametrize("field", FIELDS, ids=lambda f: f.field_id)
def test_field_axioms(field):
    @given(elements(field), elements(field), elements(field))
    @settings(max_examples=200)
    def check(a, b, c):
        zero, one = field.element(0), field.element(1)
        assert a + b == b + a
        assert a * b == b * a
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + zero == a
        assert a * one == a
        assert a + (-a) == zero
        assert (a - b) + b == a
        if a.value:
            assert a * inv(a) == one
            assert (b / a) * a == b

    check()


@pytest.mark.parametrize("q", [5, 7, 89])
def test_every_nonzero_prime_element_has_inverse(q):
    field = FieldSpec.prime(q)
    values = np.arange(1, q)
    assert np.all(field.mul_array(values, field.inv_array(values)) == 1)


def test_gf256_inverses_exhaustive(gf256):
    values = np.arange(1, 256)
    assert np.all(gf256.mul_array(values, gf256.inv_array(values)) == 1)


def test_aes_reference_products(gf256):
    # {57}·{83} = {c1}, {53}^-1 = {ca}
    assert carryless_mul(0x57, 0x83) == 0xC1
    assert int(gf256.mul_array(0x57, 0x83)) == 0xC1
    assert inv(gf256.element(0x53)).value == 0xCA
    assert gf256.modulus == AES_MODULUS


def test_gf256_tables_match_carryless_multiplication(gf256):
    values = np.arange(256)
    table = gf256.mul_array(values[:, None], values[None, :])
    expected = np.array([[carryless_mul(a, b) for b in range(256)] for a in range(256)])
    assert table.shape == (256, 256)
    assert np.array_equal(table, expected)


@pytest.mark.parametrize("field", FIELDS, ids=lambda f: f.field_id)
def test_field_axioms_on_random_triples(field):
    rng = np.random.default_rng(17)
    a, b, c = rng.integers(0, field.q, size=(3, 10_000))
    add, sub, mul = field.add_array, field.sub_array, field.mul_array
    assert np.array_equal(add(a, b), add(b, a))
    assert np.array_equal(mul(a, b), mul(b, a))
    assert np.array_equal(add(add(a, b), c), add(a, add(b, c)))
    assert np.array_equal(mul(mul(a, b), c), mul(a, mul(b, c)))
    assert np.array_equal(mul(a, add(b, c)), add(mul(a, b), mul(a, c)))
    assert np.array_equal(add(a, field.neg_array(a)), np.zeros_like(a))
    assert np.array_equal(add(sub(a, b), b), a)
    nonzero = a[a != 0]
    assert np.all(mul(nonzero, field.inv_array(nonzero)) == 1)


def test_alternative_irreducible_modulus():
    field = FieldSpec.gf256(0x11D)
    assert field.field_id == "GF(2^8)/0x11d"
    values = np.arange(1, 256)
    assert np.all(field.mul_array(values, field.inv_array(values)) == 1)


@pytest.mark.parametrize("modulus", [0x100, 0x1FF, 0x11A, 0x8B])
def test_reducible_modulus_rejected(modulus):
    with pytest.raises(InvalidParametersError):
        FieldSpec.gf256(modulus)


@pytest.mark.parametrize("q", [1, 4, 6, 9, 255])
def test_non_prime_rejected(q):
    with pytest.raises(InvalidParametersError):
        FieldSpec.prime(q)


def test_from_q_maps_256_to_binary_extension():
    assert FieldSpec.from_q(256).is_binary
    assert not FieldSpec.from_q(257).is_binary
    assert FieldSpec.from_q(89).field_id == "GF(89)"


def test_zero_inverse_raises(gf89, gf256):
    with pytest.raises(InvalidParametersError):
        inv(gf89.element(0))
    with pytest.raises(InvalidParametersError):
        inv(gf256.element(0))


def test_mixed_fields_raise(gf5, gf7):
    with pytest.raises(FieldMismatchError):
        gf5.element(1) + gf7.element(1)
    with pytest.raises(FieldMismatchError):
        FieldMatrix.zeros(gf5, 2, 2) + FieldMatrix.zeros(gf7, 2, 2)


def test_element_range_checked(gf89):
    with pytest.raises(InvalidParametersError):
        FieldElement(89, gf89)
    with pytest.raises(InvalidParametersError):
        FieldMatrix([[0, 89]], gf89)


@pytest.mark.parametrize("q", [89, 5081])
def test_prime_matmul_matches_exact_integer_product(q):
    field = FieldSpec.prime(q)
    rng = np.random.default_rng(q)
    a = rng.integers(0, q, size=(7, 600))
    b = rng.integers(0, q, size=(600, 5))
    expected = (a.astype(object) @ b.astype(object)) % q
    result = matmul(FieldMatrix(a, field), FieldMatrix(b, field))
    assert result.tolist() == expected.tolist()


def test_gf256_matmul_matches_naive(gf256):
    rng = np.random.default_rng(11)
    a = rng.integers(0, 256, size=(3, 4))
    b = rng.integers(0, 256, size=(4, 2))
    expected = [[0] * 2 for _ in range(3)]
    for i in range(3):
        for k in range(2):
            acc = 0
            for j in range(4):
                acc ^= carryless_mul(int(a[i, j]), int(b[j, k]))
            expected[i][k] = acc
    assert (FieldMatrix(a, gf256) @ FieldMatrix(b, gf256)).tolist() == expected


def test_matmul_dimension_mismatch(gf89):
    with pytest.raises(FieldMismatchError):
        FieldMatrix.zeros(gf89, 2, 3) @ FieldMatrix.zeros(gf89, 2, 3)


def test_identity_and_blocks(gf89):
    rng = np.random.default_rng(5)
    a = FieldMatrix(rng.integers(0, 89, size=(6, 4)), gf89)
    assert a @ FieldMatrix.identity(gf89, 4) == a
    assert FieldMatrix.vstack(a.row_blocks(3)) == a
    assert FieldMatrix.hstack(a.col_blocks(2)) == a
    with pytest.raises(InvalidParametersError):
        a.row_blocks(4)


def test_matrix_is_read_only(gf89):
    a = FieldMatrix([[1, 2], [3, 4]], gf89)
    with pytest.raises(ValueError):
        a.data[0, 0] = 5


def test_sparsity_and_scale(gf89):
    a = FieldMatrix([[0, 0, 3, 0]], gf89)
    assert a.sparsity() == 0.75
    assert a.scale(2).tolist() == [[0, 0, 6, 0]]
    assert (a - a).sparsity() == 1.0
    assert (-a).tolist() == [[0, 0, 86, 0]]
