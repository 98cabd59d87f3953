#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 有限域运算模块

负责素数域 GF(p) 与扩域 GF(2^8) 上的标量、向量化数组和矩阵运算
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import ClassVar, Iterable, List, Sequence, Tuple

import numpy as np

from src.exceptions import FieldMismatchError, InvalidParametersError

logger = logging.getLogger(__name__)

# x^8 + x^4 + x^3 + x + 1
AES_MODULUS = 0x11B

_INT64_LIMIT = 2 ** 63 - 1


def _is_prime(n: int) -> bool:
    """试除法素性检验"""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    divisor = 3
    while divisor * divisor <= n:
        if n % divisor == 0:
            return False
        divisor += 2
    return True


def _poly_mod(a: int, b: int) -> int:
    """GF(2)[x] 上的多项式取余, 多项式以比特位表示"""
    degree_b = b.bit_length()
    while a and a.bit_length() >= degree_b:
        a ^= b << (a.bit_length() - degree_b)
    return a


def _is_irreducible_degree8(modulus: int) -> bool:
    if modulus.bit_length() != 9:
        return False
    # 只需排除 1 到 4 次的因式
    return all(_poly_mod(modulus, divisor) != 0 for divisor in range(2, 32))


def carryless_mul(a: int, b: int, modulus: int = AES_MODULUS) -> int:
    """GF(2^8) 乘法的参考实现: 移位异或并按模多项式约化"""
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= modulus
    return result


@lru_cache(maxsize=None)
def _gf256_tables(modulus: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """构建 exp/log/乘法/求逆 表, 每个模多项式只构建一次"""
    generator = None
    for candidate in range(2, 256):
        value, order = candidate, 1
        while value != 1:
            value = carryless_mul(value, candidate, modulus)
            order += 1
        if order == 255:
            generator = candidate
            break

    exp = np.zeros(510, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    value = 1
    for power in range(255):
        exp[power] = value
        log[value] = power
        value = carryless_mul(value, generator, modulus)
    exp[255:] = exp[:255]

    mul = np.zeros((256, 256), dtype=np.int64)
    nonzero = np.arange(1, 256)
    mul[1:, 1:] = exp[log[nonzero][:, None] + log[nonzero][None, :]]

    inv = np.zeros(256, dtype=np.int64)
    inv[nonzero] = exp[(255 - log[nonzero]) % 255]

    logger.debug("🔧 GF(2^8) 查找表构建完成", extra={"context": {"modulus": hex(modulus), "generator": generator}})
    return exp, log, mul, inv


@dataclass(frozen=True)
class FieldSpec:
    """有限域描述, 不可变, 可在线程间共享"""

    kind: str
    q: int
    modulus: int = 0

    PRIME: ClassVar[str] = "prime"
    BINARY_EXTENSION: ClassVar[str] = "binary-extension"

    def __post_init__(self):
        if self.kind == self.PRIME:
            if not isinstance(self.q, (int, np.integer)) or not _is_prime(int(self.q)):
                raise InvalidParametersError(f"q={self.q} is not prime")
            object.__setattr__(self, "q", int(self.q))
            object.__setattr__(self, "modulus", 0)
        elif self.kind == self.BINARY_EXTENSION:
            if self.q != 256:
                raise InvalidParametersError(f"binary-extension fields require q=256, got {self.q}")
            if not _is_irreducible_degree8(int(self.modulus)):
                raise InvalidParametersError(f"modulus {self.modulus:#x} is not an irreducible degree-8 polynomial")
        else:
            raise InvalidParametersError(f"unknown field kind {self.kind!r}")

    @classmethod
    def prime(cls, q: int) -> "FieldSpec":
        return cls(cls.PRIME, q)

    @classmethod
    def gf256(cls, modulus: int = AES_MODULUS) -> "FieldSpec":
        return cls(cls.BINARY_EXTENSION, 256, modulus)

    @classmethod
    def from_q(cls, q: int) -> "FieldSpec":
        """q=256 视为 AES 模多项式下的 GF(2^8), 其余 q 视为素数域"""
        return cls.gf256() if q == 256 else cls.prime(q)

    @property
    def field_id(self) -> str:
        if self.kind == self.PRIME:
            return f"GF({self.q})"
        return f"GF(2^8)/{self.modulus:#x}"

    @property
    def is_binary(self) -> bool:
        return self.kind == self.BINARY_EXTENSION

    def __str__(self) -> str:
        return self.field_id

    def element(self, value: int) -> "FieldElement":
        return FieldElement(int(value), self)

    # ==================== 向量化数组运算 ====================

    def check_array(self, values) -> np.ndarray:
        """转换为 int64 数组并检查取值范围"""
        arr = np.asarray(values)
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            raise InvalidParametersError(f"field entries must be integers, got dtype {arr.dtype}")
        arr = arr.astype(np.int64, copy=False)
        if arr.size and (arr.min() < 0 or arr.max() >= self.q):
            raise InvalidParametersError(f"entries must lie in [0, {self.q}) for {self.field_id}")
        return arr

    def add_array(self, x, y) -> np.ndarray:
        if self.is_binary:
            return np.bitwise_xor(x, y)
        return (np.asarray(x, dtype=np.int64) + y) % self.q

    def sub_array(self, x, y) -> np.ndarray:
        if self.is_binary:
            return np.bitwise_xor(x, y)
        return (np.asarray(x, dtype=np.int64) - y) % self.q

    def neg_array(self, x) -> np.ndarray:
        if self.is_binary:
            return np.asarray(x, dtype=np.int64).copy()
        return (-np.asarray(x, dtype=np.int64)) % self.q

    def mul_array(self, x, y) -> np.ndarray:
        if self.is_binary:
            _, _, mul, _ = _gf256_tables(self.modulus)
            return mul[x, y]
        return (np.asarray(x, dtype=np.int64) * y) % self.q

    def inv_array(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if np.any(x == 0):
            raise InvalidParametersError("zero has no multiplicative inverse")
        if self.is_binary:
            _, _, _, inv = _gf256_tables(self.modulus)
            return inv[x]
        # 费马小定理: x^(q-2)
        result = np.ones_like(x)
        base = x % self.q
        exponent = self.q - 2
        while exponent:
            if exponent & 1:
                result = (result * base) % self.q
            base = (base * base) % self.q
            exponent >>= 1
        return result

    def dot_array(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """矩阵乘法, 素数域按 64 位累加后取模, GF(2^8) 按查表异或累加"""
        if self.is_binary:
            _, _, mul, _ = _gf256_tables(self.modulus)
            out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
            for j in range(a.shape[1]):
                out ^= mul[a[:, j][:, None], b[j][None, :]]
            return out

        inner = a.shape[1]
        step = max(1, _INT64_LIMIT // max((self.q - 1) ** 2, 1))
        if inner <= step:
            return (a @ b) % self.q
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
        for start in range(0, inner, step):
            stop = min(start + step, inner)
            out = (out + (a[:, start:stop] @ b[start:stop]) % self.q) % self.q
        return out


@dataclass(frozen=True)
class FieldElement:
    """有限域元素, 只持有所属 FieldSpec 的引用"""

    value: int
    field: FieldSpec

    def __post_init__(self):
        if not 0 <= self.value < self.field.q:
            raise InvalidParametersError(f"value {self.value} outside [0, {self.field.q})")

    def _check(self, other: "FieldElement") -> None:
        if not isinstance(other, FieldElement) or other.field != self.field:
            other_id = other.field.field_id if isinstance(other, FieldElement) else type(other).__name__
            raise FieldMismatchError(f"cannot combine {self.field.field_id} with {other_id}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        return add(self, other)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        return sub(self, other)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        return mul(self, other)

    def __truediv__(self, other: "FieldElement") -> "FieldElement":
        return mul(self, inv(other))

    def __neg__(self) -> "FieldElement":
        return neg(self)

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.value}@{self.field.field_id}"


class FieldMatrix:
    """有限域上的稠密矩阵, 数据为只读的行优先 int64 数组"""

    __slots__ = ("data", "field")

    def __init__(self, data, field: FieldSpec, validate: bool = True):
        arr = field.check_array(data) if validate else np.asarray(data, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidParametersError(f"a field matrix needs positive rows and cols, got shape {arr.shape}")
        arr = np.array(arr, dtype=np.int64, order="C")
        arr.setflags(write=False)
        self.data = arr
        self.field = field

    # ==================== 构造 ====================

    @classmethod
    def zeros(cls, field: FieldSpec, rows: int, cols: int) -> "FieldMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), field, validate=False)

    @classmethod
    def identity(cls, field: FieldSpec, size: int) -> "FieldMatrix":
        return cls(np.eye(size, dtype=np.int64), field, validate=False)

    @classmethod
    def from_rows(cls, field: FieldSpec, rows: Sequence[Sequence[int]]) -> "FieldMatrix":
        return cls(np.array(rows, dtype=np.int64), field)

    @staticmethod
    def vstack(blocks: Sequence["FieldMatrix"]) -> "FieldMatrix":
        _same_field(blocks)
        return FieldMatrix(np.vstack([b.data for b in blocks]), blocks[0].field, validate=False)

    @staticmethod
    def hstack(blocks: Sequence["FieldMatrix"]) -> "FieldMatrix":
        _same_field(blocks)
        return FieldMatrix(np.hstack([b.data for b in blocks]), blocks[0].field, validate=False)

    # ==================== 属性 ====================

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    def sparsity(self) -> float:
        """零元素所占比例"""
        return float(np.count_nonzero(self.data == 0)) / self.data.size

    def tolist(self) -> List[List[int]]:
        return self.data.tolist()

    # ==================== 运算 ====================

    def _check(self, other: "FieldMatrix", same_shape: bool = True) -> None:
        if not isinstance(other, FieldMatrix) or other.field != self.field:
            raise FieldMismatchError("matrices belong to different fields")
        if same_shape and other.shape != self.shape:
            raise FieldMismatchError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "FieldMatrix") -> "FieldMatrix":
        self._check(other)
        return FieldMatrix(self.field.add_array(self.data, other.data), self.field, validate=False)

    def __sub__(self, other: "FieldMatrix") -> "FieldMatrix":
        self._check(other)
        return FieldMatrix(self.field.sub_array(self.data, other.data), self.field, validate=False)

    def __neg__(self) -> "FieldMatrix":
        return FieldMatrix(self.field.neg_array(self.data), self.field, validate=False)

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return matmul(self, other)

    def scale(self, alpha: int) -> "FieldMatrix":
        """数乘"""
        alpha = int(alpha) % self.field.q if not self.field.is_binary else int(alpha)
        return FieldMatrix(self.field.mul_array(self.data, alpha), self.field, validate=False)

    def row_blocks(self, count: int) -> List["FieldMatrix"]:
        """按行均分为 count 块"""
        if count < 1 or self.rows % count:
            raise InvalidParametersError(f"{count} does not divide rows={self.rows}")
        return [FieldMatrix(part, self.field, validate=False) for part in np.split(self.data, count, axis=0)]

    def col_blocks(self, count: int) -> List["FieldMatrix"]:
        """按列均分为 count 块"""
        if count < 1 or self.cols % count:
            raise InvalidParametersError(f"{count} does not divide cols={self.cols}")
        return [FieldMatrix(part, self.field, validate=False) for part in np.split(self.data, count, axis=1)]

    def take(self, row_index: np.ndarray, col_index: np.ndarray) -> "FieldMatrix":
        """按索引数组重排行和列"""
        return FieldMatrix(self.data[np.asarray(row_index)][:, np.asarray(col_index)], self.field, validate=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.field == other.field and self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None

    def __repr__(self) -> str:
        return f"FieldMatrix({self.rows}x{self.cols} over {self.field.field_id})"


def _same_field(blocks: Iterable[FieldMatrix]) -> None:
    fields = {b.field for b in blocks}
    if len(fields) != 1:
        raise FieldMismatchError("blocks belong to different fields")


# ==================== 标量运算 ====================

def _check_pair(a: FieldElement, b: FieldElement) -> FieldSpec:
    a._check(b)
    return a.field


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    """域加法"""
    field = _check_pair(a, b)
    return FieldElement(int(field.add_array(a.value, b.value)), field)


def sub(a: FieldElement, b: FieldElement) -> FieldElement:
    field = _check_pair(a, b)
    return FieldElement(int(field.sub_array(a.value, b.value)), field)


def neg(a: FieldElement) -> FieldElement:
    return FieldElement(int(a.field.neg_array(a.value)), a.field)


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    """域乘法"""
    field = _check_pair(a, b)
    return FieldElement(int(field.mul_array(a.value, b.value)), field)


def inv(a: FieldElement) -> FieldElement:
    """乘法逆元, 零元素报错"""
    if a.value == 0:
        raise InvalidParametersError(f"0 has no inverse in {a.field.field_id}")
    if not a.field.is_binary:
        return FieldElement(pow(a.value, -1, a.field.q), a.field)
    return FieldElement(int(a.field.inv_array(a.value)), a.field)


def matmul(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    """域上矩阵乘法 C[i][k] = Σ_j A[i][j]·B[j][k]"""
    if not isinstance(a, FieldMatrix) or not isinstance(b, FieldMatrix) or a.field != b.field:
        raise FieldMismatchError("matmul operands belong to different fields")
    if a.cols != b.rows:
        raise FieldMismatchError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return FieldMatrix(a.field.dot_array(a.data, b.data), a.field, validate=False)
