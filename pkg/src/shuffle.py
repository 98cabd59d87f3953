#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 随机置换模块

共享前对 A、B 的行列做随机置换, 使零元素位置与原始结构解耦;
内维使用同一置换, 乘积只需在外维上逆置换即可还原
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.exceptions import FieldMismatchError, InvalidParametersError
from src.field import FieldMatrix
from src.utils import RandomUtils

logger = logging.getLogger(__name__)

PERMUTATION_TAG = 0x5F1


def _check_permutation(perm: np.ndarray, size: int, name: str) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (size,) or not np.array_equal(np.sort(perm), np.arange(size)):
        raise InvalidParametersError(f"{name} is not a permutation of 0..{size - 1}")
    return perm


@dataclass(frozen=True, eq=False)
class PermTriple:
    """三个置换: π1 作用于 A 的行, π2 作用于内维, π3 作用于 B 的列

    置换语义为 新位置 = π(旧位置)
    """

    perm1: np.ndarray
    perm2: np.ndarray
    perm3: np.ndarray

    def __post_init__(self):
        for name in ("perm1", "perm2", "perm3"):
            perm = np.asarray(getattr(self, name), dtype=np.int64).copy()
            _check_permutation(perm, perm.shape[0] if perm.ndim == 1 else -1, name)
            perm.setflags(write=False)
            object.__setattr__(self, name, perm)

    @classmethod
    def identity(cls, rows: int, inner: int, cols: int) -> "PermTriple":
        return cls(np.arange(rows), np.arange(inner), np.arange(cols))

    @classmethod
    def random(cls, rows: int, inner: int, cols: int, seed: int) -> "PermTriple":
        rng = RandomUtils.generator(seed, PERMUTATION_TAG)
        return cls(rng.permutation(rows), rng.permutation(inner), rng.permutation(cols))

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return self.perm1.shape[0], self.perm2.shape[0], self.perm3.shape[0]

    def inverse(self) -> "PermTriple":
        return PermTriple(np.argsort(self.perm1), np.argsort(self.perm2), np.argsort(self.perm3))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PermTriple):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in
                   ((self.perm1, other.perm1), (self.perm2, other.perm2), (self.perm3, other.perm3)))

    __hash__ = None


def _permute(matrix: FieldMatrix, row_perm: np.ndarray, col_perm: np.ndarray) -> FieldMatrix:
    """A'[π(i)][π'(j)] = A[i][j]"""
    return matrix.take(np.argsort(row_perm), np.argsort(col_perm))


def shuffle_pair(A: FieldMatrix, B: FieldMatrix, seed: int,
                 identity: bool = False) -> Tuple[FieldMatrix, FieldMatrix, PermTriple]:
    """返回 (A', B', 置换); identity=True 时跳过置换, 便于测试"""
    if A.field != B.field:
        raise FieldMismatchError("A and B are over different fields")
    if A.cols != B.rows:
        raise FieldMismatchError(f"inner dimensions differ: {A.shape} @ {B.shape}")

    sizes = (A.rows, A.cols, B.cols)
    perms = PermTriple.identity(*sizes) if identity else PermTriple.random(*sizes, seed)
    shuffled_a = _permute(A, perms.perm1, perms.perm2)
    shuffled_b = _permute(B, perms.perm2, perms.perm3)
    logger.debug("🔧 矩阵置换完成", extra={"context": {"sizes": sizes, "identity": identity}})
    return shuffled_a, shuffled_b, perms


def unshuffle_product(C_shuffled: FieldMatrix, perms: PermTriple) -> FieldMatrix:
    """C[i][k] = C'[π1(i)][π3(k)]"""
    rows, _, cols = perms.sizes
    if C_shuffled.shape != (rows, cols):
        raise FieldMismatchError(f"product shape {C_shuffled.shape} does not match permutations ({rows}, {cols})")
    return C_shuffled.take(perms.perm1, perms.perm3)
