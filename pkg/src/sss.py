#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 稀疏多项式秘密共享模块

门限 t=2、合谋 z=1 的 n 份额共享: 份额 i 为 A + α_i·R,
R 的每个元素按 A 的对应元素条件采样, 任意两个份额即可重构 A
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import rel_entr

from src.exceptions import FieldMismatchError, InvalidParametersError
from src.field import FieldMatrix, FieldSpec
from src.stats import (DEFAULT_MAX_DENSE_Q, LeakageReport, SourceModel,
                       mutual_information_q, share_channel)
from src.utils import DataValidator, RandomUtils

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShareParams:
    """n 份额共享的条件分布参数

    A=0 时 R=0 的概率为 p1; A=a≠0 时 R 落在每个特殊符号 -a/α_i 上的概率为 ps,
    剩余质量在其余 q-n 个符号上均匀分布
    """

    field: FieldSpec
    n: int
    p1: float
    ps: float
    alphas: Tuple[int, ...] = ()

    def __post_init__(self):
        q = self.field.q
        n = DataValidator.validate_positive_int(self.n, "n", minimum=2)
        if n >= q:
            raise InvalidParametersError(f"n={n} shares need n < q={q} distinct nonzero evaluation points")

        alphas = tuple(int(a) for a in self.alphas) if self.alphas else tuple(range(1, n + 1))
        if len(alphas) != n:
            raise InvalidParametersError(f"expected {n} evaluation points, got {len(alphas)}")
        if len(set(alphas)) != n:
            raise InvalidParametersError(f"evaluation points must be distinct: {alphas}")
        if any(a <= 0 or a >= q for a in alphas):
            raise InvalidParametersError(f"evaluation points must be nonzero elements of GF({q}): {alphas}")
        object.__setattr__(self, "alphas", alphas)

        object.__setattr__(self, "p1", DataValidator.validate_probability(self.p1, "p1"))
        mass = DataValidator.validate_probability(n * self.ps, "n*ps")
        object.__setattr__(self, "ps", mass / n)

    @classmethod
    def uniform(cls, field: FieldSpec, n: int, alphas: Sequence[int] = ()) -> "ShareParams":
        """经典 Shamir 共享: R 均匀且与 A 独立"""
        return cls(field, n, 1.0 / field.q, 1.0 / field.q, tuple(alphas))

    @property
    def p1inv(self) -> float:
        return (1.0 - self.p1) / (self.field.q - 1)

    @property
    def pcinv(self) -> float:
        return max(1.0 - self.n * self.ps, 0.0) / (self.field.q - self.n)

    def predicted_sparsity(self, s: float) -> float:
        """每个份额的稀疏度 s_d = p1·s + ps·(1-s)"""
        return self.p1 * s + self.ps * (1.0 - s)

    def special_symbols(self, values: np.ndarray) -> np.ndarray:
        """每个源元素 a 对应的 n 个特殊符号 -a/α_i, 形状 (len, n)"""
        field = self.field
        inv_alphas = field.inv_array(np.array(self.alphas, dtype=np.int64))
        negatives = field.neg_array(np.asarray(values, dtype=np.int64))
        return field.mul_array(negatives[:, None], inv_alphas[None, :])

    # ==================== 条件分布 ====================

    def pad_matrix(self) -> np.ndarray:
        """R 在给定 A 下的 q×q 条件分布"""
        q = self.field.q
        matrix = np.full((q, q), self.pcinv)
        matrix[0, :] = self.p1inv
        matrix[0, 0] = self.p1
        symbols = np.arange(1, q)
        specials = self.special_symbols(symbols)
        for column in range(self.n):
            matrix[symbols, specials[:, column]] = self.ps
        return matrix

    def share_matrix(self, share_index: int) -> np.ndarray:
        """份额 A+α_i·R 在给定 A 下的 q×q 条件分布"""
        if not 0 <= share_index < self.n:
            raise InvalidParametersError(f"share index {share_index} outside [0, {self.n})")
        field = self.field
        symbols = np.arange(field.q)
        pad = self.pad_matrix()
        # 行 a 内 r -> a + α_i·r 是置换
        outputs = field.add_array(symbols[:, None], field.mul_array(symbols, self.alphas[share_index])[None, :])
        matrix = np.empty_like(pad)
        matrix[symbols[:, None], outputs] = pad
        return matrix


@dataclass(frozen=True)
class ShareSet:
    """发牌结果; pad 仅由发牌方保留"""

    alphas: Tuple[int, ...]
    shares: Tuple[FieldMatrix, ...]
    pad: FieldMatrix

    def dealer_output(self) -> Tuple[Tuple[int, FieldMatrix], ...]:
        """分发给工作节点的 (α_i, 份额 i), 不含 R"""
        return tuple(zip(self.alphas, self.shares))


# ==================== 发牌与重构 ====================

def _sample_share_pad_row(row: np.ndarray, params: ShareParams, rng: np.random.Generator) -> np.ndarray:
    field = params.field
    q, n = field.q, params.n
    cols = row.shape[0]
    u = rng.random(cols)
    which = rng.integers(0, n, size=cols)
    nonzero_draw = rng.integers(1, q, size=cols)
    rest_draw = rng.integers(0, q - n, size=cols)

    specials = params.special_symbols(row)
    chosen = specials[np.arange(cols), which]

    # 在去掉 n 个特殊符号后的集合中取第 k 个元素
    others = rest_draw.copy()
    for boundary in np.sort(specials, axis=1).T:
        others = others + (others >= boundary)

    pad_nonzero_source = np.where(u < n * params.ps, chosen, others)
    pad_zero_source = np.where(u < params.p1, 0, nonzero_draw)
    return np.where(row == 0, pad_zero_source, pad_nonzero_source)


def deal(A: FieldMatrix, params: ShareParams, seed: int, workers: Optional[int] = None) -> ShareSet:
    """采样 R 并输出 n 个份额 A + α_i·R; 每行使用独立随机数流"""
    if A.field != params.field:
        raise FieldMismatchError(f"matrix over {A.field.field_id}, params over {params.field.field_id}")
    seed = DataValidator.validate_seed(seed)

    def pad_row(index: int) -> np.ndarray:
        return _sample_share_pad_row(A.data[index], params, RandomUtils.row_generator(seed, index))

    pad = FieldMatrix(np.vstack(RandomUtils.map_rows(pad_row, A.rows, workers)), A.field, validate=False)
    shares = tuple(A + pad.scale(alpha) for alpha in params.alphas)
    logger.debug("✅ 发牌完成", extra={"context": {"n": params.n, "shape": A.shape, "seed": seed}})
    return ShareSet(alphas=params.alphas, shares=shares, pad=pad)


def reconstruct(share_i: FieldMatrix, alpha_i: int, share_j: FieldMatrix, alpha_j: int) -> FieldMatrix:
    """由两个份额在 x=0 处插值: A = (α_j·S_i - α_i·S_j) / (α_j - α_i)"""
    if share_i.field != share_j.field:
        raise FieldMismatchError("shares belong to different fields")
    if share_i.shape != share_j.shape:
        raise FieldMismatchError(f"share shapes differ: {share_i.shape} vs {share_j.shape}")
    field = share_i.field
    alpha_i, alpha_j = int(alpha_i), int(alpha_j)
    if alpha_i == alpha_j:
        raise InvalidParametersError(f"evaluation points must differ, both are {alpha_i}")
    denominator = int(field.inv_array(field.sub_array(alpha_j, alpha_i)))
    return (share_i.scale(alpha_j) - share_j.scale(alpha_i)).scale(denominator)


# ==================== 泄露 ====================

def sss_objective(params: ShareParams, s: float) -> float:
    """单个份额的元素级泄露闭式, 自然对数单位"""
    q, n = params.field.q, params.n
    s_d = params.predicted_sparsity(s)
    s_d_inv = (1.0 - s_d) / (q - 1)
    value = s * (rel_entr(params.p1, s_d) + (q - 1) * rel_entr(params.p1inv, s_d_inv)) + \
        (1.0 - s) * (rel_entr(params.ps, s_d) + (n - 1) * rel_entr(params.ps, s_d_inv)
                     + (q - n) * rel_entr(params.pcinv, s_d_inv))
    return max(float(value), 0.0)


def sss_leakage(params: ShareParams, source: SourceModel,
                max_dense_q: int = DEFAULT_MAX_DENSE_Q) -> LeakageReport:
    """每个份额的 I_q(A; A+α_i R), 闭式与信道计算同时给出"""
    if source.field != params.field:
        raise FieldMismatchError("source and share params are over different fields")
    per_share = sss_objective(params, source.s) / math.log(params.field.q)
    closed = (per_share,) * params.n

    channel = None
    if params.field.q <= max_dense_q:
        source_pmf = source.pmf()
        channel = tuple(mutual_information_q(source_pmf, share_channel(params, index))
                        for index in range(params.n))
        logger.debug("📋 信道泄露计算完成", extra={"context": {"closed": per_share, "channel": channel[0]}})

    return LeakageReport(per_share=closed, entry_entropy=source.entry_entropy(),
                         closed_form=closed, channel=channel)
