#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 稀疏一次一密模块

按源矩阵元素条件采样填充矩阵 R, 输出两个份额 (R, A+R),
并提供半完美填充参数与两份额泄露的闭式/信道计算
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import rel_entr

from src.exceptions import FieldMismatchError, InvalidParametersError
from src.field import FieldMatrix, FieldSpec
from src.stats import (DEFAULT_MAX_DENSE_Q, LeakageReport, SourceModel,
                       mutual_information_q, share_channel)
from src.utils import DataValidator, RandomUtils

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PadParams:
    """一次一密的条件分布参数

    A=0 时 R=0 的概率为 p1; A=a≠0 时 R=0 的概率为 p2, R=-a 的概率为 p3,
    剩余质量在其他符号上均匀分布
    """

    field: FieldSpec
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        if self.field.q < 3:
            raise InvalidParametersError(
                f"the sparse one-time pad needs q >= 3: p23inv divides by q-2 = {self.field.q - 2}"
            )
        for name in ("p1", "p2", "p3"):
            object.__setattr__(self, name, DataValidator.validate_probability(getattr(self, name), name))
        if self.p2 + self.p3 > 1.0 + ROW_SUM_TOLERANCE:
            raise InvalidParametersError(f"p2 + p3 = {self.p2 + self.p3} exceeds 1")
        q = self.field.q
        if abs(self.p1 + (q - 1) * self.p1inv - 1.0) > ROW_SUM_TOLERANCE or \
                abs(self.p2 + self.p3 + (q - 2) * self.p23inv - 1.0) > ROW_SUM_TOLERANCE:
            raise InvalidParametersError("conditional rows do not sum to 1")

    @classmethod
    def uniform(cls, field: FieldSpec) -> "PadParams":
        """经典一次一密: R 与 A 独立且均匀"""
        return cls(field, 1.0 / field.q, 1.0 / field.q, 1.0 / field.q)

    @property
    def p1inv(self) -> float:
        return (1.0 - self.p1) / (self.field.q - 1)

    @property
    def p23inv(self) -> float:
        return max(1.0 - self.p2 - self.p3, 0.0) / (self.field.q - 2)

    # ==================== 条件分布 ====================

    def share_matrix(self, share_index: int) -> np.ndarray:
        """份额元素的 q×q 条件分布矩阵, 0 号份额为 R, 1 号为 A+R"""
        if share_index not in (0, 1):
            raise InvalidParametersError(f"one-time pad has shares 0 and 1, got {share_index}")
        field = self.field
        q = field.q
        matrix = np.full((q, q), self.p23inv)
        matrix[0, :] = self.p1inv
        matrix[0, 0] = self.p1

        symbols = np.arange(1, q)
        negatives = field.neg_array(symbols)
        if share_index == 0:
            matrix[symbols, 0] = self.p2
            matrix[symbols, negatives] = self.p3
        else:
            # A+R: r=0 给出 a, r=-a 给出 0
            matrix[symbols, symbols] = self.p2
            matrix[symbols, 0] = self.p3
        return matrix


@dataclass(frozen=True)
class OtpShares:
    """一次一密的两个份额"""

    pad: FieldMatrix
    padded: FieldMatrix

    def reconstruct(self) -> FieldMatrix:
        return self.padded - self.pad


# ==================== 采样 ====================

def _sample_pad_row(row: np.ndarray, params: PadParams, rng: np.random.Generator) -> np.ndarray:
    """逆 CDF 采样一行, 特殊符号由域运算直接给出"""
    field = params.field
    q = field.q
    cols = row.shape[0]
    u = rng.random(cols)
    nonzero_draw = rng.integers(1, q, size=cols)
    rest_draw = rng.integers(0, q - 2, size=cols)

    negatives = field.neg_array(row)
    # F 去掉 {0, -a} 后的第 k 个元素
    others = rest_draw + 1
    others = others + (others >= negatives)

    pad_nonzero_source = np.where(u < params.p2, 0,
                                  np.where(u < params.p2 + params.p3, negatives, others))
    pad_zero_source = np.where(u < params.p1, 0, nonzero_draw)
    return np.where(row == 0, pad_zero_source, pad_nonzero_source)


def sample_pad(A: FieldMatrix, params: PadParams, seed: int, workers: Optional[int] = None) -> OtpShares:
    """按 A 的元素条件采样 R, 返回 (R, A+R); 每行使用由 (seed, 行号) 派生的独立随机数流"""
    if A.field != params.field:
        raise FieldMismatchError(f"matrix over {A.field.field_id}, params over {params.field.field_id}")
    seed = DataValidator.validate_seed(seed)

    def pad_row(index: int) -> np.ndarray:
        return _sample_pad_row(A.data[index], params, RandomUtils.row_generator(seed, index))

    rows = RandomUtils.map_rows(pad_row, A.rows, workers)
    pad = FieldMatrix(np.vstack(rows), A.field, validate=False)
    logger.debug("✅ 一次一密填充完成", extra={"context": {"shape": A.shape, "seed": seed}})
    return OtpShares(pad=pad, padded=A + pad)


# ==================== 稀疏度与泄露 ====================

def predicted_sparsity(params: PadParams, s: float) -> Tuple[float, float]:
    """返回 (s_R, s_{A+R})"""
    s = DataValidator.validate_probability(s, "s")
    s_r = params.p1 * s + params.p2 * (1.0 - s)
    s_ar = params.p1 * s + params.p3 * (1.0 - s)
    return s_r, s_ar


def semi_perfect_params(p: float, field: FieldSpec) -> PadParams:
    """半完美填充: p1=p3=p, p2=(1-p)/(q-1), 此时 A+R 与 A 独立"""
    if not isinstance(p, (int, float, np.floating)) or not 0.0 < p < 1.0:
        raise InvalidParametersError(f"semi-perfect pad parameter p={p} must lie in (0, 1)")
    return PadParams(field, float(p), (1.0 - float(p)) / (field.q - 1), float(p))


def _z(x: float, y: float) -> float:
    return float(rel_entr(x, y))


def otp_objective(params: PadParams, s: float) -> Tuple[float, float]:
    """两份额泄露 (L1, L2) 的闭式, 自然对数单位"""
    q = params.field.q
    s_r, s_ar = predicted_sparsity(params, s)
    s_r_inv = (1.0 - s_r) / (q - 1)
    s_ar_inv = (1.0 - s_ar) / (q - 1)
    p1, p2, p3 = params.p1, params.p2, params.p3
    p1inv, p23inv = params.p1inv, params.p23inv

    l1 = s * (_z(p1, s_r) + (q - 1) * _z(p1inv, s_r_inv)) + \
        (1.0 - s) * (_z(p2, s_r) + _z(p3, s_r_inv) + (q - 2) * _z(p23inv, s_r_inv))
    l2 = s * (_z(p1, s_ar) + (q - 1) * _z(p1inv, s_ar_inv)) + \
        (1.0 - s) * (_z(p3, s_ar) + _z(p2, s_ar_inv) + (q - 2) * _z(p23inv, s_ar_inv))
    return max(l1, 0.0), max(l2, 0.0)


def otp_leakage(params: PadParams, source: SourceModel,
                max_dense_q: int = DEFAULT_MAX_DENSE_Q) -> LeakageReport:
    """L1 = I_q(R;A), L2 = I_q(A+R;A); 闭式为权威值, q 不大时附带信道计算"""
    if source.field != params.field:
        raise FieldMismatchError("source and pad params are over different fields")
    log_q = math.log(params.field.q)
    closed = tuple(value / log_q for value in otp_objective(params, source.s))

    channel = None
    if params.field.q <= max_dense_q:
        source_pmf = source.pmf()
        channel = tuple(mutual_information_q(source_pmf, share_channel(params, index)) for index in (0, 1))

    return LeakageReport(per_share=closed, entry_entropy=source.entry_entropy(),
                         closed_form=closed, channel=channel)
