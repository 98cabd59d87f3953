#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 信息度量模块

负责有限字母表上 q 进制熵、KL 散度、互信息的精确计算,
以及由采样数据估计互信息 (插值估计与 Miller-Madow 修正)
"""

import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Tuple

import numpy as np
from scipy.special import entr, rel_entr

from src.exceptions import FieldMismatchError, InvalidParametersError, SupportError
from src.field import FieldMatrix, FieldSpec
from src.utils import RandomUtils

logger = logging.getLogger(__name__)

PMF_TOLERANCE = 1e-12

# 超过该 q 时不再构建 q×q 稠密信道矩阵
DEFAULT_MAX_DENSE_Q = 1024

LEAKAGE_UNITS = "q-ary symbols per matrix entry"


@dataclass(frozen=True, eq=False)
class Pmf:
    """GF(q) 上的概率质量函数"""

    probs: np.ndarray
    alphabet: FieldSpec

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.shape[0] != self.alphabet.q:
            raise InvalidParametersError(f"PMF must have length q={self.alphabet.q}, got shape {probs.shape}")
        if np.any(probs < 0):
            raise InvalidParametersError(f"PMF has negative mass at symbol {int(np.argmin(probs))}")
        if abs(probs.sum() - 1.0) > PMF_TOLERANCE:
            raise InvalidParametersError(f"PMF sums to {probs.sum():.15g}, not 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, field: FieldSpec) -> "Pmf":
        return cls(np.full(field.q, 1.0 / field.q), field)

    @classmethod
    def point_mass(cls, field: FieldSpec, symbol: int = 0) -> "Pmf":
        probs = np.zeros(field.q)
        probs[symbol] = 1.0
        return cls(probs, field)


@dataclass(frozen=True, eq=False)
class ConditionalPmf:
    """条件分布: 第 a 行是输入符号为 a 时输出的分布"""

    matrix: np.ndarray
    alphabet: FieldSpec

    def __post_init__(self):
        q = self.alphabet.q
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.shape != (q, q):
            raise InvalidParametersError(f"channel must be {q}x{q}, got {matrix.shape}")
        if np.any(matrix < 0):
            raise InvalidParametersError("channel has negative entries")
        row_error = np.abs(matrix.sum(axis=1) - 1.0)
        if np.any(row_error > PMF_TOLERANCE):
            bad = int(np.argmax(row_error))
            raise InvalidParametersError(f"channel row {bad} sums to {matrix[bad].sum():.15g}")
        matrix = matrix.copy()
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def row(self, symbol: int) -> Pmf:
        return Pmf(self.matrix[symbol], self.alphabet)

    def max_row_distance(self) -> float:
        """任意两行之间的最大 L∞ 距离"""
        return float(np.max(self.matrix.max(axis=0) - self.matrix.min(axis=0)))


@dataclass(frozen=True)
class SourceModel:
    """私有矩阵元素的分布: 以概率 s 取 0, 其余 q-1 个符号等概率"""

    field: FieldSpec
    s: float

    def __post_init__(self):
        q = self.field.q
        if not isinstance(self.s, (int, float, np.floating)) or math.isnan(self.s) or self.s > 1.0:
            raise InvalidParametersError(f"sparsity s={self.s} must lie in (1/q, 1]")
        if self.s <= 1.0 / q:
            raise InvalidParametersError(
                f"sparsity s={self.s} must exceed 1/q={1.0 / q}: below that, classical secret sharing "
                f"already produces sparser shares"
            )
        object.__setattr__(self, "s", float(self.s))

    @property
    def nonzero_prob(self) -> float:
        return (1.0 - self.s) / (self.field.q - 1)

    def pmf(self) -> Pmf:
        probs = np.full(self.field.q, self.nonzero_prob)
        probs[0] = self.s
        return Pmf(probs, self.field)

    def entry_entropy(self) -> float:
        """单个元素的 q 进制熵 (闭式)"""
        q = self.field.q
        value = entr(self.s) + (q - 1) * entr(self.nonzero_prob)
        return float(value / math.log(q))


@dataclass(frozen=True)
class LeakageReport:
    """每份额与总的元素级泄露, 单位为 q 进制符号/元素

    per_share 为权威值 (闭式); channel 为独立的信道矩阵计算结果,
    在 q 过大时为 None
    """

    per_share: Tuple[float, ...]
    entry_entropy: float
    closed_form: Optional[Tuple[float, ...]] = None
    channel: Optional[Tuple[float, ...]] = None
    units: str = dc_field(default=LEAKAGE_UNITS)

    def __post_init__(self):
        if any(value < -1e-12 for value in self.per_share):
            raise InvalidParametersError(f"negative leakage {self.per_share}")

    @property
    def n_shares(self) -> int:
        return len(self.per_share)

    @property
    def total(self) -> float:
        return float(sum(self.per_share))

    @property
    def relative_per_share(self) -> Tuple[float, ...]:
        """每份额泄露除以单元素熵"""
        return tuple(value / self.entry_entropy for value in self.per_share)

    @property
    def relative_total(self) -> float:
        """总泄露除以 (份额数 × 单元素熵)"""
        return self.total / (self.n_shares * self.entry_entropy)

    def max_channel_deviation(self) -> float:
        """闭式与信道计算之间的最大差异"""
        if self.channel is None or self.closed_form is None:
            return 0.0
        return max(abs(a - b) for a, b in zip(self.closed_form, self.channel))


# ==================== 精确度量 ====================

def entropy_q(p: Pmf) -> float:
    """q 进制熵, 0·log0 视为 0"""
    return float(entr(p.probs).sum() / math.log(p.alphabet.q))


def kl_q(p: Pmf, r: Pmf) -> float:
    """q 进制 KL 散度 D(p || r)"""
    if p.alphabet != r.alphabet:
        raise FieldMismatchError("PMFs are over different alphabets")
    offending = np.flatnonzero((p.probs > 0) & (r.probs == 0))
    if offending.size:
        raise SupportError(int(offending[0]))
    return float(rel_entr(p.probs, r.probs).sum() / math.log(p.alphabet.q))


def mutual_information_q(source: Pmf, channel: ConditionalPmf) -> float:
    """I_q(输入; 输出) = Σ_a source(a)·D(channel[a] || 输出边缘分布)"""
    if source.alphabet != channel.alphabet:
        raise FieldMismatchError("source and channel are over different alphabets")
    marginal = source.probs @ channel.matrix
    support = source.probs > 0
    divergences = rel_entr(channel.matrix[support], marginal[None, :]).sum(axis=1)
    value = float(source.probs[support] @ divergences / math.log(source.alphabet.q))
    return max(value, 0.0)


def share_channel(params, share_index: int) -> ConditionalPmf:
    """份额 share_index 的元素在给定源元素下的精确条件分布

    params 为 PadParams (0 号份额为 R, 1 号为 A+R) 或 ShareParams (A+α_i R)
    """
    return ConditionalPmf(params.share_matrix(share_index), params.field)


# ==================== 采样估计 ====================

def _joint_counts(samples_in: FieldMatrix, samples_out: FieldMatrix) -> Tuple[np.ndarray, np.ndarray, int]:
    if samples_in.field != samples_out.field:
        raise FieldMismatchError("samples are over different fields")
    if samples_in.shape != samples_out.shape:
        raise FieldMismatchError(f"sample shapes differ: {samples_in.shape} vs {samples_out.shape}")
    q = samples_in.field.q
    codes = samples_in.data.ravel() * q + samples_out.data.ravel()
    cells, counts = np.unique(codes, return_counts=True)
    return cells, counts, q


def _mi_from_counts(cells: np.ndarray, counts: np.ndarray, q: int, correction: Optional[str]) -> float:
    keep = counts > 0
    cells, counts = cells[keep], counts[keep].astype(np.float64)
    total = counts.sum()
    count_in = np.bincount(cells // q, weights=counts, minlength=q)
    count_out = np.bincount(cells % q, weights=counts, minlength=q)

    value = float(np.sum(counts / total * np.log(counts * total / (count_in[cells // q] * count_out[cells % q]))))
    if correction == "miller-madow":
        cells_used = counts.size - np.count_nonzero(count_in) - np.count_nonzero(count_out) + 1
        value -= cells_used / (2.0 * total)
    elif correction is not None:
        raise InvalidParametersError(f"unknown bias correction {correction!r}")
    return value / math.log(q)


def empirical_mi(samples_in: FieldMatrix, samples_out: FieldMatrix, correction: Optional[str] = None) -> float:
    """由成对元素的经验联合直方图估计 q 进制互信息

    correction=None 为插值估计, "miller-madow" 减去一阶偏差
    """
    cells, counts, q = _joint_counts(samples_in, samples_out)
    return _mi_from_counts(cells, counts, q, correction)


def bootstrap_mi(samples_in: FieldMatrix, samples_out: FieldMatrix, replicates: int = 200,
                 seed: int = 0, correction: Optional[str] = None) -> Tuple[float, float]:
    """返回 (估计值, 自助法标准误), 对联合直方图做多项分布重抽样"""
    if replicates < 2:
        raise InvalidParametersError("bootstrap needs at least 2 replicates")
    cells, counts, q = _joint_counts(samples_in, samples_out)
    estimate = _mi_from_counts(cells, counts, q, correction)

    rng = RandomUtils.generator(seed, 0xB007)
    total = int(counts.sum())
    pvals = counts / counts.sum()
    values = np.empty(replicates)
    for index in range(replicates):
        values[index] = _mi_from_counts(cells, rng.multinomial(total, pvals), q, correction)

    logger.debug("📋 自助法完成", extra={"context": {"replicates": replicates, "samples": total}})
    return estimate, float(values.std(ddof=1))
