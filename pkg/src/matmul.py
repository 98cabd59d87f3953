#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 私有分布式矩阵乘法模块

A 按列、B 按行拆成 m 个部分, 每部分用两份额多项式共享 f(x)=A_i+xR, g(x)=B_i+xS;
工作节点返回 h(α)=f(α)g(α), h 为二次多项式, 主节点由任意 3 个不同求值点在 0 处插值得到 A_iB_i
"""

import logging
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Sequence, Tuple

from src.exceptions import FieldMismatchError, InvalidParametersError, RecoveryError
from src.field import FieldMatrix, FieldSpec
from src.sss import ShareParams, ShareSet, deal, sss_leakage
from src.stats import SourceModel
from src.utils import DataValidator, RandomUtils

logger = logging.getLogger(__name__)

BASIC = "basic"
CYCLIC_GROUPS = "cyclic-groups"
M_SPLIT = "m-split"
VARIANTS = (BASIC, CYCLIC_GROUPS, M_SPLIT)

# h 的次数为 2
POINTS_NEEDED = 3


# ==================== 方案 ====================

def part_width(variant: str, N: int, m: int = 1, sigma: int = 0, x: int = 1) -> int:
    """每一部分的份额数 n: basic 为 N, cyclic-groups 为 x·N/m, m-split 为 σ+3"""
    if variant == BASIC:
        return N
    if variant == CYCLIC_GROUPS:
        DataValidator.validate_divides(m, N, "m | N")
        return x * (N // m)
    if variant == M_SPLIT:
        return sigma + POINTS_NEEDED
    raise InvalidParametersError(f"unknown variant {variant!r}, expected one of {VARIANTS}")


@dataclass(frozen=True)
class MMScheme:
    """分布式乘法方案; assignment[i] 为持有第 i 部分的工作节点, 顺序即求值点顺序"""

    variant: str
    N: int
    params_a: ShareParams
    params_b: ShareParams
    m: int = 1
    sigma: int = 0
    x: int = 1
    assignment: Tuple[Tuple[int, ...], ...] = dc_field(init=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidParametersError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        N = DataValidator.validate_positive_int(self.N, "N", minimum=POINTS_NEEDED)
        m = DataValidator.validate_positive_int(self.m, "m")

        if self.variant == BASIC:
            if m != 1:
                raise InvalidParametersError(f"the basic scheme does not split: m must be 1, got {m}")
            assignment = (tuple(range(N)),)
        elif self.variant == CYCLIC_GROUPS:
            assignment = self._cyclic_assignment(N, m)
        else:
            assignment = self._split_assignment(N, m)
        object.__setattr__(self, "assignment", assignment)

        n = len(assignment[0])
        if self.params_a.field != self.params_b.field:
            raise FieldMismatchError("A and B share params are over different fields")
        for name, params in (("A", self.params_a), ("B", self.params_b)):
            if params.n != n:
                raise InvalidParametersError(f"{name} share params have n={params.n}, the scheme needs n={n}")
        if self.params_a.alphas != self.params_b.alphas:
            raise InvalidParametersError("A and B shares must use the same evaluation points")

    def _cyclic_assignment(self, N: int, m: int) -> Tuple[Tuple[int, ...], ...]:
        DataValidator.validate_divides(m, N, "m | N")
        if not 1 <= self.x <= m:
            raise InvalidParametersError(f"x={self.x} must lie in [1, m={m}]")
        size = N // m
        if self.x * size < POINTS_NEEDED:
            raise InvalidParametersError(
                f"each part needs at least {POINTS_NEEDED} shares, x*N/m = {self.x * size}")
        return tuple(
            tuple(worker for offset in range(self.x)
                  for worker in range(((part + offset) % m) * size, ((part + offset) % m + 1) * size))
            for part in range(m)
        )

    def _split_assignment(self, N: int, m: int) -> Tuple[Tuple[int, ...], ...]:
        sigma = self.sigma
        if not 0 <= sigma < m:
            raise InvalidParametersError(f"sigma={sigma} must lie in [0, m={m})")
        width = sigma + POINTS_NEEDED
        if width > N:
            raise InvalidParametersError(f"sigma+3 = {width} shares per part exceed N={N}")
        DataValidator.validate_divides(N, m * width, "N | m(sigma+3)")
        return tuple(tuple((part * width + k) % N for k in range(width)) for part in range(m))

    # ==================== 属性 ====================

    @property
    def field(self) -> FieldSpec:
        return self.params_a.field

    @property
    def parts(self) -> int:
        return len(self.assignment)

    @property
    def shares_per_part(self) -> int:
        return len(self.assignment[0])

    @property
    def alphas(self) -> Tuple[int, ...]:
        return self.params_a.alphas

    def worker_parts(self, worker: int) -> List[Tuple[int, int]]:
        """工作节点持有的 (部分编号, 求值点位置), 按部分编号排列"""
        return [(part, holders.index(worker)) for part, holders in enumerate(self.assignment) if worker in holders]

    def tasks_per_worker(self) -> Tuple[int, ...]:
        return tuple(len(self.worker_parts(worker)) for worker in range(self.N))

    @property
    def claimed_tolerance(self) -> Optional[int]:
        """按构造给出的可容忍掉队数; 无已知闭式时为 None"""
        if self.variant == BASIC:
            return self.N - POINTS_NEEDED
        if self.variant == M_SPLIT:
            return self.sigma
        if self.x == 1:
            return 1
        if self.x == 2:
            return self.m + 1
        return None

    @property
    def measured_tolerance(self) -> int:
        """最坏情况下可容忍的完全掉队数: min|Z_i| - 3"""
        return min(len(holders) for holders in self.assignment) - POINTS_NEEDED


def straggler_witness(scheme: MMScheme) -> Tuple[int, ...]:
    """measured_tolerance + 1 个掉队节点, 使某一部分无法恢复"""
    holders = min(scheme.assignment, key=len)
    return tuple(sorted(holders[: scheme.measured_tolerance + 1]))


# ==================== 任务与响应 ====================

@dataclass(frozen=True)
class WorkerTask:
    """发给工作节点的一对份额"""

    worker: int
    part: int
    alpha: int
    f_share: FieldMatrix
    g_share: FieldMatrix
    order: int = 0


@dataclass(frozen=True)
class WorkerResponse:
    """h(α) = f(α)·g(α)"""

    worker: int
    alpha: int
    product: FieldMatrix
    part: int = 0
    stamp: int = 0


@dataclass(frozen=True)
class TaskBundle:
    """全部任务; shares_a/shares_b 含填充矩阵, 仅由主节点保留"""

    scheme: MMScheme
    tasks: Tuple[Tuple[WorkerTask, ...], ...]
    shares_a: Tuple[ShareSet, ...]
    shares_b: Tuple[ShareSet, ...]

    def worker_tasks(self, worker: int) -> Tuple[WorkerTask, ...]:
        return self.tasks[worker]


def make_tasks(A: FieldMatrix, B: FieldMatrix, scheme: MMScheme, seed: int,
               workers: Optional[int] = None) -> TaskBundle:
    """拆分 A 与 B, 对每一部分独立发牌并按 assignment 生成任务"""
    if A.field != scheme.field or B.field != scheme.field:
        raise FieldMismatchError(f"matrices must be over {scheme.field.field_id}")
    if A.cols != B.rows:
        raise FieldMismatchError(f"inner dimensions differ: {A.shape} @ {B.shape}")
    DataValidator.validate_divides(scheme.parts, A.cols, "m | cols(A)")

    parts_a = A.col_blocks(scheme.parts)
    parts_b = B.row_blocks(scheme.parts)
    shares_a = tuple(deal(block, scheme.params_a, RandomUtils.derive_seed(seed, 1, part), workers)
                     for part, block in enumerate(parts_a))
    shares_b = tuple(deal(block, scheme.params_b, RandomUtils.derive_seed(seed, 2, part), workers)
                     for part, block in enumerate(parts_b))

    tasks = []
    for worker in range(scheme.N):
        tasks.append(tuple(
            WorkerTask(worker, part, scheme.alphas[position],
                       shares_a[part].shares[position], shares_b[part].shares[position], order)
            for order, (part, position) in enumerate(scheme.worker_parts(worker))
        ))

    logger.debug("📋 乘法任务生成完成", extra={"context": {
        "variant": scheme.variant, "N": scheme.N, "parts": scheme.parts,
        "tasks": scheme.tasks_per_worker()}})
    return TaskBundle(scheme=scheme, tasks=tuple(tasks), shares_a=shares_a, shares_b=shares_b)


def compute_response(task: WorkerTask, stamp: int = 0) -> WorkerResponse:
    """工作节点侧的计算"""
    return WorkerResponse(task.worker, task.alpha, task.f_share @ task.g_share, task.part, stamp)


# ==================== 恢复 ====================

def interpolate_at_zero(points: Sequence[Tuple[int, FieldMatrix]]) -> FieldMatrix:
    """二次多项式在 0 处的值: Σ_k h(x_k)·Π_{j≠k} x_j/(x_j - x_k)"""
    if len(points) != POINTS_NEEDED:
        raise InvalidParametersError(f"interpolation needs exactly {POINTS_NEEDED} points, got {len(points)}")
    field = points[0][1].field
    xs = [int(x) for x, _ in points]
    if len(set(xs)) != len(xs):
        raise InvalidParametersError(f"evaluation points must be distinct: {xs}")

    total = None
    for k, (x_k, value) in enumerate(points):
        weight = 1
        for j, x_j in enumerate(xs):
            if j == k:
                continue
            ratio = field.mul_array(x_j, field.inv_array(field.sub_array(x_j, x_k)))
            weight = int(field.mul_array(weight, ratio))
        term = value.scale(weight)
        total = term if total is None else total + term
    return total


def _collect_points(responses: Sequence[WorkerResponse], scheme: MMScheme) -> Dict[int, Dict[int, FieldMatrix]]:
    points: Dict[int, Dict[int, FieldMatrix]] = {part: {} for part in range(scheme.parts)}
    for response in sorted(responses, key=lambda item: item.stamp):
        if not 0 <= response.part < scheme.parts:
            raise InvalidParametersError(f"response for unknown part {response.part}")
        if response.product.field != scheme.field:
            raise FieldMismatchError("response over a different field")
        points[response.part].setdefault(int(response.alpha), response.product)
    return points


def deficient_parts(responses: Sequence[WorkerResponse], scheme: MMScheme) -> List[int]:
    """不同求值点少于 3 个的部分"""
    points = _collect_points(responses, scheme)
    return [part for part, values in points.items() if len(values) < POINTS_NEEDED]


def recover(responses: Sequence[WorkerResponse], scheme: MMScheme) -> FieldMatrix:
    """每部分取前 3 个不同求值点插值, 再对所有部分求和得到 AB"""
    points = _collect_points(responses, scheme)
    deficient = [part for part, values in points.items() if len(values) < POINTS_NEEDED]
    if deficient:
        logger.warning("❌ 响应不足, 无法恢复", extra={"context": {"deficient": deficient}})
        raise RecoveryError(
            f"parts {deficient} have fewer than {POINTS_NEEDED} distinct evaluation points", deficient)

    total = None
    for part in range(scheme.parts):
        chosen = list(points[part].items())[:POINTS_NEEDED]
        product = interpolate_at_zero(chosen)
        total = product if total is None else total + product
    return total


# ==================== 泄露 ====================

@dataclass(frozen=True)
class SchemeLeakage:
    """每个工作节点关于 A、B 的泄露; absolute 单位为 q 进制符号, relative 除以矩阵总熵"""

    per_entry_a: float
    per_entry_b: float
    per_worker_a: Tuple[float, ...]
    per_worker_b: Tuple[float, ...]
    entropy_a: float
    entropy_b: float

    @property
    def eps1(self) -> float:
        return max(self.per_worker_a)

    @property
    def eps2(self) -> float:
        return max(self.per_worker_b)

    @property
    def eps1_relative(self) -> float:
        return self.eps1 / self.entropy_a

    @property
    def eps2_relative(self) -> float:
        return self.eps2 / self.entropy_b


def scheme_leakage(scheme: MMScheme, source_a: SourceModel, source_b: SourceModel,
                   shape_a: Tuple[int, int], shape_b: Tuple[int, int]) -> SchemeLeakage:
    """每个任务泄露一个部分的全部元素, 按工作节点持有的任务数累加"""
    per_entry_a = sss_leakage(scheme.params_a, source_a, max_dense_q=0).per_share[0]
    per_entry_b = sss_leakage(scheme.params_b, source_b, max_dense_q=0).per_share[0]
    part_entries_a = shape_a[0] * shape_a[1] / scheme.parts
    part_entries_b = shape_b[0] * shape_b[1] / scheme.parts
    tasks = scheme.tasks_per_worker()
    return SchemeLeakage(
        per_entry_a=per_entry_a,
        per_entry_b=per_entry_b,
        per_worker_a=tuple(count * part_entries_a * per_entry_a for count in tasks),
        per_worker_b=tuple(count * part_entries_b * per_entry_b for count in tasks),
        entropy_a=shape_a[0] * shape_a[1] * source_a.entry_entropy(),
        entropy_b=shape_b[0] * shape_b[1] * source_b.entry_entropy(),
    )
