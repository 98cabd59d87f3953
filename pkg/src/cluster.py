#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 两集群方案模块

半完美填充把 A 拆成 A+R (交给不可信集群, 完全隐私) 与 R (交给部分可信集群,
z 个合谋者泄露有界); 两个集群各自按循环移位分层分配行块任务
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from src.exceptions import FieldMismatchError, InvalidParametersError, RecoveryError
from src.field import FieldMatrix
from src.optimizer import collusion_factor, semi_perfect_leakage
from src.otp import sample_pad, semi_perfect_params
from src.stats import SourceModel
from src.utils import DataValidator

logger = logging.getLogger(__name__)

UNTRUSTED = "untrusted"
TRUSTED = "trusted"
CLUSTERS = (UNTRUSTED, TRUSTED)


def recovery_threshold(n: int, rho: int) -> int:
    """任意 K 个任务级响应必然覆盖全部 n 个块: K = (-ρ² + ρ(2n-1))/2 + 1"""
    return (rho * (2 * n - 1) - rho * rho) // 2 + 1


def layer_table(n: int, rho: int) -> Tuple[Tuple[int, ...], ...]:
    """第 i 个工作节点在第 j 层持有块 (i - j) mod n"""
    return tuple(tuple((worker - layer) % n for layer in range(rho)) for worker in range(n))


@dataclass(frozen=True)
class ClusterPlan:
    """两集群方案参数; p 为 None 表示尚待由泄露预算求解"""

    n1: int
    n2: int
    rho1: int
    rho2: int
    z: int
    p: Optional[float] = None

    def __post_init__(self):
        for name in ("n1", "n2", "rho1", "rho2", "z"):
            DataValidator.validate_positive_int(getattr(self, name), name)
        if self.rho1 > self.n1:
            raise InvalidParametersError(f"rho1={self.rho1} must not exceed n1={self.n1}")
        if self.rho2 > self.n2:
            raise InvalidParametersError(f"rho2={self.rho2} must not exceed n2={self.n2}")
        if self.z >= self.n2:
            raise InvalidParametersError(f"z={self.z} must be smaller than n2={self.n2}")
        if self.p is not None and not 0.0 < self.p < 1.0:
            raise InvalidParametersError(f"pad parameter p={self.p} must lie in (0, 1)")

    @property
    def K_u(self) -> int:
        return recovery_threshold(self.n1, self.rho1)

    @property
    def K_t(self) -> int:
        return recovery_threshold(self.n2, self.rho2)

    def cluster_size(self, cluster: str) -> int:
        return self.n1 if cluster == UNTRUSTED else self.n2

    def layers(self, cluster: str) -> int:
        return self.rho1 if cluster == UNTRUSTED else self.rho2


@dataclass(frozen=True)
class LayeredTasks:
    """分层任务表; pad 仅由主节点保留"""

    plan: ClusterPlan
    untrusted: Tuple[Tuple[int, ...], ...]
    trusted: Tuple[Tuple[int, ...], ...]
    untrusted_blocks: Tuple[FieldMatrix, ...]
    trusted_blocks: Tuple[FieldMatrix, ...]
    pad: FieldMatrix

    def table(self, cluster: str) -> Tuple[Tuple[int, ...], ...]:
        return self.untrusted if cluster == UNTRUSTED else self.trusted

    def task(self, cluster: str, worker: int, layer: int) -> Tuple[int, FieldMatrix]:
        """返回 (块编号, 块矩阵)"""
        block = self.table(cluster)[worker][layer]
        blocks = self.untrusted_blocks if cluster == UNTRUSTED else self.trusted_blocks
        return block, blocks[block]


def plan_cluster(A: FieldMatrix, plan: ClusterPlan, seed: int, workers: Optional[int] = None) -> LayeredTasks:
    """采样半完美填充 R, 按行拆分 A+R 与 R 并按循环移位建立各层任务"""
    DataValidator.validate_divides(plan.n1, A.rows, "n1 | rows(A+R)")
    DataValidator.validate_divides(plan.n2, A.rows, "n2 | rows(R)")
    if plan.p is None:
        raise InvalidParametersError("the plan has no pad parameter p; solve p* first")
    shares = sample_pad(A, semi_perfect_params(plan.p, A.field), seed, workers)

    tasks = LayeredTasks(
        plan=plan,
        untrusted=layer_table(plan.n1, plan.rho1),
        trusted=layer_table(plan.n2, plan.rho2),
        untrusted_blocks=tuple(shares.padded.row_blocks(plan.n1)),
        trusted_blocks=tuple(shares.pad.row_blocks(plan.n2)),
        pad=shares.pad,
    )
    logger.debug("📋 集群任务规划完成", extra={"context": {
        "n1": plan.n1, "n2": plan.n2, "rho1": plan.rho1, "rho2": plan.rho2, "K_u": plan.K_u, "K_t": plan.K_t}})
    return tasks


# ==================== 泄露 ====================

def _split_colluders(plan: ClusterPlan, colluders: Iterable[Tuple[str, int]]) -> Tuple[Optional[str], Set[int]]:
    clusters: Set[str] = set()
    workers: Set[int] = set()
    for cluster, worker in colluders:
        if cluster not in CLUSTERS:
            raise InvalidParametersError(f"unknown cluster {cluster!r}")
        if not 0 <= worker < plan.cluster_size(cluster):
            raise InvalidParametersError(f"worker {worker} outside the {cluster} cluster")
        clusters.add(cluster)
        workers.add(int(worker))
    if len(clusters) > 1:
        raise InvalidParametersError("cross-cluster collusion is outside the model: the clusters do not communicate")
    return (clusters.pop() if clusters else None), workers


def cluster_leakage(plan: ClusterPlan, source: SourceModel, colluders: Iterable[Tuple[str, int]],
                    shape: Tuple[int, int], exact: bool = False) -> float:
    """合谋工作节点关于 A 的总泄露 (q 进制符号)

    exact=False 时使用上界 min{ρ2·z/n2, 1}·rows·cols·L1(p);
    exact=True 时按合谋者实际看到的不同 R 块计数
    """
    cluster, workers = _split_colluders(plan, colluders)
    if cluster != TRUSTED or not workers:
        return 0.0
    if plan.p is None:
        raise InvalidParametersError("the plan has no pad parameter p; solve p* first")

    if exact:
        seen = {(worker - layer) % plan.n2 for worker in workers for layer in range(plan.rho2)}
        fraction = len(seen) / plan.n2
    else:
        fraction = collusion_factor(plan.rho2, len(workers), plan.n2)
    rows, cols = shape
    return fraction * rows * cols * semi_perfect_leakage(plan.p, source)


# ==================== 响应收集 ====================

@dataclass(frozen=True)
class ClusterResponse:
    """工作节点返回的块乘积 T·B"""

    cluster: str
    worker: int
    layer: int
    block: int
    product: FieldMatrix
    stamp: int = 0


def compute_cluster_response(tasks: LayeredTasks, cluster: str, worker: int, layer: int,
                             B: FieldMatrix, stamp: int = 0) -> ClusterResponse:
    """工作节点侧: 计算第 layer 层任务与公开矩阵 B 的乘积"""
    block, matrix = tasks.task(cluster, worker, layer)
    return ClusterResponse(cluster, worker, layer, block, matrix @ B, stamp)


class ClusterCollector:
    """响应收集状态机, 由单一控制流驱动"""

    def __init__(self, plan: ClusterPlan):
        """初始化收集器"""
        self.plan = plan
        self.products: Dict[str, Dict[int, FieldMatrix]] = {UNTRUSTED: {}, TRUSTED: {}}
        self.responses_used = 0

    def add(self, response: ClusterResponse) -> bool:
        """记录一个响应, 返回是否已可恢复"""
        if response.cluster not in CLUSTERS:
            raise InvalidParametersError(f"unknown cluster {response.cluster!r}")
        if not 0 <= response.block < self.plan.cluster_size(response.cluster):
            raise InvalidParametersError(f"block {response.block} outside the {response.cluster} cluster")
        self.responses_used += 1
        self.products[response.cluster].setdefault(response.block, response.product)
        return self.is_complete()

    def covered(self, cluster: str) -> Set[int]:
        return set(self.products[cluster])

    def missing(self) -> Dict[str, List[int]]:
        return {
            cluster: sorted(set(range(self.plan.cluster_size(cluster))) - self.covered(cluster))
            for cluster in CLUSTERS
        }

    def is_complete(self) -> bool:
        return not any(self.missing().values())

    def can_still_complete(self, pending: Iterable[Tuple[str, int]]) -> bool:
        """pending 为尚可能到达的 (集群, 块编号)"""
        reachable = {cluster: self.covered(cluster) for cluster in CLUSTERS}
        for cluster, block in pending:
            reachable[cluster].add(block)
        return all(len(reachable[c]) == self.plan.cluster_size(c) for c in CLUSTERS)

    def result(self) -> FieldMatrix:
        """(A+R)B - RB = AB"""
        missing = self.missing()
        if any(missing.values()):
            deficient = [(cluster, block) for cluster, blocks in missing.items() for block in blocks]
            raise RecoveryError(f"blocks not covered yet: {missing}", deficient)
        padded = FieldMatrix.vstack([self.products[UNTRUSTED][b] for b in range(self.plan.n1)])
        pad = FieldMatrix.vstack([self.products[TRUSTED][b] for b in range(self.plan.n2)])
        if padded.field != pad.field:
            raise FieldMismatchError("cluster products belong to different fields")
        return padded - pad


def recover_cluster(responses: Sequence[ClusterResponse], plan: ClusterPlan) -> FieldMatrix:
    """按到达顺序收集响应, 覆盖全部块后输出 AB"""
    collector = ClusterCollector(plan)
    for response in sorted(responses, key=lambda item: item.stamp):
        if collector.add(response):
            return collector.result()
    missing = collector.missing()
    logger.warning("❌ 集群响应不足, 无法恢复", extra={"context": {"missing": missing}})
    deficient = [(cluster, block) for cluster, blocks in missing.items() for block in blocks]
    raise RecoveryError(f"coverage impossible with the received responses; missing blocks {missing}", deficient)


# ==================== 覆盖分析 ====================

def prefix_covers(counts: Sequence[int], n: int, rho: int) -> bool:
    """每个工作节点完成前 counts[i] 个任务时是否覆盖全部块"""
    covered = {(worker - layer) % n for worker, count in enumerate(counts) for layer in range(min(count, rho))}
    return len(covered) == n


def worst_case_pattern(n: int, rho: int, block: int = 0) -> Tuple[int, ...]:
    """K-1 个响应却漏掉 block 的部分掉队模式: 在第 j 层持有该块的节点只完成 j 个任务"""
    counts = [rho] * n
    for layer in range(rho):
        counts[(block + layer) % n] = layer
    return tuple(counts)
