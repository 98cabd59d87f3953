#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 蒙特卡洛仿真模块

负责:
- 按源模型生成稀疏矩阵
- 在可配置的延迟/掉队模型下对乘法方案与两集群方案做离散事件仿真
- 校验恢复结果与参考乘积逐元素相等
- 经验稀疏度与经验互信息的测量
"""

import csv
import heapq
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from src.cluster import (TRUSTED, UNTRUSTED, ClusterCollector, ClusterPlan, cluster_leakage,
                         compute_cluster_response, plan_cluster, prefix_covers)
from src.exceptions import InvalidParametersError
from src.field import FieldMatrix, matmul
from src.matmul import M_SPLIT, MMScheme, POINTS_NEEDED, compute_response, make_tasks, recover
from src.optimizer import collusion_factor
from src.otp import PadParams, otp_leakage, sample_pad
from src.sss import ShareParams, deal, sss_leakage
from src.stats import SourceModel, bootstrap_mi, empirical_mi
from src.utils import DataValidator, FormatUtils, RandomUtils

logger = logging.getLogger(__name__)

DETERMINISTIC = "deterministic"
SHIFTED_EXPONENTIAL = "shifted-exponential"
PER_WORKER_TABLE = "per-worker-table"
LATENCY_KINDS = (DETERMINISTIC, SHIFTED_EXPONENTIAL, PER_WORKER_TABLE)

CSV_COLUMNS = ("seed", "variant", "N", "sigma_rho", "recovered", "t_complete",
               "responses_used", "s_d_emp", "leak_emp", "leak_analytic")

MIN_LEAKAGE_ENTRIES = 10_000
MAX_ENUMERATION_WORKERS = 8

# 派生随机数流的标签
_TAG_A, _TAG_B, _TAG_LATENCY, _TAG_SHARES = 10, 11, 12, 13
_TAG_MATRIX = 0x6E6
_TAG_LEAK_SOURCE, _TAG_LEAK_SHARES, _TAG_BOOTSTRAP = 20, 21, 22

Config = Union[MMScheme, ClusterPlan]


# ==================== 延迟模型 ====================

@dataclass(frozen=True)
class LatencyModel:
    """每个任务的耗时分布与掉队注入

    full_stragglers 中的节点不返回任何结果; partial 中的 (节点, k) 只返回前 k 个任务
    """

    kind: str = SHIFTED_EXPONENTIAL
    shift: float = 1.0
    rate: float = 1.0
    table: Tuple[Tuple[float, ...], ...] = ()
    full_stragglers: frozenset = frozenset()
    partial: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in LATENCY_KINDS:
            raise InvalidParametersError(f"unknown latency model {self.kind!r}, expected one of {LATENCY_KINDS}")
        if self.shift < 0 or not math.isfinite(self.shift):
            raise InvalidParametersError(f"latency shift={self.shift} must be a finite value >= 0")
        if self.kind == SHIFTED_EXPONENTIAL and self.rate <= 0:
            raise InvalidParametersError(f"latency rate={self.rate} must be positive")
        if self.kind == PER_WORKER_TABLE:
            if not self.table or any(not row for row in self.table):
                raise InvalidParametersError("per-worker-table latency needs a non-empty time list per worker")
            if any(value < 0 for row in self.table for value in row):
                raise InvalidParametersError("latencies must be >= 0")
        object.__setattr__(self, "full_stragglers", frozenset(int(w) for w in self.full_stragglers))
        partial = tuple((int(w), int(k)) for w, k in self.partial)
        if any(k < 0 for _, k in partial):
            raise InvalidParametersError("partial stragglers must complete k >= 0 tasks")
        object.__setattr__(self, "partial", partial)

    @classmethod
    def from_spec(cls, text: str, full_stragglers: Iterable[int] = (),
                  partial: Iterable[Tuple[int, int]] = ()) -> "LatencyModel":
        """解析 "shifted-exponential:shift=1,rate=2" 或 "per-worker-table:1,1,5" 形式的描述"""
        kind, _, rest = text.strip().partition(":")
        options: Dict[str, float] = {}
        table: Tuple[Tuple[float, ...], ...] = ()
        if kind == PER_WORKER_TABLE:
            table = tuple((value,) for value in FormatUtils.parse_float_list(rest))
        elif rest:
            for item in rest.split(","):
                key, sep, value = item.partition("=")
                if not sep or key.strip() not in ("shift", "rate"):
                    raise InvalidParametersError(f"bad latency option {item!r}")
                options[key.strip()] = float(value)
        return cls(kind=kind, table=table, full_stragglers=frozenset(full_stragglers),
                   partial=tuple(partial), **options)

    def validate(self, num_workers: int) -> None:
        """掉队节点必须是合法的节点编号"""
        injected = set(self.full_stragglers) | {worker for worker, _ in self.partial}
        outside = sorted(w for w in injected if not 0 <= w < num_workers)
        if outside:
            raise InvalidParametersError(f"stragglers {outside} are not worker ids in [0, {num_workers})")
        if self.kind == PER_WORKER_TABLE and len(self.table) < num_workers:
            raise InvalidParametersError(f"latency table covers {len(self.table)} workers, need {num_workers}")

    def task_durations(self, worker: int, count: int, rng: np.random.Generator) -> np.ndarray:
        """worker 依次执行 count 个任务的耗时"""
        if self.kind == DETERMINISTIC:
            return np.full(count, self.shift)
        if self.kind == SHIFTED_EXPONENTIAL:
            return self.shift + rng.exponential(1.0 / self.rate, size=count)
        row = self.table[worker]
        # 表长不足时重复最后一个值
        return np.array([row[min(index, len(row) - 1)] for index in range(count)], dtype=np.float64)

    def completed_tasks(self, worker: int, count: int) -> int:
        if worker in self.full_stragglers:
            return 0
        for straggler, k in self.partial:
            if straggler == worker:
                return min(k, count)
        return count


# ==================== 结果 ====================

@dataclass(frozen=True)
class SimResult:
    """单次仿真结果; recovered=True 时恢复的乘积已与参考乘积逐元素比对"""

    seed: int
    variant: str
    workers: int
    tolerance: str
    recovered: bool
    completion_time: float
    responses_used: int
    sparsity: Tuple[Tuple[str, float], ...]
    leak_emp: float = float("nan")
    leak_analytic: float = float("nan")
    failure: str = ""

    @property
    def share_sparsity(self) -> float:
        """首个份额类别的经验稀疏度"""
        return self.sparsity[0][1] if self.sparsity else float("nan")

    def to_csv_row(self, digits: int = 12) -> List[str]:
        values = (self.seed, self.variant, self.workers, self.tolerance, self.recovered,
                  self.completion_time, self.responses_used, self.share_sparsity,
                  self.leak_emp, self.leak_analytic)
        return [FormatUtils.format_number(value, digits) if not isinstance(value, str) else value
                for value in values]


def gen_matrix(source: SourceModel, rows: int, cols: int, seed: int) -> FieldMatrix:
    """独立同分布元素: 以概率 s 为 0, 否则在 q-1 个非零符号上均匀"""
    DataValidator.validate_positive_int(rows, "rows")
    DataValidator.validate_positive_int(cols, "cols")
    rng = RandomUtils.generator(seed, _TAG_MATRIX)
    u = rng.random((rows, cols))
    values = rng.integers(1, source.field.q, size=(rows, cols))
    return FieldMatrix(np.where(u < source.s, 0, values), source.field, validate=False)


# ==================== 离散事件仿真 ====================

def _schedule(latency: LatencyModel, task_counts: Sequence[int], seed: int) -> List[Tuple[float, int, int]]:
    """按 (时间, 节点, 任务序号) 排序的完成事件; 所有节点都抽样, 与掉队注入无关"""
    rng = RandomUtils.generator(seed, _TAG_LATENCY)
    events: List[Tuple[float, int, int]] = []
    for worker, count in enumerate(task_counts):
        finish = np.cumsum(latency.task_durations(worker, count, rng)) if count else np.empty(0)
        for index in range(latency.completed_tasks(worker, count)):
            heapq.heappush(events, (float(finish[index]), worker, index))
    return [heapq.heappop(events) for _ in range(len(events))]


def _run_mm_trial(scheme: MMScheme, latency: LatencyModel, A: FieldMatrix, B: FieldMatrix,
                  seed: int, source_a: SourceModel, measure_leakage: bool,
                  workers: Optional[int]) -> SimResult:
    latency.validate(scheme.N)
    bundle = make_tasks(A, B, scheme, RandomUtils.derive_seed(seed, _TAG_SHARES), workers)
    events = _schedule(latency, [len(bundle.worker_tasks(w)) for w in range(scheme.N)], seed)

    sparsity = (
        ("A", float(np.mean([share.sparsity() for dealt in bundle.shares_a for share in dealt.shares]))),
        ("B", float(np.mean([share.sparsity() for dealt in bundle.shares_b for share in dealt.shares]))),
    )
    report = sss_leakage(scheme.params_a, source_a, max_dense_q=0)
    leak_emp = float("nan")
    if measure_leakage:
        part_a = A.col_blocks(scheme.parts)[0]
        leak_emp = empirical_mi(part_a, bundle.shares_a[0].shares[0], correction="miller-madow") / report.entry_entropy

    tolerance = str(scheme.sigma if scheme.variant == M_SPLIT else scheme.measured_tolerance)
    common = dict(seed=seed, variant=scheme.variant, workers=scheme.N, tolerance=tolerance,
                  sparsity=sparsity, leak_emp=leak_emp, leak_analytic=report.relative_per_share[0])

    responses = []
    seen: Dict[int, set] = {part: set() for part in range(scheme.parts)}
    for stamp, (time, worker, index) in enumerate(events):
        task = bundle.worker_tasks(worker)[index]
        responses.append(compute_response(task, stamp))
        seen[task.part].add(task.alpha)
        if all(len(alphas) >= POINTS_NEEDED for alphas in seen.values()):
            product = recover(responses, scheme)
            if product != matmul(A, B):
                return SimResult(recovered=False, completion_time=time, responses_used=len(responses),
                                 failure="recovered product differs from the reference", **common)
            return SimResult(recovered=True, completion_time=time, responses_used=len(responses), **common)

    deficient = [part for part, alphas in seen.items() if len(alphas) < POINTS_NEEDED]
    return SimResult(recovered=False, completion_time=float("nan"), responses_used=len(responses),
                     failure=f"parts {deficient} lack {POINTS_NEEDED} distinct evaluation points", **common)


def _run_cluster_trial(plan: ClusterPlan, latency: LatencyModel, A: FieldMatrix, B: FieldMatrix,
                       seed: int, source_a: SourceModel, measure_leakage: bool,
                       workers: Optional[int]) -> SimResult:
    latency.validate(plan.n1 + plan.n2)
    tasks = plan_cluster(A, plan, RandomUtils.derive_seed(seed, _TAG_SHARES), workers)
    counts = [plan.rho1] * plan.n1 + [plan.rho2] * plan.n2
    events = _schedule(latency, counts, seed)

    def locate(worker: int) -> Tuple[str, int]:
        return (UNTRUSTED, worker) if worker < plan.n1 else (TRUSTED, worker - plan.n1)

    sparsity = (("R", tasks.pad.sparsity()), ("A+R", (A + tasks.pad).sparsity()))
    entropy = A.rows * A.cols * source_a.entry_entropy()
    colluders = [(TRUSTED, worker) for worker in range(plan.z)]
    leak_analytic = cluster_leakage(plan, source_a, colluders, A.shape) / entropy
    leak_emp = float("nan")
    if measure_leakage:
        fraction = collusion_factor(plan.rho2, plan.z, plan.n2)
        leak_emp = fraction * empirical_mi(A, tasks.pad, correction="miller-madow") / source_a.entry_entropy()

    common = dict(seed=seed, variant="cluster", workers=plan.n1 + plan.n2,
                  tolerance=f"{plan.rho1}/{plan.rho2}", sparsity=sparsity,
                  leak_emp=leak_emp, leak_analytic=leak_analytic)

    collector = ClusterCollector(plan)
    for stamp, (time, worker, layer) in enumerate(events):
        cluster, local = locate(worker)
        if collector.add(compute_cluster_response(tasks, cluster, local, layer, B, stamp)):
            if collector.result() != matmul(A, B):
                return SimResult(recovered=False, completion_time=time, responses_used=collector.responses_used,
                                 failure="recovered product differs from the reference", **common)
            return SimResult(recovered=True, completion_time=time, responses_used=collector.responses_used,
                             **common)

    return SimResult(recovered=False, completion_time=float("nan"), responses_used=collector.responses_used,
                     failure=f"uncovered blocks {collector.missing()}", **common)


def run_trial(config: Config, latency: LatencyModel, sizes: Tuple[int, int, int], seed: int,
              source_a: SourceModel, source_b: Optional[SourceModel] = None,
              measure_leakage: bool = False, workers: Optional[int] = None) -> SimResult:
    """单次仿真: 生成 A (rows×inner) 与 B (inner×cols), 逐个事件收集响应直至恢复或耗尽"""
    rows, inner, cols = sizes
    source_b = source_b or source_a
    if source_a.field != source_b.field:
        raise InvalidParametersError("A and B sources are over different fields")
    A = gen_matrix(source_a, rows, inner, RandomUtils.derive_seed(seed, _TAG_A))
    B = gen_matrix(source_b, inner, cols, RandomUtils.derive_seed(seed, _TAG_B))

    if isinstance(config, MMScheme):
        result = _run_mm_trial(config, latency, A, B, seed, source_a, measure_leakage, workers)
    elif isinstance(config, ClusterPlan):
        result = _run_cluster_trial(config, latency, A, B, seed, source_a, measure_leakage, workers)
    else:
        raise InvalidParametersError(f"unsupported configuration {type(config).__name__}")

    logger.debug("🔧 仿真完成", extra={"context": {
        "seed": seed, "variant": result.variant, "recovered": result.recovered,
        "responses_used": result.responses_used}})
    return result


def run_campaign(config: Config, latency: LatencyModel, sizes: Tuple[int, int, int], seeds: Iterable[int],
                 source_a: SourceModel, source_b: Optional[SourceModel] = None,
                 measure_leakage: bool = False, threads: Optional[int] = None) -> List[SimResult]:
    """多个种子并行仿真, 输出按种子顺序排列"""
    seeds = list(seeds)

    def trial(seed: int) -> SimResult:
        return run_trial(config, latency, sizes, seed, source_a, source_b, measure_leakage)

    if not threads or threads <= 1:
        results = [trial(seed) for seed in seeds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(trial, seeds))

    failures = sum(1 for result in results if not result.recovered)
    logger.info("📋 仿真批次完成", extra={"context": {"trials": len(results), "failures": failures}})
    return results


def write_csv(results: Iterable[SimResult], stream: TextIO, digits: int = 12) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for result in results:
        writer.writerow(result.to_csv_row(digits))


# ==================== 阈值枚举 ====================

def recovery_prefix_profile(scheme: MMScheme) -> Tuple[int, int]:
    """枚举全部节点到达顺序, 返回恢复所需节点前缀长度的 (最小值, 最大值)

    每个节点到达时视为返回其全部任务
    """
    if scheme.N > MAX_ENUMERATION_WORKERS:
        raise InvalidParametersError(f"exhaustive enumeration is limited to N <= {MAX_ENUMERATION_WORKERS}")
    holders = [set(part) for part in scheme.assignment]
    best, worst = scheme.N + 1, 0
    for order in itertools.permutations(range(scheme.N)):
        arrived = set()
        for length, worker in enumerate(order, start=1):
            arrived.add(worker)
            if all(len(part & arrived) >= POINTS_NEEDED for part in holders):
                best, worst = min(best, length), max(worst, length)
                break
    return best, worst


def coverage_threshold(n: int, rho: int) -> int:
    """枚举各节点的完成任务数, 返回保证覆盖全部块的最小响应数"""
    if n > MAX_ENUMERATION_WORKERS:
        raise InvalidParametersError(f"exhaustive enumeration is limited to n <= {MAX_ENUMERATION_WORKERS}")
    largest_uncovered = -1
    for counts in itertools.product(range(rho + 1), repeat=n):
        if not prefix_covers(counts, n, rho):
            largest_uncovered = max(largest_uncovered, sum(counts))
    return largest_uncovered + 1


# ==================== 经验泄露 ====================

@dataclass(frozen=True)
class LeakageComparison:
    """闭式泄露与经验估计的对比, 单位为 q 进制符号/元素"""

    analytical: float
    empirical: float
    plugin: float
    standard_error: float
    entries: int
    share_index: int

    @property
    def gap(self) -> float:
        return abs(self.empirical - self.analytical)

    def within(self, k: float = 3.0) -> bool:
        return self.gap <= k * self.standard_error


def _sample_shape(entries: int) -> Tuple[int, int]:
    return (entries // 1000, 1000) if entries % 1000 == 0 else (1, entries)


def leakage_experiment(params: Union[PadParams, ShareParams], source: SourceModel, entries: int, seed: int,
                       share_index: int = 0, replicates: int = 200, workers: Optional[int] = None) -> LeakageComparison:
    """采样 (源元素, 份额元素) 对, 经验互信息采用 Miller-Madow 修正, 标准误由自助法给出"""
    if entries < MIN_LEAKAGE_ENTRIES:
        raise InvalidParametersError(f"entries={entries} is below the minimum {MIN_LEAKAGE_ENTRIES}")
    if params.field != source.field:
        raise InvalidParametersError("params and source are over different fields")

    rows, cols = _sample_shape(entries)
    A = gen_matrix(source, rows, cols, RandomUtils.derive_seed(seed, _TAG_LEAK_SOURCE))
    share_seed = RandomUtils.derive_seed(seed, _TAG_LEAK_SHARES)
    if isinstance(params, PadParams):
        if share_index not in (0, 1):
            raise InvalidParametersError(f"one-time pad has shares 0 and 1, got {share_index}")
        dealt = sample_pad(A, params, share_seed, workers)
        share = (dealt.pad, dealt.padded)[share_index]
        analytical = otp_leakage(params, source, max_dense_q=0).per_share[share_index]
    else:
        share = deal(A, params, share_seed, workers).shares[share_index]
        analytical = sss_leakage(params, source, max_dense_q=0).per_share[share_index]

    empirical, error = bootstrap_mi(A, share, replicates=replicates,
                                    seed=RandomUtils.derive_seed(seed, _TAG_BOOTSTRAP), correction="miller-madow")
    comparison = LeakageComparison(analytical=analytical, empirical=empirical,
                                   plugin=empirical_mi(A, share), standard_error=error,
                                   entries=entries, share_index=share_index)
    logger.info("📋 经验泄露测量完成", extra={"context": {
        "analytical": analytical, "empirical": empirical, "se": error, "entries": entries}})
    return comparison
