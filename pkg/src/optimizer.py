#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 参数优化模块

负责求解泄露最小的填充/共享参数:
一次一密的三次方程、n 份额共享的单调超越方程 (及其多项式交叉校验)、
等稀疏度最优性扫描, 以及两集群方案中给定泄露预算下的最大 p*
"""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import optimize

from src.exceptions import InfeasibleError, InvalidParametersError
from src.otp import PadParams, otp_leakage, otp_objective, semi_perfect_params
from src.sss import ShareParams, sss_leakage
from src.stats import DEFAULT_MAX_DENSE_Q, LeakageReport, SourceModel

if TYPE_CHECKING:
    from src.cluster import ClusterPlan

logger = logging.getLogger(__name__)

BISECTION_XTOL = 1e-14
PSTAR_XTOL = 1e-12
POLYNOMIAL_RESIDUAL_TOL = 1e-8
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class SolveResult:
    """求解结果"""

    params: Union[PadParams, ShareParams]
    leakage: LeakageReport
    residual: float
    iterations: int
    method: str
    constraint_residual: float = 0.0
    polynomial_residual: float = 0.0


def _named_bounds(lower: Dict[str, float], upper: Dict[str, float], what: str) -> Tuple[float, float]:
    """取下界最大值与上界最小值, 区间为空时报出被违反的不等式"""
    lo_name, lo = max(lower.items(), key=lambda item: item[1])
    hi_name, hi = min(upper.items(), key=lambda item: item[1])
    if lo > hi + BOUND_SLACK:
        raise InfeasibleError(
            f"infeasible sparsity targets: {what} needs {lo_name} <= {hi_name}, "
            f"but {lo_name} = {lo:.12g} > {hi_name} = {hi:.12g}"
        )
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return lo, hi


# ==================== 一次一密 ====================

@dataclass(frozen=True)
class OtpCubic:
    """一次一密驻点条件 p1·p23inv² = p1inv·p2·p3 化成的 p1 三次方程"""

    s: float
    s_r: float
    s_ar: float
    q: int

    @classmethod
    def equal(cls, s: float, s_avg: float, q: int) -> "OtpCubic":
        return cls(s, s_avg, s_avg, q)

    @property
    def qbar(self) -> float:
        return (self.q - 2) ** 2 / (self.q - 1)

    @property
    def coefficients(self) -> Tuple[float, float, float, float]:
        """(c3, c2, c1, c0), 按降幂排列"""
        s, s_r, s_ar, qbar = self.s, self.s_r, self.s_ar, self.qbar
        u = 1.0 - s - s_r - s_ar
        c3 = s * s * (4.0 + qbar)
        c2 = 4.0 * s * u - qbar * s * (s_r + s_ar + s)
        c1 = u * u + qbar * (s * s_ar + s * s_r + s_ar * s_r)
        c0 = -qbar * s_ar * s_r
        return c3, c2, c1, c0

    def bounds(self) -> Tuple[float, float]:
        """p1·s 的可行区间"""
        s, s_r, s_ar = self.s, self.s_r, self.s_ar
        lower = {
            "0": 0.0,
            "s_R-(1-s)": s_r - (1.0 - s),
            "s_AR-(1-s)": s_ar - (1.0 - s),
            "(s_R+s_AR-(1-s))/2": 0.5 * (s_r + s_ar - (1.0 - s)),
        }
        upper = {"s": s, "s_R": s_r, "s_AR": s_ar}
        return _named_bounds(lower, upper, "p1*s")

    def equal_interval(self) -> Tuple[float, float]:
        """等稀疏度情形下 2·p1·s 的区间 [max{2s_avg-1+s, 0}, 2min{s, s_avg}]"""
        s_avg = 0.5 * (self.s_r + self.s_ar)
        return max(2.0 * s_avg - 1.0 + self.s, 0.0), 2.0 * min(self.s, s_avg)

    def evaluate(self, p1: float) -> float:
        return float(np.polyval(self.coefficients, p1))

    def real_roots(self) -> np.ndarray:
        roots = np.roots(self.coefficients)
        scale = max(1.0, float(np.max(np.abs(roots)))) if roots.size else 1.0
        return np.sort(roots[np.abs(roots.imag) <= 1e-9 * scale].real)

    def polish(self, p1: float, lo: float, hi: float) -> float:
        """牛顿迭代精化根, 保持在区间内"""
        derivative = np.polyder(np.asarray(self.coefficients))
        for _ in range(4):
            slope = float(np.polyval(derivative, p1))
            if slope == 0.0:
                break
            p1 = min(max(p1 - self.evaluate(p1) / slope, lo), hi)
        return p1


def _clip01(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def _pad_from_p1(source: SourceModel, s_r: float, s_ar: float, p1: float) -> PadParams:
    s = source.s
    p2 = (s_r - s * p1) / (1.0 - s)
    p3 = (s_ar - s * p1) / (1.0 - s)
    return PadParams(source.field, _clip01(p1), _clip01(p2), _clip01(p3))


def otp_stationarity(params: PadParams) -> float:
    """|p1·p23inv² - p1inv·p2·p3|"""
    return abs(params.p1 * params.p23inv ** 2 - params.p1inv * params.p2 * params.p3)


def _check_otp_inputs(source: SourceModel, s_r: float, s_ar: float) -> None:
    if source.s >= 1.0:
        raise InfeasibleError("s = 1 leaves no nonzero entries: p2 and p3 are undefined since 1-s = 0")
    for name, value in (("s_R", s_r), ("s_AR", s_ar)):
        if not 0.0 < value < 1.0:
            raise InfeasibleError(f"target sparsity {name} = {value} must lie in (0, 1)")


def solve_otp(source: SourceModel, s_r: float, s_ar: float,
              max_dense_q: int = DEFAULT_MAX_DENSE_Q) -> SolveResult:
    """在给定两份额稀疏度下最小化 L1+L2

    求三次方程的全部实根, 按可行区间过滤, 多个候选时取泄露最小者;
    数值上无候选时退化为对驻点条件的对数形式二分
    """
    _check_otp_inputs(source, s_r, s_ar)
    s = source.s
    cubic = OtpCubic(s, s_r, s_ar, source.field.q)
    lo, hi = cubic.bounds()
    p1_lo, p1_hi = lo / s, min(hi / s, 1.0)

    method = "cubic"
    iterations = 0
    if p1_hi - p1_lo <= BOUND_SLACK:
        candidates = [0.5 * (p1_lo + p1_hi)]
        method = "degenerate-interval"
    else:
        candidates = [cubic.polish(float(root), p1_lo, p1_hi) for root in cubic.real_roots()
                      if p1_lo - BOUND_SLACK <= root <= p1_hi + BOUND_SLACK]
        if not candidates:
            root, info = _bisect_otp(source, s_r, s_ar, p1_lo, p1_hi)
            candidates, method, iterations = [root], "bisection", info

    best = min((_pad_from_p1(source, s_r, s_ar, p1) for p1 in candidates),
               key=lambda params: sum(otp_objective(params, s)))

    predicted = (best.p1 * s + best.p2 * (1 - s), best.p1 * s + best.p3 * (1 - s))
    constraint_residual = max(abs(predicted[0] - s_r), abs(predicted[1] - s_ar))
    residual = otp_stationarity(best)
    leakage = otp_leakage(best, source, max_dense_q)

    logger.info("✅ 一次一密参数求解完成", extra={"context": {
        "q": source.field.q, "s": s, "s_R": s_r, "s_AR": s_ar, "p1": best.p1, "p2": best.p2,
        "p3": best.p3, "method": method, "residual": residual}})
    return SolveResult(params=best, leakage=leakage, residual=residual, iterations=iterations,
                       method=method, constraint_residual=constraint_residual)


def _bisect_otp(source: SourceModel, s_r: float, s_ar: float, p1_lo: float, p1_hi: float) -> Tuple[float, int]:
    s, q = source.s, source.field.q

    def stationarity(p1: float) -> float:
        p2 = (s_r - s * p1) / (1.0 - s)
        p3 = (s_ar - s * p1) / (1.0 - s)
        p23inv = (1.0 - p2 - p3) / (q - 2)
        p1inv = (1.0 - p1) / (q - 1)
        return math.log(p1) + 2.0 * math.log(p23inv) - math.log(p1inv) - math.log(p2) - math.log(p3)

    a, b = _open_bracket(stationarity, p1_lo, p1_hi)
    root, info = optimize.bisect(stationarity, a, b, xtol=BISECTION_XTOL, maxiter=500, full_output=True)
    return float(root), int(info.iterations)


def _open_bracket(func, lo: float, hi: float) -> Tuple[float, float]:
    """在开区间内找到异号端点"""
    for shrink in (1e-9, 1e-12, 1e-15):
        delta = (hi - lo) * shrink
        a, b = lo + delta, hi - delta
        try:
            fa, fb = func(a), func(b)
        except (ValueError, ZeroDivisionError):
            continue
        if fa * fb < 0:
            return a, b
    raise InvalidParametersError(f"no sign change of the stationarity condition on ({lo}, {hi})")


# ==================== n 份额共享 ====================

@dataclass(frozen=True)
class SssPolynomial:
    """驻点条件化成的 n+1 次多项式 Σ b_j ps^j = 0"""

    s: float
    s_d: float
    q: int
    n: int

    @property
    def t_tilde(self) -> float:
        return self.s_d / (1.0 - self.s)

    @property
    def s_bar(self) -> float:
        return (self.s - self.s_d) / (1.0 - self.s)

    @property
    def q_tilde(self) -> float:
        return (self.q - 1) / float(self.q - self.n) ** self.n

    @property
    def coefficients(self) -> np.ndarray:
        """b_0..b_{n+1}, 按升幂排列"""
        n, t, qt = self.n, self.t_tilde, self.q_tilde
        b = np.zeros(n + 2)
        b[0] = qt * t
        for k in range(1, n):
            b[k] = (t * math.comb(n, k) * (-n) ** k - math.comb(n, k - 1) * (-n) ** (k - 1)) * qt
        b[n] = (t * (-n) ** n - n * (-n) ** (n - 1)) * qt - self.s_bar
        b[n + 1] = -1.0 - (-n) ** n * qt
        return b

    def interval(self) -> Tuple[float, float]:
        """ps 的可行区间, 同时保证 p1 ∈ [0, 1] 与 n·ps ≤ 1"""
        s, s_d, n = self.s, self.s_d, self.n
        lower = {"0": 0.0, "(s_d-s)/(1-s)": (s_d - s) / (1.0 - s)}
        upper = {"s_d/(1-s)": s_d / (1.0 - s), "1/n": 1.0 / n}
        return _named_bounds(lower, upper, "ps")

    def scaled_residual(self, ps: float) -> float:
        terms = self.coefficients * ps ** np.arange(self.n + 2)
        scale = float(np.sum(np.abs(terms)))
        return abs(float(np.sum(terms))) / scale if scale else 0.0

    def transcendental(self, ps: float) -> float:
        """ln LHS - ln RHS, 在可行区间内严格递减"""
        s, s_d, q, n = self.s, self.s_d, self.q, self.n
        lhs = math.log(q - 1) + math.log(s_d - (1.0 - s) * ps) - math.log(s - s_d + (1.0 - s) * ps)
        rhs = n * (math.log(q - n) + math.log(ps) - math.log(1.0 - n * ps))
        return lhs - rhs


def sss_stationarity(params: ShareParams) -> float:
    """|p1·pcinv^n - p1inv·ps^n|"""
    n = params.n
    return abs(params.p1 * params.pcinv ** n - params.p1inv * params.ps ** n)


def solve_sss(source: SourceModel, s_d: float, n: int, alphas: Tuple[int, ...] = (),
              max_dense_q: int = DEFAULT_MAX_DENSE_Q, xtol: float = BISECTION_XTOL) -> SolveResult:
    """n 份额共享在份额稀疏度 s_d 下的最优 (p1, ps)"""
    q, s = source.field.q, source.s
    if not isinstance(n, (int, np.integer)) or not 2 <= n < q:
        raise InvalidParametersError(f"share count n={n} must satisfy 2 <= n < q={q}")
    if s >= 1.0:
        raise InfeasibleError("s = 1 leaves no nonzero entries: ps is undefined since 1-s = 0")
    if not 1.0 / q - BOUND_SLACK <= s_d < 1.0:
        raise InfeasibleError(f"share sparsity s_d = {s_d} must lie in [1/q, 1) = [{1.0 / q:.12g}, 1)")

    poly = SssPolynomial(s, s_d, q, int(n))
    lo, hi = poly.interval()
    if hi - lo <= BOUND_SLACK:
        ps, iterations = 0.5 * (lo + hi), 0
    else:
        a, b = _open_bracket(poly.transcendental, lo, hi)
        ps, info = optimize.bisect(poly.transcendental, a, b, xtol=xtol, maxiter=500, full_output=True)
        iterations = int(info.iterations)

    p1 = (s_d - (1.0 - s) * ps) / s
    if p1 < -BOUND_SLACK or p1 > 1.0 + BOUND_SLACK:
        raise InfeasibleError(f"p1 = {p1:.12g} falls outside [0, 1] for s_d = {s_d}")
    params = ShareParams(source.field, int(n), min(max(p1, 0.0), 1.0), float(ps), tuple(alphas))

    polynomial_residual = poly.scaled_residual(float(ps))
    if polynomial_residual > POLYNOMIAL_RESIDUAL_TOL:
        logger.warning("⚠️ 多项式交叉校验残差偏大", extra={"context": {
            "q": q, "s": s, "s_d": s_d, "n": n, "residual": polynomial_residual}})

    constraint_residual = abs(params.predicted_sparsity(s) - s_d)
    leakage = sss_leakage(params, source, max_dense_q)
    logger.info("✅ 共享参数求解完成", extra={"context": {
        "q": q, "s": s, "s_d": s_d, "n": n, "p1": params.p1, "ps": params.ps, "iterations": iterations}})
    return SolveResult(params=params, leakage=leakage, residual=sss_stationarity(params),
                       iterations=iterations, method="bisection", constraint_residual=constraint_residual,
                       polynomial_residual=polynomial_residual)


# ==================== 等稀疏度最优性 ====================

@dataclass(frozen=True)
class EqualSparsityReport:
    """s_δ 扫描结果; 不可行点的泄露为 nan"""

    s_avg: float
    deltas: Tuple[float, ...]
    totals: Tuple[float, ...]

    @property
    def feasible(self) -> List[Tuple[float, float]]:
        return [(d, t) for d, t in zip(self.deltas, self.totals) if not math.isnan(t)]

    @property
    def argmin_delta(self) -> float:
        return min(self.feasible, key=lambda item: item[1])[0]

    @property
    def total_at_zero(self) -> float:
        return dict(self.feasible)[0.0]

    @property
    def minimal_at_zero(self) -> bool:
        return all(self.total_at_zero <= total + 1e-12 for _, total in self.feasible)

    @property
    def symmetry_deviation(self) -> float:
        values = dict(self.feasible)
        gaps = [abs(total - values[-delta]) for delta, total in values.items() if -delta in values]
        return max(gaps) if gaps else 0.0


def verify_equal_sparsity_optimal(source: SourceModel, s_avg: float, grid_step: float,
                                  delta_max: Optional[float] = None) -> EqualSparsityReport:
    """扫描 s_δ, 在 (s_avg-s_δ, s_avg+s_δ) 处求解一次一密, 检查总泄露是否在 s_δ=0 处最小

    delta_max 缺省时取网格上两侧都可行的最大值
    """
    if grid_step <= 0:
        raise InvalidParametersError(f"grid step {grid_step} must be positive")

    def total_at(delta: float) -> float:
        try:
            return solve_otp(source, s_avg - delta, s_avg + delta, max_dense_q=0).leakage.total
        except InfeasibleError:
            return math.nan

    if delta_max is None:
        steps = 0
        while steps < int(1.0 / grid_step) and not math.isnan(total_at((steps + 1) * grid_step)):
            steps += 1
    else:
        steps = int(math.floor(delta_max / grid_step + 1e-9))

    deltas = [k * grid_step for k in range(-steps, steps + 1)]
    deltas = [0.0 if k == 0 else d for k, d in zip(range(-steps, steps + 1), deltas)]
    totals = tuple(total_at(delta) for delta in deltas)
    report = EqualSparsityReport(s_avg=s_avg, deltas=tuple(deltas), totals=totals)
    logger.info("📋 等稀疏度扫描完成", extra={"context": {
        "s_avg": s_avg, "points": len(deltas), "feasible": len(report.feasible)}})
    return report


# ==================== 两集群方案的 p* ====================

def collusion_factor(rho2: int, z: int, n2: int) -> float:
    """min{ρ2·z/n2, 1}"""
    return min(rho2 * z / n2, 1.0)


def semi_perfect_leakage(p: float, source: SourceModel) -> float:
    """半完美填充下 R 份额的元素级泄露 L1(p), q 进制"""
    return otp_objective(semi_perfect_params(p, source.field), source.s)[0] / math.log(source.field.q)


def solve_pstar(source: SourceModel, cluster: "ClusterPlan", eps_rel: float,
                z: Optional[int] = None, xtol: float = PSTAR_XTOL) -> float:
    """满足 min{ρ2·z/n2,1}·L1(p)/H ≤ eps_rel 的最大 p ∈ [1/q, 1)

    z 缺省取 cluster.z; 扫描时可传入 1..n2 的任意值
    """
    if not 0.0 <= eps_rel <= 1.0:
        raise InvalidParametersError(f"eps_rel={eps_rel} must lie in [0, 1]")
    z = cluster.z if z is None else int(z)
    if not 1 <= z <= cluster.n2:
        raise InvalidParametersError(f"z={z} must lie in [1, n2={cluster.n2}]")
    q = source.field.q
    floor = 1.0 / q
    if eps_rel == 0.0:
        return floor

    factor = collusion_factor(cluster.rho2, z, cluster.n2)
    entropy = source.entry_entropy()

    def excess(p: float) -> float:
        return factor * semi_perfect_leakage(p, source) / entropy - eps_rel

    ceiling = float(np.nextafter(1.0, 0.0))
    if excess(ceiling) <= 0.0:
        return ceiling
    p = float(optimize.bisect(excess, floor, ceiling, xtol=xtol, maxiter=500))
    # bisect 返回区间中点, 可能落在预算之外
    while excess(p) > 0.0:
        p = max(p - xtol, floor)
    return p
