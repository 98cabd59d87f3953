#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 命令行模块

负责参数解析、命令分发和退出码映射:
0 成功, 2 用法或输入格式错误, 3 参数不可行, 4 恢复失败, 1 其他错误
"""

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

from src.app import SparseShareApp
from src.cluster import ClusterPlan
from src.config_manager import load_plan_file, load_scheme_file
from src.exceptions import FormatError, InfeasibleError, RecoveryError, SparseShareError
from src.field import FieldSpec
from src.language_manager import language_manager
from src.matmul import MMScheme, part_width
from src.matrix_io import matrix_parser
from src.optimizer import solve_otp, solve_pstar, solve_sss
from src.otp import PadParams, otp_leakage
from src.shuffle import shuffle_pair, unshuffle_product
from src.sim import LatencyModel, gen_matrix, leakage_experiment, run_campaign, write_csv
from src.sss import ShareParams, deal, reconstruct, sss_leakage
from src.stats import SourceModel
from src.utils import FormatUtils

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_RECOVERY = 4

CURVE_COLUMNS = ("q", "s", "n", "s_d", "ps_star", "p1_star", "leak_rel", "status")
PSTAR_COLUMNS = ("eps_rel", "z", "p_star")


def exit_code_for(error: BaseException) -> int:
    """异常到退出码的映射"""
    if isinstance(error, FormatError):
        return EXIT_USAGE
    if isinstance(error, InfeasibleError):
        return EXIT_INFEASIBLE
    if isinstance(error, RecoveryError):
        return EXIT_RECOVERY
    if isinstance(error, SparseShareError):
        return error.exit_code
    return EXIT_ERROR


# ==================== 参数解析 ====================

def _field_from(q: int, kind: Optional[str] = None) -> FieldSpec:
    if kind in (None, "", "auto"):
        return FieldSpec.from_q(q)
    if kind == "prime":
        return FieldSpec.prime(q)
    if kind in ("gf256", FieldSpec.BINARY_EXTENSION):
        return FieldSpec.gf256()
    raise FormatError(f"unknown field kind {kind!r}")


def _sparsity_value(text: str) -> Callable[[int], float]:
    """解析稀疏度参数, 允许写成 1/q"""
    if text.strip().lower() == "1/q":
        return lambda q: 1.0 / q
    value = float(text)
    return lambda q: value


def _partial_list(text: Optional[str]) -> List[Tuple[int, int]]:
    """解析 "节点:任务数,节点:任务数" """
    if not text:
        return []
    pairs = []
    for item in text.split(","):
        worker, sep, count = item.partition(":")
        if not sep:
            raise FormatError(f"partial straggler {item!r} must look like worker:count")
        pairs.append((int(worker), int(count)))
    return pairs


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(prog="sparse-share", description=language_manager.t("cli.description"))
    parser.add_argument("--config", help="config file (default: $SPARSE_SHARE_CONFIG or config.ini)")
    parser.add_argument("--lang", choices=("en", "zh"), help="language of status messages")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--threads", type=int, help="worker threads (default: $SPARSE_SHARE_THREADS or config)")
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--out", help="output file (default: stdout)")
        return sub

    sub = command("solve-otp", "optimal sparse one-time pad parameters")
    sub.add_argument("--q", type=int, required=True)
    sub.add_argument("--s", type=float, required=True)
    sub.add_argument("--s-r", type=float, required=True, help="target sparsity of R")
    sub.add_argument("--s-ar", type=float, required=True, help="target sparsity of A+R")

    sub = command("solve-sss", "optimal n-share parameters")
    sub.add_argument("--q", type=int, required=True)
    sub.add_argument("--s", type=float, required=True)
    sub.add_argument("--s-d", type=_sparsity_value, required=True, help="target share sparsity, or 1/q")
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--alphas", type=FormatUtils.parse_int_list, default=[])

    sub = command("curve", "relative leakage over a share-sparsity grid")
    sub.add_argument("--q", type=int, required=True)
    sub.add_argument("--s", type=float, required=True)
    sub.add_argument("--sd-min", type=_sparsity_value, required=True)
    sub.add_argument("--sd-max", type=float, required=True)
    sub.add_argument("--step", type=float, required=True)
    sub.add_argument("--n-list", type=FormatUtils.parse_int_list, required=True)

    sub = command("pstar-curve", "largest semi-perfect pad parameter per leakage budget and z")
    sub.add_argument("--q", type=int, required=True)
    sub.add_argument("--s", type=float, required=True)
    sub.add_argument("--n2", type=int, required=True)
    sub.add_argument("--rho2", type=int, required=True)
    sub.add_argument("--eps-list", type=FormatUtils.parse_float_list, required=True)

    sub = command("leakage", "leakage report for one-time pad or n-share parameters")
    sub.add_argument("--q", type=int, required=True)
    sub.add_argument("--s", type=float, required=True)
    sub.add_argument("--construction", choices=("otp", "sss"), required=True)
    sub.add_argument("--p1", type=float)
    sub.add_argument("--p2", type=float)
    sub.add_argument("--p3", type=float)
    sub.add_argument("--ps", type=float)
    sub.add_argument("--n", type=int, default=2)
    sub.add_argument("--empirical", type=int, metavar="ENTRIES", help="also estimate from sampled entries")
    sub.add_argument("--share-index", type=int, default=0)
    sub.add_argument("--seed", type=int, default=0)

    sub = command("gen", "random sparse matrix")
    sub.add_argument("--q", type=int, required=True)
    sub.add_argument("--s", type=float, required=True)
    sub.add_argument("--rows", type=int, required=True)
    sub.add_argument("--cols", type=int, required=True)
    sub.add_argument("--seed", type=int, required=True)

    sub = command("deal", "split a matrix into n shares (writes <out>.share<i>)")
    sub.add_argument("--in", dest="input", required=True)
    sub.add_argument("--n", type=int, default=2)
    sub.add_argument("--s", type=float, help="source sparsity (default: measured from the input)")
    sub.add_argument("--s-d", type=_sparsity_value, help="target share sparsity, or 1/q")
    sub.add_argument("--uniform", action="store_true", help="classical uniform pad")
    sub.add_argument("--alphas", type=FormatUtils.parse_int_list, default=[])
    sub.add_argument("--seed", type=int, required=True)

    sub = command("reconstruct", "recover a matrix from two share files")
    sub.add_argument("--shares", nargs=2, required=True, metavar="SHARE")

    sub = command("permute", "shuffle A and B (writes <out>.A, <out>.B, <out>.perm) or unshuffle a product")
    sub.add_argument("--a")
    sub.add_argument("--b")
    sub.add_argument("--product", help="shuffled product to restore")
    sub.add_argument("--perms", help="permutation file written by a previous shuffle")
    sub.add_argument("--identity", action="store_true")
    sub.add_argument("--seed", type=int, default=0)

    for name, help_text, source in (("mm-sim", "distributed multiplication campaign", "--scheme"),
                                    ("cluster-sim", "two-cluster campaign", "--plan")):
        sub = command(name, help_text)
        sub.add_argument(source, required=True)
        sub.add_argument("--latency", default="shifted-exponential:shift=1,rate=1")
        sub.add_argument("--stragglers", type=FormatUtils.parse_int_list, default=[])
        sub.add_argument("--partial", type=_partial_list, default=[])
        sub.add_argument("--trials", type=int, default=100)
        sub.add_argument("--seed", type=int)
        sub.add_argument("--measure-leakage", action="store_true")
        sub.add_argument("--strict", action="store_true", help="exit 4 if any trial fails to recover")

    return parser


# ==================== 命令执行 ====================

class CommandRunner:
    """命令执行器, 每个命令在计算前先校验参数"""

    def __init__(self, app: SparseShareApp, stdout: TextIO, stderr: TextIO):
        """初始化命令执行器"""
        self.app = app
        self.stdout = stdout
        self.stderr = stderr
        self.digits = app.digits
        self.threads = app.threads

    # ==================== 输出 ====================

    def fmt(self, value: Any) -> str:
        return value if isinstance(value, str) else FormatUtils.format_number(value, self.digits)

    def _emit(self, text: str, out: Optional[str]) -> None:
        if out:
            Path(out).write_text(text, encoding="utf-8")
            self.status("cli.written", path=out)
        else:
            self.stdout.write(text)

    def _emit_csv(self, columns: Sequence[str], rows: Iterable[Sequence[Any]], out: Optional[str]) -> None:
        stream = open(out, "w", encoding="utf-8", newline="") if out else self.stdout
        try:
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([self.fmt(value) for value in row])
        finally:
            if out:
                stream.close()
                self.status("cli.written", path=out)

    def _emit_pairs(self, pairs: Dict[str, Any], out: Optional[str]) -> None:
        self._emit(FormatUtils.format_key_values(pairs, self.digits) + "\n", out)

    def status(self, key: str, **values) -> None:
        self.stderr.write(language_manager.t(key).format(**values) + "\n")

    def _map(self, func: Callable, items: Sequence) -> List:
        if self.threads <= 1 or len(items) <= 1:
            return [func(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            return list(executor.map(func, items))

    # ==================== 参数求解 ====================

    def cmd_solve_otp(self, args) -> int:
        source = SourceModel(FieldSpec.from_q(args.q), args.s)
        result = solve_otp(source, args.s_r, args.s_ar, self.app.max_dense_q)
        params, report = result.params, result.leakage
        self._emit_pairs({
            "q": args.q, "s": args.s, "s_R": args.s_r, "s_AR": args.s_ar,
            "p1": params.p1, "p2": params.p2, "p3": params.p3,
            "L1": report.per_share[0], "L2": report.per_share[1],
            "L1_rel": report.relative_per_share[0], "L2_rel": report.relative_per_share[1],
            "total": report.total, "total_rel": report.relative_total,
            "method": result.method, "stationarity_residual": result.residual,
        }, args.out)
        return EXIT_OK

    def cmd_solve_sss(self, args) -> int:
        field = FieldSpec.from_q(args.q)
        source = SourceModel(field, args.s)
        s_d = args.s_d(args.q)
        result = solve_sss(source, s_d, args.n, tuple(args.alphas), self.app.max_dense_q, self.app.bisection_xtol)
        params, report = result.params, result.leakage
        self._emit_pairs({
            "q": args.q, "s": args.s, "n": args.n, "s_d": s_d,
            "p1": params.p1, "ps": params.ps,
            "leak_per_share": report.per_share[0], "leak_rel": report.relative_per_share[0],
            "total": report.total, "total_rel": report.relative_total,
            "stationarity_residual": result.residual, "polynomial_residual": result.polynomial_residual,
        }, args.out)
        return EXIT_OK

    def cmd_curve(self, args) -> int:
        if args.step <= 0:
            raise FormatError(f"--step must be positive, got {args.step}")
        source = SourceModel(FieldSpec.from_q(args.q), args.s)
        sd_min = args.sd_min(args.q)
        count = int(math.floor((args.sd_max - sd_min) / args.step + 1e-9)) + 1
        if count < 1:
            raise FormatError(f"empty grid: sd-min {sd_min} exceeds sd-max {args.sd_max}")
        grid = [(n, sd_min + k * args.step) for n in args.n_list for k in range(count)]

        def point(item: Tuple[int, float]) -> Tuple:
            n, s_d = item
            try:
                result = solve_sss(source, s_d, n, max_dense_q=0, xtol=self.app.bisection_xtol)
            except InfeasibleError as e:
                logger.debug(f"⚠️ 不可行网格点: {e}")
                return (args.q, args.s, n, s_d, math.nan, math.nan, math.nan, "infeasible")
            return (args.q, args.s, n, s_d, result.params.ps, result.params.p1,
                    result.leakage.relative_per_share[0], "ok")

        rows = self._map(point, grid)
        infeasible = sum(1 for row in rows if row[-1] != "ok")
        if infeasible:
            self.status("cli.infeasible_row", count=infeasible)
        self._emit_csv(CURVE_COLUMNS, rows, args.out)
        return EXIT_OK

    def cmd_pstar_curve(self, args) -> int:
        source = SourceModel(FieldSpec.from_q(args.q), args.s)
        plan = ClusterPlan(n1=args.n2, n2=args.n2, rho1=args.rho2, rho2=args.rho2, z=1)
        grid = [(eps, z) for eps in args.eps_list for z in range(1, args.n2 + 1)]

        def point(item: Tuple[float, int]) -> Tuple:
            eps, z = item
            return eps, z, solve_pstar(source, plan, eps, z=z, xtol=self.app.pstar_xtol)

        self._emit_csv(PSTAR_COLUMNS, self._map(point, grid), args.out)
        return EXIT_OK

    def cmd_leakage(self, args) -> int:
        field = FieldSpec.from_q(args.q)
        source = SourceModel(field, args.s)
        if args.construction == "otp":
            if None in (args.p1, args.p2, args.p3):
                raise FormatError("--construction otp needs --p1, --p2 and --p3")
            params = PadParams(field, args.p1, args.p2, args.p3)
            report = otp_leakage(params, source, self.app.max_dense_q)
        else:
            if None in (args.p1, args.ps):
                raise FormatError("--construction sss needs --p1 and --ps")
            params = ShareParams(field, args.n, args.p1, args.ps)
            report = sss_leakage(params, source, self.app.max_dense_q)

        pairs: Dict[str, Any] = {"units": report.units, "entry_entropy": report.entry_entropy}
        for index, (value, relative) in enumerate(zip(report.per_share, report.relative_per_share)):
            pairs[f"share{index}"] = value
            pairs[f"share{index}_rel"] = relative
        pairs["total"] = report.total
        pairs["total_rel"] = report.relative_total
        if report.channel is not None:
            pairs["channel_deviation"] = report.max_channel_deviation()

        if args.empirical:
            comparison = leakage_experiment(params, source, args.empirical, args.seed, args.share_index,
                                            self.app.bootstrap_replicates, self.threads)
            pairs.update({"empirical": comparison.empirical, "empirical_se": comparison.standard_error,
                          "plugin": comparison.plugin, "within_3se": comparison.within(3.0)})
            self.status("cli.empirical_check", empirical=self.fmt(comparison.empirical),
                        se=self.fmt(comparison.standard_error), plugin=self.fmt(comparison.plugin),
                        analytical=self.fmt(comparison.analytical))
        self.status("cli.leakage_header")
        self._emit_pairs(pairs, args.out)
        return EXIT_OK

    # ==================== 编码与解码 ====================

    def cmd_gen(self, args) -> int:
        source = SourceModel(FieldSpec.from_q(args.q), args.s)
        matrix = gen_matrix(source, args.rows, args.cols, args.seed)
        self._emit(matrix_parser.format_matrix(matrix), args.out)
        return EXIT_OK

    def cmd_deal(self, args) -> int:
        if args.uniform == (args.s_d is not None):
            raise FormatError("deal needs exactly one of --s-d and --uniform")
        if not args.out:
            raise FormatError("deal writes one file per share and needs --out")
        A = matrix_parser.read_matrix(args.input)
        alphas = tuple(args.alphas)
        if args.uniform:
            params = ShareParams.uniform(A.field, args.n, alphas)
        else:
            source = SourceModel(A.field, args.s if args.s is not None else A.sparsity())
            params = solve_sss(source, args.s_d(A.field.q), args.n, alphas, max_dense_q=0).params

        dealt = deal(A, params, args.seed, self.threads)
        for index, (alpha, share) in enumerate(dealt.dealer_output()):
            path = f"{args.out}.share{index}"
            matrix_parser.write_share(path, share, alpha, index, params.n)
            self.status("cli.written", path=path)
        return EXIT_OK

    def cmd_reconstruct(self, args) -> int:
        alpha_i, _, _, share_i = matrix_parser.read_share(args.shares[0])
        alpha_j, _, _, share_j = matrix_parser.read_share(args.shares[1])
        matrix = reconstruct(share_i, alpha_i, share_j, alpha_j)
        if args.out:
            matrix_parser.write_matrix(args.out, matrix)
            self.status("cli.reconstructed", path=args.out)
        else:
            self.stdout.write(matrix_parser.format_matrix(matrix))
        return EXIT_OK

    def cmd_permute(self, args) -> int:
        if args.product:
            if not args.perms or args.a or args.b:
                raise FormatError("--product needs --perms and excludes --a/--b")
            restored = unshuffle_product(matrix_parser.read_matrix(args.product),
                                         matrix_parser.read_permutations(args.perms))
            self._emit(matrix_parser.format_matrix(restored), args.out)
            return EXIT_OK

        if not (args.a and args.b and args.out):
            raise FormatError("shuffling needs --a, --b and --out")
        shuffled_a, shuffled_b, perms = shuffle_pair(matrix_parser.read_matrix(args.a),
                                                     matrix_parser.read_matrix(args.b),
                                                     args.seed, identity=args.identity)
        matrix_parser.write_matrix(f"{args.out}.A", shuffled_a)
        matrix_parser.write_matrix(f"{args.out}.B", shuffled_b)
        matrix_parser.write_permutations(f"{args.out}.perm", perms)
        for suffix in ("A", "B", "perm"):
            self.status("cli.written", path=f"{args.out}.{suffix}")
        return EXIT_OK

    # ==================== 仿真 ====================

    def _campaign(self, args, config, source: SourceModel, sizes: Tuple[int, int, int], seed: int) -> int:
        if args.trials < 1:
            raise FormatError(f"--trials must be positive, got {args.trials}")
        latency = LatencyModel.from_spec(args.latency, args.stragglers, args.partial)
        seeds = [seed + k for k in range(args.trials)]
        results = run_campaign(config, latency, sizes, seeds, source,
                               measure_leakage=args.measure_leakage, threads=self.threads)

        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as stream:
                write_csv(results, stream, self.digits)
            self.status("cli.written", path=args.out)
        else:
            write_csv(results, self.stdout, self.digits)

        recovered = sum(1 for result in results if result.recovered)
        self.status("cli.campaign_summary", recovered=recovered, trials=len(results))
        if args.strict and recovered < len(results):
            failed = [result.seed for result in results if not result.recovered]
            raise RecoveryError(f"{len(failed)} trials did not recover, seeds {failed[:10]}", failed)
        return EXIT_OK

    def cmd_mm_sim(self, args) -> int:
        values = load_scheme_file(args.scheme)
        field = _field_from(values["q"], values.get("field"))
        source = SourceModel(field, values["s"])
        variant = values["variant"]
        m, sigma, x = values.get("m", 1), values.get("sigma", 0), values.get("x", 1)
        n = part_width(variant, values["N"], m, sigma, x)
        params = solve_sss(source, values["s_d"], n, max_dense_q=0).params
        scheme = MMScheme(variant, values["N"], params, params, m=m, sigma=sigma, x=x)

        sizes = (values.get("rows", 16), values.get("inner", 4 * scheme.parts), values.get("cols", 16))
        seed = args.seed if args.seed is not None else values.get("seed", 0)
        return self._campaign(args, scheme, source, sizes, seed)

    def cmd_cluster_sim(self, args) -> int:
        values = load_plan_file(args.plan)
        field = _field_from(values["q"], values.get("field"))
        source = SourceModel(field, values["s"])
        plan = ClusterPlan(values["n1"], values["n2"], values["rho1"], values["rho2"], values["z"], values.get("p"))
        if plan.p is None:
            plan = replace(plan, p=solve_pstar(source, plan, values["eps_rel"], xtol=self.app.pstar_xtol))
            logger.info(f"📋 由泄露预算求得 p*={plan.p}")

        rows = values.get("rows", math.lcm(plan.n1, plan.n2))
        sizes = (rows, values.get("inner", 8), values.get("cols", 8))
        seed = args.seed if args.seed is not None else values.get("seed", 0)
        return self._campaign(args, plan, source, sizes, seed)

    def dispatch(self, args) -> int:
        handler = getattr(self, "cmd_" + args.command.replace("-", "_"))
        return handler(args)


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None,
         stderr: Optional[TextIO] = None) -> int:
    """命令行入口, 返回退出码"""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        app = SparseShareApp(config_file=args.config, language=args.lang,
                             verbose=args.verbose, threads=args.threads)
        return CommandRunner(app, stdout, stderr).dispatch(args)
    except KeyboardInterrupt:
        stderr.write(language_manager.t("errors.interrupted") + "\n")
        return 130
    except (SparseShareError, ValueError, OSError) as e:
        code = exit_code_for(e)
        key = {EXIT_USAGE: "errors.usage", EXIT_INFEASIBLE: "errors.infeasible",
               EXIT_RECOVERY: "errors.recovery"}.get(code, "errors.generic")
        logger.debug("❌ 命令失败", exc_info=True)
        stderr.write(language_manager.t(key).format(message=e) + "\n")
        return code
