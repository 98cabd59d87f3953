#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 工具函数和数据验证模块

包含参数验证、数值格式化、随机数流派生和结构化日志
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from src.exceptions import InvalidParametersError


class DataValidator:
    """数据验证器"""

    @staticmethod
    def validate_probability(value: float, name: str, tol: float = 1e-12) -> float:
        """验证概率值在 [0, 1] 内, 容差内的越界值被截断"""
        if value is None or not isinstance(value, (int, float, np.floating)) or math.isnan(value):
            raise InvalidParametersError(f"{name} must be a real number, got {value!r}")
        if value < -tol or value > 1 + tol:
            raise InvalidParametersError(f"{name}={value} is outside [0, 1]")
        return float(min(max(value, 0.0), 1.0))

    @staticmethod
    def validate_positive_int(value: Any, name: str, minimum: int = 1) -> int:
        """验证整数下界"""
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise InvalidParametersError(f"{name} must be an integer, got {value!r}")
        if value < minimum:
            raise InvalidParametersError(f"{name}={value} must be >= {minimum}")
        return int(value)

    @staticmethod
    def validate_divides(divisor: int, dividend: int, constraint: str) -> None:
        """验证整除约束, 报错信息中写出约束本身"""
        if divisor <= 0 or dividend % divisor != 0:
            raise InvalidParametersError(
                f"divisibility constraint {constraint} violated: {divisor} does not divide {dividend}"
            )

    @staticmethod
    def validate_seed(seed: Any) -> int:
        """验证随机种子为非负 64 位整数"""
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise InvalidParametersError(f"seed must be an integer, got {seed!r}")
        if seed < 0 or seed >= 2 ** 64:
            raise InvalidParametersError(f"seed={seed} must be a 64-bit non-negative integer")
        return int(seed)


class FormatUtils:
    """格式化工具类"""

    @staticmethod
    def format_number(value: Any, digits: int = 12) -> str:
        """按有效数字格式化数值, 保证 CSV 输出跨平台稳定"""
        if value is None:
            return ""
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        value = float(value)
        if math.isnan(value):
            return "nan"
        if value == 0.0:
            return "0"
        return f"{value:.{digits}g}"

    @staticmethod
    def format_key_values(pairs: Dict[str, Any], digits: int = 12) -> str:
        """格式化为 key=value 行"""
        return "\n".join(f"{key}={FormatUtils.format_number(val, digits) if not isinstance(val, str) else val}"
                         for key, val in pairs.items())

    @staticmethod
    def parse_int_list(text: str) -> List[int]:
        """解析逗号分隔的整数列表"""
        if text is None or not text.strip():
            return []
        return [int(item) for item in text.split(",") if item.strip()]

    @staticmethod
    def parse_float_list(text: str) -> List[float]:
        """解析逗号分隔的浮点数列表"""
        if text is None or not text.strip():
            return []
        return [float(item) for item in text.split(",") if item.strip()]


class RandomUtils:
    """随机数流工具类

    所有公开接口都显式接收 64 位种子, 不使用全局随机数生成器
    """

    @staticmethod
    def derive_seed(seed: int, *tags: int) -> int:
        """由 (seed, tags...) 派生独立的子种子"""
        state = np.random.SeedSequence([DataValidator.validate_seed(seed), *tags]).generate_state(1, np.uint64)
        return int(state[0])

    @staticmethod
    def generator(seed: int, *tags: int) -> np.random.Generator:
        """创建由 (seed, tags...) 确定的生成器"""
        return np.random.default_rng(np.random.SeedSequence([DataValidator.validate_seed(seed), *tags]))

    @staticmethod
    def row_generator(seed: int, row: int) -> np.random.Generator:
        """按行派生随机数流, 结果与线程数无关"""
        return RandomUtils.generator(seed, row)

    @staticmethod
    def map_rows(func: Callable[[int], Any], rows: int, workers: Optional[int] = None) -> List[Any]:
        """按行映射, 可选线程池并行, 结果保持行序"""
        if not workers or workers <= 1 or rows <= 1:
            return [func(row) for row in range(rows)]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(func, range(rows)))


class StructuredFormatter(logging.Formatter):
    """结构化日志格式: [时间] [级别] 消息 | {上下文 JSON}"""

    def format(self, record: logging.LogRecord) -> str:
        context = getattr(record, "context", None)
        entry = LogUtils.format_log_entry(record.levelname, record.getMessage(), context,
                                          datetime.fromtimestamp(record.created))
        if record.exc_info:
            entry += "\n" + self.formatException(record.exc_info)
        return entry


class LogUtils:
    """日志工具类"""

    @staticmethod
    def format_log_entry(level: str, message: str, extra_data: Dict = None,
                         timestamp: Optional[datetime] = None) -> str:
        """格式化日志条目"""
        timestamp = (timestamp or datetime.now()).strftime("%Y-%m-%d %H:%M:%S")
        log_entry = f"[{timestamp}] [{level}] {message}"

        if extra_data:
            extra_str = json.dumps(extra_data, ensure_ascii=False, default=str)
            log_entry += f" | {extra_str}"

        return log_entry

    @staticmethod
    def setup_logging(level: str = "WARNING", debug: bool = False) -> logging.Logger:
        """为 src 包安装结构化日志处理器"""
        logger = logging.getLogger("src")
        resolved = logging.DEBUG if debug else getattr(logging, str(level).upper(), logging.WARNING)
        logger.setLevel(resolved)

        if not any(isinstance(h.formatter, StructuredFormatter) for h in logger.handlers):
            handler = logging.StreamHandler()
            handler.setFormatter(StructuredFormatter())
            logger.addHandler(handler)

        return logger

