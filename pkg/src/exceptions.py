#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 异常定义模块

所有库函数抛出的异常都派生自 SparseShareError, CLI 据此映射退出码
"""

from typing import Iterable, Optional, Tuple


class SparseShareError(Exception):
    """Sparse-Share 基础异常"""

    exit_code = 1


class FieldMismatchError(SparseShareError, ValueError):
    """运算对象属于不同的有限域, 或维度不匹配"""


class InvalidParametersError(SparseShareError, ValueError):
    """参数超出允许范围"""


class InfeasibleError(InvalidParametersError):
    """稀疏度目标不在可行区间内"""

    exit_code = 3


class SupportError(SparseShareError, ValueError):
    """KL 散度的支撑集条件不满足"""

    def __init__(self, symbol: int, message: Optional[str] = None):
        self.symbol = symbol
        super().__init__(message or f"p has mass at symbol {symbol} where r is zero")


class RecoveryError(SparseShareError, RuntimeError):
    """收到的响应不足以恢复结果"""

    exit_code = 4

    def __init__(self, message: str, deficient: Iterable = ()):
        self.deficient: Tuple = tuple(deficient)
        super().__init__(message)


class FormatError(SparseShareError, ValueError):
    """文本文件格式错误"""

    exit_code = 2
