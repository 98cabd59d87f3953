#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 文本格式模块

负责矩阵、份额、置换文件的格式化、解析和校验
"""

import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from src.exceptions import FormatError, SparseShareError
from src.field import FieldMatrix, FieldSpec
from src.shuffle import PermTriple

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class MatrixParser:
    """矩阵文本格式解析器

    矩阵: 首行 `q <q> rows <m> cols <n>`, 随后 m 行各 n 个空格分隔的整数;
    份额: 在矩阵前增加一行 `alpha <v> share-index <i> n <n>`;
    置换: 每行一个置换, 0 起始的空格分隔下标
    """

    MATRIX_KEYS = ("q", "rows", "cols")
    SHARE_KEYS = ("alpha", "share-index", "n")

    def __init__(self):
        """初始化解析器"""
        logger.debug("📋 矩阵解析器初始化完成")

    # ==================== 头部 ====================

    @staticmethod
    def _parse_header(line: str, keys: Tuple[str, ...]) -> List[int]:
        tokens = line.split()
        if len(tokens) != 2 * len(keys) or tuple(tokens[0::2]) != keys:
            expected = " ".join(f"{key} <{key}>" for key in keys)
            raise FormatError(f"bad header {line.strip()!r}, expected {expected!r}")
        try:
            values = [int(token) for token in tokens[1::2]]
        except ValueError as e:
            raise FormatError(f"non-integer value in header {line.strip()!r}") from e
        if any(value < 0 for value in values):
            raise FormatError(f"negative value in header {line.strip()!r}")
        return values

    @staticmethod
    def _field_for(q: int) -> FieldSpec:
        try:
            return FieldSpec.from_q(q)
        except SparseShareError as e:
            raise FormatError(f"unsupported field size q={q}: {e}") from e

    # ==================== 矩阵 ====================

    def format_matrix(self, matrix: FieldMatrix) -> str:
        lines = [f"q {matrix.field.q} rows {matrix.rows} cols {matrix.cols}"]
        lines.extend(" ".join(str(value) for value in row) for row in matrix.data.tolist())
        return "\n".join(lines) + "\n"

    def _parse_matrix_lines(self, lines: List[str]) -> FieldMatrix:
        if not lines:
            raise FormatError("empty matrix text")
        q, rows, cols = self._parse_header(lines[0], self.MATRIX_KEYS)
        if rows < 1 or cols < 1:
            raise FormatError(f"matrix needs positive rows and cols, got {rows}x{cols}")
        field = self._field_for(q)
        body = lines[1:]
        if len(body) != rows:
            raise FormatError(f"header announces {rows} rows, found {len(body)}")

        data = np.empty((rows, cols), dtype=np.int64)
        for index, line in enumerate(body):
            tokens = line.split()
            if len(tokens) != cols:
                raise FormatError(f"row {index} has {len(tokens)} entries, expected {cols}")
            try:
                data[index] = [int(token) for token in tokens]
            except ValueError as e:
                raise FormatError(f"row {index} contains a non-integer entry") from e

        bad = np.argwhere((data < 0) | (data >= q))
        if bad.size:
            row, col = (int(v) for v in bad[0])
            raise FormatError(f"entry ({row}, {col}) = {int(data[row, col])} outside [0, {q})")
        return FieldMatrix(data, field, validate=False)

    def parse_matrix(self, text: str) -> FieldMatrix:
        return self._parse_matrix_lines(self._content_lines(text))

    # ==================== 份额 ====================

    def format_share(self, share: FieldMatrix, alpha: int, share_index: int, n: int) -> str:
        return f"alpha {alpha} share-index {share_index} n {n}\n" + self.format_matrix(share)

    def parse_share(self, text: str) -> Tuple[int, int, int, FieldMatrix]:
        """返回 (alpha, share_index, n, 份额矩阵)"""
        lines = self._content_lines(text)
        if not lines:
            raise FormatError("empty share text")
        alpha, share_index, n = self._parse_header(lines[0], self.SHARE_KEYS)
        matrix = self._parse_matrix_lines(lines[1:])
        if not 0 < alpha < matrix.field.q:
            raise FormatError(f"alpha={alpha} is not a nonzero element of {matrix.field.field_id}")
        if share_index >= n:
            raise FormatError(f"share-index {share_index} outside [0, {n})")
        return alpha, share_index, n, matrix

    # ==================== 置换 ====================

    def format_permutations(self, perms: PermTriple) -> str:
        return "".join(" ".join(str(v) for v in perm.tolist()) + "\n"
                       for perm in (perms.perm1, perms.perm2, perms.perm3))

    def parse_permutations(self, text: str) -> PermTriple:
        lines = self._content_lines(text)
        if len(lines) != 3:
            raise FormatError(f"permutation file needs 3 lines, found {len(lines)}")
        try:
            perms = [np.array([int(token) for token in line.split()], dtype=np.int64) for line in lines]
            return PermTriple(*perms)
        except ValueError as e:
            raise FormatError(f"invalid permutation: {e}") from e

    # ==================== 文件 ====================

    @staticmethod
    def _content_lines(text: str) -> List[str]:
        return [line for line in text.splitlines() if line.strip()]

    @staticmethod
    def _read(path: PathLike) -> str:
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise FormatError(f"cannot read {path}: {e}") from e

    @staticmethod
    def _write(path: PathLike, text: str) -> None:
        Path(path).write_text(text, encoding="utf-8")
        logger.debug("💾 文件已写入", extra={"context": {"path": str(path)}})

    def read_matrix(self, path: PathLike) -> FieldMatrix:
        return self.parse_matrix(self._read(path))

    def write_matrix(self, path: PathLike, matrix: FieldMatrix) -> None:
        self._write(path, self.format_matrix(matrix))

    def read_share(self, path: PathLike) -> Tuple[int, int, int, FieldMatrix]:
        return self.parse_share(self._read(path))

    def write_share(self, path: PathLike, share: FieldMatrix, alpha: int, share_index: int, n: int) -> None:
        self._write(path, self.format_share(share, alpha, share_index, n))

    def read_permutations(self, path: PathLike) -> PermTriple:
        return self.parse_permutations(self._read(path))

    def write_permutations(self, path: PathLike, perms: PermTriple) -> None:
        self._write(path, self.format_permutations(perms))


# 全局解析器实例
matrix_parser = MatrixParser()
