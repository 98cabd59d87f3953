#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 配置管理模块

负责处理求解器容差、采样线程数、输出格式等设置,
以及乘法方案文件与两集群方案文件的读取
"""

import configparser
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import load_dotenv

from src.exceptions import FormatError
from src.language_manager import language_manager

logger = logging.getLogger(__name__)

ENV_THREADS = "SPARSE_SHARE_THREADS"
ENV_CONFIG = "SPARSE_SHARE_CONFIG"

DEFAULT_CONFIG: Dict[str, Dict[str, str]] = {
    "solver": {
        "bisection_xtol": "1e-14",
        "pstar_xtol": "1e-12",
        "stationarity_tol": "1e-9",
        "polynomial_residual_tol": "1e-8",
    },
    "stats": {
        "max_dense_q": "1024",
        "bootstrap_replicates": "200",
    },
    "sampling": {
        "threads": "1",
    },
    "output": {
        "significant_digits": "12",
    },
    "cli": {
        "language": "en",
    },
    "advanced": {
        "log_level": "WARNING",
        "debug_mode": "false",
    },
}

SCHEME_TYPES = {
    "variant": str, "N": int, "m": int, "sigma": int, "x": int, "q": int, "field": str,
    "s": float, "s_d": float, "seed": int, "rows": int, "inner": int, "cols": int,
}
PLAN_TYPES = {
    "n1": int, "n2": int, "rho1": int, "rho2": int, "z": int, "p": float, "eps_rel": float,
    "q": int, "field": str, "s": float, "seed": int, "rows": int, "inner": int, "cols": int,
}


def _convert(value: str, value_type: type) -> Any:
    """字符串到目标类型的转换, 与 ConfigManager.get 一致"""
    if value_type == bool:
        return value.strip().lower() in ("true", "1", "yes", "on")
    if value_type in (list, dict):
        return json.loads(value)
    return value_type(value.strip())


class ConfigManager:
    """配置管理器 - 负责所有配置的读取与保存

    配置文件不存在时使用内存中的默认值, 只有显式调用 save_config 才会写盘
    """

    def __init__(self, config_file: Optional[str] = None):
        """初始化配置管理器"""
        load_dotenv()
        self.config_file = Path(config_file or os.environ.get(ENV_CONFIG) or "config.ini")
        self.config = configparser.ConfigParser()
        # 键名区分大小写, 方案文件使用 N
        self.config.optionxform = str
        self.load_config()
        logger.debug("🔧 配置管理器初始化完成", extra={"context": {"file": str(self.config_file)}})

    def load_config(self):
        """加载配置文件, 缺失的项用默认值补齐"""
        self.create_default_config()
        if not self.config_file.exists():
            logger.debug("📋 未找到配置文件, 使用默认配置", extra={"context": {"file": str(self.config_file)}})
            return
        try:
            self.config.read(self.config_file, encoding="utf-8")
            logger.info("✅ 配置文件加载成功", extra={"context": {"file": str(self.config_file)}})
        except configparser.Error as e:
            raise FormatError(f"cannot parse config file {self.config_file}: {e}") from e

    def create_default_config(self):
        """在内存中建立默认配置"""
        self.config.clear()
        self.config.read_dict(DEFAULT_CONFIG)

    def save_config(self):
        """保存配置文件"""
        with open(self.config_file, "w", encoding="utf-8") as f:
            self.config.write(f)
        logger.info("💾 配置文件保存成功", extra={"context": {"file": str(self.config_file)}})

    # ==================== 通用配置操作 ====================

    def get(self, section: str, key: str, default: Any = None, value_type: type = str) -> Any:
        """获取配置值; 缺失或无法转换时返回默认值"""
        if not self.config.has_option(section, key):
            return default
        value = self.config.get(section, key)
        try:
            return _convert(value, value_type)
        except (ValueError, json.JSONDecodeError) as e:
            logger.warning(f"⚠️ 配置值无效: {section}.{key} - {e}")
            return default

    def set(self, section: str, key: str, value: Any):
        """设置配置值"""
        if not self.config.has_section(section):
            self.config.add_section(section)
        if isinstance(value, bool):
            str_value = str(value).lower()
        elif isinstance(value, (list, dict)):
            str_value = json.dumps(value)
        else:
            str_value = str(value)
        self.config.set(section, key, str_value)

    # ==================== 分组配置 ====================

    def get_solver_config(self) -> Dict[str, float]:
        """获取求解器容差"""
        return {
            "bisection_xtol": self.get("solver", "bisection_xtol", 1e-14, float),
            "pstar_xtol": self.get("solver", "pstar_xtol", 1e-12, float),
            "stationarity_tol": self.get("solver", "stationarity_tol", 1e-9, float),
            "polynomial_residual_tol": self.get("solver", "polynomial_residual_tol", 1e-8, float),
        }

    def get_stats_config(self) -> Dict[str, int]:
        return {
            "max_dense_q": self.get("stats", "max_dense_q", 1024, int),
            "bootstrap_replicates": self.get("stats", "bootstrap_replicates", 200, int),
        }

    def get_sampling_config(self) -> Dict[str, int]:
        """获取采样配置; 环境变量 SPARSE_SHARE_THREADS 优先"""
        threads = self.get("sampling", "threads", 1, int)
        env_threads = os.environ.get(ENV_THREADS)
        if env_threads:
            try:
                threads = int(env_threads)
            except ValueError:
                logger.warning(f"⚠️ 忽略无效的 {ENV_THREADS}={env_threads!r}")
        return {"threads": max(1, threads)}

    def get_output_config(self) -> Dict[str, int]:
        return {"significant_digits": self.get("output", "significant_digits", 12, int)}

    def get_cli_config(self) -> Dict[str, str]:
        return {"language": self.get("cli", "language", "en")}

    def get_advanced_config(self) -> Dict[str, Any]:
        return {
            "log_level": self.get("advanced", "log_level", "WARNING"),
            "debug_mode": self.get("advanced", "debug_mode", False, bool),
        }

    # ==================== 配置验证 ====================

    def validate_solver_config(self) -> bool:
        """所有容差必须为正"""
        config = self.get_solver_config()
        for key, value in config.items():
            if not value > 0:
                logger.error(f"❌ 求解器配置验证失败: {key}={value} 必须为正")
                return False
        return True

    def validate_output_config(self) -> bool:
        digits = self.get_output_config()["significant_digits"]
        if not 1 <= digits <= 17:
            logger.error(f"❌ 输出配置验证失败: significant_digits={digits}")
            return False
        return True

    def validate_cli_config(self) -> bool:
        language = self.get_cli_config()["language"]
        if language not in language_manager.get_available_languages():
            logger.error(f"❌ 界面语言无效: {language}")
            return False
        return True

    # ==================== 语言配置同步 ====================

    def sync_language_setting(self, override: Optional[str] = None):
        """同步语言设置到语言管理器"""
        language = override or self.get_cli_config()["language"]
        language_manager.set_language(language)
        logger.debug(f"🌐 语言设置已同步: {language}")

    # ==================== 配置导入导出 ====================

    def export_config(self, export_path: str) -> bool:
        """导出配置（JSON格式）"""
        try:
            config_dict = {section: dict(self.config.items(section)) for section in self.config.sections()}
            with open(export_path, "w", encoding="utf-8") as f:
                json.dump(config_dict, f, indent=2, ensure_ascii=False)
            logger.info(f"✅ 配置导出成功: {export_path}")
            return True
        except OSError as e:
            logger.error(f"❌ 配置导出失败: {e}")
            return False

    def import_config(self, import_path: str) -> bool:
        """导入配置（JSON格式）, 仅更新内存中的配置"""
        try:
            with open(import_path, "r", encoding="utf-8") as f:
                config_dict = json.load(f)
            for section_name, section_data in config_dict.items():
                for key, value in section_data.items():
                    self.set(section_name, key, value)
            logger.info(f"✅ 配置导入成功: {import_path}")
            return True
        except (OSError, json.JSONDecodeError, AttributeError) as e:
            logger.error(f"❌ 配置导入失败: {e}")
            return False


# ==================== 方案文件 ====================

def _load_section(path: Union[str, Path], section: str, types: Dict[str, type]) -> Dict[str, Any]:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e}") from e
    except configparser.Error as e:
        raise FormatError(f"cannot parse {path}: {e}") from e
    if not parser.has_section(section):
        raise FormatError(f"{path} has no [{section}] section")

    values: Dict[str, Any] = {}
    for key, raw in parser.items(section):
        if key not in types:
            raise FormatError(f"unknown key {key!r} in [{section}] of {path}")
        try:
            values[key] = _convert(raw, types[key])
        except ValueError as e:
            raise FormatError(f"bad value for {key} in {path}: {raw!r}") from e
    return values


def load_scheme_file(path: Union[str, Path]) -> Dict[str, Any]:
    """读取乘法方案文件的 [scheme] 段"""
    values = _load_section(path, "scheme", SCHEME_TYPES)
    missing = [key for key in ("variant", "N", "q", "s", "s_d") if key not in values]
    if missing:
        raise FormatError(f"scheme file {path} lacks {missing}")
    return values


def load_plan_file(path: Union[str, Path]) -> Dict[str, Any]:
    """读取两集群方案文件的 [plan] 段, p 与 eps_rel 二选一"""
    values = _load_section(path, "plan", PLAN_TYPES)
    missing = [key for key in ("n1", "n2", "rho1", "rho2", "z", "q", "s") if key not in values]
    if missing:
        raise FormatError(f"plan file {path} lacks {missing}")
    if ("p" in values) == ("eps_rel" in values):
        raise FormatError(f"plan file {path} must set exactly one of p and eps_rel")
    return values
