#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 应用上下文

负责配置、日志与语言等管理器的初始化, 为命令执行提供统一的运行参数
"""

import logging
from typing import Any, Dict, Optional

from src import __version__
from src.config_manager import ConfigManager
from src.exceptions import FormatError
from src.language_manager import language_manager
from src.utils import LogUtils

logger = logging.getLogger(__name__)


class SparseShareApp:
    """Sparse-Share 应用上下文"""

    def __init__(self, config_file: Optional[str] = None, language: Optional[str] = None,
                 verbose: bool = False, threads: Optional[int] = None):
        """初始化应用"""
        self.app_name = "Sparse-Share"
        self.version = __version__
        self.language_manager = language_manager
        self.config_manager: Optional[ConfigManager] = None
        self._threads_override = threads
        self.initialize_managers(config_file, language, verbose)

    def initialize_managers(self, config_file: Optional[str], language: Optional[str], verbose: bool):
        """初始化各个管理器模块"""
        self.config_manager = ConfigManager(config_file)

        advanced = self.config_manager.get_advanced_config()
        LogUtils.setup_logging(advanced["log_level"], debug=verbose or advanced["debug_mode"])

        if not (self.config_manager.validate_solver_config() and self.config_manager.validate_output_config()):
            raise FormatError(f"invalid settings in {self.config_manager.config_file}")
        self.config_manager.sync_language_setting(language)
        if self._threads_override is not None and self._threads_override < 1:
            raise FormatError(f"--threads must be positive, got {self._threads_override}")

        logger.debug(f"🔧 {self.app_name} v{self.version} 初始化完成", extra={"context": self.get_app_info()})

    # ==================== 运行参数 ====================

    @property
    def threads(self) -> int:
        if self._threads_override is not None:
            return self._threads_override
        return self.config_manager.get_sampling_config()["threads"]

    @property
    def digits(self) -> int:
        return self.config_manager.get_output_config()["significant_digits"]

    @property
    def max_dense_q(self) -> int:
        return self.config_manager.get_stats_config()["max_dense_q"]

    @property
    def bootstrap_replicates(self) -> int:
        return self.config_manager.get_stats_config()["bootstrap_replicates"]

    @property
    def bisection_xtol(self) -> float:
        return self.config_manager.get_solver_config()["bisection_xtol"]

    @property
    def pstar_xtol(self) -> float:
        return self.config_manager.get_solver_config()["pstar_xtol"]

    def get_app_info(self) -> Dict[str, Any]:
        """获取应用信息"""
        return {
            "name": self.app_name,
            "version": self.version,
            "language": self.language_manager.get_language(),
            "config_file": str(self.config_manager.config_file),
        }
