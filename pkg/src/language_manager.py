#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Sparse-Share 语言管理模块

命令行状态信息的中英文切换
"""

import logging
from typing import Dict

logger = logging.getLogger(__name__)


class LanguageManager:
    """语言管理器"""

    def __init__(self):
        """初始化语言管理器"""
        self.current_language = "en"  # 默认英文
        self.translations = {}
        self.load_translations()

    def load_translations(self):
        """加载翻译数据"""
        # 内置翻译数据
        self.translations = {
            "en": {
                "english": "English",
                "chinese": "Chinese",
                "cli": {
                    "description": "Sparse secret sharing and straggler-tolerant private matrix multiplication",
                    "written": "✅ wrote {path}",
                    "reconstructed": "✅ reconstructed matrix written to {path}",
                    "campaign_summary": "📋 {recovered}/{trials} trials recovered",
                    "leakage_header": "📋 leakage in q-ary symbols per entry (relative = divided by entry entropy)",
                    "empirical_check": "📋 empirical {empirical} ± {se} (plug-in {plugin}) vs analytical {analytical}",
                    "infeasible_row": "⚠️ {count} grid points were infeasible",
                },
                "errors": {
                    "generic": "❌ error: {message}",
                    "usage": "❌ usage error: {message}",
                    "infeasible": "❌ infeasible parameters: {message}",
                    "recovery": "❌ recovery failed: {message}",
                    "interrupted": "👋 interrupted",
                },
            },
            "zh": {
                "english": "英文",
                "chinese": "中文",
                "cli": {
                    "description": "稀疏秘密共享与抗掉队的私有分布式矩阵乘法",
                    "written": "✅ 已写入 {path}",
                    "reconstructed": "✅ 重构矩阵已写入 {path}",
                    "campaign_summary": "📋 {trials} 次仿真中 {recovered} 次成功恢复",
                    "leakage_header": "📋 泄露单位: q 进制符号/元素 (相对值 = 除以单元素熵)",
                    "empirical_check": "📋 经验值 {empirical} ± {se} (插值估计 {plugin}), 闭式 {analytical}",
                    "infeasible_row": "⚠️ {count} 个网格点不可行",
                },
                "errors": {
                    "generic": "❌ 错误: {message}",
                    "usage": "❌ 用法错误: {message}",
                    "infeasible": "❌ 参数不可行: {message}",
                    "recovery": "❌ 恢复失败: {message}",
                    "interrupted": "👋 用户中断",
                },
            },
        }

    def set_language(self, language_code: str) -> bool:
        """设置当前语言"""
        if language_code in self.translations:
            self.current_language = language_code
            logger.debug(f"🌐 语言切换为: {language_code}")
            return True
        logger.warning(f"⚠️ 不支持的语言: {language_code}")
        return False

    def get_language(self) -> str:
        """获取当前语言"""
        return self.current_language

    def t(self, key: str, default: str = None) -> str:
        """翻译文本"""
        try:
            # 支持嵌套键，如 "errors.recovery"
            value = self.translations[self.current_language]
            for k in key.split("."):
                value = value[k]
            return value
        except (KeyError, TypeError):
            if default is not None:
                return default
            return key  # 如果找不到翻译，返回原键

    def get_available_languages(self) -> Dict[str, str]:
        """获取可用语言列表"""
        return {
            "en": self.t("english"),
            "zh": self.t("chinese"),
        }


# 全局语言管理器实例
language_manager = LanguageManager()
