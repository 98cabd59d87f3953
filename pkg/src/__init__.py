"""
Sparse-Share 稀疏秘密共享与抗掉队私有分布式矩阵乘法 - 核心源代码模块
"""

__version__ = "1.0.0"
__author__ = "Sparse-Share Team"
