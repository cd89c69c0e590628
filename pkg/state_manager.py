"""
状态管理模块
处理拟合结果的保存、加载和列举
"""
import os
from typing import List, Optional

from config import THREADS
from opinion_fit import OpinionFitManager
from opinion_fit.exceptions import StorageError
from opinion_fit.panel import FitResult


def create_fit_manager(max_workers: Optional[int] = None) -> OpinionFitManager:
    """创建拟合管理器（并行线程数默认取 OPINIONFIT_THREADS）"""
    return OpinionFitManager(max_workers=max_workers or THREADS)


def save_fit_result(manager: OpinionFitManager, result: FitResult, path: str) -> str:
    """保存拟合结果 JSON"""
    return manager.save_fit(result, path)


def load_fit_result(manager: OpinionFitManager, path: str) -> FitResult:
    """加载拟合结果"""
    return manager.load_fit(path)


def list_fit_results(manager: OpinionFitManager, directory: str) -> List[str]:
    """列出目录中的全部拟合结果 JSON（按文件名自然顺序）"""
    if not os.path.isdir(directory):
        raise StorageError(f"模型目录不存在: {directory}")
    files = manager.files.list_json(directory)
    if not files:
        raise StorageError(f"模型目录中没有 JSON 文件: {directory}")
    return files
