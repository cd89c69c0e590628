"""
Opinion Dynamics Fitting Toolkit
观点动力学拟合工具包

模块化结构：
- panel: 情感面板、模型规格、参数集与拟合结果
- aggregator: 评论记录 → 情感面板
- dynamics: 单步更新、模拟与预测
- objective: 训练目标与解析梯度
- estimator: 多起点块坐标下降求解器
- validator: 梯度自检
- diagnostics: 区间违背指数与误差指标
- storage: 文件读写
- reference_data: 内置参考数据集
- core: 核心协调器
"""

from .core import OpinionFitManager
from .estimator import SolverConfig, fit
from .panel import FitResult, ModelFamily, ModelSpec, ParamSet, SentimentPanel, validate_panel

__all__ = [
    'OpinionFitManager',
    'SolverConfig',
    'fit',
    'FitResult',
    'ModelFamily',
    'ModelSpec',
    'ParamSet',
    'SentimentPanel',
    'validate_panel',
]
__version__ = '1.0.0'
