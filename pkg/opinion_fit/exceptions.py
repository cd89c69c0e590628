"""
异常定义模块
所有领域错误都继承自 OpinionFitError，CLI 层据此映射退出码
"""
from typing import Optional


class OpinionFitError(Exception):
    """opinion_fit 包的基础异常"""


# === 面板 / 维度 ===
class PanelError(OpinionFitError):
    """情感面板不满足约束"""


class OutOfRangeValue(PanelError):
    """面板或参数中出现 [0,1] 之外的值"""


class DuplicateId(PanelError):
    """博客ID或期标签重复"""


class TooFewPeriods(PanelError):
    """期数少于2"""


class DimensionMismatch(OpinionFitError):
    """向量/矩阵维度不一致"""


# === 模型规格 / 参数 ===
class ModelSpecError(OpinionFitError):
    """模型族或滞后阶数不合法"""


class ParameterError(OpinionFitError):
    """参数集不满足约束"""


class InactiveParameter(ParameterError):
    """参数集携带了该模型族不允许的字段"""


class MissingParameter(ParameterError):
    """缺少该模型族必需的字段"""


class InvalidParameter(ParameterError):
    """参数值违反行随机/盒约束/耦合关系"""


# === 聚合 ===
class AggregationError(OpinionFitError):
    """互动记录聚合失败"""


class EmptyCommentSet(AggregationError):
    """帖子没有任何一级评论"""


class EmptyPostSet(AggregationError):
    """博客在该期没有任何帖子"""


class RecordError(AggregationError):
    """单条记录不合法"""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"第{line}行: {message}")
        self.line = line


class MissingCell(AggregationError):
    """某个 (博客, 期) 单元没有任何记录"""

    def __init__(self, blog_id: str, period: int):
        super().__init__(f"缺少数据单元: blog={blog_id}, period={period}")
        self.blog_id = blog_id
        self.period = period


# === 估计 / 预测 ===
class InvalidSplit(OpinionFitError):
    """训练期划分不合法"""


class InsufficientHistory(OpinionFitError):
    """模拟初始历史深度不足以支撑滞后"""


class HorizonBeyondSupport(OpinionFitError):
    """预测需要读取第1期之前的滞后值"""


class OnBoundary(OpinionFitError):
    """梯度校验点距约束边界过近"""


# === 诊断 ===
class DiagnosticsError(OpinionFitError):
    """诊断计算失败"""


class DegenerateRange(DiagnosticsError):
    """参考区间退化（最大值等于最小值）"""


class IndexOutOfRange(DiagnosticsError):
    """博客或期索引越界"""


# === 存储 ===
class StorageError(OpinionFitError):
    """文件读写失败"""


# === 配置 ===
class ConfigError(OpinionFitError):
    """求解器配置不合法（未知键、取值越界）"""
