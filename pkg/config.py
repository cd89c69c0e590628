"""
配置文件
包含模型名称映射、输出格式、退出码等常量，以及求解器 YAML 配置的加载
"""
import yaml
from dotenv import load_dotenv

# 先加载 .env，包内各模块的日志级别在导入时读取
load_dotenv()

from opinion_fit.core import BUNDLED
from opinion_fit.estimator import SolverConfig, default_thread_count
from opinion_fit.exceptions import ConfigError

# 命令行模型名 → 模型族
MODEL_FAMILIES = {
    'fdg': 'FDG',
    'fj': 'FJ',
    'fdgm': 'FDGM',
    'epo': 'EPO',
    'repo': 'REPO',
}

# 多起点并行线程上限
THREADS = default_thread_count()

# 输出精度：6 位有效数字
FLOAT_FORMAT = '%.6g'

# 退出码
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCOMPLETE = 2

# 内置数据集的面板参数名
BUNDLED_SOURCE = BUNDLED

# diagnose 命令打印违背统计时使用的松弛量
VIOLATION_SLACK = 0.1


def fmt(value: float) -> str:
    """按 6 位有效数字格式化"""
    return FLOAT_FORMAT % value


def load_solver_config(path: str = None) -> SolverConfig:
    """
    读取求解器 YAML 配置

    Args:
        path: YAML 文件路径，None 时返回默认配置

    Returns:
        SolverConfig（未知键或非法取值抛出 ConfigError）
    """
    if not path:
        return SolverConfig()
    try:
        with open(path, 'r', encoding='utf-8') as f:
            mapping = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"读取求解器配置失败 {path}: {str(e)}")
    if mapping is not None and not isinstance(mapping, dict):
        raise ConfigError(f"求解器配置顶层必须是映射: {path}")
    return SolverConfig.from_mapping(mapping)
