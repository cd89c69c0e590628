"""
核心领域类型模块
情感面板、模型规格、参数集与拟合结果，供所有模块共享
"""
import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import (
    DimensionMismatch, DuplicateId, InactiveParameter, InvalidParameter,
    MissingParameter, ModelSpecError, OutOfRangeValue, TooFewPeriods
)

# 配置日志
logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)
if not logger.handlers:
    handler = logging.StreamHandler()
    handler.setLevel(os.getenv('OPINIONFIT_LOG_LEVEL', 'INFO').upper())
    formatter = logging.Formatter('%(asctime)s - [Panel] - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)

# 行随机容差：构造时在容差内的行被重新归一化
STOCHASTIC_TOL = 1e-9
# W = diag(D) + (I - diag(D))A 的逐元素容差
COUPLING_TOL = 1e-9
# 导出时小于该值的 W/A 元素写为 0
EXPORT_ZERO_THRESHOLD = 1e-5
# 浮点比较余量
_EPS = 1e-12


class ModelFamily(str, Enum):
    """模型族"""
    FDG = 'FDG'
    FJ = 'FJ'
    FDGM = 'FDGM'
    EPO = 'EPO'
    REPO = 'REPO'

    @property
    def has_latent_states(self) -> bool:
        return self in (ModelFamily.EPO, ModelFamily.REPO)


# 报表与排序使用的族顺序
FAMILY_ORDER = (ModelFamily.FDG, ModelFamily.FJ, ModelFamily.FDGM, ModelFamily.EPO, ModelFamily.REPO)

_ACTIVE_PARAMETERS: Dict[ModelFamily, FrozenSet[str]] = {
    ModelFamily.FDG: frozenset({'W'}),
    ModelFamily.FJ: frozenset({'W', 'S', 'z'}),
    ModelFamily.FDGM: frozenset({'W', 'S'}),
    ModelFamily.EPO: frozenset({'A', 'D', 'S', 'Phi', 'z', 'X'}),
    ModelFamily.REPO: frozenset({'A', 'D', 'Phi', 'X'}),
}

# ParamSet 中允许出现的字段（EPO 族的 W 由 D、A 推导，REPO 的 S 恒为 1）
_STORED_PARAMETERS: Dict[ModelFamily, FrozenSet[str]] = {
    ModelFamily.FDG: frozenset({'W'}),
    ModelFamily.FJ: frozenset({'W', 'S', 'z'}),
    ModelFamily.FDGM: frozenset({'W', 'S'}),
    ModelFamily.EPO: frozenset({'W', 'A', 'D', 'S', 'Phi', 'z', 'X'}),
    ModelFamily.REPO: frozenset({'W', 'A', 'D', 'S', 'Phi', 'X'}),
}

_REQUIRED_PARAMETERS: Dict[ModelFamily, FrozenSet[str]] = {
    ModelFamily.FDG: frozenset({'W'}),
    ModelFamily.FJ: frozenset({'W', 'S', 'z'}),
    ModelFamily.FDGM: frozenset({'W', 'S'}),
    ModelFamily.EPO: frozenset({'A', 'D', 'S', 'Phi', 'z'}),
    ModelFamily.REPO: frozenset({'A', 'D', 'Phi'}),
}

PARAMETER_NAMES = ('W', 'A', 'D', 'S', 'Phi', 'z', 'X')


def _frozen(array) -> np.ndarray:
    """复制为只读 float 数组"""
    result = np.array(array, dtype=float)
    result.setflags(write=False)
    return result


@dataclass(frozen=True, eq=False)
class SentimentPanel:
    """
    B×T 的集体情感观测面板

    Attributes:
        values: σ_b(t)，行为博客、列为期
        blog_ids: 博客ID（唯一）
        period_labels: 期标签（唯一，按时间顺序）
    """
    values: np.ndarray
    blog_ids: Tuple[str, ...]
    period_labels: Tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatch(f"面板必须是二维矩阵，实际维度: {values.ndim}")
        n_blogs, n_periods = values.shape
        if n_blogs < 1:
            raise DimensionMismatch("面板至少需要1个博客")
        if n_periods < 2:
            raise TooFewPeriods(f"面板至少需要2期，实际: {n_periods}")
        if len(self.blog_ids) != n_blogs:
            raise DimensionMismatch(f"博客ID数量 {len(self.blog_ids)} 与行数 {n_blogs} 不一致")
        if len(self.period_labels) != n_periods:
            raise DimensionMismatch(f"期标签数量 {len(self.period_labels)} 与列数 {n_periods} 不一致")
        if not np.all(np.isfinite(values)):
            raise OutOfRangeValue("面板包含非有限值")
        bad = np.argwhere((values < 0.0) | (values > 1.0))
        if bad.size:
            row, col = bad[0]
            raise OutOfRangeValue(
                f"面板值越界: blog={self.blog_ids[row]}, period={self.period_labels[col]}, "
                f"value={values[row, col]}"
            )
        if len(set(self.blog_ids)) != n_blogs:
            raise DuplicateId(f"博客ID重复: {list(self.blog_ids)}")
        if len(set(self.period_labels)) != n_periods:
            raise DuplicateId(f"期标签重复: {list(self.period_labels)}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'blog_ids', tuple(str(b) for b in self.blog_ids))
        object.__setattr__(self, 'period_labels', tuple(str(p) for p in self.period_labels))

    @property
    def n_blogs(self) -> int:
        return self.values.shape[0]

    @property
    def n_periods(self) -> int:
        return self.values.shape[1]

    def column(self, period: int) -> np.ndarray:
        """返回第 period 期（从1开始）的观测向量"""
        if not 1 <= period <= self.n_periods:
            raise DimensionMismatch(f"期号越界: {period}（共{self.n_periods}期）")
        return self.values[:, period - 1]


def validate_panel(values, blog_ids: Sequence[str], period_labels: Sequence[str]) -> SentimentPanel:
    """
    校验并构造情感面板

    Args:
        values: B×T 矩阵
        blog_ids: 博客ID列表
        period_labels: 期标签列表

    Returns:
        满足全部不变量的 SentimentPanel
    """
    panel = SentimentPanel(values=values, blog_ids=tuple(blog_ids), period_labels=tuple(period_labels))
    logger.debug(f"面板校验通过: B={panel.n_blogs}, T={panel.n_periods}")
    return panel


@dataclass(frozen=True)
class ModelSpec:
    """模型族 + 滞后阶数 τ"""
    family: ModelFamily
    lag: int = 0

    def __post_init__(self):
        try:
            family = ModelFamily(self.family)
        except ValueError:
            raise ModelSpecError(f"未知模型族: {self.family}")
        object.__setattr__(self, 'family', family)
        if isinstance(self.lag, bool) or int(self.lag) != self.lag or self.lag < 0:
            raise ModelSpecError(f"滞后阶数必须是非负整数: {self.lag}")
        object.__setattr__(self, 'lag', int(self.lag))
        if family in (ModelFamily.FDG, ModelFamily.FJ) and self.lag != 0:
            raise ModelSpecError(f"{family.value} 模型不使用滞后，lag 必须为 0（实际 {self.lag}）")
        if family is ModelFamily.FDGM and self.lag < 1:
            raise ModelSpecError("FDGM 模型要求 lag ≥ 1")

    @classmethod
    def parse(cls, name: str, lag: int = 0) -> 'ModelSpec':
        """由命令行名称（fdg/fj/fdgm/epo/repo，大小写不敏感）构造"""
        return cls(family=str(name).strip().upper(), lag=lag)

    @property
    def label(self) -> str:
        return self.family.value if self.lag == 0 else f"{self.family.value}-lag{self.lag}"


def active_parameters(spec: ModelSpec) -> FrozenSet[str]:
    """返回模型族的可估计参数名集合"""
    return _ACTIVE_PARAMETERS[spec.family]


def coupled_influence(D: np.ndarray, A: np.ndarray) -> np.ndarray:
    """W = diag(D) + (I − diag(D))·A"""
    D = np.asarray(D, dtype=float)
    A = np.asarray(A, dtype=float)
    W = (1.0 - D)[:, None] * A
    W[np.diag_indices_from(W)] = D + (1.0 - D) * np.diag(A)
    return W


def _check_row_stochastic(name: str, matrix: np.ndarray, tol: float, renormalize: bool,
                          zero_diagonal: bool = False) -> np.ndarray:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(f"{name} 必须是方阵，实际形状: {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidParameter(f"{name} 包含非有限值")
    if np.any(matrix < 0.0):
        raise InvalidParameter(f"{name} 存在负元素: {matrix.min()}")
    if zero_diagonal and np.any(np.diag(matrix) != 0.0):
        raise InvalidParameter(f"{name} 对角线必须严格为0")
    sums = matrix.sum(axis=1)
    worst = np.max(np.abs(sums - 1.0))
    if worst > tol + _EPS:
        raise InvalidParameter(f"{name} 行和偏离1: {worst:.3g} > {tol:g}")
    if renormalize and np.any(sums != 1.0):
        matrix = matrix / sums[:, None]
    return matrix


def _check_unit_box(name: str, values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise InvalidParameter(f"{name} 包含非有限值")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise InvalidParameter(f"{name} 必须逐元素位于 [0,1]，实际范围 [{values.min()}, {values.max()}]")


@dataclass(frozen=True, eq=False)
class ParamSet:
    """
    参数集（按模型族激活其中一部分）

    对角矩阵 S、Φ、D 以向量形式保存；EPO/REPO 的 W 由 D 与 A 推导。
    请通过 ParamSet.create 构造。
    """
    W: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    D: Optional[np.ndarray] = None
    S: Optional[np.ndarray] = None
    Phi: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    X: Optional[np.ndarray] = None

    @property
    def n_blogs(self) -> int:
        return self.W.shape[0]

    def fields(self) -> Dict[str, Optional[np.ndarray]]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    @classmethod
    def create(
        cls,
        spec: ModelSpec,
        *,
        W=None, A=None, D=None, S=None, Phi=None, z=None, X=None,
        stochastic_tol: float = STOCHASTIC_TOL,
        renormalize: bool = True
    ) -> 'ParamSet':
        """
        校验并构造参数集

        Args:
            spec: 模型规格
            W, A, D, S, Phi, z, X: 参数（未激活的必须为 None）
            stochastic_tol: 行随机容差（内置参考参数使用 1e-4）
            renormalize: 是否把容差内的行除以行和（从JSON恢复时关闭以保证逐位一致）

        Returns:
            ParamSet
        """
        family = spec.family
        supplied = {
            name: np.array(value, dtype=float)
            for name, value in zip(PARAMETER_NAMES, (W, A, D, S, Phi, z, X))
            if value is not None
        }
        extra = set(supplied) - _STORED_PARAMETERS[family]
        if extra:
            raise InactiveParameter(f"{family.value} 模型不允许参数: {sorted(extra)}")
        missing = _REQUIRED_PARAMETERS[family] - set(supplied)
        if missing:
            raise MissingParameter(f"{family.value} 模型缺少参数: {sorted(missing)}")

        if family.has_latent_states:
            A_arr = supplied['A']
            n = A_arr.shape[0]
            if n < 2:
                raise InvalidParameter("EPO 族要求至少2个博客（A 对角为零且行随机）")
            A_arr = _check_row_stochastic('A', A_arr, stochastic_tol, renormalize, zero_diagonal=True)
            supplied['A'] = A_arr
            if family is ModelFamily.REPO:
                if 'S' in supplied and np.any(supplied['S'] != 1.0):
                    raise InactiveParameter("REPO 模型的 S 恒为 1")
                supplied['S'] = np.ones(n)
        else:
            W_arr = _check_row_stochastic('W', supplied['W'], stochastic_tol, renormalize)
            supplied['W'] = W_arr
            n = W_arr.shape[0]

        for name in ('D', 'S', 'Phi', 'z'):
            if name in supplied:
                vector = supplied[name]
                if vector.shape != (n,):
                    raise DimensionMismatch(f"{name} 形状应为 ({n},)，实际 {vector.shape}")
                _check_unit_box(name, vector)

        if 'X' in supplied:
            X_arr = supplied['X']
            if X_arr.ndim != 2 or X_arr.shape[0] != n or X_arr.shape[1] < 1:
                raise DimensionMismatch(f"X 形状应为 ({n}, T_est)，实际 {X_arr.shape}")
            _check_unit_box('X', X_arr)

        if family.has_latent_states:
            derived = coupled_influence(supplied['D'], supplied['A'])
            if 'W' in supplied:
                given = supplied['W']
                if given.shape != derived.shape:
                    raise DimensionMismatch(f"W 形状应为 {derived.shape}，实际 {given.shape}")
                gap = np.max(np.abs(given - derived))
                if gap > COUPLING_TOL:
                    raise InvalidParameter(f"W 不满足 W = D + (I-D)A: 最大偏差 {gap:.3g}")
            supplied['W'] = derived

        return cls(**{name: _frozen(value) for name, value in supplied.items()})

    def to_dict(self) -> Dict[str, Optional[list]]:
        return {name: (None if value is None else value.tolist()) for name, value in self.fields().items()}


@dataclass(frozen=True, eq=False)
class FitResult:
    """
    拟合结果

    Attributes:
        spec: 模型规格
        params: 拟合参数
        objective: 训练期残差平方和
        n_train_periods: T_est
        solver_trace: (迭代次数, 目标值) 序列，非增
        seed: 随机种子
        n_starts: 起点数
        converged: 是否满足停止准则（未收敛时返回最优迭代点）
        iterations: 最优起点的迭代次数
        blog_ids / period_labels: 训练面板标签
    """
    spec: ModelSpec
    params: ParamSet
    objective: float
    n_train_periods: int
    solver_trace: Tuple[Tuple[int, float], ...]
    seed: int
    n_starts: int
    converged: bool = True
    iterations: int = 0
    blog_ids: Tuple[str, ...] = ()
    period_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.objective >= 0.0:
            raise InvalidParameter(f"目标值必须非负: {self.objective}")
        trace = tuple((int(i), float(v)) for i, v in self.solver_trace)
        for (_, previous), (_, current) in zip(trace, trace[1:]):
            if current > previous:
                raise InvalidParameter(f"solver_trace 非单调: {previous} -> {current}")
        object.__setattr__(self, 'solver_trace', trace)
        object.__setattr__(self, 'blog_ids', tuple(self.blog_ids))
        object.__setattr__(self, 'period_labels', tuple(self.period_labels))

    def to_dict(self) -> Dict:
        """导出为拟合模型 JSON 结构（未激活字段为 null）"""
        payload = {
            'family': self.spec.family.value,
            'lag': self.spec.lag,
            't_est': self.n_train_periods,
            'objective': self.objective,
        }
        payload.update(self.params.to_dict())
        payload.update({
            'seed': self.seed,
            'n_starts': self.n_starts,
            'converged': self.converged,
            'iterations': self.iterations,
            'solver_trace': [[i, v] for i, v in self.solver_trace],
            'blog_ids': list(self.blog_ids),
            'period_labels': list(self.period_labels),
        })
        return payload

    @classmethod
    def from_dict(cls, payload: Dict) -> 'FitResult':
        """由 to_dict 的结构恢复（逐位一致）"""
        spec = ModelSpec(family=payload['family'], lag=payload.get('lag', 0))
        stored = _STORED_PARAMETERS[spec.family]
        kwargs = {
            name: payload.get(name) for name in PARAMETER_NAMES
            if name in stored and payload.get(name) is not None
        }
        params = ParamSet.create(spec, renormalize=False, **kwargs)
        return cls(
            spec=spec,
            params=params,
            objective=float(payload['objective']),
            n_train_periods=int(payload['t_est']),
            solver_trace=tuple(tuple(item) for item in payload.get('solver_trace', [])),
            seed=int(payload.get('seed', 0)),
            n_starts=int(payload.get('n_starts', 1)),
            converged=bool(payload.get('converged', True)),
            iterations=int(payload.get('iterations', 0)),
            blog_ids=tuple(payload.get('blog_ids', [])),
            period_labels=tuple(payload.get('period_labels', [])),
        )


def export_matrix(matrix: np.ndarray, threshold: float = EXPORT_ZERO_THRESHOLD) -> np.ndarray:
    """导出用副本：绝对值小于阈值的元素置0"""
    exported = np.array(matrix, dtype=float)
    exported[np.abs(exported) < threshold] = 0.0
    return exported


def sorted_specs(specs: Iterable[ModelSpec]) -> List[ModelSpec]:
    """按族顺序再按滞后排序"""
    return sorted(specs, key=lambda spec: (FAMILY_ORDER.index(spec.family), spec.lag))
