"""
前向动力学模块
单步更新、多步模拟、样本外预测与训练期拟合轨迹

所有单步更新共用同一个混合核：
    mix = diag(W)·x + (W − diag(W))·xe
    out = S·mix + (1 − S)·z
因此 FJ(S=1) 与 FDG、EPO(Φ=1) 与 FJ、REPO 与 EPO(S=1) 的轨迹逐位一致。
"""
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import (
    DimensionMismatch, HorizonBeyondSupport, InsufficientHistory, InvalidSplit, MissingParameter,
    OutOfRangeValue
)
from .objective import expressed_residuals
from .panel import FitResult, ModelFamily, ModelSpec, ParamSet, SentimentPanel

# 配置日志
logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)
if not logger.handlers:
    handler = logging.StreamHandler()
    handler.setLevel(os.getenv('OPINIONFIT_LOG_LEVEL', 'INFO').upper())
    formatter = logging.Formatter('%(asctime)s - [Dynamics] - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)


def _vector(name: str, value, n: int) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    if value.shape != (n,):
        raise DimensionMismatch(f"{name} 形状应为 ({n},)，实际 {value.shape}")
    return value


def _square(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionMismatch(f"影响矩阵必须是方阵，实际形状: {W.shape}")
    return W


def _kernel(W: np.ndarray, S: np.ndarray, z: np.ndarray, x: np.ndarray, xe: np.ndarray) -> np.ndarray:
    diagonal = np.diag(W)
    off = W - np.diag(diagonal)
    mix = diagonal * x + off @ xe
    return np.clip(S * mix + (1.0 - S) * z, 0.0, 1.0)


def step_fdg(W, x) -> np.ndarray:
    """x(t+1) = W·x(t)"""
    W = _square(W)
    n = W.shape[0]
    x = _vector('x', x, n)
    return _kernel(W, np.ones(n), np.zeros(n), x, x)


def step_fj(W, S, z, x) -> np.ndarray:
    """x(t+1) = diag(S)·W·x(t) + (I − diag(S))·z"""
    W = _square(W)
    n = W.shape[0]
    x = _vector('x', x, n)
    return _kernel(W, _vector('S', S, n), _vector('z', z, n), x, x)


def step_fdgm(W, S, x_now, x_lagged) -> np.ndarray:
    """x(t+1) = diag(S)·W·x(t) + (I − diag(S))·x(t−τ)"""
    W = _square(W)
    n = W.shape[0]
    x_now = _vector('x_now', x_now, n)
    return _kernel(W, _vector('S', S, n), _vector('x_lagged', x_lagged, n), x_now, x_now)


def epo_expressed(Phi, A, x_now, xe_lagged) -> np.ndarray:
    """x^e(t+1) = diag(Φ)·x(t+1) + (I − diag(Φ))·A·x^e(t−τ)"""
    A = _square(A)
    n = A.shape[0]
    Phi = _vector('Phi', Phi, n)
    x_now = _vector('x_now', x_now, n)
    xe_lagged = _vector('xe_lagged', xe_lagged, n)
    return np.clip(Phi * x_now + (1.0 - Phi) * (A @ xe_lagged), 0.0, 1.0)


def step_epo_private(W, S, z, x_now, xe_now) -> np.ndarray:
    """
    x(t+1) = diag(S)·(diag(W)·x(t) + (W − diag(W))·x^e(t)) + (I − diag(S))·z

    REPO 传入 S = 1，此时 z 不起作用（可传任意 [0,1] 向量）。
    """
    W = _square(W)
    n = W.shape[0]
    return _kernel(W, _vector('S', S, n), _vector('z', z, n),
                   _vector('x_now', x_now, n), _vector('xe_now', xe_now, n))


@dataclass
class SimState:
    """
    模拟状态

    Attributes:
        x: 当前私有/普通观点
        xe_history: 表达观点历史（最近的在末尾）
        x_history: 普通观点历史（最近的在末尾，FDGM 使用）
    """
    x: np.ndarray
    xe_history: List[np.ndarray] = field(default_factory=list)
    x_history: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.xe_history = [np.asarray(v, dtype=float) for v in self.xe_history] or [self.x.copy()]
        self.x_history = [np.asarray(v, dtype=float) for v in self.x_history] or [self.x.copy()]
        for vector in [self.x, *self.xe_history, *self.x_history]:
            if vector.shape != self.x.shape:
                raise DimensionMismatch(f"状态向量形状不一致: {vector.shape} vs {self.x.shape}")
            if np.any(vector < 0.0) or np.any(vector > 1.0):
                raise OutOfRangeValue("状态向量必须逐元素位于 [0,1]")

    @classmethod
    def from_panel(cls, panel: SentimentPanel, period: int, latent: Optional[np.ndarray] = None) -> 'SimState':
        """
        以面板第 period 期（1 起算）为起点构造状态，历史取 1..period 期的观测

        latent 给定时作为当前私有观点（EPO 族的拟合潜状态）。
        """
        if not 1 <= period <= panel.n_periods:
            raise InvalidSplit(f"起始期越界: {period}（共{panel.n_periods}期）")
        history = [panel.values[:, k] for k in range(period)]
        x = history[-1] if latent is None else latent
        return cls(x=x, xe_history=history, x_history=history)


def _require_depth(state: SimState, spec: ModelSpec) -> None:
    depth = spec.lag + 1
    if spec.family is ModelFamily.FDGM and len(state.x_history) < depth:
        raise InsufficientHistory(f"x 历史深度 {len(state.x_history)} < lag+1={depth}")
    if spec.family.has_latent_states and len(state.xe_history) < depth:
        raise InsufficientHistory(f"x^e 历史深度 {len(state.xe_history)} < lag+1={depth}")


def simulate(spec: ModelSpec, params: ParamSet, init: SimState,
             horizon: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    迭代模型动力学 horizon 步

    EPO 族每步先由 (x(t), x^e(t)) 计算 x(t+1)，再由 (x(t+1), x^e(t−τ)) 计算 x^e(t+1)；
    其余族 x^e ≡ x。

    Args:
        spec: 模型规格
        params: 参数集
        init: 初始状态（历史深度至少 lag+1）
        horizon: 步数

    Returns:
        [(x, x^e), ...]，长度为 horizon
    """
    if horizon < 0:
        raise InvalidSplit(f"模拟步数必须非负: {horizon}")
    _require_depth(init, spec)
    n = params.W.shape[0]
    if init.x.shape != (n,):
        raise DimensionMismatch(f"初始状态维度 {init.x.shape} 与参数维度 {n} 不一致")

    family = spec.family
    lag = spec.lag
    W = params.W
    S = params.S if params.S is not None else np.ones(n)
    z = params.z if params.z is not None else np.zeros(n)
    x = init.x.copy()
    xe_history = list(init.xe_history)
    x_history = list(init.x_history)
    trajectory = []

    for _ in range(horizon):
        if family is ModelFamily.FDG:
            x = step_fdg(W, x)
            xe = x
        elif family is ModelFamily.FJ:
            x = step_fj(W, S, z, x)
            xe = x
        elif family is ModelFamily.FDGM:
            x = step_fdgm(W, S, x, x_history[-(lag + 1)])
            xe = x
        else:
            x = step_epo_private(W, S, z, x, xe_history[-1])
            xe = epo_expressed(params.Phi, params.A, x, xe_history[-(lag + 1)])
        x_history.append(x)
        xe_history.append(xe)
        trajectory.append((x, xe))

    logger.debug(f"{spec.label} 模拟完成: {horizon} 步")
    return trajectory


def launch_state(fit: FitResult, panel: SentimentPanel) -> SimState:
    """训练期末（T_est）的发射状态；EPO 族使用拟合潜状态"""
    spec = fit.spec
    T_est = fit.n_train_periods
    if T_est > panel.n_periods:
        raise InvalidSplit(f"模型训练期数 {T_est} 超出面板期数 {panel.n_periods}")
    if panel.n_blogs != fit.params.W.shape[0]:
        raise DimensionMismatch(f"面板博客数 {panel.n_blogs} 与模型维度 {fit.params.W.shape[0]} 不一致")
    if T_est < spec.lag + 1:
        raise HorizonBeyondSupport(f"滞后 {spec.lag} 需要读取第1期之前的值（T_est={T_est}）")
    latent = None
    if spec.family.has_latent_states:
        if fit.params.X is None:
            raise MissingParameter(f"{spec.label} 预测需要拟合潜状态 X")
        latent = fit.params.X[:, T_est - 1]
    return SimState.from_panel(panel, T_est, latent=latent)


def predict(fit: FitResult, panel: SentimentPanel, horizon: int) -> np.ndarray:
    """
    从 T_est 期出发的多步表达观点预测，不读取 T_est 之后的观测

    Returns:
        B×horizon 矩阵（horizon = 0 时为 B×0）
    """
    if horizon < 0:
        raise InvalidSplit(f"预测步数必须非负: {horizon}")
    state = launch_state(fit, panel)
    if horizon == 0:
        return np.empty((panel.n_blogs, 0))
    trajectory = simulate(fit.spec, fit.params, state, horizon)
    return np.column_stack([xe for _, xe in trajectory])


def fitted_trajectory(fit: FitResult, panel: SentimentPanel) -> Tuple[List[int], np.ndarray]:
    """
    训练期内的一步拟合值（表达层）

    Returns:
        (期号列表, B×n 矩阵)，期号从 τ+2 到 T_est（1 起算）
    """
    T_est = fit.n_train_periods
    R = expressed_residuals(fit.spec, fit.params, panel, T_est)
    periods = list(range(fit.spec.lag + 2, T_est + 1))
    observed = panel.values[:, fit.spec.lag + 1:T_est]
    return periods, observed - R
