"""
估计目标模块
各模型族的残差、训练期残差平方和及其解析梯度

参数在内部以 theta 字典（键同 ParamSet 字段）传递，求解器与梯度校验共用。
"""
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .exceptions import DimensionMismatch, InactiveParameter, InvalidSplit, MissingParameter
from .panel import (
    ModelFamily, ModelSpec, ParamSet, SentimentPanel, _REQUIRED_PARAMETERS, _STORED_PARAMETERS,
    active_parameters
)


@dataclass(frozen=True)
class PanelSlices:
    """
    训练期转移对应的面板切片（列 = 转移 t → t+1，t 从 τ 起，0 起算）

    Attributes:
        observed: 训练面板 B×T_est
        now: y(t)
        next: y(t+1)
        lagged: y(t−τ)
        lag: τ
    """
    observed: np.ndarray
    now: np.ndarray
    next: np.ndarray
    lagged: np.ndarray
    lag: int

    @property
    def t_est(self) -> int:
        return self.observed.shape[1]


def check_split(spec: ModelSpec, panel: SentimentPanel, T_est: int) -> None:
    """1 + τ < T_est ≤ T"""
    if isinstance(T_est, bool) or int(T_est) != T_est:
        raise InvalidSplit(f"T_est 必须是整数: {T_est}")
    if not 1 + spec.lag < T_est <= panel.n_periods:
        raise InvalidSplit(
            f"T_est={T_est} 不合法: 需要 {1 + spec.lag} < T_est ≤ {panel.n_periods}（lag={spec.lag}）"
        )


def slice_panel(values: np.ndarray, T_est: int, lag: int) -> PanelSlices:
    observed = np.asarray(values, dtype=float)[:, :T_est]
    return PanelSlices(
        observed=observed,
        now=observed[:, lag:T_est - 1],
        next=observed[:, lag + 1:T_est],
        lagged=observed[:, 0:T_est - 1 - lag],
        lag=lag,
    )


def params_to_theta(spec: ModelSpec, params: ParamSet, n_blogs: int) -> Dict[str, np.ndarray]:
    """校验参数集与模型族、面板的一致性，并转为 theta 字典"""
    family = spec.family
    present = {name for name, value in params.fields().items() if value is not None}
    extra = present - _STORED_PARAMETERS[family]
    if extra:
        raise InactiveParameter(f"{family.value} 模型不允许参数: {sorted(extra)}")
    required = set(_REQUIRED_PARAMETERS[family])
    if family.has_latent_states:
        required.add('X')
    missing = required - present
    if missing:
        raise MissingParameter(f"{family.value} 目标函数缺少参数: {sorted(missing)}")
    if params.W.shape[0] != n_blogs:
        raise DimensionMismatch(f"参数维度 {params.W.shape[0]} 与面板博客数 {n_blogs} 不一致")
    return {name: value for name, value in params.fields().items() if value is not None}


def residuals(family: ModelFamily, theta: Dict[str, np.ndarray], sl: PanelSlices) -> Tuple[np.ndarray, ...]:
    """
    训练期残差

    FDG/FJ/FDGM 返回 (R,)；EPO/REPO 返回 (R1, R2)，分别为私有层与表达层残差。
    """
    if family is ModelFamily.FDG:
        return (sl.next - theta['W'] @ sl.now,)
    if family is ModelFamily.FJ:
        S = theta['S'][:, None]
        return (sl.next - S * (theta['W'] @ sl.now) - (1.0 - S) * theta['z'][:, None],)
    if family is ModelFamily.FDGM:
        S = theta['S'][:, None]
        return (sl.next - S * (theta['W'] @ sl.now) - (1.0 - S) * sl.lagged,)

    lag, T_est = sl.lag, sl.t_est
    X = theta['X']
    A = theta['A']
    d = theta['D'][:, None]
    phi = theta['Phi'][:, None]
    X_now = X[:, lag:T_est - 1]
    X_next = X[:, lag + 1:T_est]
    private = d * X_now + (1.0 - d) * (A @ sl.now)
    if family is ModelFamily.EPO:
        S = theta['S'][:, None]
        R1 = X_next - S * private - (1.0 - S) * theta['z'][:, None]
    else:
        R1 = X_next - private
    R2 = sl.next - phi * X_next - (1.0 - phi) * (A @ sl.lagged)
    return R1, R2


def value(family: ModelFamily, theta: Dict[str, np.ndarray], sl: PanelSlices) -> float:
    return float(sum(np.sum(R * R) for R in residuals(family, theta, sl)))


def gradient(family: ModelFamily, theta: Dict[str, np.ndarray], sl: PanelSlices) -> Dict[str, np.ndarray]:
    """
    目标函数对全部可估计参数的解析梯度

    EPO 族对 A 的梯度对角元恒为0；W 由 D、A 推导，不单独求导。
    """
    if family is ModelFamily.FDG:
        (R,) = residuals(family, theta, sl)
        return {'W': -2.0 * R @ sl.now.T}

    if family in (ModelFamily.FJ, ModelFamily.FDGM):
        (R,) = residuals(family, theta, sl)
        S = theta['S'][:, None]
        WY = theta['W'] @ sl.now
        grads = {'W': -2.0 * (S * R) @ sl.now.T}
        if family is ModelFamily.FJ:
            grads['S'] = -2.0 * np.sum(R * (WY - theta['z'][:, None]), axis=1)
            grads['z'] = -2.0 * np.sum(R, axis=1) * (1.0 - theta['S'])
        else:
            grads['S'] = -2.0 * np.sum(R * (WY - sl.lagged), axis=1)
        return grads

    lag, T_est = sl.lag, sl.t_est
    R1, R2 = residuals(family, theta, sl)
    X = theta['X']
    A = theta['A']
    d = theta['D']
    phi = theta['Phi']
    S = theta['S'] if family is ModelFamily.EPO else np.ones_like(d)
    X_now = X[:, lag:T_est - 1]
    X_next = X[:, lag + 1:T_est]
    U = A @ sl.now
    V = A @ sl.lagged
    private = d[:, None] * X_now + (1.0 - d)[:, None] * U

    gX = np.zeros_like(X)
    gX[:, lag + 1:T_est] += 2.0 * R1 - 2.0 * phi[:, None] * R2
    gX[:, lag:T_est - 1] -= 2.0 * (S * d)[:, None] * R1
    gA = (-2.0 * (R1 * (S * (1.0 - d))[:, None]) @ sl.now.T
          - 2.0 * (R2 * (1.0 - phi)[:, None]) @ sl.lagged.T)
    np.fill_diagonal(gA, 0.0)
    grads = {
        'A': gA,
        'D': -2.0 * np.sum(R1 * S[:, None] * (X_now - U), axis=1),
        'Phi': -2.0 * np.sum(R2 * (X_next - V), axis=1),
        'X': gX,
    }
    if family is ModelFamily.EPO:
        grads['S'] = -2.0 * np.sum(R1 * (private - theta['z'][:, None]), axis=1)
        grads['z'] = -2.0 * np.sum(R1, axis=1) * (1.0 - S)
    return grads


def objective(spec: ModelSpec, params: ParamSet, panel: SentimentPanel, T_est: int) -> float:
    """
    训练期 1..T_est 上的残差平方和

    Args:
        spec: 模型规格
        params: 参数集（EPO/REPO 需包含潜状态 X）
        panel: 观测面板
        T_est: 训练期数

    Returns:
        目标值（≥ 0）
    """
    check_split(spec, panel, T_est)
    theta = params_to_theta(spec, params, panel.n_blogs)
    if spec.family.has_latent_states and theta['X'].shape[1] != T_est:
        raise DimensionMismatch(f"潜状态 X 列数 {theta['X'].shape[1]} 与 T_est={T_est} 不一致")
    return value(spec.family, theta, slice_panel(panel.values, T_est, spec.lag))


def objective_gradient(spec: ModelSpec, params: ParamSet, panel: SentimentPanel,
                       T_est: int) -> Dict[str, np.ndarray]:
    """返回 {参数名: 梯度}，仅含可估计参数"""
    check_split(spec, panel, T_est)
    theta = params_to_theta(spec, params, panel.n_blogs)
    grads = gradient(spec.family, theta, slice_panel(panel.values, T_est, spec.lag))
    return {name: grads[name] for name in active_parameters(spec)}


def expressed_residuals(spec: ModelSpec, params: ParamSet, panel: SentimentPanel, T_est: int) -> np.ndarray:
    """
    表达层一步残差 B×(T_est−1−τ)，第 k 列对应预测期 τ+2+k（1 起算）

    EPO 族取表达层残差，其余取唯一残差。
    """
    check_split(spec, panel, T_est)
    theta = params_to_theta(spec, params, panel.n_blogs)
    return residuals(spec.family, theta, slice_panel(panel.values, T_est, spec.lag))[-1]
