"""
梯度自检模块
用中心差分核对目标函数的解析梯度，作为求解器的提交前自检
"""
import logging
import os
from typing import Dict

import numpy as np

from .exceptions import OnBoundary
from .objective import check_split, gradient, params_to_theta, slice_panel, value
from .panel import ModelFamily, ModelSpec, ParamSet, SentimentPanel, active_parameters, coupled_influence

# 配置日志
logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)
if not logger.handlers:
    handler = logging.StreamHandler()
    handler.setLevel(os.getenv('OPINIONFIT_LOG_LEVEL', 'INFO').upper())
    formatter = logging.Formatter('%(asctime)s - [GradientValidator] - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)

FD_STEP = 1e-6
BOUNDARY_MARGIN = 1e-3


class GradientValidator:
    """解析梯度与中心差分的一致性检查"""

    def __init__(self, step: float = FD_STEP, margin: float = BOUNDARY_MARGIN):
        self.step = step
        self.margin = margin

    def _free_mask(self, name: str, array: np.ndarray) -> np.ndarray:
        """参与检查的元素：A 的对角线不是优化变量"""
        mask = np.ones(array.shape, dtype=bool)
        if name == 'A':
            np.fill_diagonal(mask, False)
        return mask

    def _check_interior(self, name: str, array: np.ndarray, mask: np.ndarray) -> None:
        entries = array[mask]
        upper_bounded = name not in ('W', 'A')
        if np.any(entries < self.margin) or (upper_bounded and np.any(entries > 1.0 - self.margin)):
            raise OnBoundary(
                f"参数 {name} 距约束边界小于 {self.margin:g}: 范围 [{entries.min():.6g}, {entries.max():.6g}]"
            )

    def check(self, spec: ModelSpec, params: ParamSet, panel: SentimentPanel, T_est: int) -> float:
        """
        Returns:
            max |解析 − 差分| / max(1, ‖差分梯度‖∞)
        """
        check_split(spec, panel, T_est)
        family = spec.family
        theta = {name: np.array(val) for name, val in params_to_theta(spec, params, panel.n_blogs).items()}
        if family is ModelFamily.REPO:
            theta['S'] = np.ones(panel.n_blogs)
        sl = slice_panel(panel.values, T_est, spec.lag)
        names = sorted(active_parameters(spec))
        masks = {name: self._free_mask(name, theta[name]) for name in names}
        for name in names:
            self._check_interior(name, theta[name], masks[name])

        analytic = gradient(family, theta, sl)
        numeric: Dict[str, np.ndarray] = {}
        for name in names:
            fd = np.zeros_like(theta[name])
            for index in zip(*np.nonzero(masks[name])):
                original = theta[name][index]
                theta[name][index] = original + self.step
                self._sync(family, theta)
                upper = value(family, theta, sl)
                theta[name][index] = original - self.step
                self._sync(family, theta)
                lower = value(family, theta, sl)
                theta[name][index] = original
                fd[index] = (upper - lower) / (2.0 * self.step)
            self._sync(family, theta)
            numeric[name] = fd

        scale = max(1.0, max(float(np.max(np.abs(numeric[name]))) for name in names))
        deviation = max(
            float(np.max(np.abs(analytic[name][masks[name]] - numeric[name][masks[name]])))
            for name in names
        ) / scale
        logger.debug(f"{spec.label} 梯度自检偏差: {deviation:.3g}")
        return deviation

    @staticmethod
    def _sync(family: ModelFamily, theta: Dict[str, np.ndarray]) -> None:
        if family.has_latent_states:
            theta['W'] = coupled_influence(theta['D'], theta['A'])


def gradient_check(spec: ModelSpec, params: ParamSet, panel: SentimentPanel, T_est: int) -> float:
    """解析梯度与中心差分（h = 1e-6）的最大相对偏差"""
    return GradientValidator().check(spec, params, panel, T_est)
