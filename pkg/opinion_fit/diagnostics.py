"""
诊断模块
区间违背指数、误差指标与模型评估表
"""
import logging
import os
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .dynamics import predict
from .exceptions import DegenerateRange, DiagnosticsError, DimensionMismatch, IndexOutOfRange, InvalidSplit
from .objective import expressed_residuals
from .panel import FAMILY_ORDER, FitResult, SentimentPanel

# 配置日志
logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)
if not logger.handlers:
    handler = logging.StreamHandler()
    handler.setLevel(os.getenv('OPINIONFIT_LOG_LEVEL', 'INFO').upper())
    formatter = logging.Formatter('%(asctime)s - [Diagnostics] - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)


@dataclass(frozen=True)
class MetricReport:
    """
    单个模型的误差指标

    Attributes:
        sum_of_residuals: 训练目标值
        mae: 训练期一步残差范数的均值
        mape_percent: 100 × mean(‖r_t‖ / ‖y(t+1)‖)
        rmse_in_sample: √mean(‖r_t‖²)
        rmse_per_test_period: 每个测试期的预测误差范数
        rmse_test_overall: √mean(各测试期 RMSE²)
        test_periods: 测试期号（1 起算）
    """
    sum_of_residuals: float
    mae: float
    mape_percent: float
    rmse_in_sample: float
    rmse_per_test_period: Tuple[float, ...]
    rmse_test_overall: float
    test_periods: Tuple[int, ...] = ()

    def as_row(self) -> Dict[str, float]:
        row = {
            'sum_of_residuals': self.sum_of_residuals,
            'mae': self.mae,
            'mape': self.mape_percent,
            'rmse_in': self.rmse_in_sample,
        }
        for period, rmse in zip(self.test_periods, self.rmse_per_test_period):
            row[f'rmse_t{period}'] = rmse
        row['rmse_out'] = self.rmse_test_overall
        return row


def _reference_range(panel: SentimentPanel, t: int, tau: int) -> Tuple[float, float]:
    """第 t−1−τ .. t−1 期（1 起算）全体博客的最小/最大值"""
    window = panel.values[:, t - 2 - tau:t - 1]
    return float(window.min()), float(window.max())


def range_violation_index(panel: SentimentPanel, b: int, t: int, tau: int) -> float:
    """
    μ_b(t,τ) = (σ_b(t) − m) / (M − m)，m、M 为前 τ+1 期全体博客的最小/最大值

    Args:
        panel: 观测面板
        b: 博客序号（1 起算）
        t: 期号（1 起算，需 t ≥ τ+2）
        tau: 回看滞后
    """
    if tau < 0:
        raise IndexOutOfRange(f"tau 必须非负: {tau}")
    if not 1 <= b <= panel.n_blogs:
        raise IndexOutOfRange(f"博客序号越界: {b}（共{panel.n_blogs}个）")
    if not tau + 2 <= t <= panel.n_periods:
        raise IndexOutOfRange(f"期号 {t} 不在有效范围 [{tau + 2}, {panel.n_periods}]（tau={tau}）")
    low, high = _reference_range(panel, t, tau)
    if high == low:
        raise DegenerateRange(f"第 {t - 1 - tau}..{t - 1} 期观测全部相等（{low}），μ 无定义")
    return (float(panel.values[b - 1, t - 1]) - low) / (high - low)


def violation_summary(panel: SentimentPanel, tau: int, slack: float) -> Dict[str, int]:
    """
    每个博客 μ 落在 [−slack, 1+slack] 之外的期数

    参考区间退化的单元计为 0 次违背。
    """
    if slack < 0:
        raise DiagnosticsError(f"slack 必须非负: {slack}")
    counts = {}
    for b, blog_id in enumerate(panel.blog_ids, start=1):
        count = 0
        for t in range(tau + 2, panel.n_periods + 1):
            try:
                mu = range_violation_index(panel, b, t, tau)
            except DegenerateRange:
                continue
            if mu < -slack or mu > 1.0 + slack:
                count += 1
        counts[blog_id] = count
    logger.debug(f"违背统计 tau={tau}, slack={slack}: {counts}")
    return counts


def range_violation_table(panel: SentimentPanel, tau_max: int) -> pd.DataFrame:
    """τ = 0..tau_max 的长表（tau, blog_id, t, mu），仅含有效期"""
    if tau_max < 0:
        raise IndexOutOfRange(f"tau_max 必须非负: {tau_max}")
    rows = []
    for tau in range(tau_max + 1):
        for b, blog_id in enumerate(panel.blog_ids, start=1):
            for t in range(tau + 2, panel.n_periods + 1):
                rows.append({'tau': tau, 'blog_id': blog_id, 't': t,
                             'mu': range_violation_index(panel, b, t, tau)})
    return pd.DataFrame(rows, columns=['tau', 'blog_id', 't', 'mu'])


def rmse_period(predicted, observed) -> float:
    """单期预测误差：跨博客的欧氏范数（不除以 B）"""
    predicted = np.asarray(predicted, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if predicted.shape != observed.shape or predicted.ndim != 1:
        raise DimensionMismatch(f"预测与观测形状不一致: {predicted.shape} vs {observed.shape}")
    return float(np.linalg.norm(predicted - observed))


def evaluate(fit: FitResult, panel: SentimentPanel, test_periods: Sequence[int]) -> MetricReport:
    """
    计算训练期内与测试期的误差指标

    Args:
        fit: 拟合结果
        panel: 观测面板（前 T_est 期与训练面板一致）
        test_periods: 测试期号，均需大于 T_est

    Returns:
        MetricReport
    """
    T_est = fit.n_train_periods
    periods = tuple(sorted(int(p) for p in test_periods))
    if any(p <= T_est or p > panel.n_periods for p in periods):
        raise InvalidSplit(f"测试期 {list(periods)} 必须位于 ({T_est}, {panel.n_periods}]")

    residuals = expressed_residuals(fit.spec, fit.params, panel, T_est)
    norms = np.linalg.norm(residuals, axis=0)
    observed_norms = np.linalg.norm(panel.values[:, fit.spec.lag + 1:T_est], axis=0)
    if np.any(observed_norms == 0.0):
        raise DiagnosticsError("训练期存在全零观测向量，MAPE 无定义")

    rmse_test: List[float] = []
    if periods:
        forecast = predict(fit, panel, periods[-1] - T_est)
        for p in periods:
            rmse_test.append(rmse_period(forecast[:, p - T_est - 1], panel.values[:, p - 1]))

    report = MetricReport(
        sum_of_residuals=float(fit.objective),
        mae=float(np.mean(norms)),
        mape_percent=float(100.0 * np.mean(norms / observed_norms)),
        rmse_in_sample=float(np.sqrt(np.mean(norms ** 2))),
        rmse_per_test_period=tuple(rmse_test),
        rmse_test_overall=float(np.sqrt(np.mean(np.square(rmse_test)))) if rmse_test else 0.0,
        test_periods=periods,
    )
    logger.info(f"{fit.spec.label} 评估完成: rmse_in={report.rmse_in_sample:.6g}, rmse_out={report.rmse_test_overall:.6g}")
    return report


def evaluation_frame(entries: Iterable[Tuple[FitResult, MetricReport]]) -> pd.DataFrame:
    """
    评估表：每个模型一行，按族顺序再按滞后排序

    列为 model, lag, sum_of_residuals, mae, mape, rmse_in, rmse_t{p}..., rmse_out。
    """
    rows = []
    order = []
    for fit_result, report in entries:
        row = {'model': fit_result.spec.family.value, 'lag': fit_result.spec.lag}
        row.update(report.as_row())
        rows.append(row)
        order.append(fit_result.spec)
    frame = pd.DataFrame(rows)
    if frame.empty:
        return frame
    frame['_rank'] = [FAMILY_ORDER.index(spec.family) for spec in order]
    frame = frame.sort_values(['_rank', 'lag'], kind='mergesort').drop(columns='_rank')
    return frame.reset_index(drop=True)
