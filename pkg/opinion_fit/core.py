"""
核心协调器模块
OpinionFitManager - 组合聚合、估计、预测、诊断与文件读写的主协调器
"""
import logging
import os
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from .aggregator import EngagementRecord, build_panel, cell_counts, natural_key
from .diagnostics import (
    MetricReport, evaluate, evaluation_frame, range_violation_table, rmse_period, violation_summary
)
from .dynamics import SimState, fitted_trajectory, predict, simulate
from .estimator import SolverConfig, fit
from .exceptions import DimensionMismatch, OpinionFitError, StorageError
from .panel import EXPORT_ZERO_THRESHOLD, FitResult, ModelSpec, SentimentPanel, export_matrix
from .reference_data import BundledDataset, load_bundled
from .storage import FileManager

# 配置日志
logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)
if not logger.handlers:
    handler = logging.StreamHandler()
    handler.setLevel(os.getenv('OPINIONFIT_LOG_LEVEL', 'INFO').upper())
    formatter = logging.Formatter('%(asctime)s - [OpinionFitManager] - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)

BUNDLED = 'bundled'


class OpinionFitManager:
    """
    观点动力学拟合管理器
    整合所有功能模块，提供统一的接口
    """

    def __init__(self, file_manager: Optional[FileManager] = None, max_workers: Optional[int] = None):
        """
        初始化管理器

        Args:
            file_manager: 文件管理器（默认新建）
            max_workers: 多起点并行线程上限（默认取 OPINIONFIT_THREADS）
        """
        self.files = file_manager or FileManager()
        self.max_workers = max_workers

    # 数据相关方法
    @staticmethod
    def bundled() -> BundledDataset:
        return load_bundled()

    def load_panel(self, source: str) -> SentimentPanel:
        """读取面板：'bundled' 表示内置数据集，否则为 CSV 路径"""
        if source == BUNDLED:
            return load_bundled().panel
        return self.files.read_panel(source)

    def aggregate(self, records_csv: str) -> Tuple[SentimentPanel, Dict[Tuple[str, int], int]]:
        """读取评论记录并聚合为面板，同时返回每个单元的记录数"""
        records: List[EngagementRecord] = self.files.read_records(records_csv)
        blogs = sorted({r.blog_id for r in records}, key=natural_key)
        T = max(r.period for r in records)
        panel = build_panel(records, B=len(blogs), T=T, blog_ids=blogs)
        return panel, cell_counts(records)

    # 估计相关方法
    def fit(self, spec: ModelSpec, panel: SentimentPanel, T_est: Optional[int] = None,
            config: Optional[SolverConfig] = None) -> FitResult:
        """拟合模型，T_est 默认为 T − 2"""
        if T_est is None:
            T_est = panel.n_periods - 2
        return fit(spec, panel, T_est, config, max_workers=self.max_workers)

    def save_fit(self, result: FitResult, path: str) -> str:
        return self.files.write_json(result.to_dict(), path)

    def load_fit(self, path: str) -> FitResult:
        """读取拟合结果 JSON，内容不合法时抛出带文件名的 StorageError"""
        payload = self.files.read_json(path)
        try:
            return FitResult.from_dict(payload)
        except KeyError as e:
            raise StorageError(f"模型文件缺少字段 {e}: {path}")
        except (TypeError, ValueError, OpinionFitError) as e:
            logger.error(f"❌ 模型文件无效: {path}")
            raise StorageError(f"模型文件无效 {path}: {str(e)}")

    # 预测相关方法
    @staticmethod
    def forecast_frame(fit_result: FitResult, panel: SentimentPanel, horizon: int) -> pd.DataFrame:
        """预测长表（blog_id, t, predicted）"""
        forecast = predict(fit_result, panel, horizon)
        rows = [
            {'blog_id': blog_id, 't': fit_result.n_train_periods + k + 1, 'predicted': forecast[b, k]}
            for k in range(forecast.shape[1])
            for b, blog_id in enumerate(panel.blog_ids)
        ]
        return pd.DataFrame(rows, columns=['blog_id', 't', 'predicted'])

    @staticmethod
    def trajectory_frame(fit_result: FitResult, panel: SentimentPanel, start: int,
                         horizon: int) -> pd.DataFrame:
        """
        从面板第 start 期出发的模拟轨迹（t, blog_id, x, xe）

        EPO 族在 start 位于训练期内时以拟合潜状态为私有观点。
        """
        latent = None
        X = fit_result.params.X
        if X is not None and start <= X.shape[1]:
            latent = X[:, start - 1]
        state = SimState.from_panel(panel, start, latent=latent)
        trajectory = simulate(fit_result.spec, fit_result.params, state, horizon)
        rows = [
            {'t': start + k + 1, 'blog_id': blog_id, 'x': x[b], 'xe': xe[b]}
            for k, (x, xe) in enumerate(trajectory)
            for b, blog_id in enumerate(panel.blog_ids)
        ]
        return pd.DataFrame(rows, columns=['t', 'blog_id', 'x', 'xe'])

    @staticmethod
    def fitted_frame(fit_result: FitResult, panel: SentimentPanel) -> pd.DataFrame:
        """训练期一步拟合值长表（t, blog_id, fitted, observed）"""
        periods, fitted = fitted_trajectory(fit_result, panel)
        rows = [
            {'t': t, 'blog_id': blog_id, 'fitted': fitted[b, k], 'observed': panel.values[b, t - 1]}
            for k, t in enumerate(periods)
            for b, blog_id in enumerate(panel.blog_ids)
        ]
        return pd.DataFrame(rows, columns=['t', 'blog_id', 'fitted', 'observed'])

    # 诊断相关方法
    @staticmethod
    def diagnose(panel: SentimentPanel, tau_max: int) -> pd.DataFrame:
        return range_violation_table(panel, tau_max)

    @staticmethod
    def violation_counts(panel: SentimentPanel, tau_max: int, slack: float) -> Dict[int, Dict[str, int]]:
        """τ = 0..tau_max 各博客的违背期数"""
        return {tau: violation_summary(panel, tau, slack) for tau in range(tau_max + 1)}

    @staticmethod
    def check_panel_match(fit_result: FitResult, panel: SentimentPanel) -> None:
        """模型记录的博客ID与面板不一致时抛出 DimensionMismatch"""
        if fit_result.blog_ids and tuple(fit_result.blog_ids) != panel.blog_ids:
            raise DimensionMismatch(
                f"模型博客ID {list(fit_result.blog_ids)} 与面板 {list(panel.blog_ids)} 不一致"
            )

    def evaluate_models(self, panel: SentimentPanel,
                        model_paths: Sequence[str]) -> Tuple[pd.DataFrame, List[Tuple[str, FitResult]]]:
        """
        逐个评估模型文件

        Returns:
            (评估表, [(文件路径, 拟合结果), ...])
        """
        entries: List[Tuple[FitResult, MetricReport]] = []
        loaded = []
        for path in model_paths:
            result = self.load_fit(path)
            self.check_panel_match(result, panel)
            test_periods = range(result.n_train_periods + 1, panel.n_periods + 1)
            entries.append((result, evaluate(result, panel, test_periods)))
            loaded.append((path, result))
        return evaluation_frame(entries), loaded

    @staticmethod
    def heatmap_frames(result: FitResult, threshold: float = EXPORT_ZERO_THRESHOLD) -> Dict[str, pd.DataFrame]:
        """影响矩阵热力图数据：W（全部族）与 A（EPO 族），小于阈值的元素写为0"""
        labels = list(result.blog_ids) or [f"blog{b}" for b in range(1, result.params.W.shape[0] + 1)]
        frames = {}
        for name in ('W', 'A'):
            matrix = getattr(result.params, name)
            if matrix is None:
                continue
            frame = pd.DataFrame(export_matrix(matrix, threshold), columns=labels)
            frame.insert(0, 'blog_id', labels)
            frames[name] = frame
        return frames

    def write_frame(self, frame: pd.DataFrame, path: str) -> str:
        return self.files.write_frame(frame, path)

    def write_panel(self, panel: SentimentPanel, path: str) -> str:
        return self.files.write_panel(panel, path)

    @staticmethod
    def forecast_rmse(forecast: pd.DataFrame, panel: SentimentPanel) -> Dict[int, float]:
        """预测期与面板观测重叠部分的逐期 RMSE"""
        order = {blog: i for i, blog in enumerate(panel.blog_ids)}
        result = {}
        for t, group in forecast.groupby('t', sort=True):
            if t > panel.n_periods:
                continue
            group = group.sort_values('blog_id', key=lambda s: s.map(order))
            result[int(t)] = rmse_period(group['predicted'].to_numpy(), panel.values[:, t - 1])
        return result
