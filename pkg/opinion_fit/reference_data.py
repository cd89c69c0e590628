"""
内置参考数据集
7 个博客 × 12 期的观测面板、各模型的参考参数与误差指标、两期预测和区间违背指数

数据以静态文本保存，无需联网即可加载。
"""
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from .panel import ModelFamily, ModelSpec, ParamSet, SentimentPanel, validate_panel

# 参考参数已四舍五入到4位小数
REFERENCE_STOCHASTIC_TOL = 1e-4
# 前 10 期用于估计，第 11、12 期用于检验
BUNDLED_T_EST = 10
BUNDLED_TEST_PERIODS = (11, 12)

_PANEL = """
0.542237 0.69269  0.719408 0.656396 0.662846 0.72706  0.582414 0.577169 0.658991 0.808328 0.775289 0.713721
0.690464 0.685991 0.626356 0.593513 0.809609 0.665289 0.529654 0.678874 0.659458 0.682581 0.709356 0.636683
0.640777 0.601049 0.617184 0.593332 0.643933 0.648383 0.601566 0.568535 0.610053 0.552651 0.600009 0.499918
0.687817 0.623997 0.529495 0.621614 0.649233 0.708136 0.598221 0.604527 0.607142 0.600858 0.592896 0.627276
0.473992 0.497273 0.513026 0.506612 0.546008 0.594167 0.523988 0.545223 0.571942 0.573838 0.484829 0.561077
0.740787 0.669839 0.666616 0.742431 0.571651 0.73716  0.655859 0.636605 0.669664 0.710904 0.679262 0.784448
0.551033 0.557094 0.537976 0.49017  0.632734 0.766128 0.574511 0.653399 0.694449 0.679584 0.680478 0.708864
"""

# 简化 EPO 模型对第 11、12 期的预测（列）
_FORECASTS = """
0.692155 0.689703
0.69206  0.685445
0.577721 0.579021
0.574334 0.5952
0.584956 0.594069
0.684408 0.688682
0.677213 0.682164
"""

# 区间违背指数 μ_b(t,τ)，τ 对应的首列为 t = τ+2
_MU = {
    0: """
0.819721 1.13673 0.694686 0.684512 0.686841 -0.0683437 0.403284 0.85123 1.92956 0.870779 0.788034
0.794612 0.660552 0.389993 1.2663 0.452507 -0.375161 1.17453 0.854728 0.90312 0.612904 0.522804
0.476234 0.613618 0.389117 0.609538 0.388371 0.043027 0.337806 0.485069 -0.157465 0.185227 0.0519489
0.562248 0.164886 0.526151 0.630548 0.615053 0.0235739 0.610741 0.46329 0.236038 0.157404 0.49042
0.0872619 0.0806087 -0.0310778 0.22135 0.182695 -0.408109 0.161029 0.199914 0.0154763 -0.265266 0.262507
0.734072 0.866573 1.11156 0.323003 0.725158 0.358757 0.853995 0.931087 1.13432 0.495199 1.03153
0.311483 0.20829 -0.110742 0.565144 0.835051 -0.114306 0.981344 1.11654 0.878658 0.499954 0.771312
""",
    1: """
0.919866 0.716337 0.684512 0.741582 0.138111 0.219631 0.871626 1.76313 0.870779 0.707552
0.571089 0.433251 1.2663 0.548209 -0.0620432 0.639655 0.874645 0.920467 0.612904 0.469411
0.536712 0.432437 0.609538 0.495284 0.210764 0.183972 0.555667 0.0497773 0.185227 0.0466434
0.208034 0.559753 0.630548 0.682341 0.198074 0.332614 0.536874 0.372824 0.157404 0.440334
0.146304 0.0420392 0.22135 0.32556 -0.083537 0.0876977 0.309607 0.191753 -0.265266 0.235697
0.721991 1.10365 0.323003 0.7732 0.416732 0.465091 0.940535 1.11027 0.495199 0.926183
0.239825 -0.0319756 0.565144 0.863884 0.108127 0.534447 1.10056 0.900384 0.499954 0.692539
""",
    2: """
0.683687 0.684512 0.741582 0.288769 0.186196 0.55754 1.66806 0.874428 0.707552
0.447988 1.2663 0.548209 0.123602 0.542279 0.559471 0.930374 0.623833 0.469411
0.447311 0.609538 0.495284 0.348723 0.155965 0.355435 0.168151 0.20823 0.0466434
0.553315 0.630548 0.682341 0.338251 0.281979 0.343414 0.450954 0.181193 0.440334
0.122264 0.22135 0.32556 0.105865 0.0743473 0.198042 0.29244 -0.229544 0.235697
1.00616 0.323003 0.7732 0.518687 0.394289 0.601618 1.09653 0.509451 0.926183
0.0606389 0.565144 0.863884 0.264027 0.453087 0.703978 0.912793 0.514071 0.692539
""",
    3: """
0.703525 0.741582 0.288769 0.27235 0.472664 1.17428 0.883806 0.707552
1.25025 0.548209 0.123602 0.590736 0.474301 0.654963 0.651926 0.469411
0.63307 0.495284 0.348723 0.245319 0.301326 0.118374 0.267361 0.0466434
0.652814 0.682341 0.338251 0.357993 0.291135 0.317462 0.242343 0.440334
0.268277 0.32556 0.105865 0.172342 0.167893 0.205872 -0.137719 0.235697
0.363804 0.7732 0.518687 0.458413 0.510032 0.771934 0.546086 0.926183
0.591352 0.863884 0.264027 0.510986 0.59681 0.642587 0.550361 0.692539
""",
}

# 误差指标：sum_of_residuals, mae, mape, rmse_in, rmse_t11, rmse_t12, rmse_out
_METRICS = """
FDG  0 0.2000 0.1308 7.7957 0.1461 0.1463 0.1927 0.1711
FJ   0 0.1647 0.1257 7.5226 0.1401 0.1330 0.1704 0.1529
EPO  0 0.0773 0.1129 6.7539 0.1319 0.1422 0.1563 0.1494
REPO 0 0.0879 0.1161 6.9463 0.1347 0.1346 0.1457 0.1402
FDGM 1 0.1754 0.1219 7.2959 0.1423 0.1496 0.1512 0.1504
FDGM 2 0.1412 0.0987 5.8621 0.1242 0.1238 0.1641 0.1454
EPO  1 0.0681 0.1222 7.3173 0.1411 0.1335 0.1559 0.1451
REPO 1 0.0783 0.1277 7.6704 0.1434 0.1347 0.1476 0.1413
EPO  2 0.0530 0.0883 5.2564 0.1154 0.1584 0.1340 0.1467
REPO 2 0.0639 0.0854 5.0497 0.1114 0.1208 0.1641 0.1441
"""
METRIC_COLUMNS = ('sum_of_residuals', 'mae', 'mape', 'rmse_in', 'rmse_t11', 'rmse_t12', 'rmse_out')

# 参考参数：矩阵行以 ';' 分隔
_PARAMS = {
    (ModelFamily.FDG, 0): {
        'W': """0.0244 0.6763 0 0 0 0.2993 0; 0 0.1924 0.0989 0 0.0589 0.6498 0;
                0 0.2177 0.3311 0 0.3025 0.1487 0; 0 0.1601 0.7622 0 0.0777 0 0;
                0 0.1097 0 0 0.8903 0 0; 0.2813 0.5685 0 0 0 0.1502 0;
                0 0.4987 0 0.0847 0.3206 0 0.0960""",
    },
    (ModelFamily.FJ, 0): {
        'W': """0 1 0 0 0 0 0; 0.1268 0.1422 0.1493 0.1554 0.1422 0.1756 0.1085;
                0.1051 0.6610 0 0.0029 0 0.2310 0; 0 0.2920 0.6933 0 0.0147 0 0;
                0 0.2000 0 0 0.8000 0 0; 0.1731 0.4940 0.2603 0 0 0 0.0726;
                0 0.3311 0 0 0.6689 0 0""",
        'S': "0.4861 0 0.3347 0.5676 0.5509 0.6756 0.8905",
        'z': "0.6915 0.6590 0.5748 0.6026 0.5231 0.7394 1",
    },
    (ModelFamily.FDGM, 1): {
        'W': """0 0.6813 0 0 0 0.3187 0; 0 0.1823 0.1652 0 0 0.6525 0;
                0 0.5703 0 0 0.4297 0 0; 0 0.1496 0.8176 0 0.0328 0 0;
                0 0.7676 0 0 0.2324 0 0; 0.4277 0.3967 0 0 0 0 0.1756;
                0 0.9052 0 0.0246 0.0702 0 0""",
        'S': "1 1 0.4229 1 0.2877 0.6648 0.6756",
    },
    (ModelFamily.FDGM, 2): {
        'W': """0 0.6753 0 0 0 0.3247 0; 0 0.3628 0 0 0 0.6372 0;
                0 0.2109 0.1405 0.3481 0.3004 0 0; 0 0.3239 0.6637 0 0 0.0124 0;
                0 0.4657 0.4326 0 0.1017 0 0; 0.3881 0.5609 0.0510 0 0 0 0;
                0 0.7242 0 0.2758 0 0 0""",
        'S': "1 0.5977 0.5596 0.9146 0.3260 0.7275 0.7103",
    },
    (ModelFamily.EPO, 0): {
        'A': """0 1 0 0 0 0 0; 0.1383 0 0.174 0.1834 0.1646 0.2294 0.1102;
                0 0.6193 0 0 0 0.3807 0; 0 0.2876 0.7124 0 0 0 0;
                0 1 0 0 0 0 0; 0.1731 0.494 0.2603 0 0 0 0.0726;
                0 1 0 0 0 0 0""",
        'D': "0 1 0.0789 0.0106 1 0 1",
        'Phi': "1 1 1 1 0.8158 1 0.6261",
        'S': "0.4861 0.0288 0.4628 0.5802 0.7539 0.6756 0.8456",
        'z': "0.6915 0.6579 0.5591 0.6016 0.5614 0.7394 0.8018",
    },
    (ModelFamily.REPO, 0): {
        'A': """0 0.6868 0 0 0 0.3132 0; 0 0 0 0 0.0356 0.9644 0;
                0 1 0 0 0 0 0; 0 0.1537 0.7992 0 0.0471 0 0;
                0 1 0 0 0 0 0; 0 1 0 0 0 0 0;
                0 1 0 0 0 0 0""",
        'D': "0.0160 0.4091 1 0.0206 0.9271 0.4415 0.6664",
        'Phi': "1 1 0.8629 1 0.8510 1 1",
    },
    (ModelFamily.EPO, 1): {
        'A': """0 1 0 0 0 0 0; 0.1759 0 0.1746 0.1616 0.1743 0.1797 0.1339;
                0 0.6113 0 0 0 0.3887 0; 0 0.9525 0.0475 0 0 0 0;
                0 1 0 0 0 0 0; 0.1329 0.5213 0.3094 0 0 0 0.0363;
                0 0 0 0 0 1 0""",
        'D': "0.1271 1 0.0114 0.3686 0.3052 0.0217 1",
        'Phi': "1 1 1 1 1 1 0.4507",
        'S': "0.5294 0.0408 0.4494 0.4326 0.2815 0.6997 0.6546",
        'z': "0.687 0.6593 0.5583 0.6178 0.5255 0.7534 0.7391",
    },
    (ModelFamily.EPO, 2): {
        'A': """0 1 0 0 0 0 0; 0.1767 0 0.1766 0.1659 0.1665 0.1865 0.1278;
                0.8348 0 0 0 0 0.1652 0; 0.1646 0.8354 0 0 0 0 0;
                0 1 0 0 0 0 0; 0 0.7374 0 0 0 0 0.2626;
                0 1 0 0 0 0 0""",
        'D': "0 1 1 0.0037 0.3064 0.2784 0.380772",
        'Phi': "1 1 0.4858 0.7465 0.9771 1 1",
        'S': "0.4613 0.0791 0.8052 0.6506 0.2726 0.8619 0.5673",
        'z': "0.6811 0.6682 0.4374 0.5521 0.5319 0.7374 0.6821",
    },
    (ModelFamily.REPO, 1): {
        'A': """0 0.7056 0 0 0 0.2944 0; 0 0 0 0 0 1 0;
                0.1648 0.1537 0 0.1673 0.2361 0.1734 0.1047; 0 0.3102 0.6450 0 0 0.0447 0;
                0 0.9998 0.0001 0 0 0.0001 0; 0.0001 0.9999 0 0 0 0 0;
                0 0.6259 0 0.3741 0 0 0""",
        'D': "0.0943 0.3622 1 0.1508 0.9107 0.4437 0.1949",
        'Phi': "1 0.8170 1 1 1 1 1",
    },
    (ModelFamily.REPO, 2): {
        'A': """0 0.6857 0 0 0 0.3143 0; 0 0 0 0 0 1 0;
                0.4626 0 0 0 0.5374 0 0; 0 0.4750 0.5247 0 0.0003 0 0;
                0.9997 0 0.0001 0 0 0 0.0002; 0 0.7483 0 0 0 0 0.2517;
                0 1 0 0 0 0 0""",
        'D': "0.0258 0.3678 0.6286 0.0155 0.9505 0.3034 0.2272",
        'Phi': "1 1 0.4608 0.7261 0.7869 0.9998 0.8164",
    },
}


def _table(text: str) -> np.ndarray:
    return np.loadtxt(io.StringIO(text.strip()), ndmin=2)


def _parse_param(text: str) -> np.ndarray:
    rows = [row.split() for row in text.split(';')]
    if len(rows) == 1:
        return np.array([float(v) for v in rows[0]])
    return np.array([[float(v) for v in row] for row in rows])


@dataclass(frozen=True, eq=False)
class BundledDataset:
    """
    内置参考数据

    Attributes:
        panel: 7×12 观测面板
        reference_params: (族, 滞后) → 参考参数（EPO 族不含潜状态 X）
        reference_metrics: (族, 滞后) → 参考误差指标
        reference_forecasts: 简化 EPO 模型对第 11、12 期的 7×2 预测
        reference_mu: τ → 7×(11−τ) 区间违背指数矩阵，首列为 t = τ+2
    """
    panel: SentimentPanel
    reference_params: Dict[Tuple[ModelFamily, int], ParamSet]
    reference_metrics: Dict[Tuple[ModelFamily, int], Dict[str, float]]
    reference_forecasts: np.ndarray
    reference_mu: Dict[int, np.ndarray]


def _build_metrics() -> Dict[Tuple[ModelFamily, int], Dict[str, float]]:
    metrics = {}
    for line in _METRICS.strip().splitlines():
        parts = line.split()
        key = (ModelFamily(parts[0]), int(parts[1]))
        metrics[key] = dict(zip(METRIC_COLUMNS, (float(v) for v in parts[2:])))
    return metrics


@lru_cache(maxsize=1)
def load_bundled() -> BundledDataset:
    """加载内置数据集（进程内缓存）"""
    panel = validate_panel(
        _table(_PANEL),
        [f"blog{b}" for b in range(1, 8)],
        [f"p{t}" for t in range(1, 13)],
    )
    params = {}
    for (family, lag), fields in _PARAMS.items():
        params[(family, lag)] = ParamSet.create(
            ModelSpec(family=family, lag=lag),
            stochastic_tol=REFERENCE_STOCHASTIC_TOL,
            **{name: _parse_param(text) for name, text in fields.items()}
        )
    forecasts = _table(_FORECASTS)
    forecasts.setflags(write=False)
    mu = {}
    for tau, text in _MU.items():
        table = _table(text)
        table.setflags(write=False)
        mu[tau] = table
    return BundledDataset(
        panel=panel,
        reference_params=params,
        reference_metrics=_build_metrics(),
        reference_forecasts=forecasts,
        reference_mu=mu,
    )
