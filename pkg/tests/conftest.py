import numpy as np
import pytest

from opinion_fit.objective import objective
from opinion_fit.panel import FitResult, ModelFamily, ModelSpec, ParamSet, validate_panel
from opinion_fit.reference_data import BUNDLED_T_EST, load_bundled


@pytest.fixture(scope='session')
def bundled():
    return load_bundled()


@pytest.fixture(scope='session')
def panel(bundled):
    return bundled.panel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_stochastic(rng, n, floor=0.05):
    """严格正的行随机矩阵"""
    M = rng.random((n, n)) + floor
    return M / M.sum(axis=1, keepdims=True)


def random_offdiagonal(rng, n, floor=0.05):
    """对角为0、其余严格正的行随机矩阵"""
    M = rng.random((n, n)) + floor
    np.fill_diagonal(M, 0.0)
    return M / M.sum(axis=1, keepdims=True)


def random_params(rng, spec, n_blogs, t_est=None, low=0.05, high=0.95):
    """距边界至少 low 的合法参数集；t_est 给定时为 EPO 族生成潜状态"""
    family = spec.family

    def box(*shape):
        return rng.uniform(low, high, size=shape)

    if family is ModelFamily.FDG:
        return ParamSet.create(spec, W=random_stochastic(rng, n_blogs))
    if family is ModelFamily.FJ:
        return ParamSet.create(spec, W=random_stochastic(rng, n_blogs), S=box(n_blogs), z=box(n_blogs))
    if family is ModelFamily.FDGM:
        return ParamSet.create(spec, W=random_stochastic(rng, n_blogs), S=box(n_blogs))
    kwargs = dict(A=random_offdiagonal(rng, n_blogs), D=box(n_blogs), Phi=box(n_blogs))
    if t_est is not None:
        kwargs['X'] = box(n_blogs, t_est)
    if family is ModelFamily.EPO:
        kwargs.update(S=box(n_blogs), z=box(n_blogs))
    return ParamSet.create(spec, **kwargs)


def make_fit(spec, params, panel, t_est=BUNDLED_T_EST):
    """由已知参数构造拟合结果（目标值按面板重新计算）"""
    value = objective(spec, params, panel, t_est)
    return FitResult(
        spec=spec,
        params=params,
        objective=value,
        n_train_periods=t_est,
        solver_trace=((0, value),),
        seed=0,
        n_starts=1,
        blog_ids=panel.blog_ids,
        period_labels=panel.period_labels[:t_est],
    )


def simulated_panel(spec, params, x0, n_periods):
    """从 x0 出发按模型模拟出的面板（第1期为 x0）"""
    from opinion_fit.dynamics import SimState, simulate

    trajectory = simulate(spec, params, SimState(x=x0), n_periods - 1)
    values = np.column_stack([x0] + [xe for _, xe in trajectory])
    n_blogs = values.shape[0]
    return validate_panel(values, [f"blog{b}" for b in range(1, n_blogs + 1)],
                          [f"p{t}" for t in range(1, n_periods + 1)])


ALL_SPECS = [
    ModelSpec('FDG', 0),
    ModelSpec('FJ', 0),
    ModelSpec('FDGM', 1),
    ModelSpec('FDGM', 2),
    ModelSpec('EPO', 0),
    ModelSpec('EPO', 1),
    ModelSpec('REPO', 0),
    ModelSpec('REPO', 2),
]
