import numpy as np
import pytest

from opinion_fit.dynamics import (
    SimState, epo_expressed, fitted_trajectory, launch_state, predict, simulate, step_epo_private,
    step_fdg, step_fdgm, step_fj
)
from opinion_fit.exceptions import (
    DimensionMismatch, HorizonBeyondSupport, InsufficientHistory, InvalidSplit, MissingParameter,
    OutOfRangeValue
)
from opinion_fit.objective import expressed_residuals
from opinion_fit.panel import ModelFamily, ModelSpec, ParamSet

from conftest import ALL_SPECS, make_fit, random_offdiagonal, random_params, random_stochastic


def test_fdg_step_on_reference_row(bundled, panel):
    W = bundled.reference_params[(ModelFamily.FDG, 0)].W
    x_next = step_fdg(W, panel.column(1))
    assert x_next[0] == pytest.approx(0.70191, abs=1e-5)


def test_fj_step_with_zero_susceptibility_returns_prejudice(bundled, panel):
    params = bundled.reference_params[(ModelFamily.FJ, 0)]
    x_next = step_fj(params.W, params.S, params.z, panel.column(1))
    assert x_next[1] == pytest.approx(0.6590, abs=1e-12)


def test_fdgm_step_mixes_lagged_state():
    W = np.array([[0.5, 0.5], [0.0, 1.0]])
    x_next = step_fdgm(W, [0.5, 1.0], [0.2, 0.6], [0.8, 0.0])
    np.testing.assert_allclose(x_next, [0.5 * 0.4 + 0.5 * 0.8, 0.6], atol=1e-15)


def test_epo_steps_by_hand():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    D = np.array([0.5, 0.0])
    params = ParamSet.create(ModelSpec('EPO'), A=A, D=D, S=[1.0, 0.5], Phi=[0.5, 1.0], z=[0.0, 1.0])
    x = step_epo_private(params.W, params.S, params.z, [0.2, 0.4], [0.6, 0.8])
    np.testing.assert_allclose(x, [0.5 * 0.2 + 0.5 * 0.8, 0.5 * 0.6 + 0.5 * 1.0], atol=1e-15)
    xe = epo_expressed(params.Phi, params.A, x, [0.6, 0.8])
    np.testing.assert_allclose(xe, [0.5 * x[0] + 0.5 * 0.8, x[1]], atol=1e-15)


def test_step_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        step_fdg(np.eye(3), [0.1, 0.2])


@pytest.mark.parametrize('spec', ALL_SPECS, ids=lambda spec: spec.label)
def test_trajectories_stay_in_unit_interval(rng, spec):
    n = 5
    for _ in range(1000 // len(ALL_SPECS)):
        params = random_params(rng, spec, n, low=0.0, high=1.0)
        history = [rng.random(n) for _ in range(spec.lag + 1)]
        state = SimState(x=history[-1], xe_history=history, x_history=history)
        for x, xe in simulate(spec, params, state, 3):
            assert np.all((x >= 0.0) & (x <= 1.0))
            assert np.all((xe >= 0.0) & (xe <= 1.0))


def test_fdg_step_does_not_expand_range(rng):
    for _ in range(1000):
        n = rng.integers(2, 8)
        W = random_stochastic(rng, n, floor=0.0)
        x = rng.random(n)
        x_next = step_fdg(W, x)
        assert x_next.min() >= x.min() - 1e-12
        assert x_next.max() <= x.max() + 1e-12


def test_fdg_reaches_consensus_for_positive_influence(rng):
    for _ in range(10):
        n = 5
        params = ParamSet.create(ModelSpec('FDG'), W=random_stochastic(rng, n, floor=0.1))
        trajectory = simulate(ModelSpec('FDG'), params, SimState(x=rng.random(n)), 1000)
        x_final = trajectory[-1][0]
        assert x_final.max() - x_final.min() < 1e-6


def _trajectory(spec, params, x0, horizon=25):
    return simulate(spec, params, SimState(x=x0), horizon)


def test_epo_with_full_expression_matches_fj(rng):
    n = 4
    for _ in range(50):
        epo = random_params(rng, ModelSpec('EPO'), n, low=0.0, high=1.0)
        epo = ParamSet.create(ModelSpec('EPO'), A=epo.A, D=epo.D, S=epo.S, z=epo.z, Phi=np.ones(n),
                              renormalize=False)
        fj = ParamSet.create(ModelSpec('FJ'), W=epo.W, S=epo.S, z=epo.z, renormalize=False)
        x0 = rng.random(n)
        for (x_epo, xe_epo), (x_fj, _) in zip(_trajectory(ModelSpec('EPO'), epo, x0),
                                             _trajectory(ModelSpec('FJ'), fj, x0)):
            np.testing.assert_array_equal(xe_epo, x_fj)
            np.testing.assert_array_equal(x_epo, x_fj)


def test_fj_with_full_susceptibility_matches_fdg(rng):
    n = 5
    for _ in range(50):
        W = random_stochastic(rng, n, floor=0.0)
        fj = ParamSet.create(ModelSpec('FJ'), W=W, S=np.ones(n), z=rng.random(n), renormalize=False)
        fdg = ParamSet.create(ModelSpec('FDG'), W=fj.W, renormalize=False)
        x0 = rng.random(n)
        for (x_fj, _), (x_fdg, _) in zip(_trajectory(ModelSpec('FJ'), fj, x0),
                                         _trajectory(ModelSpec('FDG'), fdg, x0)):
            np.testing.assert_array_equal(x_fj, x_fdg)


def test_fj_fixed_point_is_stationary(rng):
    n = 5
    spec = ModelSpec('FJ')
    for _ in range(20):
        params = random_params(rng, spec, n)
        x_star = np.linalg.solve(np.eye(n) - params.S[:, None] * params.W, (1.0 - params.S) * params.z)
        for x, _ in simulate(spec, params, SimState(x=x_star), 25):
            np.testing.assert_allclose(x, x_star, atol=1e-12)


@pytest.mark.parametrize('lag', [0, 1, 2])
def test_repo_matches_epo_with_full_susceptibility(rng, lag):
    n = 4
    for _ in range(30):
        A = random_offdiagonal(rng, n, floor=0.0)
        D, Phi = rng.random(n), rng.random(n)
        repo = ParamSet.create(ModelSpec('REPO', lag), A=A, D=D, Phi=Phi)
        epo = ParamSet.create(ModelSpec('EPO', lag), A=A, D=D, Phi=Phi, S=np.ones(n), z=rng.random(n))
        history = [rng.random(n) for _ in range(lag + 1)]
        state = SimState(x=history[-1], xe_history=history, x_history=history)
        for (x_r, xe_r), (x_e, xe_e) in zip(simulate(ModelSpec('REPO', lag), repo, state, 20),
                                             simulate(ModelSpec('EPO', lag), epo, state, 20)):
            np.testing.assert_array_equal(x_r, x_e)
            np.testing.assert_array_equal(xe_r, xe_e)


def test_simulate_horizon_zero_and_negative(rng):
    spec = ModelSpec('FDG')
    params = random_params(rng, spec, 3)
    assert simulate(spec, params, SimState(x=np.full(3, 0.5)), 0) == []
    with pytest.raises(InvalidSplit):
        simulate(spec, params, SimState(x=np.full(3, 0.5)), -1)


def test_simulate_requires_lag_history(rng):
    spec = ModelSpec('FDGM', 2)
    params = random_params(rng, spec, 3)
    state = SimState(x=np.full(3, 0.5), x_history=[np.full(3, 0.5), np.full(3, 0.4)])
    with pytest.raises(InsufficientHistory):
        simulate(spec, params, state, 1)


def test_sim_state_rejects_out_of_range():
    with pytest.raises(OutOfRangeValue):
        SimState(x=[0.5, 1.5])
    with pytest.raises(DimensionMismatch):
        SimState(x=[0.5, 0.5], xe_history=[[0.5, 0.5, 0.5]])


def test_predict_fdg_one_step(bundled, panel):
    spec = ModelSpec('FDG')
    fit_result = make_fit(spec, bundled.reference_params[(ModelFamily.FDG, 0)], panel)
    forecast = predict(fit_result, panel, 1)
    assert forecast.shape == (7, 1)
    np.testing.assert_allclose(forecast[:, 0], fit_result.params.W @ panel.column(10), atol=1e-12)


def test_predict_horizon_zero(bundled, panel):
    fit_result = make_fit(ModelSpec('FDG'), bundled.reference_params[(ModelFamily.FDG, 0)], panel)
    assert predict(fit_result, panel, 0).shape == (7, 0)


def test_predict_ignores_observations_after_training(bundled, panel):
    from opinion_fit.panel import validate_panel

    fit_result = make_fit(ModelSpec('FDGM', 2), bundled.reference_params[(ModelFamily.FDGM, 2)], panel)
    altered = panel.values.copy()
    altered[:, 10:] = 0.0
    other = validate_panel(altered, panel.blog_ids, panel.period_labels)
    np.testing.assert_array_equal(predict(fit_result, panel, 2), predict(fit_result, other, 2))


def test_predict_epo_starts_from_latent_state(rng, panel):
    spec = ModelSpec('REPO', 1)
    params = random_params(rng, spec, panel.n_blogs, t_est=10)
    fit_result = make_fit(spec, params, panel)
    state = launch_state(fit_result, panel)
    np.testing.assert_array_equal(state.x, params.X[:, 9])
    np.testing.assert_array_equal(state.xe_history[-1], panel.column(10))
    assert predict(fit_result, panel, 2).shape == (7, 2)


def test_predict_epo_without_latent_state(bundled, panel):
    from opinion_fit.panel import FitResult

    params = bundled.reference_params[(ModelFamily.EPO, 0)]
    fit_result = FitResult(spec=ModelSpec('EPO'), params=params, objective=0.0773, n_train_periods=10,
                           solver_trace=((0, 0.0773),), seed=0, n_starts=1)
    with pytest.raises(MissingParameter):
        predict(fit_result, panel, 2)


def test_launch_state_needs_lag_support(rng, panel):
    from opinion_fit.panel import FitResult

    spec = ModelSpec('FDGM', 2)
    fit_result = FitResult(spec=spec, params=random_params(rng, spec, 7), objective=0.1, n_train_periods=2,
                           solver_trace=((0, 0.1),), seed=0, n_starts=1)
    with pytest.raises(HorizonBeyondSupport):
        predict(fit_result, panel, 1)


def test_fitted_trajectory_matches_residuals(bundled, panel):
    spec = ModelSpec('FJ')
    fit_result = make_fit(spec, bundled.reference_params[(ModelFamily.FJ, 0)], panel)
    periods, fitted = fitted_trajectory(fit_result, panel)
    assert periods == list(range(2, 11))
    residual = expressed_residuals(spec, fit_result.params, panel, 10)
    np.testing.assert_allclose(panel.values[:, 1:10] - fitted, residual, atol=1e-15)
