import numpy as np
import pytest

from opinion_fit.exceptions import OnBoundary
from opinion_fit.panel import ModelFamily, ModelSpec, ParamSet
from opinion_fit.validator import GradientValidator, gradient_check

from conftest import ALL_SPECS, random_params


@pytest.mark.parametrize('spec', ALL_SPECS, ids=lambda spec: spec.label)
def test_gradient_matches_central_differences(rng, panel, spec):
    for _ in range(100):
        params = random_params(rng, spec, panel.n_blogs, t_est=10)
        assert gradient_check(spec, params, panel, 10) < 1e-4


def test_gradient_check_on_small_panel_with_long_lag(rng):
    from conftest import simulated_panel

    spec = ModelSpec('EPO', 3)
    fdg = ModelSpec('FDG')
    data = simulated_panel(fdg, random_params(rng, fdg, 3), rng.random(3), 8)
    params = random_params(rng, spec, 3, t_est=8)
    assert gradient_check(spec, params, data, 8) < 1e-4


def test_boundary_point_is_rejected(bundled, panel):
    with pytest.raises(OnBoundary):
        gradient_check(ModelSpec('FDG'), bundled.reference_params[(ModelFamily.FDG, 0)], panel, 10)


def test_box_parameter_near_upper_bound_is_rejected(rng, panel):
    spec = ModelSpec('FJ')
    params = random_params(rng, spec, 7)
    S = params.S.copy()
    S[3] = 0.9999
    params = ParamSet.create(spec, W=params.W, S=S, z=params.z)
    with pytest.raises(OnBoundary):
        gradient_check(spec, params, panel, 10)


def test_influence_weights_have_no_upper_margin(rng, panel):
    W = np.full((7, 7), 0.0005)
    W[:, 0] = 1.0 - 6 * 0.0005
    with pytest.raises(OnBoundary):
        gradient_check(ModelSpec('FDG'), ParamSet.create(ModelSpec('FDG'), W=W), panel, 10)
    W = np.full((7, 7), 0.01)
    W[:, 0] = 1.0 - 6 * 0.01
    assert GradientValidator().check(ModelSpec('FDG'), ParamSet.create(ModelSpec('FDG'), W=W), panel, 10) < 1e-4
