import numpy as np
import pytest

from opinion_fit.exceptions import (
    DimensionMismatch, DuplicateId, InactiveParameter, InvalidParameter, MissingParameter,
    ModelSpecError, OutOfRangeValue, TooFewPeriods
)
from opinion_fit.panel import (
    FitResult, ModelFamily, ModelSpec, ParamSet, active_parameters, coupled_influence, export_matrix,
    sorted_specs, validate_panel
)

from conftest import make_fit, random_offdiagonal, random_params


def test_validate_panel_accepts_bundled_shape(panel):
    assert panel.n_blogs == 7
    assert panel.n_periods == 12
    assert panel.blog_ids[0] == 'blog1'
    assert panel.period_labels[-1] == 'p12'
    assert panel.values[0, 0] == 0.542237


def test_panel_values_are_read_only(panel):
    with pytest.raises(ValueError):
        panel.values[0, 0] = 0.5


def test_validate_panel_rejects_out_of_range():
    with pytest.raises(OutOfRangeValue):
        validate_panel([[0.2, 1.2], [0.3, 0.4]], ['a', 'b'], ['p1', 'p2'])


def test_validate_panel_rejects_nan():
    with pytest.raises(OutOfRangeValue):
        validate_panel([[0.2, np.nan]], ['a'], ['p1', 'p2'])


def test_validate_panel_rejects_duplicate_ids():
    with pytest.raises(DuplicateId):
        validate_panel([[0.2, 0.3], [0.3, 0.4]], ['a', 'a'], ['p1', 'p2'])
    with pytest.raises(DuplicateId):
        validate_panel([[0.2, 0.3]], ['a'], ['p1', 'p1'])


def test_validate_panel_needs_two_periods():
    with pytest.raises(TooFewPeriods):
        validate_panel([[0.2], [0.3]], ['a', 'b'], ['p1'])


def test_validate_panel_label_count_mismatch():
    with pytest.raises(DimensionMismatch):
        validate_panel([[0.2, 0.3]], ['a', 'b'], ['p1', 'p2'])


def test_panel_column_is_one_indexed(panel):
    np.testing.assert_array_equal(panel.column(1), panel.values[:, 0])
    with pytest.raises(DimensionMismatch):
        panel.column(13)


@pytest.mark.parametrize('family, lag', [('FDGM', 0), ('FJ', 1), ('FDG', 2), ('EPO', -1)])
def test_model_spec_rejects_bad_lag(family, lag):
    with pytest.raises(ModelSpecError):
        ModelSpec(family, lag)


def test_model_spec_parse_and_label():
    spec = ModelSpec.parse('repo', 2)
    assert spec.family is ModelFamily.REPO
    assert spec.label == 'REPO-lag2'
    assert ModelSpec.parse('FDG').label == 'FDG'
    with pytest.raises(ModelSpecError):
        ModelSpec.parse('degroot')


def test_active_parameters():
    assert active_parameters(ModelSpec('FDG')) == {'W'}
    assert active_parameters(ModelSpec('FJ')) == {'W', 'S', 'z'}
    assert active_parameters(ModelSpec('FDGM', 1)) == {'W', 'S'}
    assert active_parameters(ModelSpec('EPO')) == {'A', 'D', 'S', 'Phi', 'z', 'X'}
    assert active_parameters(ModelSpec('REPO')) == {'A', 'D', 'Phi', 'X'}


def test_param_set_rejects_inactive_field():
    with pytest.raises(InactiveParameter):
        ParamSet.create(ModelSpec('FDG'), W=np.eye(2), S=np.ones(2))


def test_param_set_requires_family_fields():
    with pytest.raises(MissingParameter):
        ParamSet.create(ModelSpec('FJ'), W=np.eye(2), S=np.ones(2))


def test_param_set_row_sum_tolerance():
    W = np.array([[0.5, 0.5 + 1e-10], [0.0, 1.0]])
    params = ParamSet.create(ModelSpec('FDG'), W=W)
    np.testing.assert_allclose(params.W.sum(axis=1), 1.0, atol=1e-15)
    with pytest.raises(InvalidParameter):
        ParamSet.create(ModelSpec('FDG'), W=[[0.5, 0.6], [0.0, 1.0]])
    with pytest.raises(InvalidParameter):
        ParamSet.create(ModelSpec('FDG'), W=[[1.5, -0.5], [0.0, 1.0]])


def test_param_set_box_constraints():
    with pytest.raises(InvalidParameter):
        ParamSet.create(ModelSpec('FDGM', 1), W=np.eye(2), S=[0.5, 1.2])
    with pytest.raises(DimensionMismatch):
        ParamSet.create(ModelSpec('FDGM', 1), W=np.eye(2), S=[0.5, 0.5, 0.5])


def test_epo_influence_is_derived_from_coupling(rng):
    A = random_offdiagonal(rng, 4)
    D = rng.uniform(0, 1, 4)
    params = ParamSet.create(ModelSpec('REPO'), A=A, D=D, Phi=np.full(4, 0.5))
    np.testing.assert_allclose(params.W, np.diag(D) + (np.eye(4) - np.diag(D)) @ A, atol=1e-15)
    np.testing.assert_array_equal(params.S, np.ones(4))
    np.testing.assert_allclose(params.W.sum(axis=1), 1.0, atol=1e-12)


def test_epo_rejects_inconsistent_influence(rng):
    A = random_offdiagonal(rng, 3)
    D = np.full(3, 0.3)
    W = coupled_influence(D, A)
    W[0, 0] += 1e-3
    W[0, 1] -= 1e-3
    with pytest.raises(InvalidParameter):
        ParamSet.create(ModelSpec('REPO'), A=A, D=D, Phi=np.ones(3), W=W)


def test_epo_rejects_nonzero_diagonal():
    A = np.array([[0.2, 0.8], [1.0, 0.0]])
    with pytest.raises(InvalidParameter):
        ParamSet.create(ModelSpec('REPO'), A=A, D=np.ones(2), Phi=np.ones(2))


def test_epo_requires_two_blogs():
    with pytest.raises(InvalidParameter):
        ParamSet.create(ModelSpec('REPO'), A=[[0.0]], D=[0.5], Phi=[0.5])


def test_repo_forbids_non_unit_susceptibility(rng):
    with pytest.raises(InactiveParameter):
        ParamSet.create(ModelSpec('REPO'), A=random_offdiagonal(rng, 3), D=np.ones(3),
                        Phi=np.ones(3), S=np.full(3, 0.5))


def test_bundled_reference_params_are_valid(bundled):
    assert len(bundled.reference_params) == 10
    for (family, lag), params in bundled.reference_params.items():
        np.testing.assert_allclose(params.W.sum(axis=1), 1.0, atol=1e-9)
        if family.has_latent_states:
            assert params.X is None
            assert np.all(np.diag(params.A) == 0.0)


def test_fit_result_rejects_non_monotone_trace(rng):
    spec = ModelSpec('FDG')
    params = random_params(rng, spec, 3)
    with pytest.raises(InvalidParameter):
        FitResult(spec=spec, params=params, objective=0.1, n_train_periods=5,
                  solver_trace=((0, 0.2), (1, 0.3)), seed=0, n_starts=1)


def test_fit_result_dict_round_trip_is_exact(rng, panel):
    spec = ModelSpec('EPO', 1)
    params = random_params(rng, spec, panel.n_blogs, t_est=10)
    result = make_fit(spec, params, panel)
    restored = FitResult.from_dict(result.to_dict())
    assert restored.spec == spec
    assert restored.objective == result.objective
    assert restored.blog_ids == panel.blog_ids
    for name, value in result.params.fields().items():
        if value is None:
            assert getattr(restored.params, name) is None
        else:
            np.testing.assert_array_equal(getattr(restored.params, name), value)


def test_fit_result_dict_marks_inactive_fields_null(rng, panel):
    spec = ModelSpec('FDG')
    payload = make_fit(spec, random_params(rng, spec, panel.n_blogs), panel).to_dict()
    assert payload['family'] == 'FDG'
    assert payload['t_est'] == 10
    assert payload['A'] is None and payload['X'] is None


def test_export_matrix_zeroes_small_entries():
    exported = export_matrix(np.array([[0.999995, 5e-6], [2e-5, 0.99998]]))
    assert exported[0, 1] == 0.0
    assert exported[1, 0] == 2e-5


def test_sorted_specs_orders_by_family_then_lag():
    specs = [ModelSpec('REPO', 1), ModelSpec('FDG'), ModelSpec('EPO', 2), ModelSpec('EPO'), ModelSpec('FDGM', 1)]
    labels = [spec.label for spec in sorted_specs(specs)]
    assert labels == ['FDG', 'FDGM-lag1', 'EPO', 'EPO-lag2', 'REPO-lag1']
