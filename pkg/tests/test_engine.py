import numpy as np
import pytest

from pcid import specs
from pcid.engine import (
    MissingSeriesError,
    recompute_predictive_series,
    run_ensemble,
)
from pcid.specs import SpecValidationError


def test_run_rejects_empty_ensemble(uniform_polya_spec):
    with pytest.raises(SpecValidationError) as err:
        run_ensemble(uniform_polya_spec, 0, 5, 1)
    assert err.value.field == "n_paths"
    with pytest.raises(SpecValidationError) as err:
        run_ensemble(uniform_polya_spec, 5, 0, 1)
    assert err.value.field == "horizon"


def test_run_rejects_invalid_spec():
    bad = specs.PolyaSpec(n_coords=1, w0=(-1.0,), base=(specs.UniformBase(),))
    with pytest.raises(SpecValidationError) as err:
        run_ensemble(bad, 5, 5, 1)
    assert err.value.field == "w0[0]"


def test_single_polya_draw_in_support():
    spec = specs.PolyaSpec(n_coords=2, w0=(1.0, 1.0),
                           base=(specs.UniformBase(0.0, 1.0), specs.UniformBase(2.0, 3.0)))
    ens = run_ensemble(spec, 1, 1, 12345)
    x = ens.observations[0, 0]
    assert 0.0 <= x[0] < 1.0
    assert 2.0 <= x[1] < 3.0


def test_array_shapes(rru_two_point_spec):
    p, h, k = 17, 9, 2
    ens = run_ensemble(rru_two_point_spec, p, h, 3)
    assert ens.observations.shape == (p, h, k)
    assert ens.predictive_mean.shape == (p, h + 1, k)
    assert ens.predictive_var.shape == (p, h + 1, k)
    assert ens.weights.shape == (p, h, k)
    assert ens.terminal_moments().shape == (p, k, 5)
    gspec = specs.GaussianLastTickSpec(n_coords=3, mu1=(0.0,) * 3, sigma2_1=(1.0,) * 3)
    gens = run_ensemble(gspec, p, h, 3)
    assert gens.arrivals.shape == (p, h + 1)
    assert gens.lambdas.shape == (p, h)
    assert gens.gamma_hat.shape == (p,)
    sens = run_ensemble(specs.StateSpaceCidSpec(), p, h, 3)
    assert sens.theta.shape == (p, h)
    assert sens.observations.shape == (p, h, 1)


def test_missing_series_raises(uniform_polya_spec):
    ens = run_ensemble(uniform_polya_spec, 3, 3, 1, record=frozenset({"observations"}))
    with pytest.raises(MissingSeriesError):
        _ = ens.predictive_mean


def test_common_weight_shared_across_coordinates(rru_two_point_spec):
    ens = run_ensemble(rru_two_point_spec, 10, 20, 8)
    assert np.array_equal(ens.weights[:, :, 0], ens.weights[:, :, 1])


def test_path_independence_first_draws(uniform_polya_spec):
    ens = run_ensemble(uniform_polya_spec, 20_000, 1, 77)
    x1 = ens.observations[:, 0, 0]
    even, odd = x1[0::2], x1[1::2]
    rho = np.corrcoef(even, odd)[0, 1]
    assert abs(rho) < 4.0 / np.sqrt(len(even))


@pytest.mark.parametrize("spec_name", ["polya", "rru", "uniform_coupled", "broken"])
def test_no_look_ahead_recompute(spec_name, uniform_polya_spec, rru_two_point_spec):
    spec = {
        "polya": uniform_polya_spec,
        "rru": rru_two_point_spec,
        "uniform_coupled": specs.UniformCoupledSpec(),
        "broken": specs.BrokenFeedbackWeightSpec(),
    }[spec_name]
    ens = run_ensemble(spec, 40, 60, 21)
    mean, var = recompute_predictive_series(ens)
    assert np.array_equal(mean, ens.predictive_mean)
    assert np.array_equal(var, ens.predictive_var)


def test_uniform_coupled_step2_covariance():
    # covariance of the second observations approximates 1/144
    ens = run_ensemble(specs.UniformCoupledSpec(), 10_000, 2, 2718,
                       record=frozenset({"observations"}))
    x = ens.observations[:, 1, :]
    prod = (x[:, 0] - x[:, 0].mean()) * (x[:, 1] - x[:, 1].mean())
    cov = prod.mean()
    se = prod.std() / np.sqrt(len(prod))
    assert abs(cov - 1.0 / 144.0) < 3.0 * se


def test_gaussian_fixed_t0_overrides_first_gap():
    spec = specs.GaussianLastTickSpec(t0=0.25)
    ens = run_ensemble(spec, 6, 4, 9)
    assert np.allclose(ens.arrivals[:, 0], 0.25)
    assert np.all(np.diff(ens.arrivals, axis=1) > 0)
