import numpy as np
import pytest

from pcid import specs, verifiers
from pcid.verifiers import (
    check_clt_forecast_errors,
    check_clt_sample_mean,
    check_gaussian_limit,
    check_pcid,
    check_stopping_time,
    energy_permutation_test,
)


def test_energy_test_level_and_power():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(400, 3))
    b = rng.normal(size=(400, 3))
    _, p_null = energy_permutation_test(a, b, np.random.default_rng(1))
    assert p_null > 0.05
    c = rng.normal(loc=0.4, size=(400, 3))
    _, p_alt = energy_permutation_test(a, c, np.random.default_rng(1))
    assert p_alt == pytest.approx(1.0 / 200.0)


def test_energy_test_validates_shapes():
    with pytest.raises(ValueError):
        energy_permutation_test(np.zeros((5, 2)), np.zeros((5, 3)),
                                np.random.default_rng(0))


def test_pcid_requires_two_coordinates():
    spec = specs.PolyaSpec(1, (1.0,), (specs.UniformBase(),))
    with pytest.raises(ValueError, match="2 coordinates"):
        check_pcid(spec, 100, None, 0)


def test_pcid_requires_room_for_two_future_steps():
    spec = specs.UniformCoupledSpec()
    with pytest.raises(ValueError, match="horizon"):
        check_pcid(spec, 100, 2, 0, n=1)


def test_pcid_positive_control_passes():
    v = check_pcid(specs.UniformCoupledSpec(), 3000, None, 11, n=1)
    assert v.passed
    assert v.name == "check_pcid"
    assert v.subchecks[0].statistic > 0.01


def test_pcid_iid_passes():
    spec = specs.PolyaSpec(2, (1e9, 1e9), (specs.UniformBase(), specs.UniformBase()))
    v = check_pcid(spec, 2000, None, 3, n=1)
    assert v.passed


def test_pcid_negative_control_fails():
    broken = specs.BrokenFeedbackWeightSpec(n_coords=2, w0=1.0, shift=0.1)
    v = check_pcid(broken, 4000, None, 11, n=1)
    assert not v.passed


def test_pcid_verdict_reproducible():
    spec = specs.UniformCoupledSpec()
    a = check_pcid(spec, 1000, None, 5, n=1)
    b = check_pcid(spec, 1000, None, 5, n=1)
    assert a.to_dict() == b.to_dict()


def test_stopping_time_constant_reduces_to_marginal_identity():
    spec = specs.PolyaSpec(1, (1.0,), (specs.UniformBase(),))
    v = check_stopping_time(spec, 8000, 10, 7, tau={"kind": "constant", "n": 5})
    assert v.passed


def test_stopping_time_first_exceed_positive_control():
    spec = specs.PolyaSpec(1, (1.0,), (specs.UniformBase(),))
    v = check_stopping_time(spec, 8000, 24, 7,
                            tau={"kind": "first_exceed", "threshold": 0.8, "cap": 20})
    assert v.passed


def test_stopping_time_rejects_drifting_sequence():
    v = check_stopping_time(specs.Ar1DriftSpec(), 8000, 10, 7,
                            tau={"kind": "constant", "n": 6})
    assert not v.passed


def test_stopping_time_bound_validation():
    spec = specs.PolyaSpec(1, (1.0,), (specs.UniformBase(),))
    with pytest.raises(ValueError, match="exceeds horizon"):
        check_stopping_time(spec, 100, 10, 0, tau={"kind": "constant", "n": 10})
    with pytest.raises(ValueError, match="unknown stopping rule"):
        check_stopping_time(spec, 100, 10, 0, tau={"kind": "sometimes"})


def test_clt_forecast_errors_refuses_small_horizon():
    with pytest.raises(ValueError, match="asymptotic regime"):
        check_clt_forecast_errors(specs.UniformCoupledSpec(), 100, 500, 0)


def test_clt_forecast_errors_iid_normal():
    # i.i.d. Gaussian case: S / sigma is exactly standard normal
    spec = specs.Ar1DriftSpec(phi=0.0, drift=0.0, noise_var=1.0,
                              init_mean=0.0, init_var=1.0)
    v = check_clt_forecast_errors(spec, 4000, 1000, 13)
    assert v.passed
    names = [s.name for s in v.subchecks]
    assert "normal_fit_coord0" in names and "variance_coord0" in names


def test_clt_sample_mean_degenerate_weight():
    spec = specs.PolyaSpec(1, (1.0,), (specs.UniformBase(),))
    v = check_clt_sample_mean(spec, 1500, 2000, 5)
    assert v.passed
    assert v.subchecks[0].kind == "upper_bound"
    assert v.params["weight_variance_ratio"] == 0.0


def test_clt_sample_mean_iid():
    spec = specs.Ar1DriftSpec(phi=0.0, drift=0.0, noise_var=2.0,
                              init_mean=0.0, init_var=2.0)
    v = check_clt_sample_mean(spec, 4000, 1000, 6)
    assert v.passed


def test_clt_sample_mean_no_reference_form():
    with pytest.raises(ValueError, match="no reference form"):
        check_clt_sample_mean(specs.StateSpaceCidSpec(), 100, 100, 0)
    with pytest.raises(ValueError, match="no reference form"):
        check_clt_sample_mean(
            specs.UniformCoupledSpec(beta=specs.BetaSchedule("constant_one")), 100, 100, 0)


def test_gaussian_limit_requires_gaussian_kind():
    with pytest.raises(ValueError, match="gaussian_last_tick"):
        check_gaussian_limit(specs.StateSpaceCidSpec(), 100, 2000, 0)
    with pytest.raises(ValueError, match="horizon"):
        check_gaussian_limit(specs.GaussianLastTickSpec(), 100, 100, 0)


def test_gaussian_limit_fixed_t0_skips_closed_forms():
    spec = specs.GaussianLastTickSpec(n_coords=2, mu1=(0.0, 0.0),
                                      sigma2_1=(1.0, 1.0), t0=1.0)
    v = check_gaussian_limit(spec, 4000, 1000, 3)
    names = [s.name for s in v.subchecks]
    assert "gamma_mean" not in names and "gamma_variance_bound" not in names
    assert not v.params["poisson_arrivals"]
    assert any(n.startswith("terminal_mu_variance") for n in names)


def test_verdict_margin_convention():
    v = check_stopping_time(specs.PolyaSpec(1, (1.0,), (specs.UniformBase(),)),
                            4000, 10, 7, tau={"kind": "constant", "n": 5})
    assert v.passed == (v.statistic <= v.tolerance)
    d = v.to_dict()
    assert set(d) >= {"name", "statistic", "reference", "tolerance", "alpha", "pass",
                      "n_paths", "horizon", "seed", "subchecks"}


def test_list_verifier_names():
    assert verifiers.list_verifier_names() == [
        "check_clt_forecast_errors", "check_clt_sample_mean",
        "check_gaussian_limit", "check_pcid", "check_stopping_time"]
