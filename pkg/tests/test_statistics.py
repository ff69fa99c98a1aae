import numpy as np
import pytest

from pcid import specs, statistics
from pcid.engine import run_ensemble
from pcid.statistics import (
    StatisticsError,
    empirical_predictive_distance,
    forecast_errors,
    martingale_residuals,
    prediction_increments,
    scaled_sums,
    slln_running_average,
)


def test_degenerate_process_series(degenerate_spec):
    # X identically 0.7; derived series vanish up to ulp-scale rounding of
    # the predictive-mean ratio (0.7 * (1 + k)) / (1 + k)
    ens = run_ensemble(degenerate_spec, 8, 12, 3)
    assert np.all(ens.observations == 0.7)
    assert np.max(np.abs(forecast_errors(ens))) < 1e-14
    assert np.max(np.abs(prediction_increments(ens))) < 1e-14
    s, s_tilde = scaled_sums(ens)
    assert np.max(np.abs(s)) < 1e-12 and np.max(np.abs(s_tilde)) < 1e-12
    d = empirical_predictive_distance(ens)
    assert np.all(d["marginal"] == 0.0)


def test_polya_first_forecast_error_is_centered_draw(uniform_polya_spec):
    ens = run_ensemble(uniform_polya_spec, 50, 5, 4)
    u = forecast_errors(ens)
    assert np.array_equal(u[:, 0, :], ens.observations[:, 0, :] - 0.5)


def test_forecast_errors_require_predictive_means(uniform_polya_spec):
    ens = run_ensemble(uniform_polya_spec, 5, 5, 4, record=frozenset({"observations"}))
    with pytest.raises(KeyError):
        forecast_errors(ens)


def test_forecast_errors_and_increments_are_centered(uniform_polya_spec):
    # per-step ensemble means of U and dE vanish (martingale differences)
    ens = run_ensemble(uniform_polya_spec, 4000, 50, 5)
    for series in (forecast_errors(ens), prediction_increments(ens)):
        mean = series.mean(axis=0)
        se = series.std(axis=0) / np.sqrt(series.shape[0])
        assert np.all(np.abs(mean) <= 4 * np.maximum(se, 1e-12))


def test_polya_prediction_increment_formula(uniform_polya_spec):
    ens = run_ensemble(uniform_polya_spec, 30, 40, 6)
    de = prediction_increments(ens)
    u = forecast_errors(ens)
    n = np.arange(1, 41, dtype=float)[None, :, None]
    expected = u / (1.0 + n)     # (X_n - mu_n) / (w0 + n) with w0 = 1
    assert np.max(np.abs(de - expected)) < 1e-12


def test_common_weight_prediction_increment_formula(rru_two_point_spec):
    ens = run_ensemble(rru_two_point_spec, 30, 40, 7)
    de = prediction_increments(ens)
    u = forecast_errors(ens)
    w = ens.weights
    tot = 1.0 + np.cumsum(w, axis=1)
    expected = u * w / tot
    assert np.max(np.abs(de - expected)) < 1e-12


def test_residual_identity_is_exact(rru_two_point_spec):
    ens = run_ensemble(rru_two_point_spec, 20, 30, 8)
    u = forecast_errors(ens)
    de = prediction_increments(ens)
    v = martingale_residuals(ens)
    n = np.arange(1, 31, dtype=float)[None, :, None]
    assert np.array_equal(v, u - n * de)


def test_scaled_sums_first_step_and_telescoping(rru_two_point_spec):
    ens = run_ensemble(rru_two_point_spec, 25, 60, 9)
    s, s_tilde = scaled_sums(ens)
    u = forecast_errors(ens)
    assert np.array_equal(s[:, 0, :], u[:, 0, :])
    # cumulative forecast errors match n * Xbar - sum of predictive means
    mu = ens.predictive_mean[:, :-1, :]
    lhs = np.cumsum(u, axis=1)
    rhs = np.cumsum(ens.observations, axis=1) - np.cumsum(mu, axis=1)
    assert np.max(np.abs(lhs - rhs) / (1.0 + np.abs(lhs))) < 1e-9


def test_scaled_sums_reject_corrupt_series(rru_two_point_spec):
    # the telescoping identity holds algebraically for any predictive-mean
    # array, so the consistency check guards numerical corruption (non-finite
    # values), not data tampering
    ens = run_ensemble(rru_two_point_spec, 5, 20, 10)
    ens.arrays["observations"] = ens.observations.copy()
    ens.arrays["observations"][2, 7, 0] = np.inf
    with np.errstate(invalid="ignore"):
        with pytest.raises(StatisticsError, match="telescoping"):
            scaled_sums(ens)


def test_iid_sequence_scaled_sum_variance():
    # for an i.i.d. Gaussian sequence Var(S_n) equals the noise variance
    spec = specs.Ar1DriftSpec(phi=0.0, drift=0.0, noise_var=1.7,
                              init_mean=0.0, init_var=1.7)
    ens = run_ensemble(spec, 5000, 200, 11)
    s, _ = scaled_sums(ens)
    var = s[:, -1, 0].var()
    se = var * np.sqrt(2.0 / len(s))
    assert abs(var - 1.7) < 4 * se


def test_slln_constant_paths(degenerate_spec):
    ens = run_ensemble(degenerate_spec, 4, 10, 12)
    avg = slln_running_average(ens, "product_of_coords")
    assert np.allclose(avg, 0.7)
    logs = slln_running_average(ens, "log_sum_of_coords")
    assert np.allclose(logs, np.log(0.7))


def test_slln_polya_running_mean_tracks_terminal_predictive():
    spec = specs.PolyaSpec(1, (1.0,), (specs.UniformBase(),))
    ens = run_ensemble(spec, 50, 4000, 13)
    avg = slln_running_average(ens, "product_of_coords")   # identity for K = 1
    terminal = ens.predictive_mean[:, -1, 0]
    assert np.max(np.abs(avg[:, -1] - terminal)) < 0.02


def test_slln_product_of_independent_polya_pair(uniform_polya_spec):
    ens = run_ensemble(uniform_polya_spec, 50, 4000, 14)
    avg = slln_running_average(ens, "product_of_coords")
    terminal = ens.predictive_mean[:, -1, 0] * ens.predictive_mean[:, -1, 1]
    assert np.max(np.abs(avg[:, -1] - terminal)) < 0.03


def test_slln_log_sum_requires_positive_sums():
    ens = run_ensemble(specs.StateSpaceCidSpec(), 50, 10, 15)
    with pytest.raises(StatisticsError, match="positive"):
        slln_running_average(ens, "log_sum_of_coords")


def test_slln_unknown_functional(degenerate_spec):
    ens = run_ensemble(degenerate_spec, 2, 2, 1)
    with pytest.raises(StatisticsError, match="unknown functional"):
        slln_running_average(ens, "nope")


def test_distance_requires_n_within_horizon(uniform_polya_spec):
    ens = run_ensemble(uniform_polya_spec, 3, 10, 16)
    with pytest.raises(StatisticsError):
        empirical_predictive_distance(ens, n=11)


def test_distances_shrink_with_horizon(uniform_polya_spec):
    small = run_ensemble(uniform_polya_spec, 30, 100, 17)
    large = run_ensemble(uniform_polya_spec, 30, 3000, 17)
    d_small = empirical_predictive_distance(small)["marginal"].mean()
    d_large = empirical_predictive_distance(large)["marginal"].mean()
    assert d_large < d_small
    joint = empirical_predictive_distance(large)["joint"]
    assert joint.shape == (30,)
    assert np.all(joint < 0.2)


def test_clt_path_summaries_match_full_series(rru_two_point_spec):
    ens = run_ensemble(rru_two_point_spec, 40, 1200, 18)
    summ = statistics.clt_path_summaries(ens)
    s, s_tilde = scaled_sums(ens)
    assert np.allclose(summ["S"], s[:, -1, :], rtol=1e-12, atol=1e-12)
    assert np.allclose(summ["S_tilde"], s_tilde[:, -1, :], rtol=1e-12, atol=1e-12)
    assert np.allclose(summ["sigma2_alpha"], ens.terminal_variance())
