"""Derived series and scaled sums computed from recorded paths.

Everything here is a pure function of an Ensemble (or of one chunk of an
ensemble), vectorized across paths. Step indices are 1-based in the math
and 0-based in the arrays; predictive series carry the prior at index 0,
so the predictive mean of observation n sits at index n-1.
"""

from __future__ import annotations

import numpy as np

from .engine import Ensemble

TELESCOPE_RTOL = 1e-9


class StatisticsError(ValueError):
    """Raised when a derived-series computation is invalid for the data."""


def forecast_errors(ens: Ensemble) -> np.ndarray:
    """U_{n,i} = X_{n,i} - E[X_{n,i} | history before n], shape (P, H, K)."""
    return ens.observations - ens.predictive_mean[:, :-1, :]


def prediction_increments(ens: Ensemble) -> np.ndarray:
    """dE_{n,i} = E[X_{n+1,i} | history to n] - E[X_{n,i} | history to n-1]."""
    mu = ens.predictive_mean
    return mu[:, 1:, :] - mu[:, :-1, :]


def martingale_residuals(ens: Ensemble) -> np.ndarray:
    """V_{n,i} = U_{n,i} - n * dE_{n,i}; the martingale increments of the
    scaled sample-mean deviation."""
    u = forecast_errors(ens)
    de = prediction_increments(ens)
    n = np.arange(1, ens.horizon + 1, dtype=float)[None, :, None]
    return u - n * de


def scaled_sums(ens: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    """Scaled forecast-error sums S_{n,i} and sample-mean deviations
    S~_{n,i}, both of shape (P, H, K).

    S_{n,i} = sum_{k<=n} U_{k,i} / sqrt(n);
    S~_{n,i} = sqrt(n) * (Xbar_{n,i} - E[X_{n+1,i} | history to n]).

    Verifies the telescoping identity S~ = cumsum(V) / sqrt(n) to relative
    tolerance 1e-9 and raises StatisticsError on violation.
    """
    u = forecast_errors(ens)
    v = martingale_residuals(ens)
    sqrt_n = np.sqrt(np.arange(1, ens.horizon + 1, dtype=float))[None, :, None]
    s = np.cumsum(u, axis=1) / sqrt_n
    n = np.arange(1, ens.horizon + 1, dtype=float)[None, :, None]
    xbar = np.cumsum(ens.observations, axis=1) / n
    s_tilde = (xbar - ens.predictive_mean[:, 1:, :]) * sqrt_n
    via_v = np.cumsum(v, axis=1) / sqrt_n
    err = np.max(np.abs(s_tilde - via_v) / (1.0 + np.abs(s_tilde)))
    if not err <= TELESCOPE_RTOL:   # also catches NaN from corrupt inputs
        raise StatisticsError(
            f"telescoping identity violated: max relative error {err:.3e} > {TELESCOPE_RTOL}")
    return s, s_tilde


SLLN_FUNCTIONALS = ("product_of_coords", "log_sum_of_coords")


def slln_running_average(ens: Ensemble, functional: str) -> np.ndarray:
    """(1/n) sum_{k<=n} f(X_k) for f the coordinate product or log of the
    coordinate sum, shape (P, H)."""
    x = ens.observations
    if functional == "product_of_coords":
        y = np.prod(x, axis=2)
    elif functional == "log_sum_of_coords":
        sums = np.sum(x, axis=2)
        if np.any(sums <= 0):
            raise StatisticsError("log_sum_of_coords requires positive coordinate sums")
        y = np.log(sums)
    else:
        raise StatisticsError(
            f"unknown functional {functional!r}; choose from {SLLN_FUNCTIONALS}")
    n = np.arange(1, ens.horizon + 1, dtype=float)[None, :]
    return np.cumsum(y, axis=1) / n


# ---------------------------------------------------------------------------
# Empirical vs predictive distances
# ---------------------------------------------------------------------------

def _marginal_distance(sorted_obs: np.ndarray, mixture, n_grid: int) -> float:
    lo = min(sorted_obs[0], mixture.base.support()[0])
    hi = max(sorted_obs[-1], mixture.base.support()[1])
    pts = np.linspace(lo, hi, n_grid)
    if mixture.n_atoms:
        pts = np.concatenate([pts, mixture.atom_values])
    pts = np.sort(pts)
    emp = np.searchsorted(sorted_obs, pts, side="right") / len(sorted_obs)
    return float(np.max(np.abs(emp - mixture.cdf(pts))))


def empirical_predictive_distance(ens: Ensemble, n: int | None = None,
                                  n_grid: int = 512) -> dict:
    """Kolmogorov distance between each path's empirical distribution of the
    first n observations and its terminal predictive mixture.

    Returns {"marginal": (P, K), "joint": (P,) or None}. The joint entry
    (two coordinates only) is the maximum discrepancy between the empirical
    joint measure and the product of the terminal marginal predictives over
    the 10 x 10 rectangles anchored at the empirical marginal deciles.
    """
    n = ens.horizon if n is None else n
    if n > ens.horizon:
        raise StatisticsError(f"n={n} exceeds the recorded horizon {ens.horizon}")
    x = ens.observations[:, :n, :]
    n_paths, _, k = x.shape
    marginal = np.zeros((n_paths, k))
    joint = np.zeros(n_paths) if k == 2 else None
    deciles = np.arange(0.1, 0.95, 0.1)
    for p in range(n_paths):
        mixtures = [ens.terminal_mixture(p, i) for i in range(k)]
        for i in range(k):
            marginal[p, i] = _marginal_distance(np.sort(x[p, :, i]), mixtures[i], n_grid)
        if k != 2:
            continue
        # edges sit just above the empirical deciles so that atoms landing
        # exactly on a decile fall on the same side in the (left-closed)
        # histogram and in the (right-continuous) CDF differences
        edges = [np.nextafter(np.quantile(x[p, :, i], deciles), np.inf) for i in range(2)]
        cdf_incr = []
        for i in range(2):
            c = np.concatenate([[0.0], mixtures[i].cdf(edges[i]), [1.0]])
            cdf_incr.append(np.diff(c))
        bins = [np.concatenate([[-np.inf], e, [np.inf]]) for e in edges]
        counts, _, _ = np.histogram2d(x[p, :, 0], x[p, :, 1], bins=bins)
        pred = np.outer(cdf_incr[0], cdf_incr[1])
        joint[p] = float(np.max(np.abs(counts / n - pred)))
    out = {"marginal": marginal}
    if joint is not None:
        out["joint"] = joint
    return out


# ---------------------------------------------------------------------------
# Chunk reducers for large ensembles
# ---------------------------------------------------------------------------

def clt_path_summaries(ens: Ensemble) -> dict:
    """Terminal scaled sums and plug-in moments per path, for CLT verdicts.

    Returns S and S~ at n = horizon, the terminal predictive variance
    (the plug-in for the directing-measure variance), and the terminal raw
    moments where the kind provides them.
    """
    h = ens.horizon
    u = forecast_errors(ens)
    v = martingale_residuals(ens)
    sqrt_h = float(np.sqrt(h))
    s = u.sum(axis=1) / sqrt_h
    s_tilde = (ens.observations.mean(axis=1) - ens.predictive_mean[:, -1, :]) * sqrt_h
    via_v = v.sum(axis=1) / sqrt_h
    err = np.max(np.abs(s_tilde - via_v) / (1.0 + np.abs(s_tilde)))
    if not err <= 1e-8:
        raise StatisticsError(
            f"telescoping identity violated at terminal step: {err:.3e}")
    try:
        sigma2_alpha = ens.terminal_variance()
        moments = ens.terminal_moments() if "weighted_power_sums" in ens.arrays else None
    except KeyError:
        sigma2_alpha = ens.predictive_var[:, -1, :]
        moments = None
    out = {"S": s, "S_tilde": s_tilde, "sigma2_alpha": sigma2_alpha,
           "mu_alpha": ens.terminal_mean() if "weighted_power_sums" in ens.arrays
           or "terminal_mu" in ens.arrays else ens.predictive_mean[:, -1, :]}
    if moments is not None:
        out["terminal_moments"] = moments
    return out


def gaussian_path_summaries(ens: Ensemble) -> dict:
    return {"gamma_hat": ens.gamma_hat,
            "terminal_mu": ens.arrays["terminal_mu"],
            "terminal_sigma2": ens.arrays["terminal_sigma2"]}
