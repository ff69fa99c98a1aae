"""The process zoo: exact one-step predictive laws and state updates.

Two layers live here.

* Scalar, single-path operations (`reinforced_step`, `uniform_coupled_step`,
  `gaussian_last_tick_step`, `state_space_cid_step`, `poisson_arrivals`)
  written directly against the per-coordinate state objects. These are the
  readable reference implementations.

* Batch kernels (`simulate_*_chunk`) that advance a whole chunk of paths
  per step with numpy. They consume pre-generated random inputs and follow
  the exact same draw layout as the scalar layer, so for matching streams
  the two layers produce bit-identical paths (asserted in the test suite).

Sampling from an atomic-plus-base mixture uses a single uniform per draw:
with s = u * total_weight, the draw is from the base measure when s < w0
(mapped through the base inverse CDF of s / w0), otherwise it is the first
atom whose cumulative weight exceeds s - w0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .specs import (
    Ar1DriftSpec,
    BetaSchedule,
    BrokenFeedbackWeightSpec,
    CommonWeight,
    CrossFraction,
    GaussianLastTickSpec,
    IidWeights,
    PolyaSpec,
    ReinforcedSpec,
    StateSpaceCidSpec,
    UniformCoupledSpec,
)


class ProcessError(RuntimeError):
    """Runtime failure of a generative step (invalid draw or argument)."""


# ---------------------------------------------------------------------------
# Mixture predictive distribution
# ---------------------------------------------------------------------------

class MixtureDistribution:
    """Normalized mixture (w0 * base + sum_k W_k delta_{x_k}) / total_weight.

    Zero-weight atoms are dropped at construction; they never affect the
    distribution. Moments and CDF values are exact given the atoms.
    """

    def __init__(self, base, base_weight: float, atom_values=None, atom_weights=None):
        if base_weight <= 0:
            raise ProcessError(f"base weight must be positive, got {base_weight}")
        av = np.asarray(atom_values if atom_values is not None else [], dtype=float)
        aw = np.asarray(atom_weights if atom_weights is not None else [], dtype=float)
        if av.shape != aw.shape:
            raise ProcessError("atom values and weights must have matching shapes")
        if np.any(aw < 0):
            raise ProcessError("atom weights must be non-negative")
        keep = aw > 0
        self.base = base
        self.base_weight = float(base_weight)
        self.atom_values = av[keep]
        self.atom_weights = aw[keep]
        self.total_weight = self.base_weight + float(np.sum(self.atom_weights))
        order = np.argsort(self.atom_values, kind="stable")
        self._sorted_values = self.atom_values[order]
        self._sorted_cumweights = np.cumsum(self.atom_weights[order])

    @property
    def n_atoms(self) -> int:
        return len(self.atom_values)

    def component_probabilities(self) -> np.ndarray:
        """Probability of the base component followed by each atom."""
        w = np.concatenate(([self.base_weight], self.atom_weights))
        return w / self.total_weight

    def raw_moment(self, r: int) -> float:
        atom_part = float(np.sum(self.atom_weights * self.atom_values ** r))
        return (self.base_weight * self.base.raw_moment(r) + atom_part) / self.total_weight

    def mean(self) -> float:
        return self.raw_moment(1)

    def variance(self) -> float:
        return self.raw_moment(2) - self.mean() ** 2

    def cdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        atom_mass = np.zeros_like(x)
        if self.n_atoms:
            idx = np.searchsorted(self._sorted_values, x, side="right")
            atom_mass = np.where(idx > 0, self._sorted_cumweights[np.maximum(idx - 1, 0)], 0.0)
        return (self.base_weight * self.base.cdf(x) + atom_mass) / self.total_weight

    def sample(self, rng) -> float:
        """One draw using a single uniform (base inverse-CDF composition)."""
        s = rng.random() * self.total_weight
        if s < self.base_weight or self.n_atoms == 0:
            return float(self.base.ppf(min(s / self.base_weight, 1.0 - 1e-16)))
        k = np.searchsorted(self._sorted_cumweights, s - self.base_weight, side="right")
        return float(self._sorted_values[min(k, self.n_atoms - 1)])


# ---------------------------------------------------------------------------
# Per-coordinate states and scalar steps
# ---------------------------------------------------------------------------

@dataclass
class ReinforcedCoordState:
    """Sufficient statistics of one reinforced coordinate.

    The atom list holds (value, weight) pairs in arrival order together with
    the running cumulative weights, so a predictive draw is a binary search.
    """

    w0: float
    base: object
    atom_values: list = dc_field(default_factory=list)
    atom_weights: list = dc_field(default_factory=list)
    cum_weights: list = dc_field(default_factory=list)
    total_weight: float = 0.0
    # running sums of W * x^r, r = 1..4, for exact mixture moments
    power_sums: list = dc_field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])

    def __post_init__(self):
        if self.total_weight == 0.0:
            self.total_weight = self.w0

    def append_atom(self, value: float, weight: float) -> None:
        if weight < 0 or not math.isfinite(weight):
            raise ProcessError(f"atom weight must be non-negative and finite, got {weight}")
        self.atom_values.append(value)
        self.atom_weights.append(weight)
        prev = self.cum_weights[-1] if self.cum_weights else 0.0
        self.cum_weights.append(prev + weight)
        self.total_weight = self.total_weight + weight
        xr = value
        for r in range(4):
            self.power_sums[r] += weight * xr
            xr *= value

    def predictive_mean(self) -> float:
        return (self.w0 * self.base.raw_moment(1) + self.power_sums[0]) / self.total_weight

    def predictive_var(self) -> float:
        m2 = (self.w0 * self.base.raw_moment(2) + self.power_sums[1]) / self.total_weight
        return m2 - self.predictive_mean() ** 2

    def recomputed_total(self) -> float:
        return self.w0 + math.fsum(self.atom_weights)

    def sample(self, rng) -> float:
        """Predictive draw by the single-uniform composition scheme."""
        s = rng.random() * self.total_weight
        if s < self.w0:
            return float(self.base.ppf(s / self.w0))
        k = int(np.searchsorted(np.asarray(self.cum_weights), s - self.w0, side="right"))
        return self.atom_values[min(k, len(self.atom_values) - 1)]


def reinforced_predictive(state: ReinforcedCoordState) -> MixtureDistribution:
    """Current one-step predictive distribution of a reinforced coordinate."""
    return MixtureDistribution(state.base, state.w0, state.atom_values, state.atom_weights)


def init_reinforced_states(spec) -> list[ReinforcedCoordState]:
    rspec = spec.as_reinforced() if hasattr(spec, "as_reinforced") else spec
    if isinstance(rspec, BrokenFeedbackWeightSpec):
        from .specs import UniformBase
        return [ReinforcedCoordState(rspec.w0, UniformBase()) for _ in range(rspec.n_coords)]
    return [ReinforcedCoordState(w, b) for w, b in zip(rspec.w0, rspec.base)]


def reinforced_step(states, rule, n: int, streams):
    """Advance every coordinate of a reinforced system by one observation.

    Coordinates draw from their current predictives (conditionally
    independent), then the step weights are drawn from the coupling rule,
    independently of the new observations, and the atoms are appended.
    Returns the vector of observations.
    """
    if n < 1:
        raise ProcessError(f"step index must be >= 1, got {n}")
    if isinstance(rule, CrossFraction):
        return uniform_coupled_step(states, rule.beta.value(n), n, streams)
    k = len(states)
    x = np.array([st.sample(streams.coord(i)) for i, st in enumerate(states)])
    if isinstance(rule, CommonWeight):
        if rule.dist.consumes_uniform:
            w_common = float(rule.dist.from_uniform(streams.weights.random()))
        else:
            w_common = rule.dist.value
        weights = [w_common] * k
    elif isinstance(rule, IidWeights):
        weights = []
        for _ in range(k):
            if rule.dist.consumes_uniform:
                weights.append(float(rule.dist.from_uniform(streams.weights.random())))
            else:
                weights.append(rule.dist.value)
    else:
        raise ProcessError(f"unsupported coupling rule {type(rule).__name__}")
    for w in weights:
        if not (w > 0):
            raise ProcessError(f"coupling rule drew a non-positive weight: {w}")
    for i, st in enumerate(states):
        st.append_atom(float(x[i]), weights[i])
    return x


def uniform_coupled_step(states, beta_n: float, n: int, streams):
    """One step of the two-coordinate cross-reinforced uniform system.

    Each coordinate draws from its predictive; the reinforcement fraction of
    coordinate i is A = beta_n * x_j for the other coordinate j, realized as
    an appended atom of weight total * A / (1 - A). A == 0 appends nothing.
    """
    if len(states) != 2:
        raise ProcessError(f"uniform-coupled step needs exactly 2 coordinates, got {len(states)}")
    if not (0.0 < beta_n <= 1.0):
        raise ProcessError(f"beta_n must lie in (0, 1], got {beta_n}")
    x = np.array([st.sample(streams.coord(i)) for i, st in enumerate(states)])
    for i, st in enumerate(states):
        a = beta_n * x[1 - i]
        if a >= 1.0:
            raise ProcessError("degenerate reinforcement: fraction A reached 1")
        if a == 0.0:
            continue
        st.append_atom(float(x[i]), st.total_weight * a / (1.0 - a))
    return x


@dataclass
class GaussianCoordState:
    """Predictive state of one coordinate of the last-tick Gaussian system."""

    mu: float
    sigma2: float
    T: float        # current arrival time T_n
    t_prev: float   # last inter-arrival consumed


def gaussian_last_tick_step(states, t_n: float, streams):
    """Draw the synchronous observations, then shift the predictive means
    toward them by lambda = t_n / (T_n + t_n) and shrink the variances by
    1 - lambda^2."""
    if not (t_n > 0):
        raise ProcessError(f"inter-arrival time must be positive, got {t_n}")
    x = np.array([st.mu + math.sqrt(st.sigma2) * streams.coord(i).standard_normal()
                  for i, st in enumerate(states)])
    for i, st in enumerate(states):
        t_next = st.T + t_n
        lam = t_n / t_next
        st.mu = (1.0 - lam) * st.mu + lam * x[i]
        st.sigma2 = (1.0 - lam * lam) * st.sigma2
        st.T = t_next
        st.t_prev = t_n
    return x


def poisson_arrivals(rate: float, horizon: int, rng) -> np.ndarray:
    """Arrival times T_1 < ... < T_horizon of a Poisson process."""
    if not (rate > 0):
        raise ProcessError(f"rate must be positive, got {rate}")
    gaps = rng.standard_exponential(horizon) / rate
    arrivals = np.cumsum(gaps)
    if np.any(np.diff(arrivals) <= 0) or arrivals[0] <= 0:
        raise ProcessError("arrival times must be strictly increasing")
    return arrivals


@dataclass
class StateSpaceCidState:
    """Latent level of the damped-random-walk model."""

    theta: float
    step: int = 0


def state_space_cid_step(state: StateSpaceCidState, n: int, spec: StateSpaceCidSpec, rng):
    """theta_n = theta_{n-1} + N(0, b_n - b_{n-1}); x_n = theta_n + N(0, c - b_n)."""
    b_prev, b_n = spec.b(n - 1), spec.b(n)
    v = rng.standard_normal()
    theta = state.theta + math.sqrt(b_n - b_prev) * v
    eps = rng.standard_normal()
    x = theta + math.sqrt(spec.c - b_n) * eps
    state.theta = theta
    state.step = n
    return x, state


# ---------------------------------------------------------------------------
# Batch kernels (vectorized across a chunk of paths)
# ---------------------------------------------------------------------------

def _row_first_greater(C: np.ndarray, n: int, q: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Per row r: smallest k < n with C[r, k] > q[r] (n if none). C rows must
    be nondecreasing over their first n entries."""
    lo = np.zeros(len(q), dtype=np.int64)
    hi = np.full(len(q), n, dtype=np.int64)
    active = lo < hi
    while active.any():
        mid = (lo + hi) >> 1
        greater = C[rows, mid] > q
        hi = np.where(active & greater, mid, hi)
        lo = np.where(active & ~greater, mid + 1, lo)
        active = lo < hi
    return lo


_REINFORCED_KINDS = (ReinforcedSpec, PolyaSpec, UniformCoupledSpec, BrokenFeedbackWeightSpec)


def reinforced_draw_layout(spec, horizon: int) -> dict:
    """Random-input layout for one path: which substreams are consumed and how."""
    rspec = spec.as_reinforced() if hasattr(spec, "as_reinforced") else spec
    if isinstance(rspec, BrokenFeedbackWeightSpec):
        return {"coord_uniforms": horizon, "weight_shape": None, "n_coords": rspec.n_coords}
    coupling = rspec.coupling
    if isinstance(coupling, CrossFraction):
        wshape = None
    elif isinstance(coupling, CommonWeight):
        wshape = (horizon,) if coupling.dist.consumes_uniform else None
    else:
        wshape = (horizon, rspec.n_coords) if coupling.dist.consumes_uniform else None
    return {"coord_uniforms": horizon, "weight_shape": wshape, "n_coords": rspec.n_coords}


def simulate_reinforced_chunk(spec, horizon: int, coord_u: np.ndarray,
                              weight_u, record: frozenset) -> dict:
    """Run a chunk of paths of any reinforced-family spec.

    coord_u: (P, H, K) uniforms, one per observation (selection and base
    draw share the uniform via the composition scheme). weight_u: None,
    (P, H) for common weights, or (P, H, K) for i.i.d. weights.
    """
    rspec = spec.as_reinforced() if hasattr(spec, "as_reinforced") else spec
    broken_feedback = None
    if isinstance(rspec, BrokenFeedbackWeightSpec):
        from .specs import UniformBase
        broken_feedback = (rspec.scale, rspec.shift)
        k = rspec.n_coords
        w0 = np.full(k, rspec.w0)
        bases = [UniformBase()] * k
        coupling = None
    else:
        k = rspec.n_coords
        w0 = np.asarray(rspec.w0, dtype=float)
        bases = list(rspec.base)
        coupling = rspec.coupling
    cross = isinstance(coupling, CrossFraction)
    n_paths = coord_u.shape[0]
    rows = np.arange(n_paths)

    obs = np.zeros((n_paths, horizon, k))
    cumw = np.zeros((n_paths, horizon, k))
    tot = np.broadcast_to(w0, (n_paths, k)).copy()
    psums = np.zeros((n_paths, k, 4))
    base_m1 = np.array([b.raw_moment(1) for b in bases])
    base_m2 = np.array([b.raw_moment(2) for b in bases])

    want_weights = "weights" in record
    want_mean = "predictive_mean" in record
    want_var = "predictive_var" in record
    weights_out = np.zeros((n_paths, horizon, k)) if want_weights else None
    mean_out = np.zeros((n_paths, horizon + 1, k)) if want_mean else None
    var_out = np.zeros((n_paths, horizon + 1, k)) if want_var else None
    if want_mean:
        mean_out[:, 0, :] = base_m1
    if want_var:
        var_out[:, 0, :] = base_m2 - base_m1 ** 2

    x_step = np.empty((n_paths, k))
    for n in range(1, horizon + 1):
        for i in range(k):
            s = coord_u[:, n - 1, i] * tot[:, i]
            if n == 1:
                x_step[:, i] = bases[i].ppf(s / w0[i])
                continue
            from_base = s < w0[i]
            q = np.where(from_base, s / w0[i], 0.5)
            base_vals = bases[i].ppf(q)
            idx = _row_first_greater(cumw[:, :, i], n - 1,
                                     np.where(from_base, -1.0, s - w0[i]), rows)
            atom_vals = obs[rows, np.minimum(idx, n - 2), i]
            x_step[:, i] = np.where(from_base, base_vals, atom_vals)
        obs[:, n - 1, :] = x_step

        if broken_feedback is not None:
            w_step = broken_feedback[0] * x_step + broken_feedback[1]
        elif cross:
            a = coupling.beta.value(n) * x_step[:, ::-1]
            if np.any(a >= 1.0):
                raise ProcessError("degenerate reinforcement: fraction A reached 1")
            w_step = tot * a / (1.0 - a)
        elif isinstance(coupling, CommonWeight):
            if coupling.dist.consumes_uniform:
                w_common = coupling.dist.from_uniform(weight_u[:, n - 1])
            else:
                w_common = np.full(n_paths, coupling.dist.value)
            w_step = np.broadcast_to(w_common[:, None], (n_paths, k))
        else:
            if coupling.dist.consumes_uniform:
                w_step = coupling.dist.from_uniform(weight_u[:, n - 1, :])
            else:
                w_step = np.full((n_paths, k), coupling.dist.value)

        if want_weights:
            weights_out[:, n - 1, :] = w_step
        prev = cumw[:, n - 2, :] if n >= 2 else 0.0
        cumw[:, n - 1, :] = prev + w_step
        tot = tot + w_step
        # powers chained exactly as the scalar layer computes them
        x2 = x_step * x_step
        x3 = x2 * x_step
        x4 = x3 * x_step
        psums[:, :, 0] += w_step * x_step
        psums[:, :, 1] += w_step * x2
        psums[:, :, 2] += w_step * x3
        psums[:, :, 3] += w_step * x4
        if want_mean:
            mean_out[:, n, :] = (w0 * base_m1 + psums[:, :, 0]) / tot
        if want_var:
            m2 = (w0 * base_m2 + psums[:, :, 1]) / tot
            mu_n = (w0 * base_m1 + psums[:, :, 0]) / tot
            var_out[:, n, :] = m2 - mu_n ** 2

    out = {"total_weight": tot, "weighted_power_sums": psums}
    if "observations" in record:
        out["observations"] = obs
    if want_weights:
        out["weights"] = weights_out
    if want_mean:
        out["predictive_mean"] = mean_out
    if want_var:
        out["predictive_var"] = var_out
    return out


def simulate_gaussian_chunk(spec: GaussianLastTickSpec, horizon: int, exp_draws: np.ndarray,
                            z: np.ndarray, record: frozenset) -> dict:
    """Run a chunk of the last-tick Gaussian system.

    exp_draws: (P, H+1) standard exponentials (inter-arrivals before rate
    scaling; the first is replaced when the spec fixes t0). z: (P, H, K)
    standard normals.
    """
    n_paths = exp_draws.shape[0]
    k = spec.n_coords
    gaps = exp_draws / spec.rate
    if spec.t0 is not None:
        gaps = gaps.copy()
        gaps[:, 0] = spec.t0
    arrivals = np.cumsum(gaps, axis=1)  # T_1 .. T_{H+1}

    mu = np.tile(np.asarray(spec.mu1, dtype=float), (n_paths, 1))
    s2 = np.tile(np.asarray(spec.sigma2_1, dtype=float), (n_paths, 1))
    gamma_hat = np.ones(n_paths)

    want_mean = "predictive_mean" in record
    want_var = "predictive_var" in record
    obs = np.zeros((n_paths, horizon, k)) if "observations" in record else None
    lambdas = np.zeros((n_paths, horizon)) if "lambdas" in record else None
    mean_out = np.zeros((n_paths, horizon + 1, k)) if want_mean else None
    var_out = np.zeros((n_paths, horizon + 1, k)) if want_var else None
    if want_mean:
        mean_out[:, 0, :] = mu
    if want_var:
        var_out[:, 0, :] = s2

    for n in range(1, horizon + 1):
        x = mu + np.sqrt(s2) * z[:, n - 1, :]
        if obs is not None:
            obs[:, n - 1, :] = x
        lam = gaps[:, n] / arrivals[:, n]  # t_n / T_{n+1}
        if lambdas is not None:
            lambdas[:, n - 1] = lam
        lam_col = lam[:, None]
        mu = (1.0 - lam_col) * mu + lam_col * x
        s2 = (1.0 - lam_col ** 2) * s2
        gamma_hat = gamma_hat * (1.0 - lam ** 2)
        if want_mean:
            mean_out[:, n, :] = mu
        if want_var:
            var_out[:, n, :] = s2

    out = {"gamma_hat": gamma_hat, "terminal_mu": mu, "terminal_sigma2": s2}
    if obs is not None:
        out["observations"] = obs
    if "arrivals" in record:
        out["arrivals"] = arrivals
    if lambdas is not None:
        out["lambdas"] = lambdas
    if want_mean:
        out["predictive_mean"] = mean_out
    if want_var:
        out["predictive_var"] = var_out
    return out


def simulate_state_space_chunk(spec: StateSpaceCidSpec, horizon: int,
                               z: np.ndarray, record: frozenset) -> dict:
    """Run a chunk of the damped-random-walk model. z: (P, H, 2) standard
    normals, (state increment, observation noise) per step. Predictive
    summaries are the exact Gaussian filter of the observations."""
    n_paths = z.shape[0]
    theta = np.full(n_paths, spec.theta0)
    m = np.full(n_paths, spec.theta0)     # posterior mean of theta_n given X_{1:n}
    p_var = np.zeros(n_paths)             # posterior variance
    obs = np.zeros((n_paths, horizon, 1)) if "observations" in record else None
    theta_out = np.zeros((n_paths, horizon)) if "theta" in record else None
    want_mean = "predictive_mean" in record
    want_var = "predictive_var" in record
    mean_out = np.zeros((n_paths, horizon + 1, 1)) if want_mean else None
    var_out = np.zeros((n_paths, horizon + 1, 1)) if want_var else None
    if want_mean:
        mean_out[:, 0, 0] = spec.theta0
    if want_var:
        var_out[:, 0, 0] = spec.c

    for n in range(1, horizon + 1):
        b_prev, b_n = spec.b(n - 1), spec.b(n)
        theta = theta + math.sqrt(b_n - b_prev) * z[:, n - 1, 0]
        x = theta + math.sqrt(spec.c - b_n) * z[:, n - 1, 1]
        if obs is not None:
            obs[:, n - 1, 0] = x
        if theta_out is not None:
            theta_out[:, n - 1] = theta
        # exact filter update for the predictive of the next observation
        prior_var = p_var + (b_n - b_prev)
        obs_var = spec.c - b_n
        gain = prior_var / (prior_var + obs_var)
        m = m + gain * (x - m)
        p_var = (1.0 - gain) * prior_var
        if want_mean:
            mean_out[:, n, 0] = m
        if want_var:
            # predictive Var(X_{n+1} | X_{1:n}) = P_n + (b_{n+1}-b_n) + (c-b_{n+1})
            var_out[:, n, 0] = p_var + (spec.c - b_n)

    out = {"terminal_theta": theta}
    if obs is not None:
        out["observations"] = obs
    if theta_out is not None:
        out["theta"] = theta_out
    if want_mean:
        out["predictive_mean"] = mean_out
    if want_var:
        out["predictive_var"] = var_out
    return out


def simulate_ar1_chunk(spec: Ar1DriftSpec, horizon: int, z: np.ndarray,
                       record: frozenset) -> dict:
    """Run a chunk of the AR(1)-with-drift control. z: (P, H) normals."""
    n_paths = z.shape[0]
    obs = np.zeros((n_paths, horizon, 1)) if "observations" in record else None
    want_mean = "predictive_mean" in record
    want_var = "predictive_var" in record
    mean_out = np.zeros((n_paths, horizon + 1, 1)) if want_mean else None
    var_out = np.zeros((n_paths, horizon + 1, 1)) if want_var else None
    if want_mean:
        mean_out[:, 0, 0] = spec.init_mean
    if want_var:
        var_out[:, 0, 0] = spec.init_var
    x = spec.init_mean + math.sqrt(spec.init_var) * z[:, 0]
    for n in range(1, horizon + 1):
        if n > 1:
            x = spec.drift + spec.phi * x + math.sqrt(spec.noise_var) * z[:, n - 1]
        if obs is not None:
            obs[:, n - 1, 0] = x
        if want_mean:
            mean_out[:, n, 0] = spec.drift + spec.phi * x
        if want_var:
            var_out[:, n, 0] = spec.noise_var
    out = {}
    if obs is not None:
        out["observations"] = obs
    if want_mean:
        out["predictive_mean"] = mean_out
    if want_var:
        out["predictive_var"] = var_out
    return out
