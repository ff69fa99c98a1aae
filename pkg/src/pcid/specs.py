"""Declarative process specifications.

A ProcessSpec describes one p-c.i.d. construction: its kind, its
parameters, and the number of coordinates. Specs are plain data: they
validate themselves, serialize to/from dicts (for experiment configs and
report provenance), and are interpreted by the simulators in
:mod:`pcid.processes`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import numpy as np
from scipy import special


class SpecValidationError(ValueError):
    """Raised when a spec (or config block) has an invalid field."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise SpecValidationError(field_name, message)


# ---------------------------------------------------------------------------
# Base measures (the nu_i driving a reinforced coordinate)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformBase:
    """Uniform distribution on (a, b)."""

    a: float = 0.0
    b: float = 1.0
    kind: ClassVar[str] = "uniform"

    def validate(self, field_name: str = "base") -> None:
        _require(math.isfinite(self.a) and math.isfinite(self.b), field_name,
                 "uniform bounds must be finite")
        _require(self.b > self.a, field_name, f"need b > a, got ({self.a}, {self.b})")

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def variance(self) -> float:
        return (self.b - self.a) ** 2 / 12.0

    def raw_moment(self, r: int) -> float:
        # E[X^r] = (b^{r+1} - a^{r+1}) / ((r+1)(b-a))
        return (self.b ** (r + 1) - self.a ** (r + 1)) / ((r + 1) * (self.b - self.a))

    def cdf(self, x):
        return np.clip((np.asarray(x, float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def ppf(self, q):
        return self.a + (self.b - self.a) * np.asarray(q, float)

    def support(self) -> tuple[float, float]:
        return (self.a, self.b)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class NormalBase:
    """Normal distribution with the given mean and variance."""

    mean_value: float = 0.0
    var: float = 1.0
    kind: ClassVar[str] = "normal"

    def validate(self, field_name: str = "base") -> None:
        _require(math.isfinite(self.mean_value), field_name, "mean must be finite")
        _require(self.var > 0 and math.isfinite(self.var), field_name,
                 f"variance must be positive, got {self.var}")

    def mean(self) -> float:
        return self.mean_value

    def variance(self) -> float:
        return self.var

    def raw_moment(self, r: int) -> float:
        m, v = self.mean_value, self.var
        if r == 0:
            return 1.0
        if r == 1:
            return m
        if r == 2:
            return m * m + v
        if r == 3:
            return m ** 3 + 3 * m * v
        if r == 4:
            return m ** 4 + 6 * m * m * v + 3 * v * v
        raise ValueError(f"raw moments implemented up to order 4, got {r}")

    def cdf(self, x):
        return special.ndtr((np.asarray(x, float) - self.mean_value) / math.sqrt(self.var))

    def ppf(self, q):
        return self.mean_value + math.sqrt(self.var) * special.ndtri(np.asarray(q, float))

    def support(self) -> tuple[float, float]:
        # effective support for grid construction, not a hard truncation
        sd = math.sqrt(self.var)
        return (self.mean_value - 8.0 * sd, self.mean_value + 8.0 * sd)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mean": self.mean_value, "var": self.var}


@dataclass(frozen=True)
class DiscreteBase:
    """Finite discrete distribution given by support points and probabilities."""

    values: tuple[float, ...]
    probs: tuple[float, ...]
    kind: ClassVar[str] = "discrete"

    def validate(self, field_name: str = "base") -> None:
        _require(len(self.values) == len(self.probs) > 0, field_name,
                 "values and probs must be equal-length and non-empty")
        _require(all(math.isfinite(v) for v in self.values), field_name,
                 "support values must be finite")
        _require(all(p > 0 for p in self.probs), field_name, "probabilities must be positive")
        _require(abs(sum(self.probs) - 1.0) < 1e-9, field_name,
                 f"probabilities must sum to 1, got {sum(self.probs)}")
        _require(list(self.values) == sorted(self.values), field_name,
                 "support values must be strictly increasing")
        _require(len(set(self.values)) == len(self.values), field_name,
                 "support values must be distinct")

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def variance(self) -> float:
        return self.raw_moment(2) - self.mean() ** 2

    def raw_moment(self, r: int) -> float:
        return float(np.dot(np.asarray(self.values, float) ** r, self.probs))

    def cdf(self, x):
        x = np.asarray(x, float)
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(self.values, x, side="right")
        out = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        return out

    def ppf(self, q):
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, np.asarray(q, float), side="right")
        return np.asarray(self.values, float)[np.minimum(idx, len(self.values) - 1)]

    def support(self) -> tuple[float, float]:
        return (min(self.values), max(self.values))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "values": list(self.values), "probs": list(self.probs)}


BASE_MEASURES = {
    UniformBase.kind: UniformBase,
    NormalBase.kind: NormalBase,
    DiscreteBase.kind: DiscreteBase,
}


def base_from_dict(d: dict, field_name: str = "base"):
    _require(isinstance(d, dict) and "kind" in d, field_name, "expected a dict with a 'kind'")
    kind = d["kind"]
    _require(kind in BASE_MEASURES, field_name, f"unknown base measure kind {kind!r}")
    if kind == "uniform":
        return UniformBase(float(d.get("a", 0.0)), float(d.get("b", 1.0)))
    if kind == "normal":
        return NormalBase(float(d.get("mean", 0.0)), float(d.get("var", 1.0)))
    return DiscreteBase(tuple(float(v) for v in d["values"]),
                        tuple(float(p) for p in d["probs"]))


# ---------------------------------------------------------------------------
# Reinforcement-weight distributions (support must lie in (0, inf))
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegenerateWeight:
    """W identically equal to `value`. Consumes no randomness."""

    value: float = 1.0
    kind: ClassVar[str] = "degenerate"
    consumes_uniform: ClassVar[bool] = False

    def validate(self, field_name: str = "weight") -> None:
        _require(self.value > 0 and math.isfinite(self.value), field_name,
                 f"weight must be positive, got {self.value}")

    def mean(self) -> float:
        return self.value

    def variance(self) -> float:
        return 0.0

    def second_moment(self) -> float:
        return self.value ** 2

    def from_uniform(self, u):
        return np.full_like(np.asarray(u, float), self.value)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class TwoPointWeight:
    """W = lo with probability p_lo, else hi."""

    lo: float = 1.0
    hi: float = 3.0
    p_lo: float = 0.5
    kind: ClassVar[str] = "two_point"
    consumes_uniform: ClassVar[bool] = True

    def validate(self, field_name: str = "weight") -> None:
        _require(self.lo > 0 and self.hi > 0, field_name, "both weight values must be positive")
        _require(self.hi > self.lo, field_name, "need hi > lo")
        _require(0.0 < self.p_lo < 1.0, field_name, f"p_lo must be in (0,1), got {self.p_lo}")

    def mean(self) -> float:
        return self.p_lo * self.lo + (1 - self.p_lo) * self.hi

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2

    def second_moment(self) -> float:
        return self.p_lo * self.lo ** 2 + (1 - self.p_lo) * self.hi ** 2

    def from_uniform(self, u):
        return np.where(np.asarray(u, float) < self.p_lo, self.lo, self.hi)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi, "p_lo": self.p_lo}


@dataclass(frozen=True)
class UniformWeight:
    """W uniform on (a, b) with a > 0."""

    a: float = 0.5
    b: float = 1.5
    kind: ClassVar[str] = "uniform"
    consumes_uniform: ClassVar[bool] = True

    def validate(self, field_name: str = "weight") -> None:
        _require(self.a > 0, field_name, f"lower bound must be positive, got {self.a}")
        _require(self.b > self.a, field_name, f"need b > a, got ({self.a}, {self.b})")

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def variance(self) -> float:
        return (self.b - self.a) ** 2 / 12.0

    def second_moment(self) -> float:
        return self.variance() + self.mean() ** 2

    def from_uniform(self, u):
        return self.a + (self.b - self.a) * np.asarray(u, float)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class GammaWeight:
    """W = shift + Gamma(shape, scale). Drawn by inverse CDF, so one uniform per draw."""

    shape: float = 2.0
    scale: float = 1.0
    shift: float = 0.0
    kind: ClassVar[str] = "gamma"
    consumes_uniform: ClassVar[bool] = True

    def validate(self, field_name: str = "weight") -> None:
        _require(self.shape > 0, field_name, f"shape must be positive, got {self.shape}")
        _require(self.scale > 0, field_name, f"scale must be positive, got {self.scale}")
        _require(self.shift >= 0, field_name, f"shift must be >= 0, got {self.shift}")
        _require(self.shift > 0 or self.shape > 2, field_name,
                 "need shift > 0 or shape > 2 so that E[1/W^2] is finite")

    def mean(self) -> float:
        return self.shape * self.scale + self.shift

    def variance(self) -> float:
        return self.shape * self.scale ** 2

    def second_moment(self) -> float:
        return self.variance() + self.mean() ** 2

    def from_uniform(self, u):
        return self.shift + self.scale * special.gammaincinv(self.shape, np.asarray(u, float))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "shape": self.shape, "scale": self.scale, "shift": self.shift}


WEIGHT_DISTS = {
    DegenerateWeight.kind: DegenerateWeight,
    TwoPointWeight.kind: TwoPointWeight,
    UniformWeight.kind: UniformWeight,
    GammaWeight.kind: GammaWeight,
}


def weight_from_dict(d: dict, field_name: str = "weight"):
    _require(isinstance(d, dict) and "kind" in d, field_name, "expected a dict with a 'kind'")
    kind = d["kind"]
    _require(kind in WEIGHT_DISTS, field_name, f"unknown weight distribution kind {kind!r}")
    if kind == "degenerate":
        return DegenerateWeight(float(d.get("value", 1.0)))
    if kind == "two_point":
        return TwoPointWeight(float(d.get("lo", 1.0)), float(d.get("hi", 3.0)),
                              float(d.get("p_lo", 0.5)))
    if kind == "uniform":
        return UniformWeight(float(d.get("a", 0.5)), float(d.get("b", 1.5)))
    return GammaWeight(float(d.get("shape", 2.0)), float(d.get("scale", 1.0)),
                       float(d.get("shift", 0.0)))


# ---------------------------------------------------------------------------
# Coupling of the weights across coordinates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaSchedule:
    """Cross-reinforcement fractions beta_n with beta_1 = 1 and 0 < beta_n <= 1.

    kinds: "constant_one" (beta_n = 1), "harmonic" (beta_n = 2/(n+1)),
    "geometric" (beta_n = ratio^(n-1), summable, so the predictive freezes),
    or "table" (explicit values; steps beyond the table reuse the last entry).
    """

    kind: str = "harmonic"
    table: tuple[float, ...] = ()
    ratio: float = 0.5

    def validate(self, field_name: str = "beta") -> None:
        _require(self.kind in ("constant_one", "harmonic", "geometric", "table"),
                 field_name, f"unknown beta schedule kind {self.kind!r}")
        if self.kind == "geometric":
            _require(0.0 < self.ratio < 1.0, field_name,
                     f"geometric ratio must lie in (0, 1), got {self.ratio}")
        if self.kind == "table":
            _require(len(self.table) >= 1, field_name, "table schedule needs at least one entry")
            _require(abs(self.table[0] - 1.0) < 1e-15, field_name,
                     f"beta_1 must equal 1, got {self.table[0]}")
            _require(all(0.0 < b <= 1.0 for b in self.table), field_name,
                     "all beta_n must lie in (0, 1]")

    def value(self, n: int) -> float:
        """beta_n for the 1-based step index n."""
        if self.kind == "constant_one":
            return 1.0
        if self.kind == "harmonic":
            return 2.0 / (n + 1)
        if self.kind == "geometric":
            return self.ratio ** (n - 1)
        return self.table[min(n, len(self.table)) - 1]

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "table":
            d["table"] = list(self.table)
        if self.kind == "geometric":
            d["ratio"] = self.ratio
        return d

    @staticmethod
    def from_dict(d: dict, field_name: str = "beta") -> "BetaSchedule":
        _require(isinstance(d, dict) and "kind" in d, field_name, "expected a dict with a 'kind'")
        return BetaSchedule(d["kind"], tuple(float(b) for b in d.get("table", ())),
                            float(d.get("ratio", 0.5)))


@dataclass(frozen=True)
class IidWeights:
    """Independent weights across coordinates and steps, all drawn from `dist`."""

    dist: object
    kind: ClassVar[str] = "independent_iid_weights"

    def validate(self, field_name: str = "coupling") -> None:
        self.dist.validate(f"{field_name}.dist")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dist": self.dist.to_dict()}


@dataclass(frozen=True)
class CommonWeight:
    """One weight per step, shared by every coordinate."""

    dist: object
    kind: ClassVar[str] = "common_weight"

    def validate(self, field_name: str = "coupling") -> None:
        self.dist.validate(f"{field_name}.dist")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dist": self.dist.to_dict()}


@dataclass(frozen=True)
class CrossFraction:
    """Reinforcement fraction of coordinate i set to beta_n * x_j for the other
    coordinate j (two coordinates only)."""

    beta: BetaSchedule = field(default_factory=BetaSchedule)
    kind: ClassVar[str] = "cross_fraction"

    def validate(self, field_name: str = "coupling") -> None:
        self.beta.validate(f"{field_name}.beta")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta": self.beta.to_dict()}


COUPLING_RULES = {
    IidWeights.kind: IidWeights,
    CommonWeight.kind: CommonWeight,
    CrossFraction.kind: CrossFraction,
}


def coupling_from_dict(d: dict, field_name: str = "coupling"):
    _require(isinstance(d, dict) and "kind" in d, field_name, "expected a dict with a 'kind'")
    kind = d["kind"]
    _require(kind in COUPLING_RULES, field_name, f"unknown coupling rule kind {kind!r}")
    if kind == "cross_fraction":
        return CrossFraction(BetaSchedule.from_dict(d.get("beta", {"kind": "harmonic"}),
                                                    f"{field_name}.beta"))
    dist = weight_from_dict(d["dist"], f"{field_name}.dist")
    return COUPLING_RULES[kind](dist)


# ---------------------------------------------------------------------------
# Process specs
# ---------------------------------------------------------------------------

def _as_tuple(x, k: int, field_name: str) -> tuple:
    """Broadcast a scalar (or single entry) to a length-k tuple."""
    if isinstance(x, (list, tuple)):
        _require(len(x) in (1, k), field_name, f"expected 1 or {k} entries, got {len(x)}")
        return tuple(x) * (k if len(x) == 1 else 1)
    return (x,) * k


@dataclass(frozen=True)
class ReinforcedSpec:
    """Randomly reinforced predictive system: coordinate i draws from the
    normalized mixture (w0_i nu_i + sum_k W_{k,i} delta_{x_{k,i}}) / total and
    the just-observed value is appended with a fresh positive weight."""

    n_coords: int = 1
    w0: tuple[float, ...] = (1.0,)
    base: tuple = (UniformBase(),)
    coupling: object = field(default_factory=lambda: CommonWeight(DegenerateWeight(1.0)))
    kind: ClassVar[str] = "reinforced"

    def validate(self) -> None:
        _require(self.n_coords >= 1, "n_coords", f"need at least one coordinate, got {self.n_coords}")
        _require(len(self.w0) == self.n_coords, "w0", "one base weight per coordinate")
        for i, w in enumerate(self.w0):
            _require(w > 0 and math.isfinite(w), f"w0[{i}]", f"must be positive, got {w}")
        _require(len(self.base) == self.n_coords, "base", "one base measure per coordinate")
        for i, b in enumerate(self.base):
            b.validate(f"base[{i}]")
        self.coupling.validate("coupling")
        if isinstance(self.coupling, CrossFraction):
            _require(self.n_coords == 2, "n_coords",
                     "cross_fraction coupling requires exactly 2 coordinates")
            for i, b in enumerate(self.base):
                lo, hi = b.support()
                _require(lo >= 0.0 and hi <= 1.0, f"base[{i}]",
                         "cross_fraction coupling needs base support within [0, 1]")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_coords": self.n_coords, "w0": list(self.w0),
                "base": [b.to_dict() for b in self.base], "coupling": self.coupling.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ReinforcedSpec":
        k = int(d.get("n_coords", 1))
        w0 = _as_tuple(d.get("w0", 1.0), k, "w0")
        base_raw = d.get("base", {"kind": "uniform"})
        if isinstance(base_raw, dict):
            base = (base_from_dict(base_raw),) * k
        else:
            base = tuple(base_from_dict(b, f"base[{i}]") for i, b in enumerate(base_raw))
            base = _as_tuple(list(base), k, "base")
        coupling = coupling_from_dict(d.get("coupling",
                                            {"kind": "common_weight",
                                             "dist": {"kind": "degenerate", "value": 1.0}}))
        return cls(k, tuple(float(w) for w in w0), base, coupling)


@dataclass(frozen=True)
class PolyaSpec:
    """Independent Polya sequences: the reinforced scheme with W = 1."""

    n_coords: int = 1
    w0: tuple[float, ...] = (1.0,)
    base: tuple = (UniformBase(),)
    kind: ClassVar[str] = "polya"

    def validate(self) -> None:
        self.as_reinforced().validate()

    def as_reinforced(self) -> ReinforcedSpec:
        return ReinforcedSpec(self.n_coords, self.w0, self.base,
                              CommonWeight(DegenerateWeight(1.0)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_coords": self.n_coords, "w0": list(self.w0),
                "base": [b.to_dict() for b in self.base]}

    @classmethod
    def from_dict(cls, d: dict) -> "PolyaSpec":
        r = ReinforcedSpec.from_dict({**d, "coupling": {"kind": "common_weight",
                                                        "dist": {"kind": "degenerate", "value": 1.0}}})
        return cls(r.n_coords, r.w0, r.base)


@dataclass(frozen=True)
class UniformCoupledSpec:
    """Two uniform(0,1)-based reinforced sequences coupled through the
    reinforcement fraction A_{n,i} = beta_n * x_{n,j}, j != i."""

    beta: BetaSchedule = field(default_factory=BetaSchedule)
    w0: float = 1.0
    kind: ClassVar[str] = "uniform_coupled"
    n_coords: ClassVar[int] = 2

    def validate(self) -> None:
        self.beta.validate("beta")
        _require(self.w0 > 0 and math.isfinite(self.w0), "w0",
                 f"must be positive, got {self.w0}")

    def as_reinforced(self) -> ReinforcedSpec:
        return ReinforcedSpec(2, (self.w0, self.w0), (UniformBase(), UniformBase()),
                              CrossFraction(self.beta))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta": self.beta.to_dict(), "w0": self.w0}

    @classmethod
    def from_dict(cls, d: dict) -> "UniformCoupledSpec":
        return cls(BetaSchedule.from_dict(d.get("beta", {"kind": "harmonic"})),
                   float(d.get("w0", 1.0)))


@dataclass(frozen=True)
class BrokenFeedbackWeightSpec:
    """Negative control: a reinforced scheme whose weight is a function of the
    observation it reinforces, W_{n,i} = scale * x_{n,i} + shift. This violates
    the independence of weight and observation, so the array is not p-c.i.d.;
    larger scales make the violation easier to detect."""

    n_coords: int = 2
    w0: float = 1.0
    shift: float = 0.1
    scale: float = 1.0
    kind: ClassVar[str] = "broken_feedback_weight"

    def validate(self) -> None:
        _require(self.n_coords >= 1, "n_coords", f"need at least one coordinate, got {self.n_coords}")
        _require(self.w0 > 0, "w0", f"must be positive, got {self.w0}")
        _require(self.shift > 0, "shift", f"must be positive, got {self.shift}")
        _require(self.scale > 0, "scale", f"must be positive, got {self.scale}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_coords": self.n_coords, "w0": self.w0,
                "shift": self.shift, "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> "BrokenFeedbackWeightSpec":
        return cls(int(d.get("n_coords", 2)), float(d.get("w0", 1.0)),
                   float(d.get("shift", 0.1)), float(d.get("scale", 1.0)))


@dataclass(frozen=True)
class GaussianLastTickSpec:
    """Gaussian predictive system driven by arrival times: the predictive mean
    is the duration-weighted (last-tick) average of past observations and the
    predictive variance shrinks by the factor 1 - lambda_n^2 each step."""

    n_coords: int = 1
    mu1: tuple[float, ...] = (0.0,)
    sigma2_1: tuple[float, ...] = (1.0,)
    rate: float = 1.0
    t0: float | None = None  # None: first Poisson inter-arrival
    kind: ClassVar[str] = "gaussian_last_tick"

    def validate(self) -> None:
        _require(self.n_coords >= 1, "n_coords", f"need at least one coordinate, got {self.n_coords}")
        _require(len(self.mu1) == self.n_coords, "mu1", "one initial mean per coordinate")
        _require(len(self.sigma2_1) == self.n_coords, "sigma2_1", "one initial variance per coordinate")
        for i, s2 in enumerate(self.sigma2_1):
            _require(s2 > 0, f"sigma2_1[{i}]", f"must be positive, got {s2}")
        _require(self.rate > 0, "rate", f"must be positive, got {self.rate}")
        if self.t0 is not None:
            _require(self.t0 > 0, "t0", f"must be positive, got {self.t0}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_coords": self.n_coords, "mu1": list(self.mu1),
                "sigma2_1": list(self.sigma2_1), "rate": self.rate, "t0": self.t0}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianLastTickSpec":
        k = int(d.get("n_coords", 1))
        mu1 = _as_tuple(d.get("mu1", 0.0), k, "mu1")
        s21 = _as_tuple(d.get("sigma2_1", 1.0), k, "sigma2_1")
        t0 = d.get("t0")
        return cls(k, tuple(float(m) for m in mu1), tuple(float(s) for s in s21),
                   float(d.get("rate", 1.0)), None if t0 is None else float(t0))


@dataclass(frozen=True)
class StateSpaceCidSpec:
    """Damped-random-walk state-space model: a latent level accumulates
    shrinking Gaussian increments with Var = b_n - b_{n-1}, observations add
    independent N(0, c - b_n) noise. b_n increases to c_prime < c; the default
    schedule is b_n = c_prime * (1 - 2^{-n})."""

    theta0: float = 0.0
    c: float = 1.0
    c_prime: float = 0.5
    b_table: tuple[float, ...] = ()  # optional explicit schedule, else geometric
    kind: ClassVar[str] = "state_space_cid"
    n_coords: ClassVar[int] = 1

    def validate(self) -> None:
        _require(math.isfinite(self.theta0), "theta0", "must be finite")
        _require(self.c > 0, "c", f"must be positive, got {self.c}")
        _require(0 < self.c_prime < self.c, "c_prime",
                 f"need 0 < c_prime < c, got c_prime={self.c_prime}, c={self.c}")
        if self.b_table:
            _require(self.b_table[0] > 0.0, "b_table", "b_1 must be positive")
            _require(all(b2 >= b1 for b1, b2 in zip(self.b_table, self.b_table[1:])),
                     "b_table", "schedule must be nondecreasing")
            _require(max(self.b_table) < self.c_prime, "b_table",
                     "schedule must stay below c_prime")

    def b(self, n: int) -> float:
        """b_n for n >= 0 (b_0 = 0)."""
        if n == 0:
            return 0.0
        if self.b_table:
            return self.b_table[min(n, len(self.b_table)) - 1]
        return self.c_prime * (1.0 - 2.0 ** (-n))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "theta0": self.theta0, "c": self.c, "c_prime": self.c_prime}
        if self.b_table:
            d["b_table"] = list(self.b_table)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpaceCidSpec":
        return cls(float(d.get("theta0", 0.0)), float(d.get("c", 1.0)),
                   float(d.get("c_prime", 0.5)),
                   tuple(float(b) for b in d.get("b_table", ())))


@dataclass(frozen=True)
class Ar1DriftSpec:
    """Negative control: X_{n+1} = drift + phi X_n + noise. With a nonzero
    drift the marginals shift with n, so the sequence is not c.i.d. With
    phi = drift = 0 it degenerates to an i.i.d. Gaussian sequence."""

    phi: float = 0.8
    drift: float = 0.3
    noise_var: float = 1.0
    init_mean: float = 0.0
    init_var: float = 1.0
    kind: ClassVar[str] = "ar1_drift"
    n_coords: ClassVar[int] = 1

    def validate(self) -> None:
        _require(abs(self.phi) < 1, "phi", f"|phi| must be < 1, got {self.phi}")
        _require(self.noise_var > 0, "noise_var", f"must be positive, got {self.noise_var}")
        _require(self.init_var > 0, "init_var", f"must be positive, got {self.init_var}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "phi": self.phi, "drift": self.drift,
                "noise_var": self.noise_var, "init_mean": self.init_mean,
                "init_var": self.init_var}

    @classmethod
    def from_dict(cls, d: dict) -> "Ar1DriftSpec":
        return cls(float(d.get("phi", 0.8)), float(d.get("drift", 0.3)),
                   float(d.get("noise_var", 1.0)), float(d.get("init_mean", 0.0)),
                   float(d.get("init_var", 1.0)))


SPEC_KINDS = {
    cls.kind: cls
    for cls in (ReinforcedSpec, PolyaSpec, UniformCoupledSpec, BrokenFeedbackWeightSpec,
                GaussianLastTickSpec, StateSpaceCidSpec, Ar1DriftSpec)
}


def spec_from_dict(d: dict):
    """Build and validate a ProcessSpec from its dict form."""
    _require(isinstance(d, dict) and "kind" in d, "spec", "expected a dict with a 'kind'")
    kind = d["kind"]
    _require(kind in SPEC_KINDS, "spec.kind", f"unknown spec kind {kind!r}; "
             f"known kinds: {sorted(SPEC_KINDS)}")
    spec = SPEC_KINDS[kind].from_dict(d)
    spec.validate()
    return spec


def list_spec_kinds() -> list[str]:
    return sorted(SPEC_KINDS)
