"""Deterministic, reproducible ensemble execution.

Random streams are addressed by the triple (master_seed, path_index,
substream_index) and realized as keyed Philox counter-based generators, so
a path's randomness is a pure function of its address. Ensembles are
therefore identical for any chunking of the path range and any number of
worker threads; workers write to disjoint slices of the output arrays.

Substream convention per path: substream 0 carries shared randomness
(reinforcement weights, arrival times), substream 1 + i carries the draws
of coordinate i.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import processes
from .specs import (
    Ar1DriftSpec,
    BrokenFeedbackWeightSpec,
    GaussianLastTickSpec,
    PolyaSpec,
    ReinforcedSpec,
    SpecValidationError,
    StateSpaceCidSpec,
    UniformCoupledSpec,
)

_SUB_BITS = 16
_PATH_BITS = 48
MAX_SUBSTREAMS = 1 << _SUB_BITS
MAX_PATHS = 1 << _PATH_BITS

DEFAULT_CHUNK_BYTES = 512 * 1024 * 1024


class MissingSeriesError(KeyError):
    """A computation asked for a series the ensemble did not record."""


def _check_stream_address(master_seed: int, path_index: int, substream_index: int) -> None:
    if not (0 <= master_seed < (1 << 64)):
        raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    if not (0 <= path_index < MAX_PATHS):
        raise ValueError(f"path_index must lie in [0, 2^{_PATH_BITS}), got {path_index}")
    if not (0 <= substream_index < MAX_SUBSTREAMS):
        raise ValueError(f"substream_index must lie in [0, 2^{_SUB_BITS}), got {substream_index}")


def _philox_key(master_seed: int, path_index: int, substream_index: int) -> int:
    return (master_seed << 64) | (path_index << _SUB_BITS) | substream_index


@dataclass(frozen=True)
class RngStream:
    """Address of one deterministic random stream."""

    master_seed: int
    path_index: int
    substream_index: int

    def generator(self) -> np.random.Generator:
        key = _philox_key(self.master_seed, self.path_index, self.substream_index)
        return np.random.Generator(np.random.Philox(key=key))


def derive_stream(master_seed: int, path_index: int, substream_index: int) -> RngStream:
    """Stateless derivation of the stream addressed by the given triple."""
    _check_stream_address(master_seed, path_index, substream_index)
    return RngStream(master_seed, path_index, substream_index)


class PathStreams:
    """The per-path generator bundle used by the scalar process steps."""

    def __init__(self, master_seed: int, path_index: int, n_coords: int):
        self.weights = derive_stream(master_seed, path_index, 0).generator()
        self._coords = [derive_stream(master_seed, path_index, 1 + i).generator()
                        for i in range(n_coords)]

    def coord(self, i: int) -> np.random.Generator:
        return self._coords[i]


class _StreamFiller:
    """Reuses one Philox generator, re-keyed per (path, substream), to fill
    per-path random blocks without per-path object construction."""

    def __init__(self, master_seed: int):
        _check_stream_address(master_seed, 0, 0)
        self._master = master_seed
        self._bg = np.random.Philox(key=0)
        self.generator = np.random.Generator(self._bg)

    def rekey(self, path_index: int, substream_index: int) -> np.random.Generator:
        st = self._bg.state
        st["state"]["key"] = np.array(
            [(path_index << _SUB_BITS) | substream_index, self._master], dtype=np.uint64)
        st["state"]["counter"] = np.zeros(4, dtype=np.uint64)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        return self.generator


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

_SERIES_DOC = {
    "observations": "(paths, horizon, coords) observed values",
    "predictive_mean": "(paths, horizon+1, coords) one-step predictive means, prior first",
    "predictive_var": "(paths, horizon+1, coords) one-step predictive variances, prior first",
    "weights": "(paths, horizon, coords) reinforcement weights",
    "arrivals": "(paths, horizon+1) arrival times",
    "lambdas": "(paths, horizon) interpolation fractions t_n / T_{n+1}",
    "theta": "(paths, horizon) latent level of the state-space model",
}


@dataclass
class Ensemble:
    """Recorded output of `run_ensemble`: per-path series plus cheap per-path
    terminal summaries (always present where the kind defines them)."""

    spec: object
    n_paths: int
    horizon: int
    master_seed: int
    record: frozenset
    arrays: dict = field(default_factory=dict)

    def _series(self, name: str) -> np.ndarray:
        if name not in self.arrays:
            raise MissingSeriesError(
                f"series {name!r} was not recorded; recorded: {sorted(self.arrays)}")
        return self.arrays[name]

    @property
    def observations(self) -> np.ndarray:
        return self._series("observations")

    @property
    def predictive_mean(self) -> np.ndarray:
        return self._series("predictive_mean")

    @property
    def predictive_var(self) -> np.ndarray:
        return self._series("predictive_var")

    @property
    def weights(self) -> np.ndarray:
        return self._series("weights")

    @property
    def arrivals(self) -> np.ndarray:
        return self._series("arrivals")

    @property
    def lambdas(self) -> np.ndarray:
        return self._series("lambdas")

    @property
    def gamma_hat(self) -> np.ndarray:
        return self._series("gamma_hat")

    @property
    def theta(self) -> np.ndarray:
        return self._series("theta")

    @property
    def n_coords(self) -> int:
        return self.spec.n_coords

    def terminal_moments(self) -> np.ndarray:
        """(paths, coords, 5) raw moments m_0..m_4 of the terminal predictive
        mixture of each reinforced coordinate."""
        if "weighted_power_sums" not in self.arrays:
            raise MissingSeriesError("terminal mixture moments exist only for reinforced kinds")
        psums = self.arrays["weighted_power_sums"]
        tot = self.arrays["total_weight"]
        rspec = self.spec.as_reinforced() if hasattr(self.spec, "as_reinforced") else self.spec
        if isinstance(rspec, BrokenFeedbackWeightSpec):
            from .specs import UniformBase
            bases = [UniformBase()] * rspec.n_coords
            w0 = np.full(rspec.n_coords, rspec.w0)
        else:
            bases = list(rspec.base)
            w0 = np.asarray(rspec.w0)
        m = np.empty(psums.shape[:2] + (5,))
        m[:, :, 0] = 1.0
        for r in range(1, 5):
            base_r = np.array([b.raw_moment(r) for b in bases])
            m[:, :, r] = (w0 * base_r + psums[:, :, r - 1]) / tot
        return m

    def terminal_mean(self) -> np.ndarray:
        """(paths, coords) mean of the terminal predictive distribution."""
        if "terminal_mu" in self.arrays:
            return self.arrays["terminal_mu"]
        return self.terminal_moments()[:, :, 1]

    def terminal_variance(self) -> np.ndarray:
        """(paths, coords) variance of the terminal predictive distribution."""
        if "terminal_sigma2" in self.arrays:
            return self.arrays["terminal_sigma2"]
        m = self.terminal_moments()
        return m[:, :, 2] - m[:, :, 1] ** 2

    def terminal_mixture(self, path: int, coord: int) -> processes.MixtureDistribution:
        """Exact terminal predictive mixture of one path/coordinate
        (requires recorded observations and weights)."""
        rspec = self.spec.as_reinforced() if hasattr(self.spec, "as_reinforced") else self.spec
        if isinstance(rspec, BrokenFeedbackWeightSpec):
            from .specs import UniformBase
            base, w0 = UniformBase(), rspec.w0
        elif isinstance(rspec, ReinforcedSpec):
            base, w0 = rspec.base[coord], rspec.w0[coord]
        else:
            raise MissingSeriesError("terminal mixtures exist only for reinforced kinds")
        return processes.MixtureDistribution(
            base, w0, self.observations[path, :, coord], self.weights[path, :, coord])


_REINFORCED = (ReinforcedSpec, PolyaSpec, UniformCoupledSpec, BrokenFeedbackWeightSpec)


def default_record(spec) -> frozenset:
    if isinstance(spec, _REINFORCED):
        return frozenset({"observations", "predictive_mean", "predictive_var", "weights"})
    if isinstance(spec, GaussianLastTickSpec):
        return frozenset({"observations", "predictive_mean", "predictive_var",
                          "arrivals", "lambdas"})
    if isinstance(spec, StateSpaceCidSpec):
        return frozenset({"observations", "predictive_mean", "predictive_var", "theta"})
    return frozenset({"observations", "predictive_mean", "predictive_var"})


def _series_bytes_per_path(spec, horizon: int, record: frozenset) -> int:
    k = spec.n_coords
    per = 0
    for name in record:
        if name in ("observations", "weights"):
            per += 8 * horizon * k
        elif name in ("predictive_mean", "predictive_var"):
            per += 8 * (horizon + 1) * k
        elif name in ("arrivals", "lambdas", "theta"):
            per += 8 * (horizon + 1)
    # working buffers: random inputs + (for reinforced kinds) cumulative weights
    per += 8 * horizon * k * 2
    if isinstance(spec, _REINFORCED):
        per += 8 * horizon * k * (2 if "observations" not in record else 1)
    return max(per, 64)


def _auto_chunk(spec, n_paths: int, horizon: int, record: frozenset,
                chunk_bytes: int = DEFAULT_CHUNK_BYTES) -> int:
    per = _series_bytes_per_path(spec, horizon, record)
    return int(np.clip(chunk_bytes // per, 1, n_paths))


def _chunk_draws(spec, horizon: int, master_seed: int, path_lo: int, n_paths: int) -> dict:
    """Pre-generate the chunk's random inputs from per-path substreams."""
    filler = _StreamFiller(master_seed)
    k = spec.n_coords
    if isinstance(spec, _REINFORCED):
        layout = processes.reinforced_draw_layout(spec, horizon)
        coord_u = np.empty((n_paths, horizon, k))
        for p in range(n_paths):
            for i in range(k):
                coord_u[p, :, i] = filler.rekey(path_lo + p, 1 + i).random(horizon)
        wshape = layout["weight_shape"]
        weight_u = None
        if wshape is not None:
            weight_u = np.empty((n_paths,) + wshape)
            for p in range(n_paths):
                weight_u[p] = filler.rekey(path_lo + p, 0).random(wshape)
        return {"coord_u": coord_u, "weight_u": weight_u}
    if isinstance(spec, GaussianLastTickSpec):
        exp_draws = np.empty((n_paths, horizon + 1))
        z = np.empty((n_paths, horizon, k))
        for p in range(n_paths):
            exp_draws[p] = filler.rekey(path_lo + p, 0).standard_exponential(horizon + 1)
            for i in range(k):
                z[p, :, i] = filler.rekey(path_lo + p, 1 + i).standard_normal(horizon)
        return {"exp_draws": exp_draws, "z": z}
    if isinstance(spec, StateSpaceCidSpec):
        z = np.empty((n_paths, horizon, 2))
        for p in range(n_paths):
            z[p] = filler.rekey(path_lo + p, 1).standard_normal((horizon, 2))
        return {"z": z}
    if isinstance(spec, Ar1DriftSpec):
        z = np.empty((n_paths, horizon))
        for p in range(n_paths):
            z[p] = filler.rekey(path_lo + p, 1).standard_normal(horizon)
        return {"z": z}
    raise SpecValidationError("spec.kind", f"no simulator for spec kind {spec.kind!r}")


def _run_chunk(spec, horizon: int, master_seed: int, path_lo: int, n_paths: int,
               record: frozenset) -> dict:
    draws = _chunk_draws(spec, horizon, master_seed, path_lo, n_paths)
    if isinstance(spec, _REINFORCED):
        return processes.simulate_reinforced_chunk(
            spec, horizon, draws["coord_u"], draws["weight_u"], record)
    if isinstance(spec, GaussianLastTickSpec):
        return processes.simulate_gaussian_chunk(
            spec, horizon, draws["exp_draws"], draws["z"], record)
    if isinstance(spec, StateSpaceCidSpec):
        return processes.simulate_state_space_chunk(spec, horizon, draws["z"], record)
    return processes.simulate_ar1_chunk(spec, horizon, draws["z"], record)


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def _validate_run_args(spec, n_paths: int, horizon: int, master_seed: int) -> None:
    spec.validate()
    if n_paths < 1:
        raise SpecValidationError("n_paths", f"must be >= 1, got {n_paths}")
    if horizon < 1:
        raise SpecValidationError("horizon", f"must be >= 1, got {horizon}")
    _check_stream_address(master_seed, 0, 0)
    if n_paths > MAX_PATHS:
        raise SpecValidationError("n_paths", f"must be <= 2^{_PATH_BITS}")


def map_path_chunks(spec, n_paths: int, horizon: int, master_seed: int, reducer,
                    *, record: frozenset | None = None, threads: int | None = None,
                    chunk_paths: int | None = None) -> dict:
    """Run the ensemble chunk by chunk and apply `reducer` to each chunk's
    Ensemble, concatenating the per-path result arrays in path order.

    The reducer must be a pure function mapping an Ensemble to a dict of
    arrays whose first dimension indexes the chunk's paths. Memory stays
    bounded by the chunk size regardless of n_paths.
    """
    _validate_run_args(spec, n_paths, horizon, master_seed)
    record = frozenset(record) if record is not None else default_record(spec)
    chunk = chunk_paths or _auto_chunk(spec, n_paths, horizon, record)
    bounds = [(lo, min(lo + chunk, n_paths)) for lo in range(0, n_paths, chunk)]
    n_workers = min(_resolve_threads(threads), len(bounds))

    def work(bound):
        lo, hi = bound
        arrays = _run_chunk(spec, horizon, master_seed, lo, hi - lo, record)
        ens = Ensemble(spec, hi - lo, horizon, master_seed, record, arrays)
        return reducer(ens)

    if n_workers <= 1:
        parts = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(work, bounds))
    out: dict = {}
    for key in parts[0]:
        vals = [np.asarray(p[key]) for p in parts]
        out[key] = np.concatenate(vals, axis=0) if vals[0].ndim else np.stack(vals)
    return out


def run_ensemble(spec, n_paths: int, horizon: int, master_seed: int,
                 *, record: frozenset | None = None, threads: int | None = None,
                 chunk_paths: int | None = None) -> Ensemble:
    """Simulate `n_paths` independent paths of `spec` up to `horizon`.

    A pure function of (spec, n_paths, horizon, master_seed): the result is
    bit-identical for any thread count and any chunking.
    """
    _validate_run_args(spec, n_paths, horizon, master_seed)
    record = frozenset(record) if record is not None else default_record(spec)
    reduced = map_path_chunks(spec, n_paths, horizon, master_seed, lambda e: e.arrays,
                              record=record, threads=threads, chunk_paths=chunk_paths)
    return Ensemble(spec, n_paths, horizon, master_seed, record, reduced)


def recompute_predictive_series(ens: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    """Recompute predictive mean/variance series of a reinforced ensemble from
    the recorded observations and weights alone (no look-ahead check). Uses
    the same running-sum arithmetic as the simulator, so the recomputation
    must match the recorded series bit for bit."""
    rspec = ens.spec.as_reinforced() if hasattr(ens.spec, "as_reinforced") else ens.spec
    if isinstance(rspec, BrokenFeedbackWeightSpec):
        from .specs import UniformBase
        bases = [UniformBase()] * rspec.n_coords
        w0 = np.full(rspec.n_coords, rspec.w0)
    elif isinstance(rspec, ReinforcedSpec):
        bases = list(rspec.base)
        w0 = np.asarray(rspec.w0)
    else:
        raise MissingSeriesError("recomputation applies to reinforced kinds")
    x = ens.observations
    w = ens.weights
    n_paths, horizon, k = x.shape
    m1 = np.array([b.raw_moment(1) for b in bases])
    m2 = np.array([b.raw_moment(2) for b in bases])
    # accumulate in the simulator's exact order: ((w0 + W_1) + W_2) + ...
    w0_row = np.broadcast_to(w0, (n_paths, 1, k))
    tot = np.cumsum(np.concatenate([w0_row, w], axis=1), axis=1)[:, 1:, :]
    s1 = np.cumsum(w * x, axis=1)
    s2 = np.cumsum(w * (x * x), axis=1)
    mean = np.empty((n_paths, horizon + 1, k))
    var = np.empty((n_paths, horizon + 1, k))
    mean[:, 0, :] = m1
    var[:, 0, :] = m2 - m1 ** 2
    mean[:, 1:, :] = (w0 * m1 + s1) / tot
    mm2 = (w0 * m2 + s2) / tot
    var[:, 1:, :] = mm2 - mean[:, 1:, :] ** 2
    return mean, var
