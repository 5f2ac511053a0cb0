"""Monte Carlo engine: Brownian paths, local-time estimators, exp moments.

Reproducibility contract: path i of a run with seed s is generated from
its own counter-based stream Philox(key=[s, i]), so results are
bit-identical for a given (seed, n_paths, n_steps, t) no matter how the
paths are blocked in memory or distributed over workers.  All reductions
are either per-path (row sums) or explicit pairwise trees over the full
sample vector, never accumulation-order dependent.

Local times are estimated from the piecewise-linear interpolant of the
simulated skeleton: the time a segment spends inside a band is dt times
the clipped fraction of the chord inside it, which is exact for the
interpolant and removes the node-sampling bias of indicator averages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import CapacityError
from .measure import WeightedMeasure

__all__ = [
    "PathBatch",
    "LocalTimeEstimate",
    "LogExpMoment",
    "default_bandwidth",
    "sample_paths",
    "iter_path_blocks",
    "local_time_kernel",
    "weighted_local_times",
    "weighted_local_time_samples",
    "exact_local_time",
    "abs_brownian_log_mgf",
    "pairwise_sum",
    "log_mean_exp",
    "log_exp_moment",
]

MAX_BATCH_ELEMENTS = 2 ** 27  # ~1 GiB of float64 path nodes
DEFAULT_BLOCK = 512
_EXACT_STREAM = 1 << 63  # stream index reserved for the exact |W_t| sampler


def _check_seed(seed) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return seed


def _check_count(value, name) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
    return value


def _check_positive(value, name) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a finite positive number, got {value}")
    return value


def default_bandwidth(t: float, n_steps: int) -> float:
    """Kernel half-width 0.4 * sqrt(dt), balancing the O(eta) level bias
    against the O(dt/eta) chord-crossing bias of the clipped estimator."""
    return 0.4 * math.sqrt(_check_positive(t, "t") / _check_count(n_steps, "n_steps"))


@dataclass(frozen=True)
class PathBatch:
    """A block of simulated standard Brownian paths on a uniform grid.

    `values` has shape (n_paths, n_steps + 1), row i holding path
    first_index + i sampled at times j * dt, starting at 0.  The array is
    marked read-only; treat batches as immutable.
    """

    t: float
    n_steps: int
    n_paths: int
    seed: int
    first_index: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.n_paths, self.n_steps + 1):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"({self.n_paths}, {self.n_steps + 1})"
            )
        self.values.setflags(write=False)

    @property
    def dt(self) -> float:
        return self.t / self.n_steps


def _generate_values(seed: int, first_index: int, n_paths: int, n_steps: int, t: float) -> np.ndarray:
    values = np.empty((n_paths, n_steps + 1), dtype=np.float64)
    values[:, 0] = 0.0
    body = values[:, 1:]
    for i in range(n_paths):
        gen = np.random.Generator(np.random.Philox(key=[seed, first_index + i]))
        gen.standard_normal(out=body[i])
    body *= math.sqrt(t / n_steps)
    np.cumsum(body, axis=1, out=body)
    return values


def sample_paths(seed: int, n_paths: int, n_steps: int, t: float) -> PathBatch:
    """Materialize one batch of paths; refuses batches above the memory cap."""
    seed = _check_seed(seed)
    n_paths = _check_count(n_paths, "n_paths")
    n_steps = _check_count(n_steps, "n_steps")
    t = _check_positive(t, "t")
    if n_paths * (n_steps + 1) > MAX_BATCH_ELEMENTS:
        raise CapacityError(
            f"batch of {n_paths} x {n_steps + 1} nodes exceeds the "
            f"{MAX_BATCH_ELEMENTS}-element cap; stream with iter_path_blocks "
            "or use log_exp_moment, which streams internally"
        )
    return PathBatch(
        t=t,
        n_steps=n_steps,
        n_paths=n_paths,
        seed=seed,
        first_index=0,
        values=_generate_values(seed, 0, n_paths, n_steps, t),
    )


def iter_path_blocks(
    seed: int,
    n_paths: int,
    n_steps: int,
    t: float,
    block_size: int = DEFAULT_BLOCK,
) -> Iterator[PathBatch]:
    """Yield the same paths as one giant batch, in blocks of block_size.

    Block boundaries do not affect path contents (per-path streams).
    """
    seed = _check_seed(seed)
    n_paths = _check_count(n_paths, "n_paths")
    n_steps = _check_count(n_steps, "n_steps")
    t = _check_positive(t, "t")
    block_size = _check_count(block_size, "block_size")
    if block_size * (n_steps + 1) > MAX_BATCH_ELEMENTS:
        raise CapacityError(
            f"block of {block_size} x {n_steps + 1} nodes exceeds the "
            f"{MAX_BATCH_ELEMENTS}-element cap; lower block_size"
        )
    for start in range(0, n_paths, block_size):
        nb = min(block_size, n_paths - start)
        yield PathBatch(
            t=t,
            n_steps=n_steps,
            n_paths=nb,
            seed=seed,
            first_index=start,
            values=_generate_values(seed, start, nb, n_steps, t),
        )


def _band_occupation(values: np.ndarray, dt: float, lo: float, hi: float) -> np.ndarray:
    """Time each path's linear interpolant spends in [lo, hi], per path.

    For each step the chord from a to b meets the band in a fraction
    (clip of the overlap over the span); flat segments count fully iff
    the level sits in the band.  Exact for the interpolant.
    """
    a = values[:, :-1]
    b = values[:, 1:]
    smin = np.minimum(a, b)
    smax = np.maximum(a, b)
    span = smax - smin
    np.minimum(smax, hi, out=smax)
    np.maximum(smin, lo, out=smin)
    overlap = np.subtract(smax, smin, out=smax)
    np.clip(overlap, 0.0, None, out=overlap)
    flat = span == 0.0
    span[flat] = 1.0
    np.divide(overlap, span, out=overlap)
    np.clip(overlap, 0.0, 1.0, out=overlap)
    if flat.any():
        overlap[flat & (a >= lo) & (a <= hi)] = 1.0
    occ = overlap.sum(axis=1)
    occ *= dt
    return occ


class LocalTimeEstimate(NamedTuple):
    value: float
    level: float
    bandwidth: float


def local_time_kernel(path: np.ndarray, level: float, eta: float, dt: float) -> LocalTimeEstimate:
    """Kernel estimate of the local time of one path at a level:
    time within distance eta of the level, divided by 2 eta."""
    path = np.asarray(path, dtype=np.float64)
    if path.ndim != 1 or path.size < 2:
        raise ValueError(f"path must be a 1-D array of >= 2 nodes, got shape {path.shape}")
    level = float(level)
    if not math.isfinite(level):
        raise ValueError(f"level must be finite, got {level}")
    eta = _check_positive(eta, "eta")
    dt = _check_positive(dt, "dt")
    occ = _band_occupation(path[np.newaxis, :], dt, level - eta, level + eta)
    return LocalTimeEstimate(value=float(occ[0]) / (2.0 * eta), level=level, bandwidth=eta)


def weighted_local_times(
    batch: PathBatch,
    measure: WeightedMeasure,
    eps: float,
    x: float,
    eta: float | None = None,
) -> np.ndarray:
    """Weighted local time of x + eps * W over [0, t] for each path in the batch.

    Atoms use the kernel estimator at level (location - x)/eps scaled by
    mass / eps; density pieces use the exact interpolant occupation of
    their eps-rescaled interval times the density value.  Bands that the
    whole block provably never enters contribute exactly 0 and are skipped.
    """
    eps = _check_positive(eps, "eps")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"start x must be finite, got {x}")
    if eta is None:
        eta = default_bandwidth(batch.t, batch.n_steps)
    else:
        eta = _check_positive(eta, "eta")
    total = np.zeros(batch.n_paths, dtype=np.float64)
    if measure.is_zero:
        return total
    values = batch.values
    dt = batch.dt
    wmin = values.min()
    wmax = values.max()
    for atom in measure.atoms:
        level = (atom.location - x) / eps
        lo, hi = level - eta, level + eta
        if hi < wmin or lo > wmax:
            continue
        occ = _band_occupation(values, dt, lo, hi)
        occ *= atom.mass / (2.0 * eta * eps)
        total += occ
    for piece in measure.density:
        lo = (piece.lo - x) / eps
        hi = (piece.hi - x) / eps
        if hi < wmin or lo > wmax:
            continue
        occ = _band_occupation(values, dt, lo, hi)
        occ *= piece.value
        total += occ
    return total


def weighted_local_time_samples(
    measure: WeightedMeasure,
    eps: float,
    t: float,
    x: float,
    n_paths: int,
    n_steps: int,
    seed: int,
    eta: float | None = None,
    block_size: int = DEFAULT_BLOCK,
) -> np.ndarray:
    """Weighted local times of n_paths independent paths, streamed in blocks."""
    out = np.empty(_check_count(n_paths, "n_paths"), dtype=np.float64)
    for batch in iter_path_blocks(seed, n_paths, n_steps, t, block_size):
        lo = batch.first_index
        out[lo : lo + batch.n_paths] = weighted_local_times(batch, measure, eps, x, eta)
    return out


def exact_local_time(seed: int, n_samples: int, t: float) -> np.ndarray:
    """Exact draws of the level-0 Brownian local time at time t.

    Distributionally equal to |W_t| = sqrt(t) |Z|; drawn from a reserved
    stream so the samples never collide with path streams of the same seed.
    """
    seed = _check_seed(seed)
    n_samples = _check_count(n_samples, "n_samples")
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"t must be finite and >= 0, got {t}")
    gen = np.random.Generator(np.random.Philox(key=[seed, _EXACT_STREAM]))
    return math.sqrt(t) * np.abs(gen.standard_normal(n_samples))


def abs_brownian_log_mgf(lam: float, t: float) -> float:
    """log E e^(lam |W_t|) = lam^2 t / 2 + log(2 Phi(lam sqrt(t)))."""
    lam = float(lam)
    t = float(t)
    if not math.isfinite(lam):
        raise ValueError(f"lam must be finite, got {lam}")
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"t must be finite and >= 0, got {t}")
    z = lam * math.sqrt(t)
    # 2 Phi(z) = erfc(-z/sqrt(2)); erfc stays accurate for z < 0
    return 0.5 * lam * lam * t + math.log(math.erfc(-z / math.sqrt(2.0)))


def pairwise_sum(values) -> float:
    """Sum by a fixed pairwise tree over the full vector.

    Accuracy close to fsum and, unlike accumulation order left to the
    backend, a pure function of the array contents, so results are
    reproducible across block sizes and worker counts.
    """
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        return 0.0
    arr = arr.copy()
    while arr.size > 1:
        m = arr.size // 2
        tail = arr[2 * m :]
        arr = arr[0 : 2 * m : 2] + arr[1 : 2 * m : 2]
        if tail.size:
            arr = np.concatenate([arr, tail])
    return float(arr[0])


class LogExpMoment(NamedTuple):
    estimate: float
    std_error: float


def log_mean_exp(values) -> LogExpMoment:
    """log of the sample mean of e^(values), with a delta-method std error.

    Shifts by the max before exponentiating; se(log m) = sd(w)/(mean(w) sqrt n)
    is shift-invariant.
    """
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("log_mean_exp needs at least one sample")
    if not np.isfinite(arr).all():
        raise ValueError("log_mean_exp got non-finite samples")
    m = float(arr.max())
    w = np.exp(arr - m)
    n = arr.size
    mean = pairwise_sum(w) / n
    estimate = m + math.log(mean)
    if n == 1:
        return LogExpMoment(estimate=estimate, std_error=math.nan)
    var = pairwise_sum((w - mean) ** 2) / (n - 1)
    std_error = math.sqrt(var / n) / mean
    return LogExpMoment(estimate=estimate, std_error=std_error)


def log_exp_moment(
    measure: WeightedMeasure,
    eps: float,
    t: float,
    x: float,
    n_paths: int,
    n_steps: int,
    seed: int,
    eta: float | None = None,
    block_size: int = DEFAULT_BLOCK,
) -> LogExpMoment:
    """Monte Carlo estimate of log E_x e^(weighted local time of x + eps W).

    Streams paths in blocks; the estimate and its standard error are
    bit-reproducible for fixed (seed, n_paths, n_steps) regardless of
    block_size.
    """
    samples = weighted_local_time_samples(
        measure, eps, t, x, n_paths, n_steps, seed, eta, block_size
    )
    return log_mean_exp(samples)
