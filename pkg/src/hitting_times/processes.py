"""Stationary process models and heavy-tailed inter-arrival times.

Four models are available, each started in its stationary law so no burn-in
is needed:

* ``IidFrechet``: iid standard Frechet, F(x) = exp(-1/x).
* ``ARMAX``: X_t = max(alpha X_{t-1}, (1 - alpha) Z_t) with X_0 = Z_0.
* ``MovingMax``: X_t = max_i w_i Z_{t-i} over a window of m + 1 weights.
* ``AR1Uniform``: X_j = X_{j-1} / r + eps_j, eps_j uniform on {0, 1/r, ...}.

The compiled step functions here are shared by ``simulate`` and by the Monte
Carlo kernels in :mod:`hitting_times.hitting`, so a path drawn one at a time
is identical to the same path inside a batch run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .rng import BUFFER_DRAWS, RngStream, new_cursor, next_uniform

KIND_IID = 0
KIND_ARMAX = 1
KIND_MM = 2
KIND_AR1 = 3

# substream carrying the inter-arrival times of a path
INTERARRIVAL_SUBSTREAM = 1


class ProcessSpec:
    """Base class of the process models; subclasses are frozen dataclasses."""

    kind: int
    marginal: str  # "frechet" or "uniform"

    @property
    def theta(self) -> float:
        raise NotImplementedError

    def kernel_params(self) -> np.ndarray:
        raise NotImplementedError

    def quantile(self, rho: float) -> float:
        """The (1 - rho)-quantile of the stationary marginal."""
        if self.marginal == "uniform":
            if not 0.0 < rho < 1.0:
                raise ValueError(f"rho must lie in (0, 1), got {rho}")
            return 1.0 - rho
        return frechet_quantile(rho)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class IidFrechet(ProcessSpec):
    kind = KIND_IID
    marginal = "frechet"

    @property
    def theta(self) -> float:
        return 1.0

    def kernel_params(self) -> np.ndarray:
        return np.zeros(1)

    def to_dict(self) -> dict:
        return {"model": "iid"}


@dataclass(frozen=True)
class ARMAX(ProcessSpec):
    alpha: float
    kind = KIND_ARMAX
    marginal = "frechet"

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"ARMAX alpha must lie in [0, 1), got {self.alpha}")

    @property
    def theta(self) -> float:
        return 1.0 - self.alpha

    def kernel_params(self) -> np.ndarray:
        return np.array([self.alpha], dtype=np.float64)

    def to_dict(self) -> dict:
        return {"model": "armax", "alpha": self.alpha}


@dataclass(frozen=True)
class MovingMax(ProcessSpec):
    """Moving maxima with weights ``w_0 >= w_1 >= ... >= w_m`` summing to 1."""

    weights: tuple = field()
    kind = KIND_MM
    marginal = "frechet"

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise ValueError("MovingMax needs at least one weight")
        if any(x < 0 for x in w):
            raise ValueError("MovingMax weights must be nonnegative")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"MovingMax weights must sum to 1, got {math.fsum(w)!r}")
        if any(a < b for a, b in zip(w, w[1:])):
            raise ValueError("MovingMax weights must be sorted non-increasing")

    @property
    def theta(self) -> float:
        return self.weights[0]

    @property
    def order(self) -> int:
        return len(self.weights) - 1

    def kernel_params(self) -> np.ndarray:
        return np.array(self.weights, dtype=np.float64)

    def to_dict(self) -> dict:
        return {"model": "mm", "weights": list(self.weights)}


@dataclass(frozen=True)
class AR1Uniform(ProcessSpec):
    r: int
    kind = KIND_AR1
    marginal = "uniform"

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 2:
            raise ValueError(f"AR(1) r must be an integer >= 2, got {self.r}")

    @property
    def theta(self) -> float:
        return 1.0 - 1.0 / self.r

    def kernel_params(self) -> np.ndarray:
        return np.array([float(self.r)], dtype=np.float64)

    def to_dict(self) -> dict:
        return {"model": "ar1", "r": int(self.r)}


def process_from_dict(d: dict) -> ProcessSpec:
    model = d["model"]
    if model == "iid":
        return IidFrechet()
    if model == "armax":
        return ARMAX(float(d["alpha"]))
    if model == "mm":
        return MovingMax(tuple(d["weights"]))
    if model == "ar1":
        return AR1Uniform(int(d["r"]))
    raise ValueError(f"unknown process model {model!r}")


@dataclass(frozen=True)
class InterArrivalSpec:
    """Pareto inter-arrival law, P{Y > t} = (t / scale)**(-alpha_tail) for t >= scale."""

    alpha_tail: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.alpha_tail > 0:
            raise ValueError(f"alpha_tail must be positive, got {self.alpha_tail}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def survival(self, t: float) -> float:
        if t < self.scale:
            return 1.0
        return (t / self.scale) ** (-self.alpha_tail)


@dataclass
class SamplePath:
    values: np.ndarray
    interarrivals: Optional[np.ndarray] = None
    seed_id: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("a sample path needs at least one value")
        if self.interarrivals is not None:
            self.interarrivals = np.asarray(self.interarrivals, dtype=np.float64)
            if self.interarrivals.shape != (self.values.size - 1,):
                raise ValueError("interarrivals must have length len(values) - 1")
            if np.any(self.interarrivals <= 0):
                raise ValueError("interarrivals must be positive")

    def __len__(self) -> int:
        return self.values.size

    def arrival_times(self) -> np.ndarray:
        """S_j for j = 1..n: cumulative inter-arrival sums with S_1 = 0."""
        if self.interarrivals is None:
            raise ValueError("path has no interarrival times")
        out = np.zeros(self.values.size)
        np.cumsum(self.interarrivals, out=out[1:])
        return out


# -- scalar transforms --------------------------------------------------------


@njit(cache=True)
def frechet_from_uniform(u):
    return -1.0 / math.log(u)


@njit(cache=True)
def pareto_from_uniform(u, alpha_tail, scale):
    return scale * u ** (-1.0 / alpha_tail)


def frechet_sample(stream: RngStream) -> float:
    """One standard Frechet draw by inversion, X = -1/ln(U)."""
    return float(frechet_from_uniform(stream.uniform()))


def frechet_quantile(rho: float) -> float:
    """x_rho with P{X <= x_rho} = 1 - rho for the standard Frechet law."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return -1.0 / math.log1p(-rho)


def pareto_interarrivals(spec: InterArrivalSpec, count: int, stream: RngStream) -> np.ndarray:
    if count < 0:
        raise ValueError("count must be nonnegative")
    u = stream.uniforms(count)
    return spec.scale * u ** (-1.0 / spec.alpha_tail)


# -- compiled process stepping ------------------------------------------------
#
# state[0] holds X_{t-1} (ARMAX, AR(1)); ring holds the last m + 1 Frechet
# innovations of a moving maxima process, indexed by t mod (m + 1).


@njit(cache=True)
def process_init(kind, params, state, ring, buf, cur, key0, key1, path):
    if kind == KIND_ARMAX:
        state[0] = frechet_from_uniform(next_uniform(buf, cur, key0, key1, path, 0))
    elif kind == KIND_MM:
        size = params.shape[0]
        for t in range(1 - (size - 1), 1):
            ring[t % size] = frechet_from_uniform(next_uniform(buf, cur, key0, key1, path, 0))
    elif kind == KIND_AR1:
        state[0] = next_uniform(buf, cur, key0, key1, path, 0)


@njit(cache=True)
def process_step(kind, params, state, ring, t, buf, cur, key0, key1, path):
    """Advance to time ``t`` (1-based) and return X_t."""
    u = next_uniform(buf, cur, key0, key1, path, 0)
    if kind == KIND_IID:
        return frechet_from_uniform(u)
    if kind == KIND_ARMAX:
        a = params[0]
        z = (1.0 - a) * frechet_from_uniform(u)
        x = a * state[0]
        if z > x:
            x = z
        state[0] = x
        return x
    if kind == KIND_MM:
        size = params.shape[0]
        ring[t % size] = frechet_from_uniform(u)
        x = 0.0
        for i in range(size):
            v = params[i] * ring[(t - i) % size]
            if v > x:
                x = v
        return x
    # AR(1) with innovation k / r, k uniform on 0..r-1
    r = params[0]
    k = np.floor(u * r)
    if k > r - 1.0:
        k = r - 1.0
    x = (state[0] + k) / r
    if x >= 1.0:
        x = np.nextafter(1.0, 0.0)
    state[0] = x
    return x


@njit(cache=True)
def _simulate_values(kind, params, n, burn_in, buf, cur, key0, key1, path):
    out = np.empty(n, dtype=np.float64)
    state = np.zeros(1)
    ring = np.zeros(params.shape[0])
    process_init(kind, params, state, ring, buf, cur, key0, key1, path)
    t = 0
    for _ in range(burn_in):
        t += 1
        process_step(kind, params, state, ring, t, buf, cur, key0, key1, path)
    for i in range(n):
        t += 1
        out[i] = process_step(kind, params, state, ring, t, buf, cur, key0, key1, path)
    return out


def simulate(
    spec: ProcessSpec,
    n: int,
    stream: RngStream,
    burn_in: int = 0,
    interarrivals: Optional[InterArrivalSpec] = None,
) -> SamplePath:
    """Draw ``n`` consecutive values of ``spec`` from ``stream``.

    Parameters
    ----------
    spec : ProcessSpec
        Process model.
    n : int
        Path length, at least 1.
    stream : RngStream
        Source of randomness; it is advanced by the draws used.
    burn_in : int
        Steps generated and discarded before the first returned value.
    interarrivals : InterArrivalSpec, optional
        When given, ``n - 1`` inter-arrival times are drawn from the
        inter-arrival substream of the same path.

    Returns
    -------
    SamplePath
    """
    if n < 1:
        raise ValueError(f"path length must be positive, got {n}")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    buf, cur = stream.cursor()
    values = _simulate_values(
        spec.kind, spec.kernel_params(), int(n), int(burn_in), buf, cur,
        stream.key[0], stream.key[1], stream.path_index,
    )
    stream.position = int(cur[2])
    ys = None
    if interarrivals is not None:
        ys = pareto_interarrivals(interarrivals, n - 1, stream.sibling(INTERARRIVAL_SUBSTREAM))
    return SamplePath(values, ys, seed_id=stream.path_index)


def simulate_many(
    spec: ProcessSpec, n: int, paths: int, master_seed: int, burn_in: int = 0
) -> np.ndarray:
    """Matrix of ``paths`` independent paths (rows), path ``i`` on stream ``i``."""
    out = np.empty((paths, n))
    for i in range(paths):
        out[i] = simulate(spec, n, RngStream(master_seed, i), burn_in).values
    return out


__all__ = [
    "ARMAX",
    "AR1Uniform",
    "BUFFER_DRAWS",
    "IidFrechet",
    "InterArrivalSpec",
    "MovingMax",
    "ProcessSpec",
    "SamplePath",
    "frechet_quantile",
    "frechet_sample",
    "new_cursor",
    "pareto_interarrivals",
    "process_from_dict",
    "simulate",
    "simulate_many",
]
