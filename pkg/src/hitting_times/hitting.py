"""Hitting times of a threshold and their Monte Carlo distributions.

Indices are 1-based throughout: a first hitting time of 1 means the very
first observation exceeds.  Exceedance is strict, ``X > u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numba
import numpy as np
from numba import njit, prange

from .processes import (
    INTERARRIVAL_SUBSTREAM,
    InterArrivalSpec,
    ProcessSpec,
    SamplePath,
    pareto_from_uniform,
    process_init,
    process_step,
)
from .rng import BUFFER_DRAWS, new_cursor, next_uniform, split_seed

# paths per batch handed to the compiled kernels; bounds peak memory
CHUNK_PATHS = 1 << 20

OVERFLOW_WARN = 1e-3
OVERFLOW_FLAG = 1e-2


@dataclass(frozen=True)
class ThresholdSpec:
    """Threshold given either as a quantile level rho or as an absolute value."""

    mode: str
    value: float

    def __post_init__(self):
        if self.mode not in ("quantile", "absolute"):
            raise ValueError(f"unknown threshold mode {self.mode!r}")
        if self.mode == "quantile" and not 0.0 < self.value < 1.0:
            raise ValueError(f"quantile level rho must lie in (0, 1), got {self.value}")

    @classmethod
    def quantile(cls, rho: float) -> "ThresholdSpec":
        return cls("quantile", float(rho))

    @classmethod
    def absolute(cls, u: float) -> "ThresholdSpec":
        return cls("absolute", float(u))

    def resolve(self, spec: Optional[ProcessSpec] = None, data=None) -> float:
        """Numeric threshold: exact marginal quantile for a model, order statistic for data."""
        if self.mode == "absolute":
            return self.value
        if spec is not None:
            return spec.quantile(self.value)
        if data is not None:
            from .estimators import empirical_quantile

            return empirical_quantile(data, 1.0 - self.value)
        raise ValueError("a quantile threshold needs a process spec or data to resolve against")


@dataclass(frozen=True)
class HittingRecord:
    exceedance_indices: tuple

    @property
    def first(self) -> Optional[int]:
        return self.exceedance_indices[0] if self.exceedance_indices else None

    @property
    def second(self) -> Optional[int]:
        return self.exceedance_indices[1] if len(self.exceedance_indices) > 1 else None

    @property
    def inter_gaps(self) -> list:
        idx = self.exceedance_indices
        return [b - a for a, b in zip(idx, idx[1:])]

    def __len__(self) -> int:
        return len(self.exceedance_indices)


def _values(path) -> np.ndarray:
    if isinstance(path, SamplePath):
        return path.values
    return np.asarray(path, dtype=np.float64)


def exceedance_indices(path, u: float) -> np.ndarray:
    """All 1-based indices i with X_i > u."""
    return np.flatnonzero(_values(path) > u) + 1


def hitting_times(path, u: float, k: int = 1) -> HittingRecord:
    """First ``k`` exceedance indices of ``u`` (fewer if the path has fewer)."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    idx = exceedance_indices(path, u)[:k]
    return HittingRecord(tuple(int(i) for i in idx))


def inter_exceedance_gaps(path, u: float) -> np.ndarray:
    """Gaps between consecutive exceedances; a gap of 1 means adjacent exceedances."""
    return np.diff(exceedance_indices(path, u))


def timed_first_hitting(path: SamplePath, u: float, horizon: float) -> Optional[int]:
    """First hitting index ``h`` if its arrival time S_h is within ``horizon``.

    ``S_h`` is the sum of the first ``h - 1`` inter-arrival times, so a hit at
    index 1 always counts.  Returns None for no hit or a hit after the horizon.
    """
    if path.interarrivals is None:
        raise ValueError("timed hitting needs a path with interarrival times")
    first = hitting_times(path, u, 1).first
    if first is None:
        return None
    if math.fsum(path.interarrivals[: first - 1]) <= horizon:
        return first
    return None


def max_survival(values: np.ndarray, u: float) -> np.ndarray:
    """Fraction of rows with running maximum M_j <= u, for j = 0..n (M_0 = -inf)."""
    values = np.atleast_2d(values)
    below = np.logical_and.accumulate(values <= u, axis=1)
    out = np.empty(values.shape[1] + 1)
    out[0] = 1.0
    out[1:] = below.sum(axis=0) / values.shape[0]
    return out


# -- empirical distributions --------------------------------------------------


@dataclass
class EmpiricalPmf:
    """Monte Carlo pmf on 1..j_max with an overflow bucket.

    ``counts[j - 1]`` is the number of paths with statistic ``j``;
    ``overflow`` counts paths whose statistic was not observed within the
    simulated length (or, for timed hitting, fell after the horizon).
    """

    counts: np.ndarray
    overflow: int
    paths: int
    threshold: float = float("nan")
    label: str = "first"

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if int(self.counts.sum()) + int(self.overflow) != self.paths:
            raise ValueError("counts and overflow must add up to the number of paths")

    @property
    def j_max(self) -> int:
        return self.counts.size

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.j_max + 1)

    @property
    def prob(self) -> np.ndarray:
        return self.counts / self.paths

    @property
    def stderr(self) -> np.ndarray:
        p = self.prob
        return np.sqrt(p * (1.0 - p) / self.paths)

    @property
    def overflow_prob(self) -> float:
        return self.overflow / self.paths

    @property
    def overflow_flagged(self) -> bool:
        return self.overflow_prob > OVERFLOW_FLAG

    def pmf(self, j: int) -> float:
        return float(self.prob[j - 1]) if 1 <= j <= self.j_max else 0.0

    def se(self, j: int) -> float:
        return float(self.stderr[j - 1]) if 1 <= j <= self.j_max else 0.0

    def mean(self) -> float:
        """Mean over paths with an observed statistic."""
        n = self.paths - self.overflow
        return float(np.dot(self.support, self.counts) / n) if n else float("nan")

    def truncated_mean(self, j0: int) -> float:
        """Sample version of sum_{j > j0} j P{T = j} (divides by all paths)."""
        s = self.support
        return float(np.dot(s[j0:], self.counts[j0:]) / self.paths)

    def z_scores(self, model: np.ndarray) -> np.ndarray:
        """(empirical - model) / stderr per bucket; inf where stderr is 0 and values differ."""
        model = np.asarray(model, dtype=np.float64)
        diff = self.prob[: model.size] - model
        se = self.stderr[: model.size]
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))
        return z


    def model_z_scores(self, model: np.ndarray) -> np.ndarray:
        """(empirical - model) over the model-implied binomial stderr; finite whenever 0 < model < 1."""
        model = np.asarray(model, dtype=np.float64)
        se = np.sqrt(model * (1.0 - model) / self.paths)
        return (self.prob[: model.size] - model) / se


@dataclass
class JointPmf:
    """Per-path pairs (first hit j, gap m to the second hit); 0 marks unobserved."""

    first: np.ndarray
    gap: np.ndarray
    paths: int
    threshold: float = float("nan")

    @property
    def observed(self) -> np.ndarray:
        return (self.first > 0) & (self.gap > 0)

    def prob(self, j: int, m: int) -> float:
        return float(np.count_nonzero((self.first == j) & (self.gap == m)) / self.paths)

    def matrix(self, j_max: int, m_max: int) -> np.ndarray:
        """Dense matrix of P{first = j, gap = m} for 1 <= j <= j_max, 1 <= m <= m_max."""
        keep = self.observed & (self.first <= j_max) & (self.gap <= m_max)
        out = np.zeros((j_max, m_max))
        np.add.at(out, (self.first[keep] - 1, self.gap[keep] - 1), 1.0)
        return out / self.paths

    def cells(self, j_max: int, m_max: int):
        """Sparse form of ``matrix``: unique (j, m) pairs and their probabilities."""
        keep = self.observed & (self.first <= j_max) & (self.gap <= m_max)
        pairs = np.stack([self.first[keep], self.gap[keep]], axis=1)
        if pairs.size == 0:
            return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
        uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        return uniq, counts / self.paths

    def gap_pmf(self, m_max: int) -> EmpiricalPmf:
        keep = self.observed & (self.gap <= m_max)
        counts = np.bincount(self.gap[keep], minlength=m_max + 1)[1:]
        return EmpiricalPmf(counts, self.paths - int(keep.sum()), self.paths, self.threshold, "gap")


@dataclass(frozen=True)
class Timed:
    """Timed first hitting statistic with horizon T and Pareto inter-arrivals."""

    horizon: float
    interarrivals: InterArrivalSpec


Statistic = Union[str, Timed]
STATISTICS = ("first", "second", "joint_first_gap")


# -- compiled Monte Carlo kernels ---------------------------------------------


@njit(cache=True)
def _path_hits(kind, params, u, path_len, k, burn_in, key0, key1, path, row):
    buf = np.empty(BUFFER_DRAWS)
    cur = new_cursor(0)
    state = np.zeros(1)
    ring = np.zeros(params.shape[0])
    process_init(kind, params, state, ring, buf, cur, key0, key1, path)
    t = 0
    for _ in range(burn_in):
        t += 1
        process_step(kind, params, state, ring, t, buf, cur, key0, key1, path)
    found = 0
    for i in range(1, path_len + 1):
        t += 1
        x = process_step(kind, params, state, ring, t, buf, cur, key0, key1, path)
        if x > u:
            row[found] = i
            found += 1
            if found == k:
                break
    for f in range(found, k):
        row[f] = 0


@njit(parallel=True, cache=True)
def _hits_kernel(kind, params, u, path_len, k, burn_in, key0, key1, first_path, out):
    for p in prange(out.shape[0]):
        _path_hits(kind, params, u, path_len, k, burn_in, key0, key1, first_path + p, out[p])


@njit(parallel=True, cache=True)
def _timed_kernel(kind, params, u, path_len, burn_in, key0, key1, first_path, horizon, alpha_tail, scale, out):
    for p in prange(out.shape[0]):
        path = first_path + p
        row = np.zeros(1, dtype=np.int64)
        _path_hits(kind, params, u, path_len, 1, burn_in, key0, key1, path, row)
        h = row[0]
        if h > 0:
            buf = np.empty(BUFFER_DRAWS)
            cur = new_cursor(0)
            s = 0.0
            for _ in range(h - 1):
                s += pareto_from_uniform(
                    next_uniform(buf, cur, key0, key1, path, INTERARRIVAL_SUBSTREAM), alpha_tail, scale
                )
                if s > horizon:
                    break
            if s > horizon:
                h = 0
        out[p] = h


def _set_threads(threads: Optional[int]) -> None:
    if threads is not None:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def mc_hits(
    spec: ProcessSpec,
    u: float,
    paths: int,
    path_len: int,
    k: int = 1,
    master_seed: int = 0,
    burn_in: int = 0,
    first_path: int = 0,
    threads: Optional[int] = None,
) -> np.ndarray:
    """First ``k`` hitting indices for paths ``first_path .. first_path + paths - 1``.

    Returns an int64 array of shape ``(paths, k)``; 0 marks "not observed
    within ``path_len``".  Row ``i`` equals ``hitting_times(simulate(spec,
    path_len, RngStream(master_seed, first_path + i)), u, k)``.
    """
    if paths < 0 or path_len < 1 or k < 1:
        raise ValueError("need paths >= 0, path_len >= 1 and k >= 1")
    _set_threads(threads)
    key0, key1 = split_seed(master_seed)
    out = np.zeros((paths, k), dtype=np.int64)
    _hits_kernel(spec.kind, spec.kernel_params(), float(u), int(path_len), int(k), int(burn_in),
                 key0, key1, int(first_path), out)
    return out


def mc_timed_hits(
    spec: ProcessSpec,
    u: float,
    paths: int,
    path_len: int,
    timed: Timed,
    master_seed: int = 0,
    burn_in: int = 0,
    first_path: int = 0,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Timed first hitting index per path, 0 for none (no hit or hit after the horizon)."""
    _set_threads(threads)
    key0, key1 = split_seed(master_seed)
    out = np.zeros(paths, dtype=np.int64)
    ia = timed.interarrivals
    _timed_kernel(spec.kind, spec.kernel_params(), float(u), int(path_len), int(burn_in), key0, key1,
                  int(first_path), float(timed.horizon), float(ia.alpha_tail), float(ia.scale), out)
    return out


def default_path_len(theta: float, rho: float) -> int:
    """ceil(50 / (theta rho)); the overflow mass is then about exp(-50)."""
    return int(math.ceil(50.0 / (theta * rho)))


def mc_pmf(
    spec: ProcessSpec,
    threshold: ThresholdSpec,
    paths: int,
    path_len: Optional[int] = None,
    statistic: Statistic = "first",
    master_seed: int = 0,
    burn_in: int = 0,
    threads: Optional[int] = None,
    chunk: int = CHUNK_PATHS,
):
    """Monte Carlo distribution of a hitting statistic.

    Parameters
    ----------
    spec : ProcessSpec
        Process model.
    threshold : ThresholdSpec
        Quantile thresholds resolve to the exact marginal quantile of ``spec``.
    paths : int
        Number of independent paths; path ``i`` uses stream ``(master_seed, i)``.
    path_len : int, optional
        Simulated length per path; defaults to ``default_path_len``.
    statistic : {"first", "second", "joint_first_gap"} or Timed
        Which hitting statistic to tabulate.
    chunk : int
        Paths per kernel call.  Counts are summed over chunks, so the result
        does not depend on it.

    Returns
    -------
    EmpiricalPmf, or JointPmf for ``"joint_first_gap"``.
    """
    if paths < 1:
        raise ValueError("paths must be at least 1")
    u = threshold.resolve(spec)
    if path_len is None:
        rho = threshold.value if threshold.mode == "quantile" else None
        if rho is None:
            raise ValueError("path_len is required with an absolute threshold")
        path_len = default_path_len(spec.theta, rho)

    if statistic == "joint_first_gap":
        hits = mc_hits(spec, u, paths, path_len, 2, master_seed, burn_in, 0, threads)
        first = hits[:, 0]
        gap = np.where(hits[:, 1] > 0, hits[:, 1] - hits[:, 0], 0)
        return JointPmf(first, gap, paths, u)

    if isinstance(statistic, Timed):
        label = "timed"
    elif statistic in ("first", "second"):
        label = statistic
    else:
        raise ValueError(f"unknown statistic {statistic!r}")

    counts = np.zeros(path_len + 1, dtype=np.int64)
    for start in range(0, paths, chunk):
        size = min(chunk, paths - start)
        if isinstance(statistic, Timed):
            h = mc_timed_hits(spec, u, size, path_len, statistic, master_seed, burn_in, start, threads)
        else:
            k = 1 if statistic == "first" else 2
            h = mc_hits(spec, u, size, path_len, k, master_seed, burn_in, start, threads)[:, k - 1]
        counts += np.bincount(h, minlength=path_len + 1)
    return EmpiricalPmf(counts[1:], int(counts[0]), paths, u, label)


__all__ = [
    "EmpiricalPmf",
    "HittingRecord",
    "JointPmf",
    "STATISTICS",
    "ThresholdSpec",
    "Timed",
    "default_path_len",
    "exceedance_indices",
    "hitting_times",
    "inter_exceedance_gaps",
    "max_survival",
    "mc_hits",
    "mc_pmf",
    "mc_timed_hits",
    "timed_first_hitting",
]
