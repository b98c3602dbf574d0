"""Data-driven quantities: order-statistic quantiles, the intervals estimator
of the extremal index, and the non-centred sample ACF for heavy tails."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .hitting import inter_exceedance_gaps


class InsufficientDataError(ValueError):
    pass


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class ThetaEstimate:
    theta_hat: float
    n_exceedances: int
    method: str = "intervals"
    used_variant: str = "basic"
    threshold_u: float = float("nan")
    raw: float = float("nan")


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    values: np.ndarray


def empirical_quantile(data: Sequence[float], level: float) -> float:
    """Order statistic X_(k) with k = ceil(level * n), no interpolation.

    ``level`` is read as its shortest decimal form (0.07 means 7/100) and the
    product with ``n`` is exact, so the index does not depend on rounding.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empirical_quantile of empty data")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    k = math.ceil(Fraction(repr(float(level))) * x.size)
    k = min(max(k, 1), x.size)
    return float(np.partition(x, k - 1)[k - 1])


def intervals_estimator(gaps: Sequence[int], threshold_u: float = float("nan")) -> ThetaEstimate:
    """Intervals estimator of the extremal index from inter-exceedance gaps.

    With N gaps T_i the basic statistic 2 (sum T)^2 / (N sum T^2) is used when
    every gap is at most 2, otherwise the bias-reduced form
    2 (sum (T - 1))^2 / (N sum (T - 1)(T - 2)).  The result is capped at 1.
    """
    t = np.asarray(gaps, dtype=np.int64)
    n = t.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 inter-exceedance gaps, got {n}")
    if np.any(t < 1):
        raise ValueError("gaps must be positive integers")
    # sums of integers are exact; convert to float at the end
    if int(t.max()) <= 2:
        num = int(t.sum()) ** 2
        den = int((t * t).sum())
        variant = "basic"
    else:
        t1 = t - 1
        num = int(t1.sum()) ** 2
        den = int((t1 * (t - 2)).sum())
        variant = "shifted"
    if den == 0:
        raise DegenerateDataError("intervals estimator denominator is zero")
    raw = 2.0 * num / (n * den)
    return ThetaEstimate(
        theta_hat=min(1.0, raw),
        n_exceedances=n + 1,
        used_variant=variant,
        threshold_u=threshold_u,
        raw=raw,
    )


def estimate_theta(data: Sequence[float], rho: float) -> ThetaEstimate:
    """Intervals estimate at the empirical (1 - rho)-quantile of ``data``."""
    x = np.asarray(data, dtype=np.float64)
    u = empirical_quantile(x, 1.0 - rho)
    return intervals_estimator(inter_exceedance_gaps(x, u), threshold_u=u)


def heavy_acf(data: Sequence[float], max_lag: int) -> AcfResult:
    """sum_{t=1}^{n-j} X_t X_{t+j} / sum_{t=1}^n X_t^2 for j = 0..max_lag.

    No mean is subtracted.
    """
    x = np.asarray(data, dtype=np.float64)
    n = x.size
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must lie in [0, {n - 1}], got {max_lag}")
    den = float(np.dot(x, x))
    if den == 0.0:
        raise DegenerateDataError("heavy_acf of all-zero data")
    lags = np.arange(max_lag + 1)
    values = np.empty(max_lag + 1)
    values[0] = 1.0
    for j in range(1, max_lag + 1):
        values[j] = float(np.dot(x[: n - j], x[j:])) / den
    return AcfResult(lags, values)


__all__ = [
    "AcfResult",
    "DegenerateDataError",
    "InsufficientDataError",
    "ThetaEstimate",
    "empirical_quantile",
    "estimate_theta",
    "heavy_acf",
    "intervals_estimator",
]
