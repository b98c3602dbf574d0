"""Closed-form hitting-time models.

Everything is written in terms of ``s = (1 - rho)**theta``, evaluated as
``exp(theta * log1p(-rho))``, and ``1 - s`` as ``-expm1(theta * log1p(-rho))``
so the small-rho regime (rho ~ tau / n) keeps full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class TheoryParams:
    """Parameters shared by the closed-form models.

    ``tau`` defaults to ``rho * n`` when ``n`` is given.  ``horizon`` and
    ``alpha_tail`` only matter for the timed model.
    """

    theta: float
    rho: float
    n: Optional[int] = None
    j0: int = 0
    alpha_tail: float = 1.0
    horizon: float = math.inf
    tau: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.j0 < 0 or int(self.j0) != self.j0:
            raise ValueError(f"j0 must be a nonnegative integer, got {self.j0}")
        if not self.alpha_tail > 0:
            raise ValueError(f"alpha_tail must be positive, got {self.alpha_tail}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be positive")
        if self.tau is None and self.n is not None:
            object.__setattr__(self, "tau", self.rho * self.n)

    def with_(self, **changes) -> "TheoryParams":
        if "rho" in changes and "tau" not in changes and self.n is not None:
            changes["tau"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class ReparamQuantities:
    eta: float
    c: float


def _log_q(p: TheoryParams) -> float:
    return math.log1p(-p.rho)


def survival_step(p: TheoryParams) -> float:
    """s = (1 - rho)**theta."""
    return math.exp(p.theta * _log_q(p))


def one_minus_s(p: TheoryParams) -> float:
    """1 - (1 - rho)**theta without cancellation."""
    return -math.expm1(p.theta * _log_q(p))


def reparam(p: TheoryParams) -> ReparamQuantities:
    eta = one_minus_s(p)
    # 1 - (1 - eta)**(1/theta) == rho analytically; evaluate it the same stable way
    denom = -math.expm1(math.log1p(-eta) / p.theta)
    return ReparamQuantities(eta=eta, c=eta / (p.theta**2 * denom))


def _check_j(j: int) -> None:
    if j < 1:
        raise ValueError(f"j must be at least 1, got {j}")


def inter_cluster_pmf(j: int, p: TheoryParams) -> float:
    """theta^2 rho (1 - rho)^((j - 1) theta)."""
    _check_j(j)
    return p.theta**2 * p.rho * math.exp((j - 1) * p.theta * _log_q(p))


def psi_pmf(j: int, p: TheoryParams) -> float:
    """Limit model for P{T* = j}: theta^2 rho^2 (1 - rho)^(theta (j - 1)) / (1 - (1 - rho)^theta)."""
    _check_j(j)
    return p.theta**2 * p.rho**2 * math.exp(p.theta * (j - 1) * _log_q(p)) / one_minus_s(p)


def psi_total_mass(p: TheoryParams) -> float:
    """Sum of psi_pmf over j >= 1; below 1 when theta < 1."""
    return (p.theta * p.rho / one_minus_s(p)) ** 2


def limit_geometric_pmf(j: int, p: TheoryParams) -> float:
    """Geometric law with success probability theta * rho."""
    _check_j(j)
    tr = p.theta * p.rho
    return tr * math.exp((j - 1) * math.log1p(-tr))


def limit_geometric_tail(j: int, p: TheoryParams) -> float:
    """P{chi > j} for the geometric(theta rho) variable."""
    return math.exp(j * math.log1p(-p.theta * p.rho))


def lambda_n(p: TheoryParams) -> float:
    oms = one_minus_s(p)
    j0 = p.j0
    return (
        p.theta**2 * p.rho / oms**3
        * math.exp(p.theta * j0 * _log_q(p))
        * (j0 * oms + 1.0)
    )


def truncated_mean_model(p: TheoryParams) -> float:
    """Model Lambda_n * rho for sum_{j > j0} j P{T* = j}."""
    return lambda_n(p) * p.rho


def timed_pmf_model(j: int, p: TheoryParams) -> float:
    """Model for P{T*_T = j + 1}: psi_j (1 - j T^(-alpha_tail))."""
    _check_j(j)
    T, a = p.horizon, p.alpha_tail
    if not T > p.j0 ** (1.0 / a):
        raise ValueError(f"timed model requires T>j0^(1/alpha), got T={T}, j0={p.j0}, alpha={a}")
    factor = 1.0 - j * T ** (-a)
    if factor < 0.0:
        raise ValueError(f"timed model requires 1 - j T^(-alpha) >= 0, got j={j}, T={T}, alpha={a}")
    return psi_pmf(j + 1, p) * factor


def second_hitting_joint_model(j: int, m: int, p: TheoryParams) -> float:
    """Product of geometric(theta rho) masses at j and m."""
    _check_j(j)
    _check_j(m)
    return limit_geometric_pmf(j, p) * limit_geometric_pmf(m, p)


# -- ARMAX / moving maxima ----------------------------------------------------


def armax_pmf_paper(j: int, p: TheoryParams) -> float:
    """(1 - (1 - rho)^theta) (1 - rho)^(theta (j - 2) + 1), for every j >= 1.

    At j = 1 this is not P{T* = 1}; see ``armax_pmf_exact``.
    """
    _check_j(j)
    return one_minus_s(p) * math.exp((p.theta * (j - 2) + 1.0) * _log_q(p))


def armax_pmf_exact(j: int, p: TheoryParams) -> float:
    """Exact first hitting pmf of ARMAX and moving maxima at the quantile x_rho.

    P{T* = 1} = P{X_1 > x_rho} = rho; later masses follow the closed form,
    and the whole sums to rho + (1 - rho) = 1.
    """
    _check_j(j)
    if j == 1:
        return p.rho
    return armax_pmf_paper(j, p)


def armax_tail_exact(j: int, p: TheoryParams) -> float:
    """P{T* > j} for the exact pmf: (1 - rho) s^(j - 1) for j >= 1."""
    if j < 1:
        return 1.0
    return math.exp(_log_q(p) + (j - 1) * p.theta * _log_q(p))


def armax_mean_paper(p: TheoryParams) -> float:
    return math.exp((1.0 - p.theta) * _log_q(p)) / one_minus_s(p)


def armax_second_moment_paper(p: TheoryParams) -> float:
    oms = one_minus_s(p)
    return math.exp((1.0 - p.theta) * _log_q(p)) * (1.0 + survival_step(p)) / oms**2


def armax_mean_exact(p: TheoryParams) -> float:
    """rho + (1 - rho)(2 - s)/(1 - s), the mean of ``armax_pmf_exact``."""
    s = survival_step(p)
    return p.rho + (1.0 - p.rho) * (2.0 - s) / one_minus_s(p)


def armax_truncated_mean_exact(p: TheoryParams) -> float:
    """sum_{j > j0} j P{T* = j} under the exact pmf."""
    j0 = p.j0
    s, oms, q = survival_step(p), one_minus_s(p), 1.0 - p.rho
    if j0 == 0:
        return armax_mean_exact(p)
    # sum_{j >= j0 + 1} j q (1 - s) s^(j - 2) = q s^(j0 - 1) ((j0 + 1) + s / (1 - s))
    return q * math.exp((j0 - 1) * p.theta * _log_q(p)) * ((j0 + 1) + s / oms)


# -- AR(1) with uniform noise -------------------------------------------------


def ar1_theta(r: int) -> float:
    return 1.0 - 1.0 / r


def ar1_m(u: float, r: int) -> int:
    """Integer m with 1 - r^m (1 - u) < 0 <= 1 - r^(m - 1) (1 - u)."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0, 1), got {u}")
    gap = 1.0 - u
    m = 1
    while 1.0 - r**m * gap >= 0.0:
        m += 1
    return m


def ar1_j0(n: int, r: int) -> int:
    """floor(ln n / (2 ln r)), i.e. the largest k with r^(2k) <= n."""
    if n < 1:
        raise ValueError("n must be positive")
    k = 0
    while r ** (2 * (k + 1)) <= n:
        k += 1
    return k


def ar1_max_cdf(j: int, u: float, r: int) -> float:
    """P{M_j <= u} = 1 - ((j + 1) r - j)/r (1 - u) = u - j theta (1 - u)."""
    m = ar1_m(u, r)
    if not 1 <= j <= m - 1:
        raise ValueError(
            f"j={j} outside [1, m-1] = [1, {m - 1}]; m is fixed by "
            f"-ln(1-u)/ln(r) - 1 < m - 1 <= -ln(1-u)/ln(r)"
        )
    return u - j * ar1_theta(r) * (1.0 - u)


def ar1_pmf(j: int, u: float, r: int, n: int) -> float:
    """Piecewise first hitting pmf of the uniform-noise AR(1) process, verbatim.

    Branches: 1 - theta at j = 1; (1 - theta)^j (u - j theta (1 - u)) for
    2 <= j <= j0; (1 - theta)^(j0 + 2) (u - j theta (1 - u)) for j0 < j <= m - 1,
    with j0 = floor(ln n / (2 ln r)).
    """
    _check_j(j)
    if r < 2:
        raise ValueError("r must be at least 2")
    theta = ar1_theta(r)
    if j == 1:
        return 1.0 - theta
    m = ar1_m(u, r)
    if j > m - 1:
        raise ValueError(f"j={j} exceeds m-1={m - 1} for u={u}, r={r}")
    bracket = u - j * theta * (1.0 - u)
    if bracket <= 0.0:
        raise ValueError(f"u - j theta (1 - u) = {bracket} is not positive")
    j0 = ar1_j0(n, r)
    power = j if j <= j0 else j0 + 2
    return (1.0 - theta) ** power * bracket


__all__ = [
    "ReparamQuantities",
    "TheoryParams",
    "ar1_j0",
    "ar1_m",
    "ar1_max_cdf",
    "ar1_pmf",
    "ar1_theta",
    "armax_mean_exact",
    "armax_mean_paper",
    "armax_pmf_exact",
    "armax_pmf_paper",
    "armax_second_moment_paper",
    "armax_tail_exact",
    "armax_truncated_mean_exact",
    "inter_cluster_pmf",
    "lambda_n",
    "limit_geometric_pmf",
    "limit_geometric_tail",
    "one_minus_s",
    "psi_pmf",
    "psi_total_mass",
    "reparam",
    "second_hitting_joint_model",
    "survival_step",
    "timed_pmf_model",
    "truncated_mean_model",
]
