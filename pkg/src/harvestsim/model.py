"""Logistic stock under density-dependent fishing effort.

Effort responds to the stock's per-capita growth rate,

    E(t, N) = alpha(t) - beta(t) * (dN/dt) / N,

so every harvested model is implicit in dN/dt.  Each right-hand side below
solves that implicit relation algebraically before returning.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

from harvestsim.schedules import Gated, Schedule

__all__ = [
    "SINGULARITY_TOL",
    "DomainError",
    "SingularityError",
    "ModelParams",
    "Constant",
    "Proportional",
    "RestrictedProportional",
    "ProportionalThreshold",
    "Seasonal",
    "Rotational",
    "Strategy",
    "effort",
    "rhs_unharvested",
    "rhs_constant",
    "rhs_proportional",
    "rhs_threshold",
    "rhs_restricted",
    "proportional_yield",
    "harvest_yield",
    "strategy_rhs",
]

SINGULARITY_TOL = 1e-9

Coefficient = Union[float, Callable[[float], float]]


class DomainError(ValueError):
    """Quantity undefined for the given state (e.g. per-capita terms at N = 0)."""


class SingularityError(ArithmeticError):
    """The denominator of the resolved effort equation vanishes."""


@dataclass(frozen=True)
class ModelParams:
    """Biological constants and effort coefficients.

    ``alpha`` and ``beta`` are either non-negative numbers or callables of time.
    """

    r: float
    K: float
    q: float
    alpha: Coefficient = 1.0
    beta: Coefficient = 0.0

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if not self.K > 0:
            raise ValueError(f"K must be > 0, got {self.K}")
        if not self.q >= 0:
            raise ValueError(f"q must be >= 0, got {self.q}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not callable(v) and not v >= 0:
                raise ValueError(f"{name} must be >= 0, got {v}")

    def alpha_at(self, t: float) -> float:
        a = self.alpha
        if callable(a):
            a = a(t)
            if a < 0:
                raise ValueError(f"alpha({t}) = {a} is negative")
        return a

    def beta_at(self, t: float) -> float:
        b = self.beta
        if callable(b):
            b = b(t)
            if b < 0:
                raise ValueError(f"beta({t}) = {b} is negative")
        return b


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")


@dataclass(frozen=True)
class Constant:
    """Fixed removal q * E_const per year, independent of the stock."""

    E_const: float
    kind = "constant"

    def __post_init__(self):
        if not self.E_const >= 0:
            raise ValueError(f"E_const must be >= 0, got {self.E_const}")


@dataclass(frozen=True)
class Proportional:
    lam: float
    kind = "proportional"

    def __post_init__(self):
        _check_lambda(self.lam)

    def lambda_at(self, t: float, left: bool = False) -> float:
        return self.lam


@dataclass(frozen=True)
class RestrictedProportional:
    """Proportional harvesting whose catch is capped at ``Y_limit``."""

    lam: float
    Y_limit: float
    kind = "restricted"

    def __post_init__(self):
        _check_lambda(self.lam)
        if not self.Y_limit >= 0:
            raise ValueError(f"Y_limit must be >= 0, got {self.Y_limit}")

    def lambda_at(self, t: float, left: bool = False) -> float:
        return self.lam


@dataclass(frozen=True)
class ProportionalThreshold:
    """Harvest only the stock in excess of ``N_thre``.

    With ``harvest_below=True`` the resolved above-threshold formula is applied
    on the whole half-line, i.e. the stock is topped up below the threshold.
    The default keeps the protected stock unharvested.
    """

    lam: float
    N_thre: float
    harvest_below: bool = False
    kind = "threshold"

    def __post_init__(self):
        _check_lambda(self.lam)
        if not self.N_thre >= 0:
            raise ValueError(f"N_thre must be >= 0, got {self.N_thre}")

    def lambda_at(self, t: float, left: bool = False) -> float:
        return self.lam


@dataclass(frozen=True)
class Seasonal:
    schedule: Schedule
    kind = "seasonal"

    def lambda_at(self, t: float, left: bool = False) -> float:
        return self.schedule.left(t) if left else self.schedule(t)


@dataclass(frozen=True)
class Rotational:
    """Seasonal schedule switched on for ``open_years`` out of every cycle."""

    schedule: Schedule
    open_years: int = 1
    closed_years: int = 2
    kind = "rotational"

    def __post_init__(self):
        # validates the year counts
        object.__setattr__(self, "_gated", Gated(self.schedule, self.open_years, self.closed_years))

    @property
    def gated(self) -> Gated:
        return self._gated

    def lambda_at(self, t: float, left: bool = False) -> float:
        return self._gated.left(t) if left else self._gated(t)


Strategy = Union[Constant, Proportional, RestrictedProportional, ProportionalThreshold, Seasonal, Rotational]


def effort(params: ModelParams, N: float, dNdt: float, t: float = 0.0) -> float:
    """Density-dependent effort alpha - beta * dNdt / N.  Negative values are returned as-is."""
    if N == 0:
        raise DomainError("effort is undefined at N = 0")
    return params.alpha_at(t) - params.beta_at(t) * dNdt / N


def rhs_unharvested(params: ModelParams, N: float) -> float:
    return params.r * N * (1.0 - N / params.K)


def rhs_constant(params: ModelParams, N: float, E_const: float) -> float:
    return params.r * N * (1.0 - N / params.K) - params.q * E_const


def rhs_proportional(params: ModelParams, N: float, lam: float, t: float = 0.0) -> float:
    """Proportional harvest with the effort feedback solved out of dN/dt."""
    lq = lam * params.q
    denom = 1.0 - lq * params.beta_at(t)
    if abs(denom) < SINGULARITY_TOL:
        raise SingularityError(f"1 - lambda*q*beta = {denom:.3g} at t = {t}")
    return (params.r * N * (1.0 - N / params.K) - lq * params.alpha_at(t) * N) / denom


def rhs_threshold(
    params: ModelParams,
    N: float,
    lam: float,
    N_thre: float,
    t: float = 0.0,
    harvest_below: bool = False,
) -> float:
    growth = params.r * N * (1.0 - N / params.K)
    if N <= N_thre and not harvest_below:
        return growth
    if N == 0:
        raise DomainError("threshold harvest term is undefined at N = 0")
    lq = lam * params.q
    denom = 1.0 - lq * params.beta_at(t) * (1.0 - N_thre / N)
    if abs(denom) < SINGULARITY_TOL:
        raise SingularityError(f"threshold denominator = {denom:.3g} at N = {N}, t = {t}")
    return (growth - lq * params.alpha_at(t) * (N - N_thre)) / denom


def proportional_yield(params: ModelParams, N: float, lam: float, t: float = 0.0) -> float:
    """Self-consistent catch lambda*q*N*E of uncapped proportional harvesting."""
    if N == 0:
        return 0.0
    dNdt = rhs_proportional(params, N, lam, t)
    return lam * params.q * N * effort(params, N, dNdt, t)


def rhs_restricted(
    params: ModelParams, N: float, lam: float, Y_limit: float, t: float = 0.0
) -> tuple[float, str]:
    """Proportional harvesting with catch cap; returns ``(dN/dt, "capped" | "uncapped")``."""
    if proportional_yield(params, N, lam, t) <= Y_limit:
        return rhs_proportional(params, N, lam, t), "uncapped"
    return params.r * N * (1.0 - N / params.K) - Y_limit, "capped"


def harvest_yield(
    params: ModelParams,
    N: float,
    dNdt: float,
    lam: float,
    t: float = 0.0,
    N_thre: float | None = None,
) -> float:
    """Catch q * N * E scaled by the strategy's lambda factor.

    The factor is ``lam`` for proportional-type strategies and
    ``lam * (N - N_thre)`` above the threshold for threshold harvesting (zero
    at or below it).
    """
    if N == 0:
        return 0.0
    if N_thre is None:
        factor = lam
    elif N > N_thre:
        factor = lam * (N - N_thre)
    else:
        return 0.0
    return factor * params.q * N * effort(params, N, dNdt, t)


def strategy_rhs(params: ModelParams, strategy: Strategy, N: float, t: float = 0.0) -> float:
    """dN/dt for any strategy, with the regime picked from the current state."""
    if isinstance(strategy, Constant):
        return rhs_constant(params, N, strategy.E_const)
    if isinstance(strategy, RestrictedProportional):
        return rhs_restricted(params, N, strategy.lam, strategy.Y_limit, t)[0]
    if isinstance(strategy, ProportionalThreshold):
        return rhs_threshold(params, N, strategy.lam, strategy.N_thre, t, strategy.harvest_below)
    return rhs_proportional(params, N, strategy.lambda_at(t), t)
