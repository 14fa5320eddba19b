"""Equilibria, sustainable yield, bifurcation scans and attractor diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from harvestsim import model
from harvestsim.integrator import IntegrationConfig, Trajectory, integrate
from harvestsim.model import (
    DomainError,
    ModelParams,
    ProportionalThreshold,
    Rotational,
    Seasonal,
    SingularityError,
    Strategy,
)

__all__ = [
    "Equilibrium",
    "EquilibriumReport",
    "YieldCurve",
    "ScanPoint",
    "classify_stability",
    "equilibria_proportional",
    "equilibria_threshold",
    "equilibria_restricted",
    "equilibrium_yield",
    "sustainable_yield_curve",
    "bifurcation_scan",
    "extinction_boundary",
    "attractor_period",
    "convergence_time",
]

DEFAULT_TRANSIENT = 50.0


@dataclass(frozen=True)
class Equilibrium:
    N: float
    stability: str  # "stable", "unstable" or "semi-stable"
    derivation: str


@dataclass
class EquilibriumReport:
    points: list[Equilibrium]
    feasible: bool
    extras: dict = field(default_factory=dict)

    @property
    def stable(self) -> list[float]:
        return [p.N for p in self.points if p.stability == "stable"]

    @property
    def positive_stable(self) -> float | None:
        pos = [N for N in self.stable if N > 0]
        return max(pos) if pos else None


@dataclass
class YieldCurve:
    axis: np.ndarray
    yields: np.ndarray
    argmax: float
    max_yield: float


@dataclass
class ScanPoint:
    control: float
    final_N: float
    extinct: bool
    extinction_event: bool
    period: float | None = None
    error: str | None = None


def classify_stability(rhs: Callable[[float], float], N_star: float, K: float) -> str:
    """Sign of a centred difference of the RHS at ``N_star`` (one-sided at N = 0)."""
    h = 1e-6 * K
    if N_star <= 0.0:
        slope = (rhs(h) - rhs(0.0)) / h
    else:
        slope = (rhs(N_star + h) - rhs(N_star - h)) / (2.0 * h)
    return "stable" if slope < 0 else "unstable"


def _lqa(params: ModelParams, lam: float, t: float) -> float:
    return lam * params.q * params.alpha_at(t)


def equilibria_proportional(params: ModelParams, lam: float, t: float = 0.0) -> EquilibriumReport:
    lqb = lam * params.q * params.beta_at(t)
    if abs(1.0 - lqb) < model.SINGULARITY_TOL:
        raise SingularityError("lambda*q*beta = 1: proportional model is singular")
    lqa = _lqa(params, lam, t)
    f = lambda N: model.rhs_proportional(params, N, lam, t)  # noqa: E731
    pts = [Equilibrium(0.0, classify_stability(f, 0.0, params.K), "extinction")]
    feasible = lqa < params.r
    if feasible:
        Ns = (1.0 - lqa / params.r) * params.K
        pts.append(Equilibrium(Ns, classify_stability(f, Ns, params.K), "(1 - lam*q*alpha/r) K"))
    return EquilibriumReport(pts, feasible, {"lambda_q_alpha": lqa})


def _quadratic_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of a x^2 + b x + c, computed without cancellation."""
    if a == 0.0:
        return [] if b == 0.0 else [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return []
    s = math.sqrt(disc)
    qv = -0.5 * (b + math.copysign(s, b))
    if qv == 0.0:
        return [0.0]
    return sorted({qv / a, c / qv})


def equilibria_threshold(params: ModelParams, lam: float, N_thre: float, t: float = 0.0) -> EquilibriumReport:
    """Fixed points of threshold harvesting (protected stock below ``N_thre``)."""
    if not N_thre >= 0:
        raise ValueError(f"N_thre must be >= 0, got {N_thre}")
    r, K = params.r, params.K
    lqa = _lqa(params, lam, t)
    # r N (1 - N/K) = lqa (N - N_thre), harvested branch only above the threshold
    roots = [x for x in _quadratic_roots(r / K, lqa - r, -lqa * N_thre) if x > N_thre and x >= 0]
    f = lambda N: model.rhs_threshold(params, N, lam, N_thre, t)  # noqa: E731
    pts = []
    for N in (0.0, K):
        if N <= N_thre or N == 0.0:
            pts.append(Equilibrium(N, classify_stability(f, N, K), "unharvested logistic root"))
    pts += [Equilibrium(N, classify_stability(f, N, K), "root of r N (1 - N/K) = lam*q*alpha (N - N_thre)") for N in roots]
    pts.sort(key=lambda e: e.N)
    feasible = any(p.N > 0 and p.stability == "stable" for p in pts)
    return EquilibriumReport(pts, feasible, {"lambda_q_alpha": lqa, "N_thre": N_thre})


def equilibria_restricted(params: ModelParams, Y_limit: float, N0: float | None = None) -> EquilibriumReport:
    """Fixed points of the capped regime r N (1 - N/K) = Y_limit."""
    if not Y_limit >= 0:
        raise ValueError(f"Y_limit must be >= 0, got {Y_limit}")
    r, K = params.r, params.K
    extras: dict = {"msy": r * K / 4.0}
    if N0 is not None:
        extras["initial_condition_ok"] = Y_limit < r * N0 * (1.0 - N0 / K)
    if Y_limit == 0:
        pts = [Equilibrium(0.0, "unstable", "unharvested logistic root"), Equilibrium(K, "stable", "unharvested logistic root")]
        return EquilibriumReport(pts, True, extras)
    if r == 0:
        return EquilibriumReport([], False, extras)
    disc = 1.0 - 4.0 * Y_limit / (r * K)
    if disc < 0:
        extras["note"] = "Y_limit exceeds rK/4: no positive equilibrium in the capped regime"
        return EquilibriumReport([], False, extras)
    tag = "(K/2)(1 +- sqrt(1 - 4 Y_limit/(r K)))"
    if disc == 0:
        return EquilibriumReport([Equilibrium(K / 2.0, "semi-stable", tag)], True, extras)
    f = lambda N: r * N * (1.0 - N / K) - Y_limit  # noqa: E731
    s = math.sqrt(disc)
    pts = [Equilibrium(N, classify_stability(f, N, K), tag) for N in (0.5 * K * (1 - s), 0.5 * K * (1 + s))]
    return EquilibriumReport(pts, True, extras)


def equilibrium_yield(params: ModelParams, strategy: Strategy, N_star: float, t: float = 0.0) -> float:
    """Catch at a fixed point (dN/dt = 0, so effort equals alpha)."""
    N_thre = strategy.N_thre if isinstance(strategy, ProportionalThreshold) else None
    return model.harvest_yield(params, N_star, 0.0, strategy.lambda_at(t), t, N_thre=N_thre)


def sustainable_yield_curve(params: ModelParams, lambda_qa_grid: Sequence[float]) -> YieldCurve:
    """Equilibrium catch x K (1 - x / r) of proportional harvesting at intensity x = lam*q*alpha."""
    x = np.asarray(lambda_qa_grid, dtype=float)
    r, K = params.r, params.K
    if np.any(x < 0) or np.any(x > r):
        raise ValueError("lambda*q*alpha grid must lie within [0, r]")
    y = x * K * (1.0 - x / r) if r > 0 else np.zeros_like(x)
    return YieldCurve(axis=x, yields=y, argmax=float(x[int(np.argmax(y))]), max_yield=r * K / 4.0)


def _with_control(params: ModelParams, strategy: Strategy, control: str, value: float):
    if control == "lambda_q_alpha":
        lq = strategy.lam * params.q
        if lq == 0:
            raise ValueError("lambda*q is zero; lambda_q_alpha cannot be controlled through alpha")
        return replace(params, alpha=value / lq), strategy
    if hasattr(params, control):
        return replace(params, **{control: value}), strategy
    if hasattr(strategy, control):
        return params, replace(strategy, **{control: value})
    raise ValueError(f"unknown control parameter {control!r}")


def _candidate_periods(strategy: Strategy) -> list[float]:
    if isinstance(strategy, Seasonal):
        sched = strategy.schedule
    elif isinstance(strategy, Rotational):
        sched = strategy.gated
    else:
        return []
    cands = {1.0}
    if sched.period is not None:
        cands.add(float(sched.period))
    if isinstance(strategy, Rotational):
        cands.add(float(strategy.open_years + strategy.closed_years))
    return sorted(cands)


def bifurcation_scan(
    params: ModelParams,
    strategy: Strategy,
    control_grid: Sequence[float],
    N0: float,
    config: IntegrationConfig | None = None,
    control: str = "lambda_q_alpha",
    quasi_extinction: float = 1e-6,
    transient: float = DEFAULT_TRANSIENT,
    period_tol: float = 1e-6,
) -> list[ScanPoint]:
    """Long-run attractor for each control value.

    ``control`` is ``"lambda_q_alpha"`` (set through alpha) or any field of
    the parameters or the strategy.  A point counts as extinct when the run
    hits the extinction floor or ends below ``quasi_extinction * K``.
    """
    grid = [float(v) for v in control_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("control grid must be sorted ascending")
    config = config or IntegrationConfig(dt=0.05, t_end=1000.0)
    out = []
    for value in grid:
        try:
            p, s = _with_control(params, strategy, control, value)
            traj = integrate(p, s, N0, config)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            out.append(ScanPoint(value, math.nan, False, False, error=f"{type(exc).__name__}: {exc}"))
            continue
        final = float(traj.N[-1])
        extinct = traj.extinct or final < quasi_extinction * p.K
        period = None
        if not extinct:
            for P in _candidate_periods(s):
                try:
                    if attractor_period(traj, P, transient, period_tol):
                        period = P
                        break
                except DomainError:
                    break
        err = "singularity" if traj.truncated else None
        out.append(ScanPoint(value, final, extinct, traj.extinct, period, err))
    return out


def extinction_boundary(points: Sequence[ScanPoint]) -> tuple[float, float] | None:
    """First grid cell (last persisting value, first extinct value), or None."""
    for a, b in zip(points, points[1:]):
        if not a.extinct and b.extinct and a.error is None and b.error is None:
            return a.control, b.control
    return None


def attractor_period(trajectory: Trajectory, candidate_period: float, transient: float = DEFAULT_TRANSIENT, tol: float = 1e-6) -> bool:
    """True iff sup |N(t + P) - N(t)| < tol over matched samples after the transient."""
    t, N = trajectory.t, trajectory.N
    P = float(candidate_period)
    if not P > 0:
        raise ValueError("candidate period must be positive")
    if t[-1] < transient + 2.0 * P:
        raise DomainError(f"trajectory ends at {t[-1]}, need at least transient + 2P = {transient + 2 * P}")
    sel = np.nonzero((t > transient) & (t + P <= t[-1] + 1e-12))[0]
    targets = t[sel] + P
    match_tol = 1e-9 * max(1.0, float(t[-1]))
    j = np.searchsorted(t, targets - match_tol)
    j = np.minimum(j, len(t) - 1)
    ok = np.abs(t[j] - targets) <= match_tol
    if not np.any(ok):
        raise DomainError("no sample times match under a shift by the candidate period")
    return bool(np.max(np.abs(N[j[ok]] - N[sel[ok]])) < tol)


def convergence_time(trajectory: Trajectory, N_target: float, epsilon: float) -> float:
    """First sample time from which |N - N_target| < epsilon holds for good; inf if never."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    outside = np.nonzero(np.abs(trajectory.N - N_target) >= epsilon)[0]
    if len(outside) == 0:
        return float(trajectory.t[0])
    last = outside[-1]
    if last == len(trajectory.t) - 1:
        return math.inf
    return float(trajectory.t[last + 1])
