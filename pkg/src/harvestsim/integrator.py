"""Fixed-step RK4 for the harvesting models.

The nominal grid is ``k * dt``.  Schedule breakpoints are inserted into the
grid so no step straddles a jump or a corner of lambda(t).  Piecewise models
(catch cap, protection threshold) are integrated with the regime frozen over
each step.  A regime change or a drop below the extinction floor is located
by bisection on the step length, and the event time becomes a sample.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from harvestsim import model
from harvestsim.model import (
    Constant,
    DomainError,
    ModelParams,
    Proportional,
    ProportionalThreshold,
    RestrictedProportional,
    Rotational,
    Seasonal,
    SingularityError,
    Strategy,
)

__all__ = [
    "IntegrationConfig",
    "Trajectory",
    "NumericalFailure",
    "integrate",
    "closed_form_proportional",
    "integrate_closed_form_check",
]

log = logging.getLogger(__name__)

EVENT_KINDS = (
    "cap-engaged",
    "cap-released",
    "threshold-crossed-up",
    "threshold-crossed-down",
    "extinction",
    "singularity",
)


class NumericalFailure(RuntimeError):
    """The state became non-finite."""


@dataclass(frozen=True)
class IntegrationConfig:
    dt: float = 1e-3
    t_end: float = 100.0
    event_tolerance: float = 1e-10
    # None means 1e-12 * K
    extinction_floor: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if not self.event_tolerance > 0:
            raise ValueError(f"event_tolerance must be > 0, got {self.event_tolerance}")
        if self.extinction_floor is not None and not self.extinction_floor >= 0:
            raise ValueError(f"extinction_floor must be >= 0, got {self.extinction_floor}")

    def floor_for(self, params: ModelParams) -> float:
        if self.extinction_floor is None:
            return 1e-12 * params.K
        return self.extinction_floor


@dataclass
class Trajectory:
    """Sampled solution; arrays share one index, events are ``(t, kind)`` pairs."""

    t: np.ndarray
    N: np.ndarray
    dNdt: np.ndarray
    lam: np.ndarray
    E: np.ndarray
    Y: np.ndarray
    events: list[tuple[float, str]] = field(default_factory=list)
    negative_effort_count: int = 0

    def __len__(self) -> int:
        return len(self.t)

    @property
    def extinct(self) -> bool:
        return any(kind == "extinction" for _, kind in self.events)

    @property
    def truncated(self) -> bool:
        return any(kind == "singularity" for _, kind in self.events)

    def event_times(self, kind: str) -> list[float]:
        return [t for t, k in self.events if k == kind]


class _System:
    """Frozen-regime right-hand sides and switching surfaces for one strategy."""

    def __init__(self, params: ModelParams, strategy: Strategy):
        self.params = params
        self.strategy = strategy
        self.switch: Callable[[float, float], float] | None = None
        self.kinds = ("", "")  # (entering the positive side, leaving it)
        self.schedule = None
        p = params

        if isinstance(strategy, Constant):
            E = strategy.E_const

            def f(t, N, regime, left=False):
                return model.rhs_constant(p, N, E)

        elif isinstance(strategy, RestrictedProportional):
            lam, cap = strategy.lam, strategy.Y_limit

            def f(t, N, regime, left=False):
                if regime:
                    return p.r * N * (1.0 - N / p.K) - cap
                return model.rhs_proportional(p, N, lam, t)

            self.switch = lambda t, N: model.proportional_yield(p, N, lam, t) - cap
            self.kinds = ("cap-engaged", "cap-released")

        elif isinstance(strategy, ProportionalThreshold):
            lam, thre, below = strategy.lam, strategy.N_thre, strategy.harvest_below

            if callable(p.alpha) or callable(p.beta):

                def harvested(t, N):
                    return model.rhs_threshold(p, N, lam, thre, t, harvest_below=True)

            else:
                r, K, lqa, lqb = p.r, p.K, lam * p.q * p.alpha, lam * p.q * p.beta
                tol_s = model.SINGULARITY_TOL

                def harvested(t, N):
                    if N == 0:
                        raise DomainError("threshold harvest term is undefined at N = 0")
                    denom = 1.0 - lqb * (1.0 - thre / N)
                    if -tol_s < denom < tol_s:
                        raise SingularityError(f"threshold denominator = {denom:.3g} at N = {N}, t = {t}")
                    return (r * N * (1.0 - N / K) - lqa * (N - thre)) / denom

            if below:

                def f(t, N, regime, left=False):
                    return harvested(t, N)

            else:

                def f(t, N, regime, left=False):
                    if regime:
                        return harvested(t, N)
                    return p.r * N * (1.0 - N / p.K)

                self.switch = lambda t, N: N - thre
                self.kinds = ("threshold-crossed-up", "threshold-crossed-down")

        elif isinstance(strategy, (Proportional, Seasonal, Rotational)):
            lam_at = strategy.lambda_at
            if callable(p.alpha) or callable(p.beta):

                def f(t, N, regime, left=False):
                    return model.rhs_proportional(p, N, lam_at(t, left), t)

            else:
                # constant coefficients: same arithmetic as rhs_proportional, inlined for speed
                r, K, qa, qb = p.r, p.K, p.q * p.alpha, p.q * p.beta
                tol_s = model.SINGULARITY_TOL

                if isinstance(strategy, Proportional):
                    lam = strategy.lam
                    denom = 1.0 - lam * qb
                    if abs(denom) < tol_s:

                        def f(t, N, regime, left=False):
                            return model.rhs_proportional(p, N, lam, t)

                    else:
                        gain, loss = r / denom, lam * qa / denom

                        def f(t, N, regime, left=False):
                            return gain * N * (1.0 - N / K) - loss * N

                else:

                    def f(t, N, regime, left=False):
                        lam = lam_at(t, left)
                        denom = 1.0 - lam * qb
                        if -tol_s < denom < tol_s:
                            raise SingularityError(f"1 - lambda*q*beta = {denom:.3g} at t = {t}")
                        return (r * N * (1.0 - N / K) - lam * qa * N) / denom

            if isinstance(strategy, Seasonal):
                self.schedule = strategy.schedule
            elif isinstance(strategy, Rotational):
                self.schedule = strategy.gated
        else:
            raise TypeError(f"unknown strategy {strategy!r}")
        self.f = f

    def regime_at(self, t: float, N: float) -> bool:
        return self.switch is not None and self.switch(t, N) > 0

    def step(self, t: float, N: float, h: float, regime: bool) -> float:
        f = self.f
        k1 = f(t, N, regime)
        k2 = f(t + 0.5 * h, N + 0.5 * h * k1, regime)
        k3 = f(t + 0.5 * h, N + 0.5 * h * k2, regime)
        # left limit: the step may end exactly on a jump of lambda
        k4 = f(t + h, N + h * k3, regime, True)
        return N + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def observe(self, t: float, N: float, regime: bool) -> tuple[float, float, float, float]:
        """(dN/dt, lambda, E, Y) at a sample."""
        p, s = self.params, self.strategy
        dNdt = self.f(t, N, regime)
        if isinstance(s, Constant):
            return dNdt, math.nan, s.E_const, p.q * s.E_const
        lam = s.lambda_at(t)
        if N == 0:
            return dNdt, lam, math.nan, 0.0
        if isinstance(s, RestrictedProportional) and regime:
            # effort that realises the capped catch
            E = s.Y_limit / (lam * p.q * N) if lam * p.q > 0 else math.nan
            return dNdt, lam, E, s.Y_limit
        E = model.effort(p, N, dNdt, t)
        if isinstance(s, ProportionalThreshold):
            if N > s.N_thre or s.harvest_below:
                return dNdt, lam, E, lam * (N - s.N_thre) * p.q * N * E
            return dNdt, lam, E, 0.0
        return dNdt, lam, E, lam * p.q * N * E


def _sample_grid(t_end: float, dt: float, breakpoints: list[float]) -> tuple[np.ndarray, np.ndarray]:
    """Nominal ``k*dt`` grid merged with breakpoints; returns (times, is_breakpoint)."""
    n = math.ceil(t_end / dt - 1e-9)
    nominal = np.arange(n + 1, dtype=float) * dt
    nominal[-1] = t_end
    if n >= 1 and nominal[-2] >= t_end:
        nominal = nominal[:-1]
        nominal[-1] = t_end
    if not breakpoints:
        return nominal, np.zeros(len(nominal), dtype=bool)
    bps = np.asarray(sorted(set(b for b in breakpoints if 0.0 <= b <= t_end)), dtype=float)
    merge_tol = 1e-9 * dt
    idx = np.searchsorted(bps, nominal)
    near = np.zeros(len(nominal), dtype=bool)
    for off in (-1, 0):
        j = np.clip(idx + off, 0, len(bps) - 1)
        near |= np.abs(bps[j] - nominal) <= merge_tol
    # the run must start at 0 and end at t_end: only an exact hit replaces those
    for k in (0, len(nominal) - 1):
        near[k] = bool(np.any(bps == nominal[k]))
    times = np.concatenate([nominal[~near], bps])
    flags = np.concatenate([np.zeros((~near).sum(), dtype=bool), np.ones(len(bps), dtype=bool)])
    order = np.argsort(times, kind="stable")
    return times[order], flags[order]


def integrate(
    params: ModelParams,
    strategy: Strategy,
    N0: float,
    config: IntegrationConfig | None = None,
) -> Trajectory:
    """Integrate one strategy from ``N0`` over ``[0, config.t_end]``.

    Returns a trajectory sampled at every accepted step.  Extinction (N below
    the floor) and a vanishing effort denominator end the run early with an
    event; a non-finite state raises :class:`NumericalFailure`.
    """
    config = config or IntegrationConfig()
    if not N0 >= 0:
        raise ValueError(f"N0 must be >= 0, got {N0}")
    sys_ = _System(params, strategy)
    floor = config.floor_for(params)
    tol = config.event_tolerance
    bps = sys_.schedule.breakpoints(0.0, config.t_end) if sys_.schedule is not None else []
    grid, _ = _sample_grid(config.t_end, config.dt, bps)

    ts: list[float] = [0.0]
    Ns: list[float] = [float(N0)]
    regimes: list[bool] = []
    events: list[tuple[float, str]] = []

    t, N = 0.0, float(N0)
    try:
        regime = sys_.regime_at(t, N)
    except SingularityError:
        regimes.append(False)
        events.append((t, "singularity"))
        return _finish(sys_, ts, Ns, regimes, events)
    regimes.append(regime)
    if N < floor:
        Ns[0] = 0.0
        events.append((t, "extinction"))
        return _finish(sys_, ts, Ns, regimes, events)

    for target in grid[1:]:
        while t < target:
            h = target - t
            try:
                N1 = sys_.step(t, N, h, regime)
            except SingularityError as exc:
                log.warning("integration stopped: %s", exc)
                events.append((t, "singularity"))
                return _finish(sys_, ts, Ns, regimes, events)
            if not math.isfinite(N1):
                raise NumericalFailure(f"non-finite state at t = {t + h}")

            hit = _first_event(sys_, t, N, h, N1, regime, floor, tol)
            if hit is None:
                t, N = float(target), N1
                ts.append(t)
                Ns.append(N)
                regimes.append(regime)
                continue

            tau, kind, Ne = hit
            t_e = float(target) if tau >= h else float(t + tau)
            if t_e <= t:
                t_e = math.nextafter(t, math.inf)
            if kind == "extinction":
                ts.append(t_e)
                Ns.append(0.0)
                regimes.append(regime)
                events.append((t_e, kind))
                return _finish(sys_, ts, Ns, regimes, events)
            regime = not regime
            t, N = t_e, Ne
            ts.append(t)
            Ns.append(N)
            regimes.append(regime)
            events.append((t, kind))

    return _finish(sys_, ts, Ns, regimes, events)


def _first_event(sys_, t, N, h, N1, regime, floor, tol):
    """Earliest event inside ``(t, t+h]``, as ``(tau, kind, N_at_event)``, or None."""
    hits = []
    if N1 < floor:
        # a biomass tolerance is meaningless this close to zero: refine in time only
        tau, Ne = _bisect(sys_, t, N, h, regime, lambda s, x: x < floor, lambda s, x: x - floor, 0.0)
        hits.append((tau, "extinction", Ne))
    if sys_.switch is not None:
        try:
            crossed = (sys_.switch(t + h, N1) > 0) != regime
        except SingularityError:
            crossed = False
        if crossed:
            kind = sys_.kinds[1] if regime else sys_.kinds[0]
            flipped = lambda s, x: (sys_.switch(s, x) > 0) != regime  # noqa: E731
            tau, Ne = _bisect(sys_, t, N, h, regime, flipped, sys_.switch, tol)
            hits.append((tau, kind, Ne))
    if not hits:
        return None
    return min(hits, key=lambda e: e[0])


def _bisect(sys_, t, N, h, regime, crossed, value, tol):
    """Shortest sub-step ``tau`` that lands past the surface, to within ``tol``."""
    lo, hi = 0.0, h
    N_hi = sys_.step(t, N, h, regime)
    time_tol = 1e-14 * max(1.0, abs(t) + h)
    for _ in range(200):
        if abs(value(t + hi, N_hi)) < tol or hi - lo <= time_tol:
            break
        mid = 0.5 * (lo + hi)
        Nm = sys_.step(t, N, mid, regime)
        if crossed(t + mid, Nm):
            hi, N_hi = mid, Nm
        else:
            lo = mid
    return hi, N_hi


def _finish(sys_, ts, Ns, regimes, events) -> Trajectory:
    n = len(ts)
    dNdt = np.empty(n)
    lam = np.empty(n)
    E = np.empty(n)
    Y = np.empty(n)
    truncated = events and events[-1][1] == "singularity"
    for i in range(n):
        try:
            dNdt[i], lam[i], E[i], Y[i] = sys_.observe(ts[i], Ns[i], regimes[i])
        except (SingularityError, DomainError):
            if not truncated:
                raise
            dNdt[i] = E[i] = Y[i] = math.nan
            lam[i] = math.nan
    neg = int(np.sum(E < 0))
    if neg:
        log.info("effort went negative at %d samples", neg)
    return Trajectory(
        t=np.asarray(ts, dtype=float),
        N=np.asarray(Ns, dtype=float),
        dNdt=dNdt,
        lam=lam,
        E=E,
        Y=Y,
        events=events,
        negative_effort_count=neg,
    )


def closed_form_proportional(params: ModelParams, lam: float, N0: float, t):
    """Logistic solution of constant-coefficient proportional harvesting.

    K' = (1 - lam*q*alpha/r) K,  r' = (r - lam*q*alpha) / (1 - lam*q*beta),
    N(t) = K' / (1 + (K'/N0 - 1) exp(-r' t)).
    """
    r, K = params.r, params.K
    if callable(params.alpha) or callable(params.beta):
        raise DomainError("closed form needs constant alpha and beta")
    lqa = lam * params.q * params.alpha
    lqb = lam * params.q * params.beta
    if not (lqa < r and lqb < 1 and N0 > 0):
        raise DomainError("closed form needs lam*q*alpha < r, lam*q*beta < 1 and N0 > 0")
    K_eff = (1.0 - lqa / r) * K
    r_eff = (r - lqa) / (1.0 - lqb)
    C = K_eff / N0 - 1.0
    return K_eff / (1.0 + C * np.exp(-r_eff * np.asarray(t, dtype=float)))


def integrate_closed_form_check(
    params: ModelParams,
    lam: float,
    N0: float,
    t_grid=None,
    config: IntegrationConfig | None = None,
) -> float:
    """Max |N_rk4 - N_exact| over ``t_grid`` (default: every sample).

    ``t_grid`` points must coincide with sample times.
    """
    config = config or IntegrationConfig(t_end=50.0)
    # validates preconditions before integrating
    closed_form_proportional(params, lam, N0, 0.0)
    traj = integrate(params, Proportional(lam), N0, config)
    if t_grid is None:
        times, values = traj.t, traj.N
    else:
        t_grid = np.asarray(t_grid, dtype=float)
        j = np.clip(np.searchsorted(traj.t, t_grid - 1e-9 * config.dt), 0, len(traj.t) - 1)
        if np.any(np.abs(traj.t[j] - t_grid) > 1e-9 * config.dt):
            raise DomainError("t_grid contains times that are not sample times")
        times, values = t_grid, traj.N[j]
    exact = closed_form_proportional(params, lam, N0, times)
    return float(np.max(np.abs(values - exact)))
