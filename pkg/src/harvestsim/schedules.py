"""Time-dependent harvest intensity lambda(t) for seasonal and rotational fishing.

Every schedule is an immutable description that can be evaluated at a time,
evaluated as a left limit (needed when an integration step ends exactly on a
jump), and asked for its breakpoints inside an interval so fixed-step
integration never straddles a corner or a jump.

Windows are half-open ``[start, end)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Schedule",
    "SinePulse",
    "SquareWave",
    "Sinusoid",
    "Gated",
    "lambda_sine_pulse",
    "lambda_square",
    "lambda_sinusoid",
    "lambda_rotational",
]


def lambda_sine_pulse(t: float, t_start: float, H: float, peak: float = 0.5) -> float:
    """Half-sine harvest pulse of length ``H`` starting ``t_start`` into each year.

    A pulse that would run past the end of its year is cut off there.
    """
    u = t - math.floor(t) - t_start
    if u < 0.0 or u >= H:
        return 0.0
    return peak * math.sin(math.pi * u / H)


def lambda_square(t: float, H: float, b: float, level: float = 0.5) -> float:
    """``level`` during open windows of length ``H``, zero during gaps of length ``b``."""
    period = H + b
    u = t - period * math.floor(t / period)
    return level if u < H else 0.0


def lambda_sinusoid(t: float) -> float:
    """(1 + sin(2 pi t)) / 4: peaks at 0.5 a quarter into each year, zero at three quarters."""
    return (1.0 + math.sin(2.0 * math.pi * t)) / 4.0


def lambda_rotational(t: float, inner: Schedule, open_years: int, closed_years: int) -> float:
    """``inner(t)`` in open years of an ``open_years + closed_years`` cycle, else zero."""
    cycle = open_years + closed_years
    if math.floor(t) % cycle < open_years:
        return inner(t)
    return 0.0


def _grid_points(t0: float, t1: float, period: float, offsets: tuple[float, ...]) -> list[float]:
    # points n*period + offset, n >= 0, inside [t0, t1]
    out = set()
    n = max(0, math.floor((t0 - max(offsets)) / period) - 1)
    while True:
        base = n * period
        if base + min(offsets) > t1:
            break
        for off in offsets:
            p = base + off
            if t0 <= p <= t1:
                out.add(p)
        n += 1
    return sorted(out)


class Schedule:
    """Base class; subclasses are frozen dataclasses."""

    #: forcing period in years, ``None`` if the schedule is not periodic
    period: float | None = None

    def __call__(self, t: float) -> float:
        raise NotImplementedError

    def left(self, t: float) -> float:
        """Left limit lambda(t-); equals ``self(t)`` wherever lambda is continuous."""
        return self(t)

    def breakpoints(self, t0: float, t1: float) -> list[float]:
        """Sorted times in ``[t0, t1]`` where lambda or its slope jumps."""
        return []

    @property
    def max_value(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class SinePulse(Schedule):
    t_start: float = 0.25
    H: float = 0.25
    peak: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.t_start < 1.0:
            raise ValueError(f"t_start must lie in [0, 1), got {self.t_start}")
        if not 0.0 < self.H <= 1.0:
            raise ValueError(f"H must lie in (0, 1], got {self.H}")
        if not 0.0 <= self.peak <= 1.0:
            raise ValueError(f"peak must lie in [0, 1], got {self.peak}")

    @property
    def period(self) -> float:
        return 1.0

    @property
    def max_value(self) -> float:
        return self.peak

    def __call__(self, t: float) -> float:
        return lambda_sine_pulse(t, self.t_start, self.H, self.peak)

    def left(self, t: float) -> float:
        if t <= 0.0:
            return self(t)
        u = t - (math.ceil(t) - 1) - self.t_start  # year position in (0, 1]
        if u <= 0.0 or u > self.H:
            return 0.0
        return self.peak * math.sin(math.pi * u / self.H)

    def breakpoints(self, t0: float, t1: float) -> list[float]:
        end = self.t_start + self.H
        # a pulse cut off at the year end jumps to zero at the next integer
        return _grid_points(t0, t1, 1.0, (self.t_start, end) if end < 1.0 else (0.0, self.t_start))


@dataclass(frozen=True)
class SquareWave(Schedule):
    H: float = 0.25
    b: float = 0.25
    level: float = 0.5

    def __post_init__(self):
        if not self.H > 0.0:
            raise ValueError(f"H must be positive, got {self.H}")
        if not self.b >= 0.0:
            raise ValueError(f"b must be non-negative, got {self.b}")
        if not 0.0 <= self.level <= 1.0:
            raise ValueError(f"level must lie in [0, 1], got {self.level}")

    @property
    def period(self) -> float:
        return self.H + self.b

    @property
    def max_value(self) -> float:
        return self.level

    def __call__(self, t: float) -> float:
        return lambda_square(t, self.H, self.b, self.level)

    def left(self, t: float) -> float:
        P = self.H + self.b
        u = t - P * (math.ceil(t / P) - 1)  # in (0, P]
        return self.level if u <= self.H else 0.0

    def breakpoints(self, t0: float, t1: float) -> list[float]:
        if self.b == 0.0:
            return []
        return _grid_points(t0, t1, self.H + self.b, (0.0, self.H))


@dataclass(frozen=True)
class Sinusoid(Schedule):
    @property
    def period(self) -> float:
        return 1.0

    @property
    def max_value(self) -> float:
        return 0.5

    def __call__(self, t: float) -> float:
        return lambda_sinusoid(t)


@dataclass(frozen=True)
class Gated(Schedule):
    """Rotational closure: ``inner`` runs in the first ``open_years`` of each cycle."""

    inner: Schedule
    open_years: int = 1
    closed_years: int = 2

    def __post_init__(self):
        if int(self.open_years) != self.open_years or self.open_years < 1:
            raise ValueError(f"open_years must be an integer >= 1, got {self.open_years}")
        if int(self.closed_years) != self.closed_years or self.closed_years < 0:
            raise ValueError(f"closed_years must be an integer >= 0, got {self.closed_years}")

    @property
    def cycle(self) -> int:
        return int(self.open_years + self.closed_years)

    @property
    def period(self) -> float | None:
        inner = self.inner.period
        if inner is None:
            return None
        if self.closed_years == 0:
            return inner
        per_year = 1.0 / inner
        if abs(per_year - round(per_year)) > 1e-12:
            return None
        return float(self.cycle)

    @property
    def max_value(self) -> float:
        return self.inner.max_value

    def _open(self, year: int) -> bool:
        return year % self.cycle < self.open_years

    def __call__(self, t: float) -> float:
        return lambda_rotational(t, self.inner, self.open_years, self.closed_years)

    def left(self, t: float) -> float:
        year = math.ceil(t) - 1 if t > 0 else 0
        return self.inner.left(t) if self._open(year) else 0.0

    def breakpoints(self, t0: float, t1: float) -> list[float]:
        pts = set()
        if self.closed_years > 0:
            pts.update(_grid_points(t0, t1, float(self.cycle), (0.0, float(self.open_years))))
        for p in self.inner.breakpoints(t0, t1):
            before = math.ceil(p) - 1 if p > 0 else 0
            if self._open(math.floor(p)) or self._open(before):
                pts.add(p)
        return sorted(pts)
