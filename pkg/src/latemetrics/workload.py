"""Task arrivals: non-homogeneous Poisson process with a 24 h demand profile.

Arrivals are drawn by thinning a homogeneous process at the peak rate.
Task demands (CPU-seconds) come from a capped lognormal on a separate
random stream, so changing the profile does not reshuffle demands.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DAY_S = 86_400.0
HOUR_S = 3_600.0


@dataclass(frozen=True)
class DiurnalProfile:
    """Piecewise-linear rate multiplier over one day, repeated every 24 h.

    ``knots`` are ``(hour, multiplier)`` pairs covering 0 to 24.
    """

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        hours = [h for h, _ in self.knots]
        if hours[0] != 0 or hours[-1] != 24 or any(b <= a for a, b in zip(hours, hours[1:])):
            raise ValueError("profile knots must be strictly increasing from hour 0 to hour 24")
        if any(m < 0 for _, m in self.knots):
            raise ValueError("profile multipliers must be >= 0")

    def __call__(self, t_s):
        tod = np.mod(np.asarray(t_s, dtype=float), DAY_S) / HOUR_S
        hours, mults = zip(*self.knots)
        out = np.interp(tod, hours, mults)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def peak(self) -> float:
        return max(m for _, m in self.knots)


def default_diurnal_profile() -> DiurnalProfile:
    return DiurnalProfile((
        (0.0, 1.0), (1.0, 1.0), (2.0, 0.6), (6.0, 0.6), (7.0, 1.0),
        (17.0, 1.0), (22.0, 2.5), (24.0, 1.0),
    ))


def constant_profile(level: float = 1.0) -> DiurnalProfile:
    return DiurnalProfile(((0.0, level), (24.0, level)))


@dataclass(frozen=True)
class Surge:
    """Square-wave rate multiplier active on ``[start_s, start_s + duration_s)``."""

    start_s: float
    duration_s: float
    multiplier: float

    def __post_init__(self) -> None:
        if self.duration_s <= 0 or self.multiplier < 0:
            raise ValueError("surge needs duration > 0 and multiplier >= 0")


@dataclass(frozen=True)
class DemandSpec:
    """Per-task CPU demand: capped lognormal, optionally mixed with a heavy class.

    With probability ``heavy_fraction`` a task draws from the heavy lognormal
    instead of the base one. Medians are in CPU-seconds, sigmas in log space.
    """

    median_s: float = 0.120
    sigma: float = 0.5
    cap_s: float = 5.0
    heavy_fraction: float = 0.0
    heavy_median_s: float = 1.0
    heavy_sigma: float = 0.5

    def __post_init__(self) -> None:
        if self.median_s <= 0 or self.sigma < 0 or self.cap_s <= 0:
            raise ValueError("demand needs median > 0, sigma >= 0, cap > 0")
        if not 0 <= self.heavy_fraction <= 1:
            raise ValueError("heavy_fraction must be in [0, 1]")
        if self.heavy_median_s <= 0 or self.heavy_sigma < 0:
            raise ValueError("heavy class needs median > 0, sigma >= 0")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal(n)
        heavy = rng.random(n) < self.heavy_fraction
        med = np.where(heavy, self.heavy_median_s, self.median_s)
        sig = np.where(heavy, self.heavy_sigma, self.sigma)
        return np.minimum(med * np.exp(sig * z), self.cap_s)

    def mean(self, draws: int = 200_000) -> float:
        """Monte-Carlo mean (the cap makes a closed form awkward)."""
        return float(self.sample(np.random.default_rng(12345), draws).mean())


@dataclass(frozen=True)
class WorkloadSpec:
    duration_s: float = 4 * DAY_S
    base_rate: float = 1.45
    profile: DiurnalProfile = field(default_factory=default_diurnal_profile)
    demand: DemandSpec = field(default_factory=DemandSpec)
    start_clock_s: float = 0.0
    surges: tuple[Surge, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("duration must be > 0")
        if self.base_rate <= 0:
            raise ValueError("base_rate must be > 0")

    def rate(self, t_s):
        """Arrival rate (tasks/s) at run time ``t_s``."""
        t = np.asarray(t_s, dtype=float)
        lam = self.base_rate * np.asarray(self.profile(t + self.start_clock_s))
        for s in self.surges:
            lam = np.where((t >= s.start_s) & (t < s.start_s + s.duration_s), lam * s.multiplier, lam)
        return float(lam) if lam.ndim == 0 else lam

    def peak_rate(self) -> float:
        surge = max([1.0] + [s.multiplier for s in self.surges])
        return self.base_rate * self.profile.peak * surge

    def expected_count(self, start_s: float = 0.0, end_s: float | None = None, step_s: float = 1.0) -> float:
        end_s = self.duration_s if end_s is None else end_s
        grid = np.arange(start_s, end_s, step_s) + step_s / 2
        return float(np.sum(self.rate(grid)) * step_s)


@dataclass(frozen=True, slots=True)
class ArrivalEvent:
    time: float
    demand_cpu_s: float


_CHUNK = 65_536


def arrival_arrays(spec: WorkloadSpec) -> tuple[np.ndarray, np.ndarray]:
    """Arrival times and demands as arrays, deterministic in ``spec.seed``."""
    arrivals_ss, demand_ss = np.random.SeedSequence(spec.seed).spawn(2)
    rng = np.random.default_rng(arrivals_ss)
    lam_max = spec.peak_rate()
    times = []
    t0 = 0.0
    if lam_max > 0:
        while t0 < spec.duration_s:
            cand = t0 + np.cumsum(rng.exponential(1.0 / lam_max, size=_CHUNK))
            u = rng.random(_CHUNK)
            t0 = float(cand[-1])
            cand_in = cand < spec.duration_s
            keep = cand_in & (u * lam_max < spec.rate(cand))
            times.append(cand[keep])
    times = np.concatenate(times) if times else np.empty(0)
    demands = spec.demand.sample(np.random.default_rng(demand_ss), times.size)
    return times, demands


def generate_arrivals(spec: WorkloadSpec) -> list[ArrivalEvent]:
    times, demands = arrival_arrays(spec)
    return [ArrivalEvent(float(t), float(d)) for t, d in zip(times, demands)]


def arrivals_from_pairs(pairs: Sequence[tuple[float, float]]) -> list[ArrivalEvent]:
    return [ArrivalEvent(float(t), float(d)) for t, d in pairs]
