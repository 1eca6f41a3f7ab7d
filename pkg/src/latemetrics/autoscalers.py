"""Reactive and proactive horizontal scaling policies and CPU forecasters."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import CpuSample


class Action(enum.IntEnum):
    DOWN = -1
    HOLD = 0
    UP = 1


@dataclass(frozen=True)
class Decision:
    action: Action
    count: int = 0
    signal: float | None = None

    @property
    def is_hold(self) -> bool:
        return self.action is Action.HOLD


HOLD = Decision(Action.HOLD)


class ForecasterKind(str, enum.Enum):
    LAST_VALUE = "last_value"
    LINEAR_TREND = "linear_trend"
    EWMA = "ewma"
    OVERESTIMATOR = "overestimator"


@dataclass(frozen=True)
class ForecasterSpec:
    kind: ForecasterKind = ForecasterKind.LINEAR_TREND
    alpha: float = 0.5
    bias: float = 0.15

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ForecasterKind(self.kind))
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if self.bias < 0:
            raise ValueError("bias must be >= 0")


class ScalerKind(str, enum.Enum):
    REACTIVE = "reactive"
    PROACTIVE = "proactive"


@dataclass(frozen=True)
class ScalerPolicy:
    kind: ScalerKind = ScalerKind.REACTIVE
    up_threshold: float = 0.80
    down_threshold: float = 0.20
    forecaster: ForecasterSpec = field(default_factory=ForecasterSpec)
    history_len: int = 6
    lead_time_s: float = 10.0
    step: int = 1
    cooldown_s: float = 30.0
    downscale_on_forecast: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ScalerKind(self.kind))
        if not 0 < self.down_threshold < self.up_threshold < 1:
            raise ValueError("need 0 < down_threshold < up_threshold < 1")
        if self.history_len < 2:
            raise ValueError("history_len must be >= 2")
        if self.step < 1:
            raise ValueError("step must be >= 1")
        if self.lead_time_s < 0 or self.cooldown_s < 0:
            raise ValueError("lead_time and cooldown must be >= 0")


def threshold_rule(value: float, policy: ScalerPolicy) -> Decision:
    """Strict inequalities: exactly on a threshold holds."""
    if value > policy.up_threshold:
        return Decision(Action.UP, policy.step, value)
    if value < policy.down_threshold:
        return Decision(Action.DOWN, policy.step, value)
    return Decision(Action.HOLD, 0, value)


def reactive_decide(sample: CpuSample | float, policy: ScalerPolicy) -> Decision:
    value = sample.utilization if isinstance(sample, CpuSample) else float(sample)
    return threshold_rule(value, policy)


def _values(history: Sequence[CpuSample | float]) -> np.ndarray:
    return np.array([h.utilization if isinstance(h, CpuSample) else h for h in history], dtype=float)


def forecast(history: Sequence[CpuSample | float], spec: ForecasterSpec,
             lead_time_s: float = 10.0, period_s: float = 1.0) -> float:
    """Predicted utilization ``lead_time_s`` after the last sample, clamped to [0, 1].

    ``history`` is oldest-first and equally spaced by ``period_s``.
    """
    y = _values(history)
    if y.size == 0:
        raise ValueError("empty history")
    kind = spec.kind
    if kind is ForecasterKind.LAST_VALUE:
        pred = y[-1]
    elif kind is ForecasterKind.EWMA:
        level = y[0]
        for v in y[1:]:
            level = spec.alpha * v + (1 - spec.alpha) * level
        pred = level
    else:
        x = np.arange(y.size) * period_s
        xm, ym = x.mean(), y.mean()
        sxx = np.sum((x - xm) ** 2)
        slope = np.sum((x - xm) * (y - ym)) / sxx if sxx > 0 else 0.0
        pred = ym + slope * (x[-1] + lead_time_s - xm)
        if kind is ForecasterKind.OVERESTIMATOR:
            pred += spec.bias
    return float(min(1.0, max(0.0, pred)))


def proactive_decide(history: Sequence[CpuSample | float], policy: ScalerPolicy,
                     period_s: float = 1.0) -> Decision:
    """Threshold rule applied to the forecast; HOLD until the history is full."""
    if len(history) < policy.history_len:
        return HOLD
    window = list(history)[-policy.history_len:]
    pred = forecast(window, policy.forecaster, policy.lead_time_s, period_s)
    decision = threshold_rule(pred, policy)
    if policy.downscale_on_forecast or decision.action is Action.UP:
        return decision
    # de-allocation driven by the current sample instead of the forecast
    current = float(_values(window[-1:])[0])
    if current < policy.down_threshold:
        return Decision(Action.DOWN, policy.step, current)
    return Decision(Action.HOLD, 0, pred)


class Autoscaler:
    """Stateful wrapper feeding one sample per period into a policy."""

    def __init__(self, policy: ScalerPolicy, period_s: float = 1.0):
        self.policy = policy
        self.period_s = period_s
        self.history: deque[float] = deque(maxlen=policy.history_len)

    def observe(self, sample: CpuSample | float) -> Decision:
        value = sample.utilization if isinstance(sample, CpuSample) else float(sample)
        self.history.append(value)
        if self.policy.kind is ScalerKind.REACTIVE:
            return reactive_decide(value, self.policy)
        return proactive_decide(self.history, self.policy, self.period_s)

    @property
    def signal_name(self) -> str:
        return "cpu" if self.policy.kind is ScalerKind.REACTIVE else "forecast"
