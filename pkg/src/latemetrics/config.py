"""Run configuration: INI-style sections for run, workload, cluster, scaler and sla."""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass

from .autoscalers import ForecasterSpec, ScalerPolicy
from .cluster import ClusterSpec
from .core import CountMode, SlaPolicy, SpanRule, to_us
from .workload import (
    DemandSpec,
    Surge,
    WorkloadSpec,
    constant_profile,
    default_diurnal_profile,
)

SEED_ENV = "LATEMETRICS_SEED"

_UNITS = {"us": 1e-6, "ms": 1e-3, "s": 1.0, "m": 60.0, "min": 60.0, "h": 3600.0, "d": 86400.0}
_DURATION_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([a-z]*)\s*$")


def parse_duration(text: str) -> float:
    """``"100ms"`` -> 0.1; a bare number is seconds."""
    m = _DURATION_RE.match(str(text))
    if not m or m.group(2) not in _UNITS and m.group(2) != "":
        raise ValueError(f"bad duration {text!r} (use e.g. 100ms, 5s, 6h)")
    return float(m.group(1)) * _UNITS.get(m.group(2) or "s")


def parse_clock(text: str) -> float:
    """``"17:00"`` -> seconds after midnight."""
    m = re.fullmatch(r"\s*(\d{1,2}):(\d{2})(?::(\d{2}))?\s*", text)
    if not m:
        return parse_duration(text)
    h, mi, s = int(m.group(1)), int(m.group(2)), int(m.group(3) or 0)
    if h > 24 or mi > 59 or s > 59:
        raise ValueError(f"bad clock time {text!r}")
    return h * 3600.0 + mi * 60.0 + s


class ConfigError(ValueError):
    def __init__(self, section: str, key: str, message: str):
        self.section, self.key = section, key
        super().__init__(f"[{section}] {key}: {message}")


@dataclass(frozen=True)
class RunConfig:
    seed: int
    workload: WorkloadSpec
    cluster: ClusterSpec
    scaler: ScalerPolicy
    sla: SlaPolicy
    warmup_s: float = 0.0

    @property
    def warmup_us(self) -> int:
        return to_us(self.warmup_s)


_ALLOWED = {
    "run": {"seed"},
    "workload": {"duration", "base_rate", "profile", "start_clock", "demand_median",
                 "demand_sigma", "demand_cap", "heavy_fraction", "heavy_median",
                 "heavy_sigma", "surges"},
    "cluster": {"base_nodes", "elastic_nodes_max", "node_capacity", "startup_delay",
                "sample_period", "utilization"},
    "scaler": {"kind", "up_threshold", "down_threshold", "forecaster", "alpha", "bias",
               "history_len", "lead_time", "step", "cooldown", "downscale_on"},
    "sla": {"threshold", "span_rule", "count_mode", "warmup"},
}


class _Section:
    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.data = dict(parser[name]) if parser.has_section(name) else {}

    def get(self, key, conv, default):
        if key not in self.data:
            return default
        try:
            return conv(self.data[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(self.name, key, str(exc)) from None


def _parse_surges(text: str) -> tuple[Surge, ...]:
    surges = []
    for item in filter(None, (p.strip() for p in text.split(","))):
        parts = item.split("/")
        if len(parts) != 3:
            raise ValueError(f"surge {item!r} must be start/duration/multiplier")
        surges.append(Surge(parse_duration(parts[0]), parse_duration(parts[1]), float(parts[2])))
    return tuple(surges)


def _profile(name: str):
    if name == "default":
        return default_diurnal_profile()
    if name == "constant":
        return constant_profile()
    raise ValueError(f"unknown profile {name!r} (default|constant)")


def _bool_downscale(text: str) -> bool:
    if text not in ("forecast", "current"):
        raise ValueError("downscale_on must be 'forecast' or 'current'")
    return text == "forecast"


def config_from_parser(parser: configparser.ConfigParser, env: dict | None = None) -> RunConfig:
    env = os.environ if env is None else env
    for name in parser.sections():
        if name not in _ALLOWED:
            raise ConfigError(name, "-", "unknown section")
        for key in parser[name]:
            if key not in _ALLOWED[name]:
                raise ConfigError(name, key, "unknown key")

    run = _Section(parser, "run")
    seed = run.get("seed", int, 0)
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError("run", "seed", f"{SEED_ENV}={env[SEED_ENV]!r} is not an integer") from None

    w = _Section(parser, "workload")
    c = _Section(parser, "cluster")
    s = _Section(parser, "scaler")
    q = _Section(parser, "sla")

    def build(section: _Section, factory, **kwargs):
        try:
            return factory(**kwargs)
        except ValueError as exc:
            raise ConfigError(section.name, "-", str(exc)) from None

    demand = build(w, DemandSpec,
                   median_s=w.get("demand_median", parse_duration, 0.120),
                   sigma=w.get("demand_sigma", float, 0.5),
                   cap_s=w.get("demand_cap", parse_duration, 5.0),
                   heavy_fraction=w.get("heavy_fraction", float, 0.0),
                   heavy_median_s=w.get("heavy_median", parse_duration, 1.0),
                   heavy_sigma=w.get("heavy_sigma", float, 0.5))
    workload = build(w, WorkloadSpec,
                     duration_s=w.get("duration", parse_duration, 4 * 86400.0),
                     base_rate=w.get("base_rate", float, 1.45),
                     profile=w.get("profile", _profile, default_diurnal_profile()),
                     demand=demand,
                     start_clock_s=w.get("start_clock", parse_clock, 0.0),
                     surges=w.get("surges", _parse_surges, ()),
                     seed=seed)
    cluster = build(c, ClusterSpec,
                    base_nodes=c.get("base_nodes", int, 5),
                    elastic_nodes_max=c.get("elastic_nodes_max", int, 15),
                    node_capacity=c.get("node_capacity", float, 1.0),
                    startup_delay_s=c.get("startup_delay", parse_duration, 5.0),
                    sample_period_s=c.get("sample_period", parse_duration, 1.0),
                    utilization_mode=c.get("utilization", str, "mean"))
    forecaster = build(s, ForecasterSpec,
                       kind=s.get("forecaster", str, "linear_trend"),
                       alpha=s.get("alpha", float, 0.5),
                       bias=s.get("bias", float, 0.15))
    scaler = build(s, ScalerPolicy,
                   kind=s.get("kind", str, "reactive"),
                   up_threshold=s.get("up_threshold", float, 0.80),
                   down_threshold=s.get("down_threshold", float, 0.20),
                   forecaster=forecaster,
                   history_len=s.get("history_len", int, 6),
                   lead_time_s=s.get("lead_time", parse_duration, 10.0),
                   step=s.get("step", int, 1),
                   cooldown_s=s.get("cooldown", parse_duration, 30.0),
                   downscale_on_forecast=s.get("downscale_on", _bool_downscale, True))
    sla = build(q, SlaPolicy,
                threshold_us=q.get("threshold", lambda x: to_us(parse_duration(x)), 100_000),
                span_rule=q.get("span_rule", SpanRule, SpanRule.EXCESS_SPAN),
                count_mode=q.get("count_mode", CountMode, CountMode.TASKS))
    warmup = q.get("warmup", parse_duration, 0.0)
    return RunConfig(seed, workload, cluster, scaler, sla, warmup)


def parse_config(text: str, env: dict | None = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("-", "-", str(exc)) from None
    return config_from_parser(parser, env)


def load_config(path, env: dict | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), env)
