"""Metrics report assembly, text serialization and run comparison."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .conventional import CONVENTIONS, ConventionalReport, conventional_report
from .core import SlaPolicy, Trace, to_seconds
from .sla import SlaReport, sla_report

REPORT_HEADER = "#latemetrics-report v1"
MACHINE_PREFIX = "#machine "

SLA_KEYS = ("m1_s", "m2_s", "m3", "m4", "m5", "perfect")
RESOURCE_KEYS = (
    "num_tasks", "num_violations", "num_violating_tasks", "violation_spans",
    "violation_time_s", "no_violation_time_s", "horizon_s", "node_seconds",
)


class ConventionMismatch(ValueError):
    def __init__(self, diff: dict[str, tuple]):
        self.diff = diff
        lines = [f"  {k}: {a!r} != {b!r}" for k, (a, b) in diff.items()]
        super().__init__("reports use different conventions:\n" + "\n".join(lines))


@dataclass
class MetricsReport:
    conventional: dict[str, float | None]
    sla: dict[str, float | bool | None]
    resources: dict[str, float | int]
    conventions: dict[str, str | int]
    run: dict[str, str | int | float] = field(default_factory=dict)
    undefined: dict[str, str] = field(default_factory=dict)

    def metrics_equal(self, other: "MetricsReport") -> bool:
        return (self.conventional == other.conventional and self.sla == other.sla
                and self.resources == other.resources and self.conventions == other.conventions
                and self.undefined == other.undefined)

    def as_dict(self) -> dict:
        return {
            "conventional": self.conventional,
            "undefined": self.undefined,
            "sla": self.sla,
            "resources": self.resources,
            "conventions": self.conventions,
            "run": self.run,
        }


def build_report(trace: Trace, policy: SlaPolicy, warmup_us: int = 0,
                 run: dict | None = None) -> MetricsReport:
    trace = trace.trim(warmup_us)
    conv: ConventionalReport = conventional_report(trace)
    sla: SlaReport = sla_report(trace, policy)
    s = sla.summary
    conventions = dict(CONVENTIONS)
    conventions.update(
        threshold_us=policy.threshold_us,
        span_rule=policy.span_rule.value,
        count_mode=policy.count_mode.value,
        warmup_us=warmup_us,
        zero_violation_rule="m1,m4=null+perfect; m2=0; m3=m5=1",
    )
    return MetricsReport(
        conventional={k: getattr(conv, k) for k in ConventionalReport.FIELDS},
        undefined=dict(conv.undefined),
        sla={"m1_s": sla.m1_s, "m2_s": sla.m2_s, "m3": sla.m3, "m4": sla.m4,
             "m5": sla.m5, "perfect": sla.perfect},
        resources={
            "num_tasks": len(trace.tasks),
            "num_violations": s.num_violations,
            "num_violating_tasks": s.num_violating_tasks,
            "violation_spans": len(s.time_violations),
            "violation_time_s": s.violation_time_s,
            "no_violation_time_s": s.no_violation_time_s,
            "horizon_s": to_seconds(trace.horizon.measure),
            "node_seconds": trace.node_seconds(),
        },
        conventions=conventions,
        run=dict(run or {}),
    )


def _fmt(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_report(report: MetricsReport) -> str:
    """Human-readable sections in fixed key order, then one JSON machine line."""
    out = [REPORT_HEADER]
    out.append("[conventional]")
    for k in ConventionalReport.FIELDS:
        out.append(f"{k} = {_fmt(report.conventional.get(k))}")
    for k, reason in sorted(report.undefined.items()):
        out.append(f"undefined.{k} = {reason}")
    out.append("[sla]")
    for k in SLA_KEYS:
        out.append(f"{k} = {_fmt(report.sla.get(k))}")
    out.append("[resources]")
    for k in RESOURCE_KEYS:
        out.append(f"{k} = {_fmt(report.resources.get(k))}")
    out.append("[conventions]")
    for k, v in report.conventions.items():
        out.append(f"{k} = {_fmt(v)}")
    out.append("[run]")
    for k, v in report.run.items():
        out.append(f"{k} = {_fmt(v)}")
    out.append(MACHINE_PREFIX + json.dumps(report.as_dict(), allow_nan=False))
    return "\n".join(out) + "\n"


def parse_report(text: str) -> MetricsReport:
    lines = text.splitlines()
    if not lines or lines[0] != REPORT_HEADER:
        raise ValueError(f"not a report: expected {REPORT_HEADER!r}")
    machine = [ln for ln in lines if ln.startswith(MACHINE_PREFIX)]
    if len(machine) != 1:
        raise ValueError("report must contain exactly one machine line")
    data = json.loads(machine[0][len(MACHINE_PREFIX):])
    return MetricsReport(
        conventional=data["conventional"],
        sla=data["sla"],
        resources=data["resources"],
        conventions=data["conventions"],
        run=data.get("run", {}),
        undefined=data.get("undefined", {}),
    )


def write_report(report: MetricsReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_report(report))


def read_report(path) -> MetricsReport:
    with open(path, encoding="utf-8") as fh:
        return parse_report(fh.read())


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    a: float | None
    b: float | None

    @property
    def delta(self) -> float | None:
        if self.a is None or self.b is None:
            return None
        return self.b - self.a

    @property
    def relative_pct(self) -> float | None:
        """(b - a) / |a| in percent."""
        if self.a is None or self.b is None or self.a == 0:
            return None
        return 100.0 * (self.b - self.a) / abs(self.a)


def comparison_rows(a: MetricsReport, b: MetricsReport) -> list[ComparisonRow]:
    diff = {k: (a.conventions.get(k), b.conventions.get(k))
            for k in sorted(set(a.conventions) | set(b.conventions))
            if a.conventions.get(k) != b.conventions.get(k)}
    if diff:
        raise ConventionMismatch(diff)
    rows = [ComparisonRow(k, a.conventional.get(k), b.conventional.get(k))
            for k in ConventionalReport.FIELDS]
    rows += [ComparisonRow(k, a.sla.get(k), b.sla.get(k)) for k in SLA_KEYS if k != "perfect"]
    rows += [ComparisonRow(k, a.resources.get(k), b.resources.get(k)) for k in RESOURCE_KEYS]
    return rows


def _higher_line(name: str, a: float, b: float, label_a: str, label_b: str) -> str:
    if a == b:
        return f"{name}: equal for {label_a} and {label_b}"
    hi, lo, hl, ll = (a, b, label_a, label_b) if a > b else (b, a, label_b, label_a)
    if lo == 0:
        return f"{name}: {hl} is higher ({_fmt_num(hi)} vs 0) than {ll}"
    return f"{name}: {(hi - lo) / lo * 100:.2f}% higher for {hl} than {ll}"


def _fmt_num(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float) and math.isfinite(v):
        return f"{v:.6g}"
    return str(v)


def compare_reports(a: MetricsReport, b: MetricsReport, label_a: str = "A", label_b: str = "B",
                    fmt: str = "table") -> str:
    rows = comparison_rows(a, b)
    if fmt == "csv":
        lines = [f"metric,{label_a},{label_b},delta,relative_pct"]
        for r in rows:
            lines.append(",".join([r.metric] + [_fmt(v) for v in (r.a, r.b, r.delta, r.relative_pct)]))
        return "\n".join(lines) + "\n"

    width = max(len(r.metric) for r in rows)
    header = f"{'metric':<{width}}  {label_a:>14}  {label_b:>14}  {'delta':>14}  {'rel %':>9}"
    lines = [header, "-" * len(header)]
    for r in rows:
        rel = "-" if r.relative_pct is None else f"{r.relative_pct:+.2f}"
        lines.append(f"{r.metric:<{width}}  {_fmt_num(r.a):>14}  {_fmt_num(r.b):>14}  "
                     f"{_fmt_num(r.delta):>14}  {rel:>9}")
    lines.append("")
    for key, name in (("num_violations", "Number of Violations"),
                      ("violation_time_s", "Time(Violations)"),
                      ("node_seconds", "Node-seconds")):
        lines.append(_higher_line(name, a.resources[key], b.resources[key], label_a, label_b))
    return "\n".join(lines) + "\n"
