"""SLA-violation metrics M1-M5 over a latency threshold.

A task violates the SLA when its execution time strictly exceeds the
threshold. Violations are counted per node-level task, but the violation
time is the system-wide union of every node's violating spans: the system
counts as clean only while no node has a violation in progress.

    M1 = clean time / violations            (MTBF analogue, seconds)
    M2 = violation time / violations        (MTTR analogue, seconds)
    M3 = clean / (clean + violation time)   (availability analogue)
    M4 = M1 / (1 + M1)                      (reliability analogue)
    M5 = 1 / (1 + M2)                       (maintainability analogue)
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .core import (
    CountMode,
    Interval,
    IntervalSet,
    SlaPolicy,
    SpanRule,
    Trace,
    complement,
    interval_union,
    to_seconds,
)


@dataclass(frozen=True)
class ViolationEpisode:
    node_id: str
    span: Interval
    source_task_ids: tuple[str, ...]


@dataclass(frozen=True)
class ViolationSummary:
    num_violations: int
    num_violating_tasks: int
    time_violations: IntervalSet
    time_no_violations: IntervalSet
    per_node_episodes: dict[str, list[ViolationEpisode]] = field(default_factory=dict)
    horizon: Interval | None = None

    @property
    def violation_time_s(self) -> float:
        return to_seconds(self.time_violations.measure)

    @property
    def no_violation_time_s(self) -> float:
        return to_seconds(self.time_no_violations.measure)


def violation_span(task, policy: SlaPolicy) -> Interval:
    if policy.span_rule is SpanRule.EXCESS_SPAN:
        return Interval(task.submit_us + policy.threshold_us, task.finish_us)
    return Interval(task.submit_us, task.finish_us)


def extract_violations(trace: Trace, policy: SlaPolicy) -> ViolationSummary:
    by_node: dict[str, list] = defaultdict(list)
    n_tasks = 0
    for task in trace.tasks:
        if task.exec_us > policy.threshold_us:
            n_tasks += 1
            by_node[task.node_id].append(task)

    per_node: dict[str, list[ViolationEpisode]] = {}
    for node_id in sorted(by_node):
        tasks = sorted(by_node[node_id], key=lambda t: (t.submit_us, t.finish_us, t.task_id))
        spans = [(violation_span(t, policy), t.task_id) for t in tasks]
        spans.sort(key=lambda p: (p[0].start, p[0].end))
        episodes = []
        cur_s = cur_e = None
        ids: list[str] = []
        for span, tid in spans:
            if cur_e is not None and span.start <= cur_e:
                cur_e = max(cur_e, span.end)
                ids.append(tid)
                continue
            if cur_e is not None:
                episodes.append(ViolationEpisode(node_id, Interval(cur_s, cur_e), tuple(ids)))
            cur_s, cur_e, ids = span.start, span.end, [tid]
        if cur_e is not None:
            episodes.append(ViolationEpisode(node_id, Interval(cur_s, cur_e), tuple(ids)))
        per_node[node_id] = episodes

    time_viol = interval_union(ep.span for eps in per_node.values() for ep in eps)
    time_clean = complement(time_viol, trace.horizon)
    if policy.count_mode is CountMode.TASKS:
        count = n_tasks
    else:
        count = len(time_viol)
    return ViolationSummary(count, n_tasks, time_viol, time_clean, per_node, trace.horizon)


def m1(summary: ViolationSummary) -> float | None:
    """Mean clean time per violation; None when there are no violations."""
    if summary.num_violations == 0:
        return None
    return summary.no_violation_time_s / summary.num_violations


def m2(summary: ViolationSummary) -> float:
    if summary.num_violations == 0:
        return 0.0
    return summary.violation_time_s / summary.num_violations


def m3(summary: ViolationSummary) -> float:
    clean = summary.time_no_violations.measure
    total = clean + summary.time_violations.measure
    if total <= 0:
        raise ValueError("horizon has zero measure")
    return clean / total


def m4(m1_value: float | None) -> float:
    # no violations: limit of M1 -> infinity
    if m1_value is None:
        return 1.0
    if m1_value < 0:
        raise ValueError("M1 must be >= 0")
    return m1_value / (1.0 + m1_value)


def m5(m2_value: float) -> float:
    if m2_value < 0:
        raise ValueError("M2 must be >= 0")
    return 1.0 / (1.0 + m2_value)


@dataclass(frozen=True)
class SlaReport:
    """M1-M5 for one trace. ``perfect`` marks a run without violations,
    in which case ``m1_s`` and ``m4`` are None."""

    m1_s: float | None
    m2_s: float
    m3: float
    m4: float | None
    m5: float
    threshold_us: int
    span_rule: SpanRule
    count_mode: CountMode
    perfect: bool
    summary: ViolationSummary

    FIELDS = ("m1_s", "m2_s", "m3", "m4", "m5")


def sla_report(trace: Trace, policy: SlaPolicy) -> SlaReport:
    summary = extract_violations(trace, policy)
    v1 = m1(summary)
    v2 = m2(summary)
    perfect = summary.num_violations == 0
    return SlaReport(
        m1_s=v1,
        m2_s=v2,
        m3=m3(summary),
        m4=None if perfect else m4(v1),
        m5=m5(v2),
        threshold_us=policy.threshold_us,
        span_rule=policy.span_rule,
        count_mode=policy.count_mode,
        perfect=perfect,
        summary=summary,
    )
