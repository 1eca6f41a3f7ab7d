"""Shared domain types: integer-microsecond time, intervals, task traces.

All times are integer microseconds. Conversion to float seconds happens only
at the edges (reports, simulator input).
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

US_PER_S = 1_000_000

TRACE_HEADER = "#latemetrics-trace v1"


def to_us(seconds: float) -> int:
    """Round a duration in seconds to integer microseconds."""
    return int(round(seconds * US_PER_S))


def to_seconds(us: int) -> float:
    return us / US_PER_S


class InvalidInterval(ValueError):
    """An interval with start >= end, optionally tagged with its list index."""

    def __init__(self, start: int, end: int, index: int | None = None):
        self.start, self.end, self.index = start, end, index
        where = "" if index is None else f" at index {index}"
        super().__init__(f"invalid interval [{start}, {end}){where}: start must be < end")


@dataclass(frozen=True, slots=True, order=True)
class Interval:
    """Half-open span ``[start, end)`` in microseconds."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise InvalidInterval(self.start, self.end)

    @property
    def measure(self) -> int:
        return self.end - self.start

    def contains(self, other: "Interval") -> bool:
        return self.start <= other.start and other.end <= self.end


IntervalLike = Union[Interval, tuple[int, int]]


@dataclass(frozen=True)
class IntervalSet:
    """Canonical union of intervals: sorted, disjoint and non-adjacent."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "intervals", tuple(self.intervals))
        for a, b in zip(self.intervals, self.intervals[1:]):
            if not a.end < b.start:
                raise ValueError(f"intervals not canonical: {a} followed by {b}")

    @property
    def measure(self) -> int:
        return sum(iv.end - iv.start for iv in self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)


def interval_union(intervals: Iterable[IntervalLike]) -> IntervalSet:
    """Merge intervals into a canonical :class:`IntervalSet`.

    Overlapping and touching intervals (``a.end == b.start``) merge.
    Accepts :class:`Interval` objects or ``(start, end)`` pairs; an invalid
    pair raises :class:`InvalidInterval` carrying its position in the input.
    """
    pairs = []
    for i, iv in enumerate(intervals):
        s, e = (iv.start, iv.end) if isinstance(iv, Interval) else iv
        if not s < e:
            raise InvalidInterval(s, e, i)
        pairs.append((s, e))
    pairs.sort()

    merged: list[Interval] = []
    cur_s = cur_e = None
    for s, e in pairs:
        if cur_e is None:
            cur_s, cur_e = s, e
        elif s <= cur_e:
            if e > cur_e:
                cur_e = e
        else:
            merged.append(Interval(cur_s, cur_e))
            cur_s, cur_e = s, e
    if cur_e is not None:
        merged.append(Interval(cur_s, cur_e))
    return IntervalSet(tuple(merged))


def complement(iset: IntervalSet, horizon: Interval) -> IntervalSet:
    """Gaps of ``iset`` inside ``horizon``. Every member must lie in the horizon."""
    gaps = []
    cursor = horizon.start
    for iv in iset:
        if not horizon.contains(iv):
            raise ValueError(f"interval {iv} escapes horizon {horizon}")
        if iv.start > cursor:
            gaps.append(Interval(cursor, iv.start))
        cursor = iv.end
    if cursor < horizon.end:
        gaps.append(Interval(cursor, horizon.end))
    return IntervalSet(tuple(gaps))


class SpanRule(str, enum.Enum):
    EXCESS_SPAN = "excess"
    FULL_TASK_SPAN = "full"


class CountMode(str, enum.Enum):
    TASKS = "tasks"
    MERGED_SPANS = "spans"


@dataclass(frozen=True)
class SlaPolicy:
    threshold_us: int = 100_000
    span_rule: SpanRule = SpanRule.EXCESS_SPAN
    count_mode: CountMode = CountMode.TASKS

    def __post_init__(self) -> None:
        if self.threshold_us <= 0:
            raise ValueError(f"threshold must be > 0, got {self.threshold_us} us")
        object.__setattr__(self, "span_rule", SpanRule(self.span_rule))
        object.__setattr__(self, "count_mode", CountMode(self.count_mode))

    @property
    def threshold_s(self) -> float:
        return to_seconds(self.threshold_us)


@dataclass(frozen=True, slots=True)
class TaskRecord:
    task_id: str
    node_id: str
    submit_us: int
    start_us: int
    finish_us: int

    def __post_init__(self) -> None:
        if not self.submit_us <= self.start_us <= self.finish_us:
            raise ValueError(
                f"task {self.task_id}: need submit <= start <= finish, got "
                f"{self.submit_us}, {self.start_us}, {self.finish_us}"
            )

    @property
    def exec_us(self) -> int:
        return self.finish_us - self.submit_us

    @property
    def exec_time(self) -> float:
        return to_seconds(self.finish_us - self.submit_us)


@dataclass(frozen=True)
class CpuSample:
    time_us: int
    utilization: float


def _canonical_key(t: TaskRecord):
    return (t.finish_us, t.submit_us, t.task_id)


@dataclass(frozen=True)
class Trace:
    """One experiment run: completed tasks, observation window, node-count steps.

    Tasks are kept sorted by finish time (ties by submit time, then id).
    ``node_timeline`` holds ``(time_us, count)`` change-points.
    """

    tasks: tuple[TaskRecord, ...]
    horizon: Interval
    node_timeline: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        tasks = tuple(sorted(self.tasks, key=_canonical_key))
        object.__setattr__(self, "tasks", tasks)
        object.__setattr__(self, "node_timeline", tuple(tuple(p) for p in self.node_timeline))
        h = self.horizon
        seen = set()
        for t in tasks:
            if t.submit_us < h.start or t.finish_us > h.end:
                raise ValueError(f"task {t.task_id} outside horizon [{h.start}, {h.end})")
            if t.task_id in seen:
                raise ValueError(f"duplicate task id {t.task_id!r}")
            seen.add(t.task_id)
        prev = None
        for time_us, count in self.node_timeline:
            if prev is not None and time_us <= prev:
                raise ValueError("node timeline change-points must be strictly increasing")
            if count < 0:
                raise ValueError("node count must be >= 0")
            prev = time_us

    def exec_times(self) -> list[float]:
        return [t.exec_time for t in self.tasks]

    def node_seconds(self) -> float:
        """Integral of the node-count step function over the horizon."""
        total = 0
        h = self.horizon
        points = self.node_timeline
        for i, (time_us, count) in enumerate(points):
            end = points[i + 1][0] if i + 1 < len(points) else h.end
            lo, hi = max(time_us, h.start), min(end, h.end)
            if hi > lo:
                total += count * (hi - lo)
        return to_seconds(total)

    def trim(self, warmup_us: int) -> "Trace":
        """Drop the first ``warmup_us`` of the horizon and tasks submitted in it."""
        if warmup_us <= 0:
            return self
        start = self.horizon.start + warmup_us
        if start >= self.horizon.end:
            raise ValueError("warmup trim consumes the whole horizon")
        tasks = tuple(t for t in self.tasks if t.submit_us >= start)
        timeline = []
        for time_us, count in self.node_timeline:
            if time_us <= start:
                timeline = [(start, count)]
            else:
                timeline.append((time_us, count))
        return Trace(tasks, Interval(start, self.horizon.end), tuple(timeline))


class TraceFormatError(ValueError):
    def __init__(self, line: int, field_name: str, message: str):
        self.line, self.field_name = line, field_name
        super().__init__(f"line {line}: field {field_name}: {message}")


_TASK_FIELDS = ("task_id", "node_id", "submit_us", "start_us", "finish_us")


def format_trace(trace: Trace) -> str:
    lines = [TRACE_HEADER, f"#horizon {trace.horizon.start},{trace.horizon.end}"]
    for t in trace.tasks:
        lines.append(f"{t.task_id},{t.node_id},{t.submit_us},{t.start_us},{t.finish_us}")
    lines.append("#nodes")
    for time_us, count in trace.node_timeline:
        lines.append(f"{time_us},{count}")
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace(trace))


def _parse_int(text: str, lineno: int, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise TraceFormatError(lineno, name, f"not an integer: {text!r}") from None


def parse_trace(lines: Sequence[str]) -> Trace:
    if not lines or lines[0].rstrip("\n") != TRACE_HEADER:
        raise TraceFormatError(1, "header", f"expected {TRACE_HEADER!r}")
    horizon = None
    tasks = []
    timeline = []
    in_nodes = False
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        if line.startswith("#horizon"):
            parts = line[len("#horizon"):].strip().split(",")
            if len(parts) != 2:
                raise TraceFormatError(lineno, "horizon", "expected start_us,end_us")
            s = _parse_int(parts[0], lineno, "horizon.start_us")
            e = _parse_int(parts[1], lineno, "horizon.end_us")
            try:
                horizon = Interval(s, e)
            except InvalidInterval as exc:
                raise TraceFormatError(lineno, "horizon", str(exc)) from None
            continue
        if line == "#nodes":
            in_nodes = True
            continue
        if line.startswith("#"):
            raise TraceFormatError(lineno, "section", f"unknown directive {line!r}")
        parts = line.split(",")
        if in_nodes:
            if len(parts) != 2:
                raise TraceFormatError(lineno, "nodes", "expected time_us,count")
            timeline.append((_parse_int(parts[0], lineno, "time_us"),
                             _parse_int(parts[1], lineno, "count")))
            continue
        if len(parts) != 5:
            raise TraceFormatError(lineno, "task", f"expected 5 fields, got {len(parts)}")
        task_id, node_id = parts[0], parts[1]
        if not task_id:
            raise TraceFormatError(lineno, "task_id", "empty")
        if not node_id:
            raise TraceFormatError(lineno, "node_id", "empty")
        submit, start, finish = (_parse_int(p, lineno, n) for p, n in zip(parts[2:], _TASK_FIELDS[2:]))
        if start < submit:
            raise TraceFormatError(lineno, "start_us", "start before submit")
        if finish < start:
            raise TraceFormatError(lineno, "finish_us", "finish before start")
        tasks.append(TaskRecord(task_id, node_id, submit, start, finish))
    if horizon is None:
        raise TraceFormatError(len(lines), "horizon", "missing #horizon line")
    try:
        return Trace(tuple(tasks), horizon, tuple(timeline))
    except ValueError as exc:
        raise TraceFormatError(len(lines), "trace", str(exc)) from None


def read_trace(path: str | os.PathLike) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.readlines())
