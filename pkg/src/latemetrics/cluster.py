"""Discrete-event simulation of an elastic processor-sharing node pool.

Each node serves its tasks under processor sharing: with k tasks present,
each advances at ``capacity / k``. A node keeps a per-task "virtual service"
clock so a task finishes when that clock passes its arrival clock plus its
demand. Simulation state is float seconds; records are rounded to
microseconds, and arrivals are quantized to microseconds before use.
"""
from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Iterable

from .autoscalers import Action, Autoscaler, Decision, ScalerPolicy
from .core import CpuSample, Interval, TaskRecord, Trace, to_us
from .workload import ArrivalEvent

_EPS_WORK = 1e-9


class NodeStatus(str, enum.Enum):
    ACTIVE = "ACTIVE"
    STARTING = "STARTING"
    DRAINING = "DRAINING"
    OFF = "OFF"


@dataclass(frozen=True)
class ClusterSpec:
    base_nodes: int = 5
    elastic_nodes_max: int = 15
    node_capacity: float = 1.0
    startup_delay_s: float = 5.0
    sample_period_s: float = 1.0
    utilization_mode: str = "mean"

    def __post_init__(self) -> None:
        if self.base_nodes < 1:
            raise ValueError("base_nodes must be >= 1")
        if self.elastic_nodes_max < 0:
            raise ValueError("elastic_nodes_max must be >= 0")
        if self.node_capacity <= 0:
            raise ValueError("node_capacity must be > 0")
        if self.startup_delay_s < 0:
            raise ValueError("startup_delay must be >= 0")
        if self.sample_period_s <= 0:
            raise ValueError("sample_period must be > 0")
        if self.utilization_mode not in ("mean", "max"):
            raise ValueError("utilization_mode must be 'mean' or 'max'")

    @property
    def max_nodes(self) -> int:
        return self.base_nodes + self.elastic_nodes_max


@dataclass(frozen=True)
class ScalingEvent:
    time_us: int
    action: str
    node_id: str
    reason: str

    def line(self) -> str:
        return f"{self.time_us},{self.action},{self.node_id},{self.reason}"


class Node:
    __slots__ = ("index", "node_id", "elastic", "status", "ready_at", "capacity",
                 "heap", "v", "sum_fv", "last", "work", "period_work", "next_done")

    def __init__(self, index: int, elastic: bool, capacity: float, width: int):
        self.index = index
        self.node_id = f"n{index:0{width}d}"
        self.elastic = elastic
        self.status = NodeStatus.OFF if elastic else NodeStatus.ACTIVE
        self.ready_at = math.inf
        self.capacity = capacity
        self.heap: list[tuple[float, int]] = []  # (virtual finish, task index)
        self.v = 0.0
        self.sum_fv = 0.0
        self.last = 0.0
        self.work = 0.0
        self.period_work = 0.0
        self.next_done = math.inf

    @property
    def k(self) -> int:
        return len(self.heap)

    def advance(self, now: float) -> None:
        dt = now - self.last
        if dt > 0 and self.heap:
            done = self.capacity * dt
            self.v += done / len(self.heap)
            self.work += done
            self.period_work += done
        self.last = now

    def remaining_work(self) -> float:
        return self.sum_fv - len(self.heap) * self.v

    def _reschedule(self) -> None:
        if self.heap:
            left = max(0.0, self.heap[0][0] - self.v)
            self.next_done = self.last + left * len(self.heap) / self.capacity
        else:
            self.next_done = math.inf

    def admit(self, now: float, task_index: int, demand: float) -> None:
        self.advance(now)
        fv = self.v + demand
        heapq.heappush(self.heap, (fv, task_index))
        self.sum_fv += fv
        self._reschedule()

    def complete(self, now: float) -> list[int]:
        self.advance(now)
        finished = []
        # the head is due when this is called; popping it unconditionally
        # guarantees progress if float rounding leaves it a hair short
        if self.heap:
            fv, idx = heapq.heappop(self.heap)
            self.sum_fv -= fv
            self.v = max(self.v, fv)
            finished.append(idx)
        while self.heap and self.heap[0][0] - self.v <= _EPS_WORK:
            fv, idx = heapq.heappop(self.heap)
            self.sum_fv -= fv
            finished.append(idx)
        if finished and not self.heap:
            self.sum_fv = 0.0
        self._reschedule()
        return finished


class NodePool:
    """Node lifecycle bookkeeping: OFF -> STARTING -> ACTIVE -> DRAINING -> OFF."""

    def __init__(self, spec: ClusterSpec):
        self.spec = spec
        width = max(2, len(str(spec.max_nodes - 1)))
        self.nodes = [Node(i, i >= spec.base_nodes, spec.node_capacity, width)
                      for i in range(spec.max_nodes)]

    def count(self) -> int:
        return sum(1 for n in self.nodes if n.status is not NodeStatus.OFF)

    def active(self) -> list[Node]:
        return [n for n in self.nodes if n.status is NodeStatus.ACTIVE]

    def scale_up(self, n: int, now: float, reason: str) -> list[ScalingEvent]:
        events = []
        t_us = to_us(now)
        for _ in range(n):
            node = next((x for x in self.nodes if x.elastic and x.status is NodeStatus.OFF), None)
            if node is None:
                events.append(ScalingEvent(t_us, "SATURATED", "-", reason))
                break
            node.status = NodeStatus.STARTING
            node.ready_at = now + self.spec.startup_delay_s
            node.last = now
            events.append(ScalingEvent(t_us, "SCALE_UP", node.node_id, reason))
        return events

    def scale_down(self, n: int, now: float, reason: str) -> list[ScalingEvent]:
        events = []
        t_us = to_us(now)
        for _ in range(n):
            node = next((x for x in reversed(self.nodes)
                         if x.elastic and x.status is NodeStatus.ACTIVE), None)
            if node is None:
                events.append(ScalingEvent(t_us, "FLOOR", "-", reason))
                break
            node.status = NodeStatus.DRAINING
            events.append(ScalingEvent(t_us, "SCALE_DOWN", node.node_id, reason))
            if not node.heap:
                node.status = NodeStatus.OFF
                events.append(ScalingEvent(t_us, "OFF", node.node_id, "drained"))
        return events

    def activate_ready(self, now: float) -> list[ScalingEvent]:
        events = []
        for node in self.nodes:
            if node.status is NodeStatus.STARTING and node.ready_at <= now:
                node.status = NodeStatus.ACTIVE
                node.ready_at = math.inf
                node.last = now
                events.append(ScalingEvent(to_us(now), "READY", node.node_id, "startup complete"))
        return events

    def next_ready(self) -> float:
        return min((n.ready_at for n in self.nodes if n.status is NodeStatus.STARTING), default=math.inf)


def scaling_actuator(decision: Decision, pool: NodePool, now: float) -> list[ScalingEvent]:
    """Apply a scaling decision to the pool, returning the log entries.

    Requests clamp to what is available; base nodes are never drained.
    """
    reason = "" if decision.signal is None else f"signal={decision.signal:.4f}"
    if decision.action is Action.UP:
        return pool.scale_up(decision.count, now, reason)
    if decision.action is Action.DOWN:
        return pool.scale_down(decision.count, now, reason)
    return []


@dataclass
class SimulationResult:
    trace: Trace
    cpu_samples: list[CpuSample]
    scaling_log: list[ScalingEvent]
    total_demand: float
    total_work: float


class WorkloadBeyondHorizon(ValueError):
    pass


def simulate(arrivals: Iterable[ArrivalEvent], cluster: ClusterSpec, scaler: ScalerPolicy,
             duration_s: float) -> SimulationResult:
    """Run the event loop over ``[0, duration_s)`` and drain remaining work.

    Ordering at equal timestamps: completions, node readiness, scaler tick,
    arrivals. Each arrival joins the ACTIVE node with the least remaining
    work (lowest index on ties).
    """
    duration_us = to_us(duration_s)
    arr = []
    for a in arrivals:
        t_us = to_us(a.time)
        if t_us < 0 or t_us >= duration_us:
            raise WorkloadBeyondHorizon(f"arrival at {a.time}s outside [0, {duration_s})")
        if a.demand_cpu_s <= 0:
            raise ValueError("task demand must be > 0")
        arr.append((t_us, a.demand_cpu_s))
    if any(b[0] < a[0] for a, b in zip(arr, arr[1:])):
        raise ValueError("arrivals must be time-ordered")

    pool = NodePool(cluster)
    nodes = pool.nodes
    scaler_state = Autoscaler(scaler, cluster.sample_period_s)
    period = cluster.sample_period_s
    cooldown = scaler.cooldown_s

    submit_us = [t for t, _ in arr]
    placed: list[str] = [""] * len(arr)
    records: list[TaskRecord] = []
    samples: list[CpuSample] = []
    log: list[ScalingEvent] = []
    timeline: list[tuple[int, int]] = [(0, pool.count())]
    last_action = {Action.UP: -math.inf, Action.DOWN: -math.inf}
    total_demand = math.fsum(d for _, d in arr)

    def note_count(now: float) -> None:
        c = pool.count()
        t_us = to_us(now)
        if c != timeline[-1][1]:
            if timeline[-1][0] == t_us:
                timeline[-1] = (t_us, c)
                if len(timeline) > 1 and timeline[-2][1] == c:
                    timeline.pop()
            else:
                timeline.append((t_us, c))

    ai = 0
    tick = 1
    n_arr = len(arr)
    while True:
        t_arr = submit_us[ai] / 1e6 if ai < n_arr else math.inf
        busy = False
        t_done = math.inf
        done_node = None
        for node in nodes:
            if node.heap:
                busy = True
                if node.next_done < t_done:
                    t_done, done_node = node.next_done, node
        t_ready = pool.next_ready()
        t_tick = tick * period
        if ai >= n_arr and not busy and t_tick > duration_s:
            break

        if t_done <= t_ready and t_done <= t_tick and t_done <= t_arr:
            now = t_done
            for idx in done_node.complete(now):
                f_us = max(to_us(now), submit_us[idx])
                records.append(TaskRecord(str(idx), placed[idx], submit_us[idx], submit_us[idx], f_us))
            if done_node.status is NodeStatus.DRAINING and not done_node.heap:
                done_node.status = NodeStatus.OFF
                log.append(ScalingEvent(to_us(now), "OFF", done_node.node_id, "drained"))
                note_count(now)
        elif t_ready <= t_tick and t_ready <= t_arr:
            now = t_ready
            log.extend(pool.activate_ready(now))
        elif t_tick <= t_arr:
            now = t_tick
            tick += 1
            utils = []
            for node in nodes:
                node.advance(now)
                if node.status is NodeStatus.ACTIVE:
                    utils.append(min(1.0, node.period_work / (node.capacity * period)))
                node.period_work = 0.0
            if cluster.utilization_mode == "max":
                u = max(utils)
            else:
                u = math.fsum(utils) / len(utils)
            sample = CpuSample(to_us(now), min(1.0, max(0.0, u)))
            samples.append(sample)
            decision = scaler_state.observe(sample)
            if not decision.is_hold and now - last_action[decision.action] >= cooldown:
                last_action[decision.action] = now
                log.extend(scaling_actuator(decision, pool, now))
                note_count(now)
        else:
            now = t_arr
            target = None
            best = math.inf
            for node in nodes:
                if node.status is NodeStatus.ACTIVE:
                    node.advance(now)
                    w = node.remaining_work()
                    if w < best - _EPS_WORK:
                        best, target = w, node
            target.admit(now, ai, arr[ai][1])
            placed[ai] = target.node_id
            ai += 1

    end_us = max([duration_us] + [r.finish_us for r in records])
    trace = Trace(tuple(records), Interval(0, end_us), tuple(timeline))
    total_work = math.fsum(n.work for n in nodes)
    return SimulationResult(trace, samples, log, total_demand, total_work)


def format_scaling_log(events: Iterable[ScalingEvent]) -> str:
    return "".join(e.line() + "\n" for e in events)


def format_cpu_samples(samples: Iterable[CpuSample]) -> str:
    return "".join(f"{s.time_us},{s.utilization:.6f}\n" for s in samples)

