"""Acceptance criteria, one test each. Run with ``pytest tests/test_acceptance.py -s``
to see the PASS/FAIL line printed per criterion."""
import math
import random
import time

import numpy as np
import pytest
from scipy import stats

from latemetrics import cli
from latemetrics.autoscalers import ForecasterSpec, ScalerPolicy
from latemetrics.cluster import ClusterSpec, simulate
from latemetrics.conventional import (
    EmptySample,
    conventional_report,
    kurtosis,
    maximum,
    mean,
    median,
    percentile_nearest_rank,
    skewness,
    stddev,
    tail_latency_p98,
)
from latemetrics.core import Interval, SlaPolicy, TaskRecord, Trace, interval_union
from latemetrics.report import build_report, format_report
from latemetrics.sla import extract_violations, m4, m5, sla_report
from latemetrics.workload import DemandSpec, Surge, WorkloadSpec, arrival_arrays, constant_profile, generate_arrivals
from oracles import (
    count_runs,
    full_sort_p98,
    moment_kurt,
    moment_skew,
    naive_mean,
    pop_std,
    random_trace_rows,
    scan_max,
    sorted_median,
    tick_cover,
)

MS = 1000


def verdict(n, ok, detail=""):
    print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())
    assert ok, detail


def _trace(rows, horizon):
    return Trace(tuple(TaskRecord(t, nd, s, s, f) for t, nd, s, f in rows), Interval(0, horizon))


def test_1_metric_identities():
    rng = random.Random(1)
    t0 = time.perf_counter()
    worst = 0.0
    checked_m3 = 0
    for _ in range(1000):
        horizon = rng.randint(2_000, 60_000) * MS
        rows = random_trace_rows(rng, rng.randint(1, 60), rng.randint(1, 5), horizon, rng.randint(50, 600) * MS)
        rep = sla_report(_trace(rows, horizon), SlaPolicy(100 * MS))
        if rep.perfect:
            assert rep.m2_s == 0 and rep.m3 == 1 and rep.m5 == 1
            continue
        worst = max(worst, abs(rep.m4 - rep.m1_s / (1 + rep.m1_s)), abs(rep.m5 - 1 / (1 + rep.m2_s)),
                    abs(rep.m3 - rep.m1_s / (rep.m1_s + rep.m2_s)))
        checked_m3 += 1
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-12 and elapsed < 5 and checked_m3 > 500,
            f"max identity error {worst:.1e}, {checked_m3} traces with violations, {elapsed:.2f}s")


def test_2_reference_values():
    got = {
        "m4(1.754)": (m4(1.754), 0.637),
        "m4(2.217)": (m4(2.217), 0.689),
        "m5(0.878)": (m5(0.878), 0.532),
        "m5(0.980)": (m5(0.980), 0.505),
        "M3 reactive": (1.754 / (1.754 + 0.878), 0.666),
        "M3 proactive": (2.217 / (2.217 + 0.980), 0.693),
    }
    bad = {k: round(v, 4) for k, (v, want) in got.items() if abs(v - want) > 0.002}
    verdict(2, not bad, ", ".join(f"{k}={v:.4f}" for k, (v, _) in got.items()))


def test_3_tick_oracle():
    rng = random.Random(3)
    t0 = time.perf_counter()
    failures = []
    for i in range(200):
        n = rng.randint(1, 10_000) if i % 10 == 0 else rng.randint(1, 2_000)
        horizon = rng.randint(10, 600) * 1000 * MS
        rows = random_trace_rows(rng, n, rng.randint(1, 20), horizon, rng.randint(100, 2000) * MS)
        tr = _trace(rows, horizon)
        s = extract_violations(tr, SlaPolicy(100 * MS))
        viol = [(sb + 100 * MS, f) for _, _, sb, f in rows if f - sb > 100 * MS]
        cover = tick_cover(viol, 0, horizon, MS)
        slack = 2 * count_runs(cover) * MS
        union = interval_union(viol)
        if (s.num_violations != len(viol)
                or abs(s.time_violations.measure - int(cover.sum()) * MS) > slack
                or abs(union.measure - int(cover.sum()) * MS) > slack
                or s.time_violations.measure + s.time_no_violations.measure != horizon):
            failures.append(i)
    elapsed = time.perf_counter() - t0
    verdict(3, not failures and elapsed < 60, f"{200 - len(failures)}/200 traces match, {elapsed:.1f}s")


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_4_conventional_oracles():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(300):
        n = int(rng.integers(4, 1001))
        xs = [float(x) for x in rng.lognormal(-2, 1, n)]
        pairs = [
            (mean(xs), naive_mean(xs)), (median(xs), sorted_median(xs)), (stddev(xs), pop_std(xs)),
            (maximum(xs), scan_max(xs)), (skewness(xs), moment_skew(xs)),
            (kurtosis(xs), moment_kurt(xs)), (tail_latency_p98(xs), full_sort_p98(xs)),
        ]
        worst = max(worst, max(_rel(a, b) for a, b in pairs))
    p98 = percentile_nearest_rank(list(range(1, 101)), 98)
    verdict(4, worst <= 1e-9 and p98 == 98, f"max relative error {worst:.1e}, p98(1..100)={p98}")


SEEDS = range(5)
REACTIVE = ScalerPolicy()
PROACTIVE = ScalerPolicy(kind="proactive", forecaster=ForecasterSpec("overestimator", bias=0.15))
SURGES = tuple(Surge(1800.0 + 3600.0 * i, 60.0, 3.0) for i in range(6))


def _evening(seed, scaler, surges=()):
    spec = WorkloadSpec(duration_s=6 * 3600.0, base_rate=0.766, demand=DemandSpec(0.5, 1.7, 60.0),
                        start_clock_s=17 * 3600.0, surges=surges, seed=seed)
    res = simulate(generate_arrivals(spec), ClusterSpec(), scaler, spec.duration_s)
    return build_report(res.trace, SlaPolicy(100 * MS))


def test_5_directional_reproduction():
    t0 = time.perf_counter()
    checks = {
        "lower mean exec (P)": lambda r, p, rs, ps: p.conventional["mean_s"] < r.conventional["mean_s"],
        "higher M1 (P)": lambda r, p, rs, ps: p.sla["m1_s"] > r.sla["m1_s"],
        "higher M3 (P)": lambda r, p, rs, ps: p.sla["m3"] > r.sla["m3"],
        "higher M4 (P)": lambda r, p, rs, ps: p.sla["m4"] > r.sla["m4"],
        "more node-seconds (P)": lambda r, p, rs, ps: p.resources["node_seconds"] > r.resources["node_seconds"],
        "more violations (R)": lambda r, p, rs, ps: r.resources["num_violations"] > p.resources["num_violations"],
        "more violation time (R)": lambda r, p, rs, ps: r.resources["violation_time_s"] > p.resources["violation_time_s"],
        "surge M2 P >= R": lambda r, p, rs, ps: ps.sla["m2_s"] >= rs.sla["m2_s"],
    }
    wins = dict.fromkeys(checks, 0)
    tasks = []
    for seed in SEEDS:
        r, p = _evening(seed, REACTIVE), _evening(seed, PROACTIVE)
        rs, ps = _evening(seed, REACTIVE, SURGES), _evening(seed, PROACTIVE, SURGES)
        tasks.append(r.resources["num_tasks"])
        for name, fn in checks.items():
            wins[name] += bool(fn(r, p, rs, ps))
    elapsed = time.perf_counter() - t0
    for name, w in wins.items():
        print(f"\n    {name}: {w}/5 seeds")
    ok = all(w >= 4 for w in wins.values()) and elapsed < 120
    verdict(5, ok, f"mean tasks per run {np.mean(tasks):.0f}, {elapsed:.1f}s")


def test_6_determinism(tmp_path, monkeypatch):
    monkeypatch.delenv("LATEMETRICS_SEED", raising=False)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[run]\nseed = 6\n[workload]\nduration = 30min\nstart_clock = 20:00\n"
                   "demand_median = 0.5\ndemand_sigma = 1.7\ndemand_cap = 60s\nbase_rate = 0.766\n"
                   "[scaler]\nkind = proactive\nforecaster = overestimator\n")
    cli.cmd_simulate(cfg, tmp_path / "a")
    cli.cmd_simulate(cfg, tmp_path / "b")
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in (cli.TRACE_FILE, cli.SCALING_LOG_FILE, cli.CPU_FILE, cli.REPORT_FILE))
    verdict(6, same, "trace, scaling log, cpu samples and report byte-identical")


def test_7_workload_statistics():
    spec = WorkloadSpec(duration_s=4 * 86400.0, base_rate=1.45, profile=constant_profile(), seed=7)
    times, _ = arrival_arrays(spec)
    expected = 1.45 * 4 * 86400
    within = abs(times.size - expected) <= 3 * math.sqrt(expected)
    p = stats.kstest(np.diff(times), "expon", args=(0, 1 / 1.45)).pvalue
    verdict(7, within and p > 0.01, f"count {times.size} vs {expected:.0f} (3 sigma {3 * math.sqrt(expected):.0f}), KS p={p:.3f}")


def test_8_degenerate_handling():
    clean = _trace([("a", "n0", 0, 50 * MS), ("b", "n1", 0, 100 * MS)], 1000 * MS)
    rep = build_report(clean, SlaPolicy(100 * MS))
    ok = (rep.sla["m2_s"] == 0 and rep.sla["m3"] == 1 and rep.sla["m5"] == 1
          and rep.sla["perfect"] is True and rep.sla["m1_s"] is None and rep.sla["m4"] is None)
    raised = 0
    for fn in (mean, median, stddev, maximum, skewness, kurtosis, tail_latency_p98):
        with pytest.raises(EmptySample):
            fn([])
        raised += 1
    blank = conventional_report([])
    empty = build_report(Trace((), Interval(0, 1000 * MS)), SlaPolicy(100 * MS))
    text = format_report(empty) + format_report(rep)
    ok = (ok and raised == 7 and "nan" not in text.lower()
          and all(getattr(blank, k) is None for k in blank.FIELDS)
          and set(empty.undefined.values()) == {"empty-sample"})
    verdict(8, ok, "zero violations -> perfect; empty sample -> EmptySample, no NaN")
