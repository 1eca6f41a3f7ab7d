"""Command-line entry point: ``latemetrics simulate|analyze|compare``."""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .cluster import SimulationResult, format_cpu_samples, format_scaling_log, simulate
from .config import ConfigError, RunConfig, load_config, parse_duration
from .core import CountMode, SlaPolicy, SpanRule, TraceFormatError, read_trace, to_us, write_trace
from .report import (
    ConventionMismatch,
    MetricsReport,
    build_report,
    compare_reports,
    format_report,
    read_report,
    write_report,
)
from .workload import generate_arrivals

TRACE_FILE = "trace.lm"
SCALING_LOG_FILE = "scaling.log"
CPU_FILE = "cpu.csv"
REPORT_FILE = "report.txt"


def run_metadata(cfg: RunConfig, n_arrivals: int) -> dict:
    sc = cfg.scaler
    return {
        "seed": cfg.seed,
        "scaler": sc.kind.value,
        "forecaster": sc.forecaster.kind.value if sc.kind.value == "proactive" else "none",
        "forecaster_bias": sc.forecaster.bias,
        "up_threshold": sc.up_threshold,
        "down_threshold": sc.down_threshold,
        "history_len": sc.history_len,
        "lead_time_s": sc.lead_time_s,
        "cooldown_s": sc.cooldown_s,
        "base_nodes": cfg.cluster.base_nodes,
        "elastic_nodes_max": cfg.cluster.elastic_nodes_max,
        "startup_delay_s": cfg.cluster.startup_delay_s,
        "duration_s": cfg.workload.duration_s,
        "start_clock_s": cfg.workload.start_clock_s,
        "base_rate": cfg.workload.base_rate,
        "arrivals": n_arrivals,
    }


def run_config(cfg: RunConfig) -> tuple[SimulationResult, MetricsReport]:
    arrivals = generate_arrivals(cfg.workload)
    result = simulate(arrivals, cfg.cluster, cfg.scaler, cfg.workload.duration_s)
    report = build_report(result.trace, cfg.sla, cfg.warmup_us, run_metadata(cfg, len(arrivals)))
    return result, report


def cmd_simulate(config_path, out_dir) -> MetricsReport:
    cfg = load_config(config_path)
    result, report = run_config(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace(result.trace, out / TRACE_FILE)
    (out / SCALING_LOG_FILE).write_text(format_scaling_log(result.scaling_log), encoding="utf-8")
    (out / CPU_FILE).write_text(format_cpu_samples(result.cpu_samples), encoding="utf-8")
    write_report(report, out / REPORT_FILE)
    return report


def cmd_analyze(trace_path, threshold_s: float = 0.1, warmup_s: float = 0.0,
                span_rule: str = "excess", count_mode: str = "tasks") -> MetricsReport:
    trace = read_trace(trace_path)
    policy = SlaPolicy(to_us(threshold_s), SpanRule(span_rule), CountMode(count_mode))
    return build_report(trace, policy, to_us(warmup_s), {"source": os.path.basename(str(trace_path))})


def _label(path) -> str:
    p = Path(path)
    if p.stem == "report" and p.parent.name:
        return p.parent.name
    return p.stem or str(p)


def cmd_compare(report_a, report_b, fmt: str = "table") -> str:
    a, b = read_report(report_a), read_report(report_b)
    return compare_reports(a, b, _label(report_a), _label(report_b), fmt)


def _duration_arg(text: str) -> float:
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latemetrics", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an autoscaling simulation from a config file")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--out", required=True, help="output directory")

    p = sub.add_parser("analyze", help="compute conventional and SLA metrics for a trace")
    p.add_argument("trace")
    p.add_argument("-t", "--threshold", type=_duration_arg, default=0.1, help="SLA threshold, e.g. 100ms")
    p.add_argument("--warmup", type=_duration_arg, default=0.0)
    p.add_argument("--span-rule", choices=[r.value for r in SpanRule], default="excess")
    p.add_argument("--count-mode", choices=[m.value for m in CountMode], default="tasks")
    p.add_argument("-o", "--out", help="write the report here instead of stdout")

    p = sub.add_parser("compare", help="side-by-side comparison of two reports")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--format", choices=["table", "csv"], default="table")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            report = cmd_simulate(args.config, args.out)
            print(format_report(report), end="")
        elif args.command == "analyze":
            report = cmd_analyze(args.trace, args.threshold, args.warmup, args.span_rule, args.count_mode)
            if args.out:
                write_report(report, args.out)
            else:
                print(format_report(report), end="")
        else:
            print(cmd_compare(args.report_a, args.report_b, args.format), end="")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConventionMismatch as exc:
        print(f"refusing to compare: {exc}", file=sys.stderr)
        return 3
    except (TraceFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
