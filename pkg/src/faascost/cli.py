"""Command line front end: bill, analyze, simulate, profile.

Results are plain CSV/JSON files. A run that writes into an output
directory also writes ``run.json`` there describing the inputs: the
subcommand, resolved config paths, the seed, SHA-256 digests of every
input file, and the tool version, so a result directory is
self-describing. Given identical inputs and seed, output files are
byte-identical across reruns; the manifest's ``wall_time_s`` field is
the one exception.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
import time
from decimal import Decimal
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import yaml

from faascost import __version__
from faascost.money import usd_string
from faascost.billing import (
    BillingError,
    compute_cost,
    fee_equivalent_walltime,
    normalize_allocation,
    resolve_platform,
    resolve_platform_path,
)
from faascost.billing.model import allocation
from faascost.profiler import (
    ProbeConfig,
    ProfilerError,
    PUBLISHED_PLATFORM_SCHEDULERS,
    ReferenceSchedParams,
    analyze as analyze_events,
    events_from_csv,
    events_to_csv,
    fingerprint_report,
    probe,
    replay_probe,
)
from faascost.sched import (
    BandwidthControlConfig,
    SchedulingError,
    TaskSpec,
    closed_form_duration,
    duration_curve,
    fraction_grid,
    quantization_breakpoints,
    simulate,
)
from faascost.sched.types import to_us
from faascost.traces import (
    IngestStats,
    InvocationRecord,
    RoundingPolicy,
    SchemaMap,
    cold_start_differential,
    inflation_analysis,
    ingest_trace,
    rounding_up_stats,
    utilization_correlation,
)

_ANALYSES = ("inflation", "correlation", "cold-start", "roundup")
_SCHEMA_KEYS = (
    "columns",
    "duration_unit",
    "timestamp_unit",
    "memory_unit",
    "memory_usage_semantics",
    "delimiter",
)


class CliError(Exception):
    """Raised for usage problems detected after argument parsing."""


# ---------------------------------------------------------------- helpers


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    out_dir: Path,
    subcommand: str,
    *,
    seed: int,
    started: float,
    config_paths: Sequence[Path] = (),
    inputs: Sequence[Path] = (),
    outputs: Sequence[Path] = (),
) -> None:
    manifest = {
        "subcommand": subcommand,
        "tool_version": __version__,
        "seed": seed,
        "config_paths": sorted(str(p) for p in config_paths),
        "input_digests": {str(p): _sha256(p) for p in sorted(inputs)},
        "outputs": sorted(p.name for p in outputs),
        "wall_time_s": round(time.monotonic() - started, 6),
    }
    path = out_dir / "run.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_json(doc: dict, path: Optional[Path]) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _write_rows(
    rows: List[dict],
    fieldnames: Sequence[str],
    fmt: str,
    path: Optional[Path],
) -> None:
    """Rows as CSV (header + one line each) or as a JSON array."""
    if fmt == "json":
        text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
    else:
        buf = []
        sink = _StringSink(buf)
        writer = csv.DictWriter(sink, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = "".join(buf)
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


class _StringSink:
    def __init__(self, buf: List[str]) -> None:
        self._buf = buf

    def write(self, text: str) -> None:
        self._buf.append(text)


def _table_path(out_dir: Optional[Path], stem: str, fmt: str) -> Optional[Path]:
    if out_dir is None:
        return None
    return out_dir / f"{stem}.{'json' if fmt == 'json' else 'csv'}"


def _slug(number_text: str) -> str:
    # "2.5" -> "2_5" for filenames; trims a trailing ".0".
    text = number_text.strip()
    if text.endswith(".0"):
        text = text[:-2]
    return text.replace(".", "_")


def _split_list(raw: str) -> List[str]:
    items = [part.strip() for part in raw.split(",") if part.strip()]
    if not items:
        raise CliError(f"empty list argument: {raw!r}")
    return items


def _ensure_out_dir(args: argparse.Namespace) -> Path:
    if args.out_dir is None:
        raise CliError("this command writes multiple files; pass --out-dir")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_schema(path: Optional[str]) -> Optional[SchemaMap]:
    if path is None:
        return None
    source = Path(path)
    with open(source, "rb") as fh:
        doc = json.load(fh) if source.suffix == ".json" else yaml.safe_load(fh)
    if not isinstance(doc, dict) or "columns" not in doc:
        raise CliError(f"{path}: schema file must be a mapping with a 'columns' key")
    unknown = sorted(set(doc) - set(_SCHEMA_KEYS))
    if unknown:
        raise CliError(f"{path}: unknown schema keys: {unknown}")
    return SchemaMap(**doc)


# ------------------------------------------------------------------ bill


def _bill_row(record, config, normalize: bool) -> dict:
    if normalize:
        record = dataclasses.replace(
            record, alloc=normalize_allocation(record.alloc, config)
        )
    breakdown = compute_cost(record, config)
    doc = breakdown.as_dict()
    return {
        "function_id": record.function_id,
        "instance_id": record.instance_id,
        "arrival_ts_ms": record.arrival_ts_ms,
        "exec_duration_ms": record.exec_duration_ms,
        "billable_time_ms": doc["billable_time_ms"],
        "fee_usd": doc["fee_usd"],
        "alloc_usd": usd_string(
            sum((usd for _, usd in breakdown.alloc_terms.values()), Decimal(0))
        ),
        "usage_usd": usd_string(
            sum((usd for _, usd in breakdown.usage_terms.values()), Decimal(0))
        ),
        "total_usd": doc["total_usd"],
    }


def cmd_bill(args: argparse.Namespace) -> int:
    started = time.monotonic()
    config_path = resolve_platform_path(args.platform, args.config_dir)
    config = resolve_platform(args.platform, args.config_dir)
    normalize = not args.no_normalize

    if args.records is not None:
        records_path = Path(args.records)
        schema = _load_schema(args.schema)
        rows = [
            _bill_row(record, config, normalize)
            for record in ingest_trace(records_path, schema)
        ]
        out_dir = Path(args.out_dir) if args.out_dir else None
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
        path = _table_path(out_dir, "bills", args.format)
        fieldnames = [
            "function_id",
            "instance_id",
            "arrival_ts_ms",
            "exec_duration_ms",
            "billable_time_ms",
            "fee_usd",
            "alloc_usd",
            "usage_usd",
            "total_usd",
        ]
        _write_rows(rows, fieldnames, args.format, path)
        if out_dir is not None:
            inputs = [records_path] + ([Path(args.schema)] if args.schema else [])
            _write_manifest(
                out_dir,
                "bill",
                seed=args.seed,
                started=started,
                config_paths=[config_path],
                inputs=inputs,
                outputs=[path],
            )
        return 0

    alloc = allocation(vcpus=str(args.vcpus), memory_mb=str(args.mem_mb))
    if normalize:
        alloc = normalize_allocation(alloc, config)
    record = InvocationRecord(
        function_id="cli",
        instance_id="cli-0",
        arrival_ts_ms=0.0,
        exec_duration_ms=args.exec_ms,
        init_duration_ms=args.init_ms,
        is_cold_start=args.init_ms > 0,
        alloc=alloc,
        cpu_usage_avg_vcpus=args.cpu_avg_vcpus,
        mem_usage_mb=args.mem_used_mb,
    )
    breakdown = compute_cost(record, config)
    doc = breakdown.as_dict()
    doc["platform"] = config.name
    doc["alloc"] = {"vcpus": str(alloc.vcpus), "memory_mb": str(alloc.memory_mb)}
    try:
        doc["fee_equivalent_walltime_ms"] = f"{fee_equivalent_walltime(config, alloc):.6f}"
    except BillingError:
        pass
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "bill.json"
        _write_json(doc, path)
        _write_manifest(
            out_dir,
            "bill",
            seed=args.seed,
            started=started,
            config_paths=[config_path],
            outputs=[path],
        )
    else:
        _write_json(doc, None)
    return 0


# --------------------------------------------------------------- analyze


def _flatten_sketch(prefix: str, block: Optional[dict], row: dict) -> None:
    for stat in ("mean", "p50", "p90", "p99"):
        row[f"{prefix}_{stat}"] = None if block is None else block.get(stat)


def cmd_analyze(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = _ensure_out_dir(args)
    trace_path = Path(args.trace)
    schema = _load_schema(args.schema)
    analyses = _split_list(args.analyses)
    for name in analyses:
        if name not in _ANALYSES:
            raise CliError(f"unknown analysis {name!r}; choose from {_ANALYSES}")

    stats = IngestStats()
    records = list(
        ingest_trace(trace_path, schema, drop_zero_cpu=args.drop_zero_cpu, stats=stats)
    )
    report: Dict[str, object] = {
        "trace": str(trace_path),
        "n_records": len(records),
        "ingest": {
            "rows_read": stats.rows_read,
            "malformed_skipped": stats.malformed_skipped,
            "zero_cpu_filtered": stats.zero_cpu_filtered,
        },
    }
    config_paths: List[Path] = []
    outputs: List[Path] = []

    if "inflation" in analyses:
        rows = []
        blocks = []
        for name in _split_list(args.platforms):
            config_path = resolve_platform_path(name, args.config_dir)
            config_paths.append(config_path)
            config = resolve_platform(name, args.config_dir)
            rep = inflation_analysis(records, config, mapping=args.mapping)
            doc = rep.as_dict()
            blocks.append(doc)
            row = {
                "platform": doc["platform"],
                "n": doc["n"],
                "mean_inflation_cpu": doc["mean_inflation_cpu"],
                "mean_inflation_mem": doc["mean_inflation_mem"],
                "actual_vcpu_s_total": doc["actual_vcpu_s_total"],
                "billable_vcpu_s_total": doc["billable_vcpu_s_total"],
                "actual_gb_s_total": doc["actual_gb_s_total"],
                "billable_gb_s_total": doc["billable_gb_s_total"],
            }
            _flatten_sketch("billable_vcpu_s", doc["billable_vcpu_s"], row)
            _flatten_sketch("billable_gb_s", doc["billable_gb_s"], row)
            rows.append(row)
        path = _table_path(out_dir, "inflation", args.format)
        _write_rows(rows, list(rows[0].keys()), args.format, path)
        outputs.append(path)
        report["inflation"] = blocks

    if "correlation" in analyses:
        corr = utilization_correlation(records, seed=args.seed)
        path = _table_path(out_dir, "utilization_correlation", args.format)
        doc = corr.as_dict()
        _write_rows([doc], list(doc.keys()), args.format, path)
        outputs.append(path)
        if corr.scatter:
            spath = _table_path(out_dir, "utilization_scatter", args.format)
            srows = [
                {"cpu_utilization": x, "mem_utilization": y} for x, y in corr.scatter
            ]
            _write_rows(srows, ["cpu_utilization", "mem_utilization"], args.format, spath)
            outputs.append(spath)
        report["correlation"] = doc

    if "cold-start" in analyses:
        cold = cold_start_differential(records, session_gap_ms=args.session_gap_ms)
        doc = cold.as_dict()
        row = {k: v for k, v in doc.items() if not isinstance(v, (dict, list))}
        row["flags"] = ";".join(doc["flags"])
        path = _table_path(out_dir, "cold_start", args.format)
        _write_rows([row], list(row.keys()), args.format, path)
        outputs.append(path)
        report["cold_start"] = doc

    if "roundup" in analyses:
        policies = []
        for gran in _split_list(args.roundup_ms):
            name = f"{gran}ms"
            if float(args.roundup_cutoff_ms) > 0:
                name += f"_min{args.roundup_cutoff_ms}ms"
            if args.roundup_mem_gb is not None:
                name += f"_mem{args.roundup_mem_gb}gb"
            policies.append(
                RoundingPolicy(
                    name=name,
                    time_granularity_ms=float(gran),
                    time_min_cutoff_ms=float(args.roundup_cutoff_ms),
                    mem_granularity_gb=(
                        None
                        if args.roundup_mem_gb is None
                        else float(args.roundup_mem_gb)
                    ),
                )
            )
        stats_rows = rounding_up_stats(records, policies)
        docs = [s.as_dict() for s in stats_rows]
        path = _table_path(out_dir, "rounding_up", args.format)
        _write_rows(docs, list(docs[0].keys()), args.format, path)
        outputs.append(path)
        report["rounding_up"] = docs

    report_path = out_dir / "report.json"
    _write_json(report, report_path)
    outputs.append(report_path)
    inputs = [trace_path] + ([Path(args.schema)] if args.schema else [])
    _write_manifest(
        out_dir,
        "analyze",
        seed=args.seed,
        started=started,
        config_paths=config_paths,
        inputs=inputs,
        outputs=outputs,
    )
    return 0


# -------------------------------------------------------------- simulate


def _quantized_quota(fraction: float, period_us: int) -> int:
    quota_us = round(fraction * period_us)
    return min(max(quota_us, 1), period_us)


def _us_str(us: int) -> str:
    return f"{us // 1000}.{us % 1000:03d}"


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    task = TaskSpec(cpu_time_ms=args.t)
    periods = _split_list(args.p)
    lagged = not args.exact_accounting

    if args.q is not None:
        # Single-run timeline mode.
        if len(periods) != 1:
            raise CliError("--q takes exactly one --p value")
        config = BandwidthControlConfig(
            period_ms=periods[0],
            quota_ms=args.q,
            tick_hz=args.tick_hz,
            slice_ms=args.slice_ms,
            flavor=args.flavor,
        )
        timeline = simulate(task, config, lagged_accounting=lagged)
        doc = timeline.as_dict()
        doc["closed_form_completion_ms"] = closed_form_duration(
            task, periods[0], args.q
        )
        doc["n_throttles"] = len(timeline.throttle_durations_us)
        out_dir = Path(args.out_dir) if args.out_dir else None
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            path = out_dir / "timeline.json"
            _write_json(doc, path)
            _write_manifest(
                out_dir, "simulate", seed=args.seed, started=started, outputs=[path]
            )
        else:
            _write_json(doc, None)
        return 0

    out_dir = _ensure_out_dir(args)
    fractions = fraction_grid(args.grid, lo=args.f_lo)
    outputs: List[Path] = []
    for period in periods:
        stem = f"duration_curve_p{_slug(period)}"
        if args.closed_form_only:
            period_us = to_us(period, "period_ms")
            rows = []
            for f in fractions:
                quota_us = _quantized_quota(f, period_us)
                completion = closed_form_duration(task, period, _us_str(quota_us))
                rows.append(
                    {
                        "f": f,
                        "quota_ms": quota_us / 1000.0,
                        "completion_ms": completion,
                        "ideal_ms": float(task.cpu_time_ms) / (quota_us / period_us),
                    }
                )
            fieldnames = ["f", "quota_ms", "completion_ms", "ideal_ms"]
            path = _table_path(out_dir, stem, args.format)
            _write_rows(rows, fieldnames, args.format, path)
            outputs.append(path)
            continue
        curve = duration_curve(
            task,
            period,
            fractions,
            tick_hz=args.tick_hz,
            slice_ms=args.slice_ms,
            flavor=args.flavor,
            lagged_accounting=lagged,
        )
        rows = curve.csv_rows()
        fieldnames = ["f", "quota_ms", "completion_ms", "ideal_ms", "n_throttles"]
        path = _table_path(out_dir, stem, args.format)
        _write_rows(rows, fieldnames, args.format, path)
        outputs.append(path)
        if args.breakpoints:
            rep = quantization_breakpoints(
                curve, mem_per_vcpu_mb=args.mem_per_vcpu_mb
            )
            brows = [
                {
                    "fraction": b.fraction,
                    "completion_drop_ms": b.completion_drop_ms,
                    "memory_mb": b.memory_mb,
                }
                for b in rep.breakpoints
            ]
            bpath = _table_path(out_dir, f"breakpoints_p{_slug(period)}", args.format)
            _write_rows(
                brows, ["fraction", "completion_drop_ms", "memory_mb"], args.format, bpath
            )
            outputs.append(bpath)
            for warning in rep.warnings:
                print(f"warning: P={period}: {warning}", file=sys.stderr)
    _write_manifest(
        out_dir, "simulate", seed=args.seed, started=started, outputs=outputs
    )
    return 0


# --------------------------------------------------------------- profile


def _events_out(args: argparse.Namespace) -> Optional[Path]:
    if args.out is not None:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return out_dir / "events.csv"
    return None


def _write_probe_result(result, args: argparse.Namespace, started: float) -> None:
    path = _events_out(args)
    if path is None:
        events_to_csv(result.events, sys.stdout)
        return
    events_to_csv(result.events, str(path))
    summary = {
        "n_events": len(result.events),
        "total_runtime_ms": result.total_runtime_ms,
        "truncated": result.truncated,
        "loop_iterations": result.loop_iterations,
        "notes": list(result.notes),
    }
    _write_json(summary, path.with_name("probe_summary.json"))
    if args.out_dir is not None:
        _write_manifest(
            Path(args.out_dir),
            "profile",
            seed=args.seed,
            started=started,
            outputs=[path, path.with_name("probe_summary.json")],
        )


def _runtime_for(events_path: Path, runtime_ms: Optional[float], events) -> float:
    if runtime_ms is not None:
        return runtime_ms
    sidecar = events_path.with_name("probe_summary.json")
    if sidecar.exists():
        doc = json.loads(sidecar.read_text())
        return float(doc["total_runtime_ms"])
    if not events:
        raise CliError("--runtime-ms is required when the event log is empty")
    fallback = events[-1].detected_at_ms
    print(
        f"warning: no --runtime-ms given; using last event time "
        f"{fallback:.3f} ms as the total runtime",
        file=sys.stderr,
    )
    return fallback


def _load_reference(path: Optional[str]) -> Dict[str, ReferenceSchedParams]:
    if path is None:
        return PUBLISHED_PLATFORM_SCHEDULERS
    with open(path, "rb") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise CliError(f"{path}: reference table must map platform -> parameters")
    table = {}
    for platform, params in doc.items():
        table[platform] = ReferenceSchedParams(
            platform=platform,
            period_ms=float(params["period_ms"]),
            tick_hz=int(params["tick_hz"]),
            note=str(params.get("note", "")),
        )
    return table


def cmd_profile(args: argparse.Namespace) -> int:
    started = time.monotonic()
    if args.action == "run":
        cfg = ProbeConfig(
            exec_duration_ms=args.duration_ms, gap_threshold_us=args.gap_threshold_us
        )
        result = probe(cfg)
        _write_probe_result(result, args, started)
        return 0

    if args.action == "replay":
        task = TaskSpec(cpu_time_ms=args.t)
        config = BandwidthControlConfig(
            period_ms=args.p,
            quota_ms=args.q,
            tick_hz=args.tick_hz,
            slice_ms=args.slice_ms,
            flavor=args.flavor,
        )
        timeline = simulate(task, config)
        cfg = ProbeConfig(
            exec_duration_ms=timeline.completion_ms,
            gap_threshold_us=args.gap_threshold_us,
        )
        result = replay_probe(timeline, cfg, step_us=args.step_us)
        _write_probe_result(result, args, started)
        return 0

    # analyze and report both start from a saved event log.
    events_path = Path(getattr(args, "in"))
    events = events_from_csv(str(events_path))
    runtime_ms = _runtime_for(events_path, args.runtime_ms, events)
    fingerprint = analyze_events(
        events, runtime_ms, alignment_tol_us=args.alignment_tol_us
    )
    if args.action == "analyze":
        doc = fingerprint.as_dict()
    else:
        doc = fingerprint_report(fingerprint, reference=_load_reference(args.reference))
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        name = "fingerprint.json" if args.action == "analyze" else "report.json"
        path = out_dir / name
        _write_json(doc, path)
        inputs = [events_path]
        if args.action == "report" and args.reference:
            inputs.append(Path(args.reference))
        _write_manifest(
            out_dir,
            "profile",
            seed=args.seed,
            started=started,
            inputs=inputs,
            outputs=[path],
        )
    else:
        _write_json(doc, None)
    return 0


# ---------------------------------------------------------------- parser


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument("--out-dir", default=None, help="directory for output files")
    parser.add_argument(
        "--format",
        choices=("csv", "json"),
        default="csv",
        help="tabular output format (default csv)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faascost",
        description="Serverless billing, trace analytics, CPU bandwidth "
        "simulation, and scheduler fingerprinting.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bill = sub.add_parser("bill", help="price invocations under a platform config")
    _add_common(bill)
    bill.add_argument("--platform", required=True, help="config name or YAML path")
    bill.add_argument("--config-dir", default=None, help="extra config directory")
    bill.add_argument("--records", default=None, help="trace CSV to bill in batch")
    bill.add_argument("--schema", default=None, help="schema map file for --records")
    bill.add_argument("--mem-mb", default="0", help="allocated memory in MB")
    bill.add_argument("--vcpus", default="0", help="allocated vCPUs")
    bill.add_argument("--exec-ms", type=float, default=0.0, help="execution time")
    bill.add_argument("--init-ms", type=float, default=0.0, help="init time")
    bill.add_argument(
        "--cpu-avg-vcpus", type=float, default=0.0, help="mean vCPUs consumed"
    )
    bill.add_argument(
        "--mem-used-mb", type=float, default=0.0, help="memory consumed in MB"
    )
    bill.add_argument(
        "--no-normalize",
        action="store_true",
        help="bill the allocation exactly as given instead of mapping it "
        "to the platform's knob grid first",
    )
    bill.set_defaults(func=cmd_bill)

    analyze = sub.add_parser("analyze", help="run trace analytics")
    _add_common(analyze)
    analyze.add_argument("--trace", required=True, help="trace CSV (optionally .gz)")
    analyze.add_argument("--schema", default=None, help="schema map YAML/JSON")
    analyze.add_argument(
        "--analyses",
        default=",".join(_ANALYSES),
        help=f"comma list from {_ANALYSES} (default all)",
    )
    analyze.add_argument(
        "--platforms",
        default="aws_lambda",
        help="comma list of platform configs for the inflation analysis",
    )
    analyze.add_argument("--config-dir", default=None, help="extra config directory")
    analyze.add_argument(
        "--mapping",
        choices=("normalize", "direct"),
        default="normalize",
        help="how to map trace allocations onto the platform's knobs",
    )
    analyze.add_argument(
        "--session-gap-ms",
        type=float,
        default=900_000.0,
        help="idle gap that splits an instance into billing sessions",
    )
    analyze.add_argument(
        "--roundup-ms", default="1,100", help="comma list of time granularities"
    )
    analyze.add_argument(
        "--roundup-cutoff-ms", type=float, default=0.0, help="minimum billed time"
    )
    analyze.add_argument(
        "--roundup-mem-gb",
        type=float,
        default=None,
        help="memory size granularity in GB for the roundup policies",
    )
    analyze.add_argument(
        "--drop-zero-cpu",
        action="store_true",
        help="drop records whose average CPU usage is exactly zero",
    )
    analyze.set_defaults(func=cmd_analyze)

    sim = sub.add_parser("simulate", help="CPU bandwidth-control models")
    _add_common(sim)
    sim.add_argument("--t", required=True, help="task CPU time in ms")
    sim.add_argument(
        "--p", required=True, help="enforcement period in ms, or a comma list"
    )
    sim.add_argument(
        "--q", default=None, help="quota in ms; selects single-timeline mode"
    )
    sim.add_argument("--grid", type=int, default=200, help="points in the f sweep")
    sim.add_argument(
        "--f-lo", type=float, default=0.005, help="smallest vCPU fraction in the sweep"
    )
    sim.add_argument("--tick-hz", type=int, default=250, help="scheduler tick rate")
    sim.add_argument("--slice-ms", default="5", help="EEVDF slice length")
    sim.add_argument("--flavor", choices=("cfs", "eevdf"), default="cfs")
    sim.add_argument(
        "--exact-accounting",
        action="store_true",
        help="charge runtime continuously instead of at ticks; the curve "
        "then matches the closed form exactly",
    )
    sim.add_argument(
        "--closed-form-only",
        action="store_true",
        help="evaluate the closed-form duration instead of simulating",
    )
    sim.add_argument(
        "--breakpoints",
        action="store_true",
        help="also emit detected quantization breakpoints per period",
    )
    sim.add_argument(
        "--mem-per-vcpu-mb",
        type=float,
        default=None,
        help="annotate breakpoints with proportional-allocation memory sizes",
    )
    sim.set_defaults(func=cmd_simulate)

    prof = sub.add_parser("profile", help="scheduler fingerprinting")
    prof_sub = prof.add_subparsers(dest="action", required=True)

    prun = prof_sub.add_parser("run", help="run the live throttle probe")
    _add_common(prun)
    prun.add_argument("--duration-ms", type=float, required=True)
    prun.add_argument("--gap-threshold-us", type=int, default=500)
    prun.add_argument("--out", default=None, help="events CSV path")
    prun.set_defaults(func=cmd_profile, action="run")

    prep = prof_sub.add_parser(
        "replay", help="probe a simulated timeline instead of live CPU"
    )
    _add_common(prep)
    prep.add_argument("--t", required=True, help="task CPU time in ms")
    prep.add_argument("--p", required=True, help="enforcement period in ms")
    prep.add_argument("--q", required=True, help="quota in ms")
    prep.add_argument("--tick-hz", type=int, default=250)
    prep.add_argument("--slice-ms", default="5")
    prep.add_argument("--flavor", choices=("cfs", "eevdf"), default="cfs")
    prep.add_argument("--step-us", type=int, default=50)
    prep.add_argument("--gap-threshold-us", type=int, default=500)
    prep.add_argument("--out", default=None, help="events CSV path")
    prep.set_defaults(func=cmd_profile, action="replay")

    pana = prof_sub.add_parser("analyze", help="fingerprint a saved event log")
    _add_common(pana)
    pana.add_argument("--in", required=True, help="events CSV from run/replay")
    pana.add_argument(
        "--runtime-ms",
        type=float,
        default=None,
        help="total on-CPU runtime; read from probe_summary.json when omitted",
    )
    pana.add_argument("--alignment-tol-us", type=float, default=150.0)
    pana.set_defaults(func=cmd_profile, action="analyze")

    prev = prof_sub.add_parser(
        "report", help="fingerprint plus comparison against published schedulers"
    )
    _add_common(prev)
    prev.add_argument("--in", required=True, help="events CSV from run/replay")
    prev.add_argument("--runtime-ms", type=float, default=None)
    prev.add_argument("--alignment-tol-us", type=float, default=150.0)
    prev.add_argument(
        "--reference",
        default=None,
        help="YAML table platform -> {period_ms, tick_hz} overriding the "
        "built-in published values",
    )
    prev.set_defaults(func=cmd_profile, action="report")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BillingError, SchedulingError, ProfilerError, CliError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
