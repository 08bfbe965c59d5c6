"""Command-line entry point: ``isac-handover trace`` and ``isac-handover montecarlo``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .handover import PolicyMode
from .linkbudget import all_configurations
from .scenario_io import ScenarioParseError, load_scenario, parse_scenario, serialize_scenario
from .signaling import to_jsonl
from .simengine import MonteCarloSummary, Scenario, TraceLog, run, run_monte_carlo

__all__ = [
    "Mode",
    "RunManifest",
    "emit_montecarlo",
    "emit_trace",
    "load_scenario",
    "main",
    "parse_scenario",
    "serialize_scenario",
]

SEED_ENV = "ISAC_SIM_SEED"
TABLE3_HEADER = (
    "threshold_db",
    "success_enabled",
    "avg_handovers",
    "success_disabled",
    "stderr_enabled",
    "stderr_disabled",
)


class Mode(Enum):
    TRACE = "trace"
    MONTECARLO = "montecarlo"


@dataclass(frozen=True)
class RunManifest:
    """One CLI invocation, with every override already type-checked."""

    scenario: str
    mode: Mode
    out_dir: Path
    seed: Optional[int] = None
    iterations: int = 10_000
    thresholds: tuple[float, ...] = (5.0, 10.0, 15.0)
    policy: Optional[PolicyMode] = None
    soft: Optional[bool] = None
    emit_messages: bool = False

    def load(self) -> Scenario:
        scenario = load_scenario(self.scenario)
        policy = scenario.policy
        if self.policy is not None:
            policy = replace(policy, mode=self.policy)
        if self.soft is not None:
            policy = replace(policy, soft=self.soft)
        seed = self.seed if self.seed is not None else scenario.seed
        return replace(scenario, policy=policy, seed=seed)


def resolve_seed(cli_seed: Optional[int], environ=os.environ) -> Optional[int]:
    """``--seed`` wins; otherwise ``ISAC_SIM_SEED``; otherwise the scenario's own seed."""
    if cli_seed is not None:
        return cli_seed
    raw = environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    return _u64(raw)


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed out of u64 range: {value}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _thresholds(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"thresholds must be comma-separated numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("at least one threshold is required")
    return values


def _fmt(value: float, digits: int = 6) -> str:
    return f"{value:.{digits}f}"


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory is not writable: {path}")
    return path


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def trace_header(log: TraceLog) -> list[str]:
    scene = log.scenario.scene
    cols = ["snapshot", "object_x", "object_y", "active_cfg"]
    cols += [f"decision_metric_db_{c.label}" for c in all_configurations(scene.ap_ids)]
    cols.append("realized_sensing_sinr_db")
    cols += [f"comm_sinr_db_ue{ue}" for ue in log.scenario.comm.ue_ids]
    cols += ["event_flag", "event_cause"]
    return cols


def trace_csv(log: TraceLog) -> str:
    configs = all_configurations(log.scenario.scene.ap_ids)
    ue_ids = log.scenario.comm.ue_ids
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_header(log))
    for row in log.rows:
        metrics = [
            _fmt(row.decision_metric_db[c]) if c in row.decision_metric_db else "" for c in configs
        ]
        comm = [_fmt(row.comm_sinr_db[u]) if u in row.comm_sinr_db else "" for u in ue_ids]
        causes = ";".join(e.trigger.cause.value for e in row.events)
        writer.writerow(
            [row.snapshot, _fmt(row.object_pos.x), _fmt(row.object_pos.y), row.active_cfg.label]
            + metrics
            + [_fmt(row.realized_sensing_sinr_db)]
            + comm
            + [1 if row.events else 0, causes]
        )
    return buf.getvalue()


def trace_summary(log: TraceLog) -> dict:
    s = log.scenario
    realized = [r.realized_sensing_sinr_db for r in log.rows]
    active = [r.active_metric_db for r in log.rows]
    return {
        "scenario": s.name,
        "seed": s.seed,
        "snapshots": len(log.rows),
        "policy": s.policy.mode.value,
        "soft": s.policy.soft,
        "handover_count": len(log.events),
        "config_sequence": [c.label for c in log.config_sequence],
        "events": [
            {
                "snapshot": e.snapshot,
                "from": e.from_cfg.label,
                "to": e.to_cfg.label,
                "cause": e.trigger.cause.value,
                "ue": e.trigger.ue_id,
                "soft": e.soft,
            }
            for e in log.events
        ],
        "messages": {
            "sent": len(log.messages),
            "delivered": len(log.delivered),
            "by_variant": dict(sorted(Counter(m.variant for m in log.messages).items())),
        },
        "min_active_metric_db": round(min(active), 6) if active else None,
        "min_realized_sensing_sinr_db": round(min(realized), 6) if realized else None,
    }


def emit_trace(log: TraceLog, out_dir, messages: bool = True) -> list[Path]:
    """Write trace.csv, summary.json and (optionally) messages.jsonl into ``out_dir``."""
    out = _ensure_dir(Path(out_dir))
    written = [out / "trace.csv", out / "summary.json"]
    _write(written[0], trace_csv(log))
    _write(written[1], json.dumps(trace_summary(log), indent=2, sort_keys=True) + "\n")
    if messages:
        written.append(out / "messages.jsonl")
        _write(written[-1], to_jsonl(log.messages))
    return written


def table3_csv(summary: MonteCarloSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE3_HEADER)
    for r in summary.results:
        writer.writerow(
            [
                f"{r.threshold_db:g}",
                _fmt(r.success_enabled, 3),
                _fmt(r.avg_handovers, 3),
                _fmt(r.success_disabled, 3),
                _fmt(r.stderr_enabled, 4),
                _fmt(r.stderr_disabled, 4),
            ]
        )
    return buf.getvalue()


def montecarlo_summary(summary: MonteCarloSummary, scenario_name: str = "") -> dict:
    return {
        "scenario": scenario_name,
        "seed": summary.seed,
        "iterations": summary.iterations,
        "results": [
            {
                "threshold_db": r.threshold_db,
                "success_enabled": r.success_enabled,
                "success_disabled": r.success_disabled,
                "avg_handovers": r.avg_handovers,
                "stderr_enabled": r.stderr_enabled,
                "stderr_disabled": r.stderr_disabled,
                "trajectory_success_enabled": r.trajectory_success_enabled,
                "trajectory_success_disabled": r.trajectory_success_disabled,
            }
            for r in summary.results
        ],
    }


def emit_montecarlo(summary: MonteCarloSummary, out_dir, scenario_name: str = "") -> list[Path]:
    """Write table3.csv and summary.json into ``out_dir``."""
    out = _ensure_dir(Path(out_dir))
    written = [out / "table3.csv", out / "summary.json"]
    _write(written[0], table3_csv(summary))
    _write(
        written[1],
        json.dumps(montecarlo_summary(summary, scenario_name), indent=2, sort_keys=True) + "\n",
    )
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isac-handover",
        description="Sensing-handover simulator for a multi-AP ISAC network.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)

    def common(p):
        p.add_argument(
            "--scenario", required=True,
            help="scenario YAML file, or a shipped name: scenario1, scenario2",
        )
        p.add_argument("--seed", type=_u64, default=None, help=f"u64 seed (fallback: ${SEED_ENV})")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--policy", choices=[m.value for m in PolicyMode], default=None)
        soft = p.add_mutually_exclusive_group()
        soft.add_argument("--soft", dest="soft", action="store_true", default=None)
        soft.add_argument("--hard", dest="soft", action="store_false")

    trace = sub.add_parser("trace", help="run one trajectory and write its per-snapshot trace")
    common(trace)
    trace.add_argument("--emit-messages", action="store_true", help="also write messages.jsonl")

    mc = sub.add_parser("montecarlo", help="success probability over random UE drops")
    common(mc)
    mc.add_argument("--iterations", type=_positive_int, default=10_000)
    mc.add_argument("--thresholds", type=_thresholds, default=(5.0, 10.0, 15.0),
                    help="comma-separated sensing SINR thresholds in dB")
    return parser


def manifest_from_args(args: argparse.Namespace, environ=os.environ) -> RunManifest:
    mode = Mode(args.mode)
    return RunManifest(
        scenario=args.scenario,
        mode=mode,
        out_dir=args.out,
        seed=resolve_seed(args.seed, environ),
        iterations=getattr(args, "iterations", 10_000),
        thresholds=tuple(getattr(args, "thresholds", (5.0, 10.0, 15.0))),
        policy=PolicyMode(args.policy) if args.policy else None,
        soft=args.soft,
        emit_messages=getattr(args, "emit_messages", False),
    )


def execute(manifest: RunManifest) -> list[Path]:
    scenario = manifest.load()
    if manifest.mode is Mode.TRACE:
        return emit_trace(run(scenario), manifest.out_dir, messages=manifest.emit_messages)
    summary = run_monte_carlo(scenario, manifest.iterations, manifest.thresholds, scenario.seed)
    return emit_montecarlo(summary, manifest.out_dir, scenario.name)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        manifest = manifest_from_args(args)
    except argparse.ArgumentTypeError as exc:
        print(f"isac-handover: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        for path in execute(manifest):
            print(path)
    except (ScenarioParseError, OSError, ValueError) as exc:
        print(f"isac-handover: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
