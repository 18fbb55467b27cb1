"""Report files for a finished experiment.

Writes summary.csv (one row per sweep point and replication), one flows_*.csv and one
framemap_*.csv per row, manifest.json (which file and columns hold each result view)
and summary.txt (pass/fail against the streaming rule and the three thresholds).
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import pandas as pd

from ..errors import ReportError
from .experiments import (FLOW_COLUMNS, FRAMEMAP_COLUMNS, SUMMARY_COLUMNS, ExperimentKind, ReportRow,
                          mean_by_point)

logger = logging.getLogger(__name__)

THRESHOLD_MODEL = "rate"
ERROR_THRESHOLD_VALUE = 0.001
ERROR_DEGRADED_VALUE = 0.01
ERROR_TOLERANCE_DB = 1.0
ERROR_DEGRADATION_DB = 3.0
NODE_KNEE_RANGE = (12, 18)
SPEED_NEGLIGIBLE_MAX = 80.0
SPEED_DROP_CHECK = 100.0
QOS_DELAY_MS = 12.0
QOS_JITTER_MS = 5.0

VIEWS: Dict[str, Dict[str, Any]] = {
    "psnr_vs_error": {"experiment": "error_sweep", "file": "summary.csv",
                      "x": "sweep_value", "y": ["mean_y_psnr_db", "codec_y_psnr_db"], "by": "model"},
    "bitrate_vs_error": {"experiment": "error_sweep", "file": "summary.csv",
                         "x": "sweep_value", "y": ["bitrate_bps"], "by": "model"},
    "frame_loss_panels": {"experiment": "error_sweep", "file": "framemap_*.csv",
                          "x": "frame_index", "y": ["outcome", "y_psnr_db"], "by": "flow_id"},
    "throughput_vs_nodes": {"experiment": "node_sweep", "file": "summary.csv",
                            "x": "sweep_value", "y": ["throughput_bps"]},
    "delay_vs_nodes": {"experiment": "node_sweep", "file": "summary.csv",
                       "x": "sweep_value", "y": ["mean_delay_ms", "max_delay_ms"]},
    "jitter_vs_nodes": {"experiment": "node_sweep", "file": "summary.csv",
                        "x": "sweep_value", "y": ["jitter_ms"]},
    "delay_vs_speed": {"experiment": "speed_sweep", "file": "summary.csv",
                       "x": "sweep_value", "y": ["mean_delay_ms"]},
    "jitter_vs_speed": {"experiment": "speed_sweep", "file": "summary.csv",
                        "x": "sweep_value", "y": ["jitter_ms"]},
    "drops_per_node_at_speed": {"experiment": "speed_sweep", "file": "flows_*.csv",
                                "x": "node", "y": ["speed_drops", "corrupt", "queue_drops"]},
    "throughput_per_node_at_speed": {"experiment": "speed_sweep", "file": "flows_*.csv",
                                     "x": "node", "y": ["throughput_bps"]},
}


def table_frame(columns: Sequence[str], records: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    """Records as a DataFrame in column order; booleans become lowercase text."""
    frame = pd.DataFrame(list(records), columns=list(columns))
    for column in [name for name in frame.columns if frame[name].dtype == bool]:
        frame[column] = frame[column].map({True: "true", False: "false"})
    return frame


def write_table(path: Path, columns: Sequence[str], records: Iterable[Dict[str, Any]]) -> None:
    """One CSV file with six-decimal floats, "nan" for missing values and LF line ends."""
    table_frame(columns, records).to_csv(path, index=False, float_format="%.6f", na_rep="nan",
                                         lineterminator="\n", encoding="utf-8")


def _verdict(ok: Optional[bool]) -> str:
    return "N/A " if ok is None else ("PASS" if ok else "FAIL")


def _lookup(points: Dict, model: str, value: float) -> Optional[float]:
    for (m, v), mean in points.items():
        if m == model and math.isclose(v, value, rel_tol=1e-9):
            return mean
    return None


def _nonincreasing(values: Sequence[float]) -> bool:
    return all(b <= a + 1e-9 for a, b in zip(values, values[1:]))


def _nondecreasing(values: Sequence[float]) -> bool:
    return all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def error_threshold_lines(rows: Sequence[ReportRow]) -> List[str]:
    """Threshold verdicts for the rate model; other models are listed without a verdict."""
    lines = []
    psnr = mean_by_point(rows, "mean_y_psnr_db")
    codec = mean_by_point(rows, "codec_y_psnr_db")
    for model in dict.fromkeys(row.model for row in rows):
        values = sorted(v for m, v in psnr if m == model)
        series = [psnr[(model, v)] for v in values]
        if model != THRESHOLD_MODEL:
            points = ", ".join(f"{v:g}: {p:.2f} dB" for v, p in zip(values, series))
            lines.append(f"INFO  [{model}] mean PSNR by error value: {points}")
            continue
        baseline = codec[(model, values[0])]
        at_threshold = _lookup(psnr, model, ERROR_THRESHOLD_VALUE)
        at_degraded = _lookup(psnr, model, ERROR_DEGRADED_VALUE)
        near = None if at_threshold is None else baseline - at_threshold <= ERROR_TOLERANCE_DB
        degraded = None if at_degraded is None else baseline - at_degraded > ERROR_DEGRADATION_DB
        lines.append(f"{_verdict(near)}  [{model}] PSNR at {ERROR_THRESHOLD_VALUE:g} within "
                     f"{ERROR_TOLERANCE_DB:g} dB of lossless ({baseline:.2f} dB)")
        lines.append(f"{_verdict(degraded)}  [{model}] PSNR at {ERROR_DEGRADED_VALUE:g} degraded by more "
                     f"than {ERROR_DEGRADATION_DB:g} dB")
        lines.append(f"{_verdict(_nonincreasing(series))}  [{model}] PSNR nonincreasing across the sweep")
    return lines


def first_violation(rows: Sequence[ReportRow], qos_delay_ms: float = QOS_DELAY_MS,
                    qos_jitter_ms: float = QOS_JITTER_MS) -> Optional[float]:
    """Smallest sweep value at which the streaming rule fails in the replication mean."""
    delay = mean_by_point(rows, "mean_delay_ms")
    jitter = mean_by_point(rows, "jitter_ms")
    for key in sorted(delay, key=lambda k: k[1]):
        if not (delay[key] < qos_delay_ms and jitter[key] < qos_jitter_ms):
            return key[1]
    return None


def node_threshold_lines(rows: Sequence[ReportRow], qos_delay_ms: float = QOS_DELAY_MS,
                         qos_jitter_ms: float = QOS_JITTER_MS) -> List[str]:
    delay = mean_by_point(rows, "mean_delay_ms")
    jitter = mean_by_point(rows, "jitter_ms")
    keys = sorted(delay, key=lambda k: k[1])
    knee = first_violation(rows, qos_delay_ms, qos_jitter_ms)
    low, high = NODE_KNEE_RANGE
    in_range = None if knee is None else low <= knee <= high
    knee_text = "none" if knee is None else f"{knee:g}"
    return [
        f"{_verdict(_nondecreasing([delay[k] for k in keys]))}  delay nondecreasing in node count",
        f"{_verdict(_nondecreasing([jitter[k] for k in keys]))}  jitter nondecreasing in node count",
        f"{_verdict(in_range)}  first streaming-rule violation at {knee_text} nodes "
        f"(expected within [{low}, {high}])",
    ]


def speed_threshold_lines(rows: Sequence[ReportRow]) -> List[str]:
    drops = mean_by_point(rows, "speed_drops")
    slow = [v for k, v in drops.items() if k[1] <= SPEED_NEGLIGIBLE_MAX]
    fast = _lookup(drops, "", SPEED_DROP_CHECK)
    negligible = None if not slow else all(v == 0 for v in slow)
    visible = None if fast is None else fast > 0
    above = sorted((k[1], v) for k, v in drops.items() if k[1] >= SPEED_NEGLIGIBLE_MAX)
    return [
        f"{_verdict(negligible)}  no speed-induced drops up to {SPEED_NEGLIGIBLE_MAX:g} m/s",
        f"{_verdict(visible)}  speed-induced drops at {SPEED_DROP_CHECK:g} m/s",
        f"{_verdict(_nondecreasing([v for _, v in above]) if above else None)}  "
        f"drops nondecreasing above {SPEED_NEGLIGIBLE_MAX:g} m/s",
    ]


def summary_text(rows: Sequence[ReportRow], qos_delay_ms: float = QOS_DELAY_MS,
                 qos_jitter_ms: float = QOS_JITTER_MS) -> str:
    lines = []
    for kind in dict.fromkeys(row.experiment for row in rows):
        subset = [row for row in rows if row.experiment == kind]
        ok = sum(row.qos_ok for row in subset)
        lines.append(f"# {kind}: {len(subset)} runs")
        lines.append(f"{_verdict(ok == len(subset))}  streaming rule (delay < {qos_delay_ms:g} ms and "
                     f"jitter < {qos_jitter_ms:g} ms) held in {ok}/{len(subset)} runs")
        if kind == ExperimentKind.ERROR_SWEEP.value:
            lines.extend(error_threshold_lines(subset))
        elif kind == ExperimentKind.NODE_SWEEP.value:
            lines.extend(node_threshold_lines(subset, qos_delay_ms, qos_jitter_ms))
        else:
            lines.extend(speed_threshold_lines(subset))
        lines.append("")
    return "\n".join(lines)


def manifest(rows: Sequence[ReportRow]) -> Dict[str, Any]:
    kinds = set(row.experiment for row in rows)
    columns = {"summary.csv": SUMMARY_COLUMNS, "flows_*.csv": FLOW_COLUMNS, "framemap_*.csv": FRAMEMAP_COLUMNS}
    views = {}
    for name, view in VIEWS.items():
        if view["experiment"] in kinds:
            files = sorted({row.flow_file if view["file"] == "flows_*.csv" else row.framemap_file
                            for row in rows if row.experiment == view["experiment"]}) \
                if view["file"] != "summary.csv" else ["summary.csv"]
            views[name] = {**view, "files": files, "columns": columns[view["file"]]}
    return {"schema_version": 1, "views": views}


def emit_report(rows: Sequence[ReportRow], out_dir: Union[str, Path], *,
                qos_delay_ms: float = QOS_DELAY_MS, qos_jitter_ms: float = QOS_JITTER_MS) -> List[Path]:
    """
    Write every report file for `rows` into `out_dir` (created if missing).

    Returns:
        List[Path]: Written files, summary.csv first

    Raises:
        ValueError: rows is empty
        ReportError: A file could not be written
    """
    if not rows:
        raise ValueError("emit_report needs at least one row")
    out = Path(out_dir)
    written: List[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        summary = out / "summary.csv"
        write_table(summary, SUMMARY_COLUMNS, (row.summary_record() for row in rows))
        written.append(summary)
        for row in rows:
            flows = out / row.flow_file
            write_table(flows, FLOW_COLUMNS, row.flow_rows)
            framemap = out / row.framemap_file
            write_table(framemap, FRAMEMAP_COLUMNS, row.frame_rows)
            written.extend((flows, framemap))
        text = out / "summary.txt"
        text.write_text(summary_text(rows, qos_delay_ms, qos_jitter_ms), encoding="utf-8")
        manifest_path = out / "manifest.json"
        manifest_path.write_text(json.dumps(manifest(rows), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.extend((text, manifest_path))
    except OSError as exc:
        raise ReportError(f"cannot write report to {out}: {exc}") from exc

    logger.info("report written to %s (%d files)", out, len(written))
    return written
