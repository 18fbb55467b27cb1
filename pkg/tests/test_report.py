import csv
import json

import pytest

from vidnetsim.errors import ReportError
from vidnetsim.services.experiments import (FLOW_COLUMNS, FRAMEMAP_COLUMNS, SUMMARY_COLUMNS, ExperimentKind,
                                            ExperimentSpec, ReportRow, run_error_sweep)
from vidnetsim.services.report import (emit_report, error_threshold_lines, first_violation, manifest,
                                       node_threshold_lines, summary_text, write_table)


@pytest.fixture(scope="module")
def error_rows(small_cfg):
    spec = ExperimentSpec(ExperimentKind.ERROR_SWEEP, (0.001, 0.05), 1)
    return run_error_sweep(small_cfg, spec)


def node_row(n: int, delay: float, jitter: float, replication: int = 0) -> ReportRow:
    return ReportRow(
        experiment="node_sweep", model="", sweep_value=n, replication=replication, seed=1 + replication,
        flows=n, sent=100.0, received=100.0, corrupt=0.0, queue_drops=0.0, deadline_drops=0.0,
        speed_drops=0.0, mean_delay_ms=delay, max_delay_ms=delay, jitter_ms=jitter, throughput_bps=8e5,
        frames_lost=0.0, mean_y_psnr_db=40.0, codec_y_psnr_db=40.0, bitrate_bps=1e6,
        qos_ok=delay < 12 and jitter < 5, flow_file=f"flows_{n}_{replication}.csv",
        framemap_file=f"framemap_{n}_{replication}.csv",
    )


def test_write_table_formats_cells(tmp_path):
    path = tmp_path / "table.csv"
    write_table(path, ["name", "count", "value", "ok"],
                [{"name": "rate", "count": 12, "value": 1.0, "ok": True},
                 {"name": "burst", "count": 3, "value": float("nan"), "ok": False}])
    assert path.read_bytes() == b"name,count,value,ok\nrate,12,1.000000,true\nburst,3,nan,false\n"


def test_write_table_keeps_column_order(tmp_path):
    path = tmp_path / "table.csv"
    write_table(path, ["b", "a"], [{"a": 1, "b": 2}])
    assert path.read_text().splitlines() == ["b,a", "2,1"]


def test_report_files_and_schema(tmp_path, error_rows):
    written = emit_report(error_rows, tmp_path)
    assert written[0] == tmp_path / "summary.csv"
    with open(tmp_path / "summary.csv", newline="") as handle:
        table = list(csv.reader(handle))
    assert table[0] == SUMMARY_COLUMNS
    assert len(table) == len(error_rows) + 1
    assert [row[1] for row in table[1:]] == ["rate", "burst", "rate", "burst"]

    row = error_rows[0]
    with open(tmp_path / row.flow_file, newline="") as handle:
        flows = list(csv.reader(handle))
    assert flows[0] == FLOW_COLUMNS
    assert len(flows) == row.flows + 1
    with open(tmp_path / row.framemap_file, newline="") as handle:
        frames = list(csv.reader(handle))
    assert frames[0] == FRAMEMAP_COLUMNS
    assert len(frames) == row.flows * 10 + 1
    assert row.flow_file == "flows_rate-0.001_0.csv"


def test_report_is_byte_identical_across_runs(tmp_path, small_cfg, error_rows):
    spec = ExperimentSpec(ExperimentKind.ERROR_SWEEP, (0.001, 0.05), 1)
    first, second = tmp_path / "a", tmp_path / "b"
    emit_report(error_rows, first)
    emit_report(run_error_sweep(small_cfg, spec), second)
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_manifest_lists_error_views_only(tmp_path, error_rows):
    emit_report(error_rows, tmp_path)
    data = json.loads((tmp_path / "manifest.json").read_text())
    assert data == manifest(error_rows)
    assert data["schema_version"] == 1
    assert set(data["views"]) == {"psnr_vs_error", "bitrate_vs_error", "frame_loss_panels"}
    panels = data["views"]["frame_loss_panels"]
    assert panels["columns"] == FRAMEMAP_COLUMNS
    assert len(panels["files"]) == len(error_rows)


def test_summary_text_has_verdicts(error_rows):
    text = summary_text(error_rows)
    assert text.startswith("# error_sweep: 4 runs")
    assert "PSNR at 0.001 within 1 dB of lossless" in text
    assert "N/A" in text


def test_first_violation_uses_replication_means():
    rows = [node_row(n, 4.0 + 0.5 * n, 1.0) for n in range(1, 20)]
    rows += [node_row(14, 12.5, 1.0, replication=1)]
    # n=14 averages (11.0 + 12.5) / 2 = 11.75 and still passes
    assert first_violation(rows) == 16
    lines = node_threshold_lines(rows)
    assert lines[-1].startswith("PASS")


def test_no_violation():
    assert first_violation([node_row(n, 5.0, 1.0) for n in (1, 2, 3)]) is None


def test_empty_report_is_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path)


def test_unwritable_output(tmp_path, error_rows):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ReportError):
        emit_report(error_rows, blocker)


def error_row(model: str, value: float, psnr: float) -> ReportRow:
    return ReportRow(
        experiment="error_sweep", model=model, sweep_value=value, replication=0, seed=1,
        flows=1, sent=100.0, received=100.0, corrupt=0.0, queue_drops=0.0, deadline_drops=0.0,
        speed_drops=0.0, mean_delay_ms=5.0, max_delay_ms=5.0, jitter_ms=1.0, throughput_bps=8e5,
        frames_lost=0.0, mean_y_psnr_db=psnr, codec_y_psnr_db=40.0, bitrate_bps=1e6, qos_ok=True,
        flow_file=f"flows_{model}-{value:g}_0.csv", framemap_file=f"framemap_{model}-{value:g}_0.csv",
    )


def test_error_thresholds_judge_the_rate_model_only():
    rows = [error_row("rate", 0.001, 39.5), error_row("rate", 0.01, 30.0),
            error_row("burst", 0.001, 38.0), error_row("burst", 0.01, 39.0)]
    lines = error_threshold_lines(rows)
    assert [line for line in lines if "[rate]" in line and not line.startswith("PASS")] == []
    burst = [line for line in lines if "[burst]" in line]
    assert burst == ["INFO  [burst] mean PSNR by error value: 0.001: 38.00 dB, 0.01: 39.00 dB"]
    assert "FAIL" not in summary_text(rows)
