import argparse
import csv
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from isac_handover import ScenarioParseError, load_scenario, parse_scenario, serialize_scenario
from isac_handover.cli import (
    TABLE3_HEADER,
    emit_montecarlo,
    emit_trace,
    main,
    resolve_seed,
    trace_header,
)
from isac_handover.handover import PolicyMode
from isac_handover.simengine import run, run_monte_carlo

MINIMAL = """
aps:
  - {id: 1, position_m: [0, 0]}
trajectory:
  snapshots: 10
  waypoints_m: [[-10, 20], [10, 20]]
"""


def test_canonical_file_contents():
    sc = load_scenario("scenario1")
    assert len(sc.scene.aps) == 3
    assert all(ap.array.n_elements == 64 for ap in sc.scene.aps)
    assert sc.trajectory.snapshot_count == 120


def test_defaults_applied():
    sc = parse_scenario(MINIMAL)
    r = sc.scene.radio
    assert (r.tx_power_dbm, r.noise_power_dbm, r.si_power_dbm) == (40.0, -60.0, -45.0)
    assert sc.scene.pathloss.exponent_los == 2.1 and sc.scene.pathloss.exponent_nlos == 3.1
    assert sc.scene.pathloss.ref_attenuation_db == 21.0
    assert sc.scene.fading.rician_k_db == -5.0
    assert sc.scene.aps[0].array.n_elements == 64
    assert sc.policy.mode is PolicyMode.SNR_MAX and sc.policy.qos_threshold_db == 15.0


def test_negative_antenna_count_names_key():
    text = MINIMAL.replace("position_m: [0, 0]}", "position_m: [0, 0], n_elements: -4}")
    with pytest.raises(ScenarioParseError) as err:
        parse_scenario(text)
    assert err.value.key.endswith("n_elements")
    assert err.value.line == 3
    assert "n_elements" in str(err.value)


def test_unknown_key_rejected():
    with pytest.raises(ScenarioParseError) as err:
        parse_scenario(MINIMAL + "radio:\n  tx_power_w: 10\n")
    assert "tx_power_w" in err.value.key
    assert err.value.line == 8


def test_unit_violation_rejected():
    with pytest.raises(ScenarioParseError):
        parse_scenario(MINIMAL + "pathloss:\n  exponent_los: 0.5\n")
    with pytest.raises(ScenarioParseError):
        parse_scenario(MINIMAL.replace("snapshots: 10", "snapshots: ten"))


def test_malformed_yaml():
    with pytest.raises(ScenarioParseError):
        parse_scenario("aps: [\n")


def test_canonical_round_trip():
    for name in ("scenario1", "scenario2"):
        sc = load_scenario(name)
        assert parse_scenario(serialize_scenario(sc)) == sc


finite = st.floats(-500, 500, allow_nan=False).map(lambda v: round(v, 3))


@st.composite
def scenario_texts(draw):
    n_ap = draw(st.integers(1, 4))
    xs = draw(st.lists(finite, min_size=n_ap, max_size=n_ap, unique=True))
    lines = ["aps:"]
    for i, x in enumerate(xs):
        n = 2 * draw(st.integers(1, 64))
        bore = draw(st.floats(-math.pi, math.pi))
        lines.append(f"  - {{id: {i + 1}, position_m: [{x}, 0], n_elements: {n}, boresight_rad: {bore!r}}}")
    y = draw(st.floats(1, 200))
    lines += [
        "trajectory:",
        f"  snapshots: {draw(st.integers(2, 200))}",
        f"  waypoints_m: [[-50, {y!r}], [50, {y!r}]]",
        "radio:",
        f"  tx_power_dbm: {draw(st.floats(0, 60))!r}",
        f"  si_power_dbm: {draw(st.floats(-100, -10))!r}",
        "fading:",
        f"  enabled: {str(draw(st.booleans())).lower()}",
        f"  rician_k_db: {draw(st.floats(-20, 20))!r}",
        "rcs:",
        f"  mean_rcs_dbsm: {draw(st.floats(-20, 40))!r}",
        "policy:",
        f"  mode: {draw(st.sampled_from(['snrmax', 'qos']))}",
        f"  hysteresis_db: {draw(st.floats(0, 10))!r}",
        f"  soft: {str(draw(st.booleans())).lower()}",
        f"seed: {draw(st.integers(0, 2**64 - 1))}",
    ]
    return "\n".join(lines) + "\n"


@settings(max_examples=1000)
@given(scenario_texts())
def test_round_trip_property(text):
    sc = parse_scenario(text)
    assert parse_scenario(serialize_scenario(sc)) == sc


def test_seed_precedence():
    assert resolve_seed(7, {"ISAC_SIM_SEED": "9"}) == 7
    assert resolve_seed(None, {"ISAC_SIM_SEED": "9"}) == 9
    assert resolve_seed(None, {}) is None
    with pytest.raises(argparse.ArgumentTypeError):
        resolve_seed(None, {"ISAC_SIM_SEED": "-1"})


def test_trace_files(tmp_path):
    log = run(load_scenario("scenario1"))
    emit_trace(log, tmp_path)
    with open(tmp_path / "trace.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 121
    header = rows[0]
    assert header == trace_header(log)
    assert sum(h.startswith("decision_metric_db_") for h in header) == 9
    flagged = [r for r in rows[1:] if r[header.index("event_flag")] == "1"]
    assert len(flagged) == 4
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config_sequence"] == ["MS1", "BS12", "MS2", "BS23", "MS3"]
    lines = (tmp_path / "messages.jsonl").read_text().splitlines()
    assert all(set(json.loads(l)) == {"snapshot", "from", "to", "variant", "payload"} for l in lines)


def test_golden_trace_header():
    log = run(load_scenario("scenario2"))
    assert trace_header(log) == [
        "snapshot", "object_x", "object_y", "active_cfg",
        "decision_metric_db_MS1", "decision_metric_db_MS2", "decision_metric_db_MS3",
        "decision_metric_db_BS12", "decision_metric_db_BS13", "decision_metric_db_BS21",
        "decision_metric_db_BS23", "decision_metric_db_BS31", "decision_metric_db_BS32",
        "realized_sensing_sinr_db", "comm_sinr_db_ue1", "comm_sinr_db_ue2",
        "event_flag", "event_cause",
    ]


def test_table3_golden(tmp_path):
    summary = run_monte_carlo(load_scenario("scenario2"), 3, [5, 10, 15], seed=1)
    emit_montecarlo(summary, tmp_path, "scenario2")
    lines = (tmp_path / "table3.csv").read_text().splitlines()
    assert lines[0] == ",".join(TABLE3_HEADER)
    assert lines[0] == "threshold_db,success_enabled,avg_handovers,success_disabled,stderr_enabled,stderr_disabled"
    assert len(lines) == 4
    for line in lines[1:]:
        cells = line.split(",")
        assert len(cells[1].split(".")[1]) == 3 and len(cells[3].split(".")[1]) == 3


def test_cli_trace_byte_identical(tmp_path, monkeypatch):
    monkeypatch.delenv("ISAC_SIM_SEED", raising=False)
    for d in ("a", "b"):
        assert main(["trace", "--scenario", "scenario1", "--out", str(tmp_path / d), "--emit-messages"]) == 0
    for f in ("trace.csv", "summary.json", "messages.jsonl"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_cli_montecarlo_byte_identical(tmp_path, monkeypatch):
    monkeypatch.setenv("ISAC_SIM_SEED", "42")
    args = ["montecarlo", "--scenario", "scenario2", "--iterations", "4", "--thresholds", "5,15"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for f in ("table3.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert json.loads((tmp_path / "a" / "summary.json").read_text())["seed"] == 42
    assert len((tmp_path / "a" / "table3.csv").read_text().splitlines()) == 3


def test_cli_scenario_file_and_overrides(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(MINIMAL)
    assert main(["trace", "--scenario", str(path), "--out", str(tmp_path / "o"), "--seed", "3", "--soft"]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["seed"] == 3 and summary["soft"] is True


def test_cli_errors(tmp_path, capsys):
    assert main(["trace", "--scenario", str(tmp_path / "missing.yaml"), "--out", str(tmp_path)]) != 0
    bad = tmp_path / "bad.yaml"
    bad.write_text(MINIMAL.replace("snapshots: 10", "snapshots: -1"))
    assert main(["trace", "--scenario", str(bad), "--out", str(tmp_path)]) != 0
    assert "snapshots" in capsys.readouterr().err
    assert main(["trace", "--scenario", "scenario1", "--seed", "abc"]) == 2
    assert main(["montecarlo", "--scenario", "scenario1", "--iterations", "0"]) == 2
    assert main(["montecarlo", "--scenario", "scenario1", "--thresholds", "5,x"]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["trace", "--scenario", "scenario1", "--out", str(blocker / "sub")]) != 0
