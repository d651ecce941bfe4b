import csv
import io

import pytest

from ivnsim import cli
from ivnsim.andl import load
from ivnsim.simulation import Simulation

from conftest import SCENARIOS

TWO_BUSES = str(SCENARIOS / "two_can_buses.andl")
CONTROL = str(SCENARIOS / "control.andl")


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_ok(capsys):
    code, out, _ = run(["validate", TWO_BUSES], capsys)
    assert code == 0 and "7 devices" in out


def test_validate_bad_payload_cites_line(tmp_path, capsys):
    text = (SCENARIOS / "two_can_buses.andl").read_text().replace("payload 6B;", "payload 9B;")
    line = next(i for i, l in enumerate(text.splitlines(), 1) if "can{id 37" in l)
    path = tmp_path / "bad.andl"
    path.write_text(text)
    code, _, err = run(["validate", str(path)], capsys)
    assert code == 2 and f"bad.andl:{line}:" in err


def test_missing_file(capsys):
    code, _, err = run(["validate", "/no/such/file.andl"], capsys)
    assert code == 2 and "no such file" in err.lower()


def test_bundled_scenario_by_name(capsys):
    code, out, _ = run(["scenarios"], capsys)
    assert code == 0 and {"control", "camera", "audio", "two_can_buses"} <= {
        l.split("\t")[0] for l in out.splitlines()}
    assert run(["validate", "camera"], capsys)[0] == 0


def test_run_writes_files(tmp_path, capsys):
    code, out, _ = run(["run", CONTROL, "--until", "20ms", "--out", str(tmp_path),
                        "--format", "csv", "--format", "json", "--pcap"], capsys)
    assert code == 0
    for name in ("stats.csv", "stats.json", "stats.pcap"):
        assert (tmp_path / name).stat().st_size > 0
    assert not (tmp_path / "stats.violations.txt").exists()


def test_run_is_reproducible(tmp_path, capsys):
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        run(["run", CONTROL, "--until", "20ms", "--seed", "3", "--out", str(d),
             "--format", "csv", "--format", "json", "--pcap"], capsys)
        outs.append([(d / n).read_bytes() for n in ("stats.csv", "stats.json", "stats.pcap")])
    assert outs[0] == outs[1]


def test_stop_violation_exit_1(tmp_path, capsys):
    rules = tmp_path / "rules.xml"
    rules.write_text('<constraints><constraint module="control.DME1" name="ctrl_rc:rxMessageAge" '
                     'action="stop"><max>0.00001</max></constraint></constraints>')
    code, _, err = run(["run", CONTROL, "--constraints", str(rules), "--out", str(tmp_path)], capsys)
    assert code == 1
    assert "rule #0" in err and " ps" in err and "stopped at" in err
    assert "rule #0" in (tmp_path / "stats.violations.txt").read_text()


def test_bundled_limits_pass(capsys):
    code, _, err = run(["run", "control", "--constraints", str(SCENARIOS / "control_limits.xml")], capsys)
    assert code == 0, err


def test_bad_constraint_file(tmp_path, capsys):
    rules = tmp_path / "rules.xml"
    rules.write_text("<constraints>")
    assert run(["run", CONTROL, "--constraints", str(rules)], capsys)[0] == 2


def test_bad_override(capsys):
    assert run(["run", CONTROL, "--override", "nonsense"], capsys)[0] == 2
    assert run(["run", CONTROL, "--override", "no.such.key=1"], capsys)[0] == 2


def sweep_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_table_shape(capsys):
    code, out, _ = run(["sweep", CONTROL, "--param", "cross_traffic_frame_size",
                        "--values", "0,100,800,1518", "--until", "30ms"], capsys)
    assert code == 0
    rows = sweep_rows(out)
    assert len(rows) == 12
    assert [r["value"] for r in rows] == [v for v in ("0", "100", "800", "1518") for _ in range(3)]
    assert {r["class"] for r in rows} == {"tt", "rc", "avb"}


def test_single_value_sweep_matches_run(capsys):
    code, out, _ = run(["sweep", CONTROL, "--param", "cross_traffic_frame_size", "--values", "800",
                        "--until", "30ms"], capsys)
    rows = sweep_rows(out)
    model = load(CONTROL, {"cross_traffic_frame_size": "800"})
    result = Simulation(model, duration=30 * 10**9).run()
    for r in rows:
        s = result.collector.streams[r["stream"]]
        assert (int(r["max_latency_ps"]), int(r["jitter_ps"])) == (s.max, s.jitter)


def test_sweep_parallel_equals_serial():
    cfg = cli.RunConfig(CONTROL, duration=20 * 10**9, replicas=2)
    values = ["64", "1518"]
    assert cli.sweep(cfg, "cross_traffic_frame_size", values, jobs=1) == \
        cli.sweep(cfg, "cross_traffic_frame_size", values, jobs=2)


def test_sweep_replicas_use_consecutive_seeds():
    cfg = cli.RunConfig(CONTROL, duration=10 * 10**9, seed=7, replicas=3)
    _, table = cli.sweep(cfg, "cross_traffic_frame_size", ["1518"])
    assert {r["seed"] for r in sweep_rows(table)} == {"7", "8", "9"}


def test_sweep_unknown_param(capsys):
    assert run(["sweep", CONTROL, "--param", "bogus", "--values", "1"], capsys)[0] == 2


def test_sweep_bad_value(capsys):
    assert run(["sweep", CONTROL, "--param", "cross_traffic_frame_size", "--values", "x"], capsys)[0] == 2


def test_schedule_one_action_per_backbone_port(capsys):
    code, out, _ = run(["schedule", TWO_BUSES], capsys)
    assert code == 0
    ports = [l for l in out.splitlines() if l.startswith("port ")]
    assert ports == ["port gw1->switch1", "port switch1->gw2"]
    assert out.count("ctID 102") == 2


def test_schedule_without_tt(capsys):
    code, out, _ = run(["schedule", TWO_BUSES, "--override", "classes=be"], capsys)
    assert code == 0 and "port" not in out


def test_schedule_infeasible(tmp_path, capsys):
    text = (
        "types std { ethernetLink ETH { bandwidth 10Mb/s; } }\n"
        "network sat { devices { node a; node b; } connections { segment eth { a <--> {new std.ETH} <--> b; } }\n"
        "communication {"
        + "".join(f" message m{i} {{ sender a; receivers b; payload 1500B; period 1ms;"
                  f" mapping {{ eth: tt{{ctID {i};}}; }} }}" for i in range(1, 3))
        + " } }"
    )
    path = tmp_path / "sat.andl"
    path.write_text(text)
    code, _, err = run(["schedule", str(path)], capsys)
    assert code == 1 and "infeasible" in err
