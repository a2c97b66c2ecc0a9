import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from impulsive_sync import MuPolicy, NetworkRun, analyze, analyze_spectrum, design_deadbeat, laplacian, simulate
from impulsive_sync.cli import main
from impulsive_sync.config import lc_demo_document, parse_spec

LC = {"A": [[0, -1], [1, 0]], "B": [1, 0], "T": math.pi / 2}


def spec(**over):
    doc = {
        "version": "v1",
        "system": LC,
        "graph": {"q": 2, "weights": [[0, 1], [1, 0]]},
        "mu": {"mode": "explicit", "value": 1.0},
        "x0": {"seed": 7},
        "periods": 4,
        "samples_per_period": 3,
    }
    doc.update(over)
    return doc


def write(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_demo_run(tmp_path, capsys):
    assert main(["--demo", "lc", "--out-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "lc_report.json").read_text())
    assert np.abs(np.array(report["design"]["K"]) - [1, 0]).max() <= 1e-10
    assert report["analysis"]["mu_bound"] == pytest.approx(math.log(2) / 2, abs=1e-12)
    rows = read_csv(tmp_path / "lc_trajectory.csv")
    assert rows[0] == ["k", "t", "plus_minus", "agent", "x1", "x2", "disagreement"]
    assert len(rows) - 1 == 6 * (16 + 1) * 2 + 2
    assert "K = " in capsys.readouterr().out


def test_demo_design(capsys):
    assert main(["design", "--demo", "lc"]) == 0
    out = capsys.readouterr().out
    assert "K = [1. 0.]" in out
    assert "mu bound = 0.34657359028" in out


def test_quiet_prints_nothing(tmp_path, capsys):
    assert main(["run", write(tmp_path, spec()), "--out-dir", str(tmp_path), "--quiet"]) == 0
    assert capsys.readouterr().out == ""


def test_zero_dynamics_is_controllability_failure(tmp_path, capsys):
    doc = spec(system={"A": [[0, 0], [0, 0]], "B": [1, 0], "T": 1.0})
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path)]) == 3
    assert "controllab" in capsys.readouterr().err
    assert not (tmp_path / "report.json").exists()


def test_half_period_rotation_design_fails(tmp_path, capsys):
    doc = spec(system=dict(LC, T=math.pi))
    assert main(["design", write(tmp_path, doc)]) == 3
    assert "period T loses controllability" in capsys.readouterr().err


def test_disconnected_graph(tmp_path):
    doc = spec(graph={"q": 3, "weights": [[0, 1, 0], [1, 0, 0], [0, 0, 0]]})
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path)]) == 4


@pytest.mark.parametrize("doc", [
    {"system": LC},
    spec(version="v2"),
    spec(system={"A": [[0, 1]], "B": [1], "T": 1}),
    spec(system=dict(LC, T=-1)),
    spec(graph={"q": 2, "weights": [[0, -1], [1, 0]]}),
    spec(mu={"mode": "sometimes"}),
    spec(mu={"mode": "explicit", "value": -2}),
    spec(x0=[1, 2, 3]),
    spec(periods=-1),
    spec(graph_sequence=[{"weights": [[0, 1], [1, 0]]}]),
])
def test_malformed_specs(tmp_path, doc):
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path)]) == 2


def test_unreadable_spec(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["run", str(p)]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2


def test_scalar_design(tmp_path, capsys):
    doc = {"version": "v1", "system": {"A": [[0.3]], "B": [2.0], "T": 0.5}}
    assert main(["design", write(tmp_path, doc)]) == 0
    out = capsys.readouterr().out
    d = design_deadbeat(parse_spec(doc, require_graph=False).system)
    assert d.K[0, 0] * 2.0 == pytest.approx(1.0, abs=1e-12)
    assert "KB = 1" in out


def test_byte_identical_reruns(tmp_path):
    path = write(tmp_path, spec())
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", path, "--out-dir", str(a), "--quiet"]) == 0
    assert main(["run", path, "--out-dir", str(b), "--quiet"]) == 0
    for name in ("report.json", "trajectory.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.mark.parametrize("q,periods,S", [(2, 4, 3), (3, 0, 1), (4, 5, 1), (3, 2, 7)])
def test_csv_row_count(tmp_path, q, periods, S):
    w = np.ones((q, q)) - np.eye(q)
    doc = spec(graph={"weights": w.tolist()}, periods=periods, samples_per_period=S)
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path), "--quiet"]) == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    assert len(rows) - 1 == periods * (S + 1) * q + q


def test_report_matches_library(tmp_path):
    doc = spec(mu={"mode": "auto", "safety": 1.3}, periods=5)
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path), "--quiet"]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    parsed = parse_spec(doc)
    d = design_deadbeat(parsed.system)
    g = analyze_spectrum(laplacian(parsed.graphs[0]))
    run = NetworkRun(parsed.system, d, g, parsed.mu, parsed.initial_state(), 5, 3)
    rep = analyze(run)
    tr = simulate(run)
    assert report["design"]["K"] == d.K.ravel().tolist()
    assert report["analysis"]["mu_bound"] == rep.mu_bound
    assert report["analysis"]["mu"] == rep.mu
    assert report["analysis"]["Phi_radius"] == rep.phi_radius
    assert report["simulation"]["x0"] == run.x0.tolist()
    assert report["simulation"]["disagreement"] == tr.disagreement.tolist()
    rows = read_csv(tmp_path / "trajectory.csv")[1:]
    last = rows[-2:]
    assert [float(v) for v in last[0][4:6]] == tr.boundary_states[-1][:2].tolist()


def test_explicit_x0_and_json_floats_round_trip(tmp_path):
    x0 = [0.1, -0.3, 1 / 3, 2.0]
    doc = spec(x0=x0, mu={"mode": "infinite"})
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path), "--quiet"]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["simulation"]["x0"] == x0
    assert report["analysis"]["mu"] == "inf"
    assert max(report["simulation"]["disagreement"][2:]) <= 1e-12


def test_graph_sequence(tmp_path):
    seq = [{"weights": [[0, 1, 0], [0, 0, 1], [1, 0, 0]]}, {"weights": [[0, 0, 0], [1, 0, 0], [1, 0, 0]]}]
    doc = spec(graph_sequence=seq, mu={"mode": "infinite"}, periods=4)
    del doc["graph"]
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path), "--quiet"]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["time_varying"] and len(report["analyses"]) == 2
    assert max(report["simulation"]["disagreement"][2:]) <= 1e-12


def test_graph_sequence_without_spanning_tree(tmp_path):
    seq = [{"weights": [[0, 1, 0], [0, 0, 1], [1, 0, 0]]}, {"weights": np.zeros((3, 3)).tolist()}]
    doc = spec(graph_sequence=seq, mu={"mode": "infinite"})
    del doc["graph"]
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path)]) == 4


def test_runs_bundle(tmp_path):
    runs = [spec(x0={"seed": s}) for s in range(4)]
    runs[2]["outputs"] = {"report_path": "named.json"}
    doc = {"version": "v1", "runs": runs}
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path), "--quiet"]) == 0
    for i in (0, 1, 3):
        assert (tmp_path / f"run{i}_report.json").exists()
        assert (tmp_path / f"run{i}_trajectory.csv").exists()
    assert (tmp_path / "named.json").exists()
    assert not list(tmp_path.glob(".*.tmp"))


def test_runs_bundle_reports_first_failure(tmp_path):
    bad = spec(graph={"weights": np.zeros((2, 2)).tolist()})
    doc = {"version": "v1", "runs": [spec(), bad]}
    assert main(["run", write(tmp_path, doc), "--out-dir", str(tmp_path), "--quiet"]) == 4
    assert (tmp_path / "run0_report.json").exists()
    assert main(["run", write(tmp_path, {"runs": [spec()]}), "--out-dir", str(tmp_path)]) == 2


def test_no_arguments():
    assert main([]) == 2
    assert main(["run"]) == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "impulsive_sync", "--demo", "lc", "--quiet",
                          "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "lc_trajectory.csv").exists()


def test_demo_document_parses():
    parsed = parse_spec(lc_demo_document())
    assert parsed.mu == MuPolicy.infinite()
    assert parsed.periods == 6 and parsed.samples_per_period == 16
