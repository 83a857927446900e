import csv
import json
import subprocess
import sys

import pytest

from transversal.cli import main
from transversal.core import PatternGraph, pattern_to_json


def write_json(path, obj):
    path.write_text(json.dumps(obj))


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_generate_check_cycle(workdir):
    assert main([
        "generate", "--construction", "cyclic-triangle", "--n", "12",
        "--seed", "1", "--out", "g.json",
    ]) == 0
    assert main(["check", "--instance", "g.json", "--mono-triangles", "--out", "c.json"]) == 0
    rep = json.loads((workdir / "c.json").read_text())
    assert rep["monochromatic_triangles"] == 0


def test_embed_feasible_and_verify_round_trip(workdir):
    assert main([
        "generate", "--construction", "random", "--n", "12", "--colours", "6",
        "--density", "1.0", "--seed", "1", "--out", "inst.json",
    ]) == 0
    H = PatternGraph(12, [(2 * i, 2 * i + 1) for i in range(6)])
    write_json(workdir / "h.json", pattern_to_json(H))
    code = main([
        "embed", "--pipeline", "quasi", "--instance", "inst.json",
        "--pattern", "h.json", "--seed", "7", "--out", "rep.json",
    ])
    assert code == 0
    rep = json.loads((workdir / "rep.json").read_text())
    assert rep["verified"] is True
    assert rep["outcome"]["status"] == "success"
    # re-running verify on the report's embedding reproduces the stamp
    assert main([
        "verify", "--instance", "inst.json", "--pattern", "h.json",
        "--embedding", "rep.json", "--out", "v.json",
    ]) == 0
    assert json.loads((workdir / "v.json").read_text())["ok"] is True


def test_oracle_infeasible_exit_code(workdir):
    assert main([
        "generate", "--construction", "random", "--n", "6", "--colours", "2",
        "--density", "1.0", "--seed", "1", "--out", "tri.json",
    ]) == 0
    K3 = PatternGraph(3, [(0, 1), (1, 2), (0, 2)])
    write_json(workdir / "k3.json", pattern_to_json(K3))
    code = main([
        "oracle", "--instance", "tri.json", "--pattern", "k3.json", "--out", "o.json",
    ])
    assert code == 1
    rep = json.loads((workdir / "o.json").read_text())
    assert rep["outcome"]["status"] == "infeasible"


def test_partition_report(workdir):
    assert main([
        "generate", "--construction", "random", "--n", "12", "--colours", "12",
        "--density", "1.0", "--seed", "0", "--out", "inst.json",
    ]) == 0
    code = main([
        "partition", "--instance", "inst.json", "--epsilon", "0.25", "--d", "0.5",
        "--l0", "3", "--out", "p.json",
    ])
    assert code == 0
    rep = json.loads((workdir / "p.json").read_text())
    assert rep["outcome"]["converged"] is True
    assert rep["outcome"]["properties"]["equal_sizes"] is True


def test_bench_rows_and_determinism(workdir):
    H = PatternGraph(12, [(2 * i, 2 * i + 1) for i in range(6)])
    suite = {
        "runs": [
            {
                "name": "tiny",
                "construction": {"kind": "random", "n": 12, "n_colours": 6, "density": 1.0},
                "pipeline": "quasi",
                "pattern": pattern_to_json(H),
                "seeds": [0, 1, 2],
            }
        ]
    }
    write_json(workdir / "suite.json", suite)
    assert main(["bench", "--suite", "suite.json", "--out", "b1.csv"]) == 0
    assert main(["bench", "--suite", "suite.json", "--out", "b2.csv"]) == 0
    rows1 = list(csv.DictReader(open(workdir / "b1.csv")))
    rows2 = list(csv.DictReader(open(workdir / "b2.csv")))
    assert len(rows1) == 3
    for a, b in zip(rows1, rows2):
        assert a["success"] == b["success"] and a["seed"] == b["seed"]


def test_empty_suite_gives_header_only(workdir):
    write_json(workdir / "s.json", {"runs": []})
    assert main(["bench", "--suite", "s.json", "--out", "e.csv"]) == 0
    content = (workdir / "e.csv").read_text().strip().splitlines()
    assert len(content) == 1 and content[0].startswith("name,")


def test_usage_error_exit_2(workdir):
    proc = subprocess.run(
        [sys.executable, "-m", "transversal.cli", "embed", "--pipeline", "nope"],
        capture_output=True,
    )
    assert proc.returncode == 2
    # missing file is also a usage-level error
    assert main(["check", "--instance", "missing.json"]) == 2
