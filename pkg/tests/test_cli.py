import json
import subprocess
import sys

import pytest

from conftest import TRIANGLE_EDGES
from coalition_forge.bench import fixture_path
from coalition_forge.cli import main
from coalition_forge.graph import WeightedGraph


@pytest.fixture
def triangle_file(tmp_path):
    path = tmp_path / "triangle.json"
    WeightedGraph(3, TRIANGLE_EDGES).save(path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_triangle(capsys, triangle_file):
    code, out, _ = run(capsys, "solve", "--graph", triangle_file, "--sampler", "exhaustive")
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] == 2.0 and doc["coalitions"] == [[0, 1], [2]]


def test_solve_with_anneal_and_kmax(capsys, triangle_file):
    code, out, _ = run(capsys, "solve", "--graph", triangle_file, "--kmax", "1", "--reads", "20", "--sweeps", "50")
    assert code == 0
    assert json.loads(out)["coalitions"] == [[0], [1], [2]]


def test_synthetic_tree(capsys):
    code, out, _ = run(capsys, "graph", "--synthetic", "--n", 10, "--sparsity", 1, "--seed", 7)
    assert code == 0
    assert len(json.loads(out)["edges"]) == 9


def test_no_arguments_prints_usage(capsys):
    code, _, err = run(capsys)
    assert code == 1 and "usage" in err


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "solve")[0] == 1
    assert run(capsys, "solve", "--graph", "x.json", "--bogus")[0] == 1
    assert run(capsys, "graph", "--synthetic", "--n", 5)[0] == 1


def test_data_errors(capsys, tmp_path):
    assert run(capsys, "solve", "--graph", tmp_path / "missing.json")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "solve", "--graph", bad)[0] == 2
    assert run(capsys, "parse", "--tle", fixture_path(), "--at", "yesterday")[0] == 2


def test_parse_graph_solve_pipeline(capsys, tmp_path):
    pos = tmp_path / "pos.json"
    graph = tmp_path / "graph.json"
    at = "2024-06-01T12:00:00Z"
    assert run(capsys, "parse", "--tle", fixture_path(), "--at", at, "--out", pos)[0] == 0
    entries = json.loads(pos.read_text())
    assert len(entries) == 120 and set(entries[0]) == {"name", "id", "r"}
    assert run(capsys, "graph", "--positions", pos, "--radius-km", 1100, "--out", graph)[0] == 0
    g = WeightedGraph.load(graph)
    assert g.n == 120 and g.num_edges > 0
    code, out, _ = run(capsys, "solve", "--graph", graph, "--kmax", 5, "--reads", 50, "--sweeps", 200)
    assert code == 0
    assert all(len(c) <= 5 for c in json.loads(out)["coalitions"])


def _strip_timing(doc):
    for entry in doc.get("trace", []):
        entry.pop("seconds")
    return doc


def test_byte_identical_outputs(capsys, tmp_path):
    graph = tmp_path / "g.json"
    run(capsys, "graph", "--synthetic", "--n", 12, "--sparsity", 0.5, "--seed", 3, "--out", graph)
    first = run(capsys, "solve", "--graph", graph, "--reads", 30, "--sweeps", 100)[1]
    second = run(capsys, "solve", "--graph", graph, "--reads", 30, "--sweeps", 100)[1]
    assert _strip_timing(json.loads(first)) == _strip_timing(json.loads(second))
    a = run(capsys, "graph", "--synthetic", "--n", 12, "--sparsity", 0.5, "--seed", 3)[1]
    assert a == graph.read_text()


def test_bench_verb(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"study": "splitQuality", "sizes": [5], "sparsities": [0.5], "seeds": [0],
                               "anneal": {"num_reads": 20, "sweeps_per_read": 50}}))
    code, _, err = run(capsys, "bench", "--config", cfg, "--out", tmp_path / "out", "--format", "json")
    assert code == 0
    assert (tmp_path / "out" / "records.json").exists() and "aggregate.csv" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "coalition_forge", "graph", "--synthetic", "--n", "4", "--sparsity", "0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and len(json.loads(proc.stdout)["edges"]) == 6
