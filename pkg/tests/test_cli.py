import json
import subprocess
import sys

import numpy as np
import pytest

from grafica import SbmParams, generate_sbm, load_csv_dataset
from grafica.cli import UsageError, main, parse_grid


def write_content_cites(graph, directory):
    content = directory / "toy.content"
    cites = directory / "toy.cites"
    with content.open("w") as fh:
        for i in range(graph.n_nodes):
            feats = "\t".join(repr(float(v)) for v in graph.attributes[i])
            fh.write(f"n{i}\t{feats}\tc{graph.labels[i]}\n")
    coo = graph.adjacency.tocoo()
    with cites.open("w") as fh:
        for a, b in zip(coo.row, coo.col):
            if a < b:
                fh.write(f"n{b}\tn{a}\n")
    return content, cites


@pytest.fixture(scope="module")
def toy(tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    g = generate_sbm(SbmParams(90, 3, 0.25, 0.03, center_separation=3.0, seed=1))
    return write_content_cites(g, d)


def test_parse_grid():
    assert parse_grid("0:0.1:0.01") == [round(0.01 * i, 12) for i in range(11)]
    assert parse_grid("3:10:1") == [float(t) for t in range(3, 11)]
    assert parse_grid("0:1:0.3") == [0.0, 0.3, 0.6, 0.9]
    assert parse_grid("0.1,0.2") == [0.1, 0.2]
    for bad in ("1:0:0.1", "0:1:0", "a:b:c", "0:1"):
        with pytest.raises(UsageError):
            parse_grid(bad)


def test_parse_grid_endpoint_within_half_step():
    # 1.04 overshoots stop by less than half a step; 1.2 overshoots by exactly half
    assert parse_grid("0:1:0.26")[-1] == 1.04
    assert parse_grid("0:1:0.4") == [0.0, 0.4, 0.8]


def test_cluster_writes_document(toy, tmp_path, capsys):
    content, cites = toy
    out = tmp_path / "run.json"
    code = main(["--seed", "1", "cluster", "--format", "content-cites", "--content", str(content),
                 "--cites", str(cites), "--k", "3", "--t", "3", "--alpha-grid", "0:0.1:0.05",
                 "--restarts", "5", "--out", str(out), "--filter-out", str(tmp_path / "h.txt")])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["selection"] == "ground-truth-nmi"
    assert len(doc["labels"]) == 90 and len(doc["h"]) == 3
    assert len(doc["grid"]) == 3
    stdout = capsys.readouterr().out
    assert "NMI=" in stdout and "ARI=" in stdout and "iterations=" in stdout and "alpha=" in stdout
    assert np.loadtxt(tmp_path / "h.txt").shape == (201, 2)


def test_cluster_byte_identical_and_thread_independent(toy, tmp_path):
    content, cites = toy
    base = ["cluster", "--content", str(content), "--cites", str(cites), "--t", "4",
            "--alpha-grid", "0:0.1:0.05", "--restarts", "4"]
    docs = []
    for i, threads in enumerate(["1", "1", "8"]):
        out = tmp_path / f"r{i}.json"
        assert main(["--seed", "3", "--threads", threads] + base + ["--out", str(out)]) == 0
        docs.append(out.read_bytes())
    assert docs[0] == docs[1] == docs[2]


def test_synth_then_cluster_csv(tmp_path, capsys):
    d = tmp_path / "data"
    code = main(["--seed", "7", "synth", "--n", "200", "--k", "4", "--p-in", "0.2", "--p-out",
                 "0.02", "--sep", "5", "--sigma", "1", "--out-dir", str(d)])
    assert code == 0
    assert (d / "nodes.csv").is_file() and (d / "edges.csv").is_file()
    g = load_csv_dataset(d / "nodes.csv", d / "edges.csv")
    assert g.n_nodes == 200 and g.n_classes == 4
    code = main(["cluster", "--nodes", str(d / "nodes.csv"), "--edges", str(d / "edges.csv"),
                 "--selection", "internal-cost", "--alpha", "0.05", "--restarts", "5",
                 "--out", str(tmp_path / "run.json")])
    assert code == 0
    doc = json.loads((tmp_path / "run.json").read_text())
    assert doc["config"]["selection"] == "internal-cost"
    assert doc["metrics"]["nmi"] >= 0.95
    assert main(["eval", "--nodes", str(d / "nodes.csv"), "--edges", str(d / "edges.csv"),
                 "--result", str(tmp_path / "run.json")]) == 0
    assert "NMI=" in capsys.readouterr().out


def test_selection_defaults_to_internal_cost_without_labels(tmp_path):
    (tmp_path / "nodes.csv").write_text(
        "id,f1\n" + "".join(f"{i},{float(i // 5) * 4 + (i % 5) * 0.1}\n" for i in range(10)))
    (tmp_path / "edges.csv").write_text("src,dst\n0,1\n1,2\n5,6\n6,7\n")
    out = tmp_path / "run.json"
    assert main(["cluster", "--nodes", str(tmp_path / "nodes.csv"), "--edges",
                 str(tmp_path / "edges.csv"), "--k", "2", "--restarts", "2", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["selection"] == "internal-cost"


def test_sweep_and_baseline(toy, tmp_path, capsys):
    content, cites = toy
    out = tmp_path / "sweep.json"
    code = main(["sweep", "--content", str(content), "--cites", str(cites), "--t-grid", "2:3:1",
                 "--alpha-grid", "0,0.1", "--restarts", "3", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["rows"]) == 4
    assert 0 <= doc["best"] < 4
    assert main(["baseline", "--method", "kmeans-attrs", "--content", str(content),
                 "--cites", str(cites)]) == 0
    assert "method=kmeans-attrs NMI=" in capsys.readouterr().out


def test_filter_response_command(tmp_path):
    out = tmp_path / "resp.txt"
    assert main(["filter-response", "--h", "0,1", "--grid", "0:2:1", "--out", str(out)]) == 0
    np.testing.assert_array_equal(np.loadtxt(out), [[0, 0], [1, 1], [2, 2]])


def test_usage_errors_exit_2(toy, tmp_path):
    content, cites = toy
    assert main(["cluster", "--bogus"]) == 2
    assert main(["cluster", "--content", str(tmp_path / "missing"), "--cites", str(cites)]) == 2
    assert main(["cluster", "--content", str(content), "--cites", str(cites),
                 "--alpha-grid", "1:0:0.1"]) == 2
    assert main(["sweep", "--content", str(content), "--cites", str(cites), "--t-grid", "0.5:2:1"]) == 2
    assert main([]) == 2


def test_runtime_error_exit_1(tmp_path):
    (tmp_path / "nodes.csv").write_text("id,f1\na,1\na,2\n")
    (tmp_path / "edges.csv").write_text("src,dst\n")
    assert main(["cluster", "--nodes", str(tmp_path / "nodes.csv"), "--edges",
                 str(tmp_path / "edges.csv"), "--k", "2"]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "grafica", "filter-response", "--h", "1,0", "--grid", "0:2:1",
         "--out", str(tmp_path / "r.txt")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    np.testing.assert_array_equal(np.loadtxt(tmp_path / "r.txt"), [[0, 1], [1, 1], [2, 1]])
