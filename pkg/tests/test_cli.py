import json
import subprocess
import sys

import numpy as np
import pytest

from gccn.cli import build_parser, run_command
from gccn.complexes import save_complex
from gccn.data import canonical_complex
from gccn.hasse import parse_graph_dump


def run(argv):
    return run_command([str(a) for a in argv])


@pytest.fixture
def pair(tmp_path):
    icosa = tmp_path / "icosa.json"
    fivet = tmp_path / "fivetet.json"
    save_complex(icosa, canonical_complex("icosahedron_faces"))
    save_complex(fivet, canonical_complex("five_tetrahedra"))
    return icosa, fivet


def test_help_lists_all_subcommands(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for name in ("lift", "expand", "wl", "train", "flops", "report"):
        assert name in text


@pytest.mark.parametrize("cmd", ["lift", "expand", "wl", "train", "flops", "report"])
def test_subcommand_help_lists_common_flags(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([cmd, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "--seed" in text
    assert "--out" in text


def test_usage_error_exits_two():
    proc = subprocess.run([sys.executable, "-m", "gccn.cli", "wl", "--bogus-flag"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


def test_data_error_exits_three(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "gccn.cli", "lift", str(tmp_path / "missing"), "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert proc.returncode == 3
    assert "error:" in proc.stderr


def test_wl_exit_codes_on_expressivity_pair(pair, capsys):
    icosa, fivet = pair
    assert run(["wl", icosa, fivet, "--spec", "down_adjacency@2"]) == 0
    out = capsys.readouterr().out
    assert "indistinguishable" in out
    assert "rounds=" in out and "classes=" in out

    assert run(["wl", icosa, fivet, "--spec", "down_adjacency@2", "--k", "3"]) == 1
    assert "distinguishable" in capsys.readouterr().out


def test_wl_requires_single_spec(pair):
    icosa, fivet = pair
    code = run(["wl", icosa, fivet, "--spec", "up_incidence", "--spec", "down_incidence"])
    assert code == 2


def test_lift_summary_line(tmp_path, capsys):
    from gccn.data import Dataset, GraphRecord, make_splits, normalize_edges, write_tudataset

    tri = GraphRecord(3, normalize_edges([(0, 1), (1, 2), (0, 2)]), label=1)
    path = GraphRecord(3, normalize_edges([(0, 1), (1, 2)]), label=0)
    write_tudataset(tmp_path / "TINY", Dataset((tri, path), "graph_class", make_splits(2)), name="TINY")
    out_dir = tmp_path / "lifted"
    assert run(["lift", tmp_path / "TINY", "--domain", "simplicial", "--out", out_dir]) == 0
    text = capsys.readouterr().out
    assert "2 graphs" in text
    assert "6/5/1" in text  # 6 nodes, 5 edges, 1 triangle across both graphs
    assert (out_dir / "complex_00000.json").exists()


def test_expand_writes_edge_lists(tmp_path, capsys):
    cpath = tmp_path / "tri.json"
    save_complex(cpath, canonical_complex("triangle"))
    out_dir = tmp_path / "dumps"
    assert run(["expand", cpath, "--spec", "down_incidence@1", "--spec", "up_adjacency@0",
                "--out", out_dir]) == 0
    dump = (out_dir / "hasse_down_incidence@1.txt").read_text()
    g = parse_graph_dump(dump)
    assert g.n_nodes == 6 and g.n_edges == 6
    assert (out_dir / "hasse_up_adjacency@0.txt").exists()


def test_expand_accepts_presets(tmp_path):
    cpath = tmp_path / "tri.json"
    save_complex(cpath, canonical_complex("triangle"))
    out_dir = tmp_path / "dumps"
    assert run(["expand", cpath, "--spec", "adj0_adj1", "--out", out_dir]) == 0
    assert (out_dir / "hasse_up_adjacency@0.txt").exists()
    assert (out_dir / "hasse_up_adjacency@1.txt").exists()


SMALL_CONFIG = """
[data]
source = "synth"
n_graphs = 16
seed = 3

[model]
specs = ["up_adjacency@0", "up_incidence"]
omega = "conv"
hidden = 6
layers = 2

[train]
lr = 0.01
max_epochs = 5
seed = 1
"""


def test_train_writes_outputs(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(SMALL_CONFIG)
    out_dir = tmp_path / "run1"
    assert run(["train", "--config", cfg, "--out", out_dir]) == 0
    assert "epochs=5" in capsys.readouterr().out
    csv_text = (out_dir / "metrics.csv").read_text()
    assert csv_text.splitlines()[0] == "epoch,lr,train_loss,val_metric"
    assert len(csv_text.splitlines()) == 6
    summary = json.loads((out_dir / "summary.json").read_text())
    assert set(summary["split_metric"]) == {"train", "val", "test"}
    ckpt = json.loads((out_dir / "checkpoint.json").read_text())
    assert summary["parameter_count"] == sum(v["rows"] * v["cols"] for v in ckpt.values())


def test_train_outputs_byte_identical_across_runs(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(SMALL_CONFIG)
    outs = []
    for name in ("a", "b"):
        out_dir = tmp_path / name
        assert run(["train", "--config", cfg, "--out", out_dir]) == 0
        outs.append((out_dir / "metrics.csv").read_bytes()
                    + (out_dir / "checkpoint.json").read_bytes())
    assert outs[0] == outs[1]


def test_flops_command(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[model]\nspecs = ["down_incidence@1"]\nhidden = 2\n')
    out_dir = tmp_path / "f"
    assert run(["flops", "--config", cfg, "--out", out_dir]) == 0
    doc = json.loads((out_dir / "flops.json").read_text())
    assert doc == {"message": 48, "aggregation": 12, "update": 6, "inter_agg": 6, "total": 72}


def test_report_aggregates_runs(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(SMALL_CONFIG)
    csvs = []
    for seed, name in ((1, "r1"), (2, "r2")):
        out_dir = tmp_path / name
        text = SMALL_CONFIG.replace("seed = 1", f"seed = {seed}")
        cfg_n = tmp_path / f"run{seed}.toml"
        cfg_n.write_text(text)
        assert run(["train", "--config", cfg_n, "--out", out_dir]) == 0
        csvs.append(out_dir / "metrics.csv")
    capsys.readouterr()
    assert run(["report", *csvs, "--out", tmp_path / "rep"]) == 0
    out = capsys.readouterr().out
    assert "runs=2" in out
    assert "final_val_metric" in out and "+/-" in out
    report = (tmp_path / "rep" / "report.csv").read_text()
    assert report.startswith("metric,mean,std")
