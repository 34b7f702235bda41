"""Command-line entry point: lift, expand, wl, train, flops, report.

Exit codes: 0 success, 2 usage error, 3 data error.  The ``wl`` command
inverts the usual convention on purpose for pipeline scripting: it exits 0
when the two inputs are INDISTINGUISHABLE and 1 when the refinement tells
them apart.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from . import complexes, data, hasse, models, wl
from .errors import GccnError
from .neighborhoods import PRESETS, parse_specs
from .train import TrainConfig, train as run_training, write_metrics_csv


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gccn")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lift", help="lift a graph dataset directory to complex JSON files")
    p.add_argument("dataset_dir")
    p.add_argument("--domain", choices=["simplicial", "cell"], default="simplicial")
    p.add_argument("--max-rank", type=int, default=2)
    p.add_argument("--feature-mode", choices=["sum", "mean"], default="sum")
    _add_common(p)

    p = sub.add_parser("expand", help="expand a complex JSON into edge-list graph dumps")
    p.add_argument("complex_json")
    p.add_argument("--spec", action="append", required=True,
                   help="neighborhood spec (e.g. up_adjacency@0) or preset name; repeatable")
    _add_common(p)

    p = sub.add_parser("wl", help="compare two complexes by color refinement")
    p.add_argument("complex_a")
    p.add_argument("complex_b")
    p.add_argument("--spec", action="append", required=True)
    p.add_argument("--k", type=int, default=None, help="k-set refinement order (2 or 3)")
    p.add_argument("--init", choices=["uniform", "rank"], default="uniform")
    _add_common(p)

    p = sub.add_parser("train", help="train a model from a TOML run config")
    p.add_argument("--config", required=True)
    _add_common(p)

    p = sub.add_parser("flops", help="per-layer cost estimate from a TOML run config")
    p.add_argument("--config", required=True)
    p.add_argument("--complex", dest="complex_json", default=None,
                   help="complex JSON to estimate on (default: the triangle fixture)")
    _add_common(p)

    p = sub.add_parser("report", help="aggregate metrics CSVs (mean and std over seeds)")
    p.add_argument("csv_files", nargs="+")
    _add_common(p)
    return ap


def _load_config(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _model_config(doc: dict) -> models.ModelConfig:
    sec = doc.get("model", {})
    spec_strings = sec.get("specs", ["up_adjacency@0", "up_incidence"])
    if isinstance(spec_strings, str):
        spec_strings = [spec_strings]
    return models.ModelConfig(
        specs=tuple(parse_specs(spec_strings)),
        omega_kind=sec.get("omega", "gin"),
        sublayers=int(sec.get("sublayers", 1)),
        hidden=int(sec.get("hidden", 32)),
        layers=int(sec.get("layers", 2)),
        inter_agg=sec.get("inter_agg", "sum"),
        task=sec.get("task", "graph_class"),
        out_dim=int(sec.get("out_dim", 2)),
        gin_epsilon=float(sec.get("gin_epsilon", 0.0)),
        max_rank=int(sec.get("max_rank", 2)),
        single_graph=bool(sec.get("single_graph", False)),
    )


def _dataset(doc: dict, seed: int) -> data.Dataset:
    sec = doc.get("data", {})
    source = sec.get("source", "synth")
    if source == "synth":
        return data.synth_dataset(int(sec.get("n_graphs", 100)), int(sec.get("seed", seed)))
    if source == "tudataset":
        return data.parse_tudataset(sec["path"])
    raise GccnError(f"unknown data source {source!r}")


def cmd_lift(args) -> int:
    ds = data.parse_tudataset(args.dataset_dir)
    os.makedirs(args.out, exist_ok=True)
    totals = [0] * (args.max_rank + 1)
    for i, g in enumerate(ds.graphs):
        cc, feats = data.lift_complex(g, domain=args.domain, max_rank=args.max_rank,
                                      feature_mode=args.feature_mode)
        complexes.save_complex(os.path.join(args.out, f"complex_{i:05d}.json"), cc, feats)
        for r in range(args.max_rank + 1):
            totals[r] += len(complexes.cells_of_rank(cc, r))
    print(f"{len(ds.graphs)} graphs -> cells per rank: " + "/".join(f"{t:,}" for t in totals))
    return 0


def cmd_expand(args) -> int:
    cc, _ = complexes.load_complex(args.complex_json)
    specs = parse_specs(args.spec)
    os.makedirs(args.out, exist_ok=True)
    ens = hasse.expand_ensemble(cc, specs)
    for spec, g in zip(specs, ens.graphs):
        path = os.path.join(args.out, f"hasse_{spec}.txt")
        with open(path, "w") as fh:
            fh.write(hasse.dump_graph(g))
        print(f"{spec}: nodes={g.n_nodes} edges={g.n_edges} -> {path}")
    return 0


def _wl_labels(cc, mode: str) -> wl.Coloring:
    if mode == "rank":
        return wl.Coloring.from_sequence(cc.ranks().tolist())
    return wl.Coloring.uniform(cc.n_cells)


def cmd_wl(args) -> int:
    specs = parse_specs(args.spec)
    if len(specs) != 1:
        print("wl compares under exactly one neighborhood spec", file=sys.stderr)
        return 2
    spec = specs[0]
    histograms = []
    for path in (args.complex_a, args.complex_b):
        cc, _ = complexes.load_complex(path)
        labels = _wl_labels(cc, args.init)
        if args.k is None:
            hist = wl.ccwl(cc, spec, labels)
        else:
            hist = wl.kccwl(cc, spec, args.k, labels)
        histograms.append(hist)
        counts = "[" + " ".join(f"{c}x" for c in hist.sorted_counts()) + "]"
        print(f"{path}: rounds={hist.round} classes={hist.n_classes} histogram={counts}")
    if wl.distinguishable(*histograms):
        print("distinguishable")
        return 1
    print("indistinguishable")
    return 0


def cmd_train(args) -> int:
    doc = _load_config(args.config)
    arch = _model_config(doc)
    ds = _dataset(doc, args.seed)
    sec = doc.get("train", {})
    tc = TrainConfig(
        lr=float(sec.get("lr", 0.01)),
        hidden=int(doc.get("model", {}).get("hidden", 32)),
        layers=int(doc.get("model", {}).get("layers", 2)),
        max_epochs=int(sec.get("max_epochs", 200)),
        patience=int(sec.get("patience", 50)),
        scheduler_step=int(sec.get("scheduler_step", 50)),
        scheduler_gamma=float(sec.get("scheduler_gamma", 0.5)),
        seed=int(sec.get("seed", args.seed)),
    )
    domain = doc.get("data", {}).get("domain", "simplicial")
    feature_mode = doc.get("data", {}).get("feature_mode", "sum")
    params, metrics = run_training(arch, ds, tc, domain=domain, feature_mode=feature_mode)
    os.makedirs(args.out, exist_ok=True)
    write_metrics_csv(os.path.join(args.out, "metrics.csv"), metrics)
    params.save(os.path.join(args.out, "checkpoint.json"))
    summary = metrics.to_json_dict()
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    parts = ", ".join(f"{k}={v:.4f}" for k, v in metrics.split_metric.items())
    print(f"epochs={len(metrics.losses)} params={metrics.parameter_count} {parts}")
    return 0


def cmd_flops(args) -> int:
    doc = _load_config(args.config)
    arch = _model_config(doc)
    if args.complex_json:
        cc, _ = complexes.load_complex(args.complex_json)
    else:
        cc = data.canonical_complex("triangle")
    est = models.estimate_layer_flops(cc, arch.specs, arch.hidden)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "flops.json")
    with open(path, "w") as fh:
        json.dump(est.to_json_dict(), fh, indent=2)
        fh.write("\n")
    print(json.dumps(est.to_json_dict()))
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.csv_files:
        with open(path) as fh:
            records = list(csv.DictReader(fh))
        if not records:
            raise GccnError(f"{path} has no data rows")
        last = records[-1]
        rows.append((path, float(last["train_loss"]), float(last["val_metric"])))
    losses = np.array([r[1] for r in rows])
    vals = np.array([r[2] for r in rows])
    print(f"runs={len(rows)}")
    print(f"final_train_loss: {losses.mean():.6f} +/- {losses.std(ddof=0):.6f}")
    print(f"final_val_metric: {vals.mean():.6f} +/- {vals.std(ddof=0):.6f}")
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.csv"), "w") as fh:
        fh.write("metric,mean,std\n")
        fh.write(f"final_train_loss,{losses.mean()!r},{losses.std(ddof=0)!r}\n")
        fh.write(f"final_val_metric,{vals.mean()!r},{vals.std(ddof=0)!r}\n")
    return 0


COMMANDS = {
    "lift": cmd_lift,
    "expand": cmd_expand,
    "wl": cmd_wl,
    "train": cmd_train,
    "flops": cmd_flops,
    "report": cmd_report,
}


def run_command(argv) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (GccnError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> int:
    return run_command(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
