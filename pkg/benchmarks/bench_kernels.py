"""Time the compiled kernels against the pure-numpy fallback.

The library picks one path at import via the GCCN_NUMBA environment
variable; here both implementations are called directly so a single run
compares them on identical inputs.  An end-to-end layer timing under each
path runs in subprocesses (import-time selection).

Usage: python benchmarks/bench_kernels.py [--edges 2000000] [--feat 32]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from gccn import _kernels as K


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def bench_kernels(n_edges, n_nodes, feat):
    rng = np.random.default_rng(0)
    h = rng.normal(size=(n_nodes, feat))
    src = rng.integers(0, n_nodes, size=n_edges)
    dst = rng.integers(0, n_nodes, size=n_edges)
    rows = rng.normal(size=(n_edges, feat))
    idx = rng.integers(0, n_nodes, size=n_edges)
    w = rng.normal(size=n_edges)

    # warm up the compiled path before timing
    K._edge_segment_sum_numba(h[:10], src[:10] % 10, dst[:10] % 10, 10)
    K._scatter_add_rows_numba(np.zeros((10, feat)), idx[:10] % 10, rows[:10])
    K._scatter_add_rows_weighted_numba(np.zeros((10, feat)), idx[:10] % 10, rows[:10], w[:10])

    cases = [
        ("edge_segment_sum",
         lambda: K._edge_segment_sum_numpy(h, src, dst, n_nodes),
         lambda: K._edge_segment_sum_numba(h, src, dst, n_nodes)),
        ("scatter_add_rows",
         lambda: K._scatter_add_rows_numpy(np.zeros((n_nodes, feat)), idx, rows),
         lambda: K._scatter_add_rows_numba(np.zeros((n_nodes, feat)), idx, rows)),
        ("scatter_add_weighted",
         lambda: K._scatter_add_rows_weighted_numpy(np.zeros((n_nodes, feat)), idx, rows, w),
         lambda: K._scatter_add_rows_weighted_numba(np.zeros((n_nodes, feat)), idx, rows, w)),
    ]
    print(f"\nkernels on {n_edges:,} edges / {n_nodes:,} nodes / {feat} features")
    print(f"{'kernel':<22} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, f_np, f_nb in cases:
        ref, jit = f_np(), f_nb()
        assert np.allclose(ref, jit), name
        t_np, t_nb = timeit(f_np), timeit(f_nb)
        print(f"{name:<22} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms {t_np / t_nb:>7.1f}x")


TRAIN_SNIPPET = """
import time
from gccn import synth_dataset, train, TrainConfig
from gccn.models import ModelConfig
from gccn.neighborhoods import parse_specs
arch = ModelConfig(specs=tuple(parse_specs(["up_adjacency@0", "up_incidence"])),
                   omega_kind="gin", task="graph_class", out_dim=2)
ds = synth_dataset(100, seed=42)
t = time.perf_counter()
_, m = train(arch, ds, TrainConfig(max_epochs=50, patience=200, seed=0))
print(f"{time.perf_counter() - t:.2f}s for 50 epochs, final loss {m.losses[-1]:.4f}")
"""


def bench_training():
    print("\nend-to-end training (50 epochs, 100 synthetic graphs):")
    for flag, label in (("1", "numba"), ("0", "numpy")):
        env = dict(os.environ, GCCN_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET], env=env,
                             capture_output=True, text=True)
        status = out.stdout.strip() if out.returncode == 0 else f"failed: {out.stderr[-200:]}"
        print(f"  GCCN_NUMBA={flag} ({label}): {status}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--edges", type=int, default=2_000_000)
    ap.add_argument("--nodes", type=int, default=200_000)
    ap.add_argument("--feat", type=int, default=32)
    ap.add_argument("--skip-training", action="store_true")
    args = ap.parse_args()
    bench_kernels(args.edges, args.nodes, args.feat)
    if not args.skip_training:
        bench_training()


if __name__ == "__main__":
    main()
