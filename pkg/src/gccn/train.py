"""Full-batch training with Adam, step decay, and early stopping.

Graphs are lifted once, expanded once, and merged into one batch per split
so an epoch is a handful of large array operations.  Given a seed, the loss
curve is bitwise reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Parameters, Tape, Tensor2
from .data import Dataset, lift_complex
from .errors import ConfigMismatch, NonFiniteValue
from .hasse import DirectedCellGraph, HasseEnsemble
from .models import GccnModel, ModelConfig, ensemble_for


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    hidden: int = 32
    layers: int = 2
    max_epochs: int = 200
    patience: int = 50
    scheduler_step: int = 50
    scheduler_gamma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigMismatch("lr must be positive")
        if self.patience < 1:
            raise ConfigMismatch("patience must be at least 1")


def lr_at(tc: TrainConfig, epoch: int) -> float:
    """Step decay: the base rate halves (by gamma) every scheduler_step epochs."""
    return tc.lr * tc.scheduler_gamma ** (epoch // tc.scheduler_step)


@dataclass
class Metrics:
    losses: list = field(default_factory=list)
    lrs: list = field(default_factory=list)
    val_curve: list = field(default_factory=list)
    split_metric: dict = field(default_factory=dict)
    wall_seconds: float = 0.0
    parameter_count: int = 0
    best_epoch: int = -1
    diverged: bool = False

    def to_json_dict(self) -> dict:
        return {
            "losses": self.losses,
            "lrs": self.lrs,
            "val_curve": self.val_curve,
            "split_metric": self.split_metric,
            "wall_seconds": self.wall_seconds,
            "parameter_count": self.parameter_count,
            "best_epoch": self.best_epoch,
            "diverged": self.diverged,
        }


# -- batching ---------------------------------------------------------------------

@dataclass(frozen=True)
class Batch:
    """All graphs of a split merged into one cell table and one ensemble."""

    features: np.ndarray
    ens: HasseEnsemble
    ranks: np.ndarray
    graph_ids: np.ndarray
    n_graphs: int
    labels: np.ndarray


def _merge_graphs(graphs, cell_offsets, spec_idx) -> DirectedCellGraph:
    cells, srcs, dsts = [], [], []
    node_offset = 0
    for gi, ens_graphs in enumerate(graphs):
        g = ens_graphs[spec_idx]
        cells.append(g.node_cells + cell_offsets[gi])
        srcs.append(g.src + node_offset)
        dsts.append(g.dst + node_offset)
        node_offset += g.n_nodes
    return DirectedCellGraph(
        node_cells=np.concatenate(cells) if cells else np.empty(0, dtype=np.int64),
        src=np.concatenate(srcs) if srcs else np.empty(0, dtype=np.int64),
        dst=np.concatenate(dsts) if dsts else np.empty(0, dtype=np.int64),
        origin_spec=graphs[0][spec_idx].origin_spec if graphs else None,
    )


def build_batch(records, cfg: ModelConfig, domain: str, feature_mode: str) -> Batch:
    lifted = [lift_complex(g, domain=domain, max_rank=cfg.max_rank, feature_mode=feature_mode)
              for g in records]
    ens_per_graph = [ensemble_for(cc, cfg).graphs for cc, _ in lifted]
    sizes = [cc.n_cells for cc, _ in lifted]
    cell_offsets = np.concatenate([[0], np.cumsum(sizes)])[:-1]
    merged = tuple(
        _merge_graphs(ens_per_graph, cell_offsets, s) for s in range(cfg.n_graphs_per_layer)
    )
    total = int(sum(sizes))
    features = np.concatenate([f for _, f in lifted], axis=0)
    ranks = np.concatenate([cc.ranks() for cc, _ in lifted])
    graph_ids = np.concatenate([np.full(n, i, dtype=np.int64) for i, n in enumerate(sizes)])
    if cfg.task == "graph_reg":
        labels = np.array([float(g.label) for g in records])
    else:
        labels = np.array([int(g.label) for g in records], dtype=np.int64)
    return Batch(features=features, ens=HasseEnsemble(graphs=merged, complex_size=total),
                 ranks=ranks, graph_ids=graph_ids, n_graphs=len(records), labels=labels)


def _loss(model: GccnModel, batch: Batch, params: Parameters) -> Tensor2:
    logits = model.forward(Tensor2(batch.features), batch.ens, batch.ranks,
                           batch.graph_ids, batch.n_graphs, params)
    if model.cfg.task == "graph_reg":
        return ad.mse(logits, Tensor2(batch.labels.reshape(-1, 1)))
    return ad.softmax_cross_entropy(logits, batch.labels)


def evaluate(params: Parameters, model: GccnModel, batch: Batch) -> float:
    """Accuracy (classification) or mean absolute error (regression)."""
    logits = model.forward(Tensor2(batch.features), batch.ens, batch.ranks,
                           batch.graph_ids, batch.n_graphs, params)
    if model.cfg.task == "graph_reg":
        return float(np.abs(logits.data.ravel() - batch.labels).mean())
    pred = logits.data.argmax(axis=1)
    return float((pred == batch.labels).mean())


def _improved(task: str, candidate: float, best: float | None) -> bool:
    if best is None:
        return True
    return candidate > best if task != "graph_reg" else candidate < best


# -- optimizer --------------------------------------------------------------------

class Adam:
    """Standard moment constants; zero gradients leave parameters unchanged."""

    def __init__(self, params: Parameters, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {n: np.zeros_like(params[n].data) for n in params.names()}
        self.v = {n: np.zeros_like(params[n].data) for n in params.names()}

    def step(self, grads: dict, lr: float):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name in self.params.names():
            g = grads[name]
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = self.m[name] / (1 - b1 ** self.t)
            v_hat = self.v[name] / (1 - b2 ** self.t)
            self.params[name].data -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


# -- training loop -------------------------------------------------------------------

def train(arch: ModelConfig, ds: Dataset, tc: TrainConfig, domain: str = "simplicial",
          feature_mode: str = "sum"):
    """Fit on the train split, checkpoint on best validation, report all splits.

    Returns (best parameters, metrics).  A non-finite loss aborts the loop
    and the last finite checkpoint is kept (``metrics.diverged`` set).
    """
    if ds.task not in ("graph_class", "graph_reg"):
        raise ConfigMismatch(f"training handles graph tasks, got {ds.task!r}")
    if ds.task != arch.task:
        raise ConfigMismatch(f"dataset task {ds.task!r} but model task {arch.task!r}")
    cfg = replace(arch, hidden=tc.hidden, layers=tc.layers)
    started = time.perf_counter()
    batches = {name: build_batch(ds.split(name), cfg, domain, feature_mode)
               for name in ("train", "val", "test")}
    in_dim = batches["train"].features.shape[1]
    model = GccnModel(cfg, in_dim)
    rng = np.random.default_rng(tc.seed)
    params = model.init_params(rng)
    optimizer = Adam(params)
    metrics = Metrics(parameter_count=params.count())

    best_params = params.copy()
    best_val: float | None = None
    stale = 0
    for epoch in range(tc.max_epochs):
        lr = lr_at(tc, epoch)
        tape = Tape()
        params.watch_all(tape)
        try:
            loss = _loss(model, batches["train"], params)
            grads = ad.backward(tape, loss, params)
        except NonFiniteValue:
            metrics.diverged = True
            break
        finally:
            params.unwatch_all()
        optimizer.step(grads, lr)
        val = evaluate(params, model, batches["val"])
        metrics.losses.append(loss.item())
        metrics.lrs.append(lr)
        metrics.val_curve.append(val)
        if _improved(cfg.task, val, best_val):
            best_val = val
            best_params = params.copy()
            metrics.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= tc.patience:
                break

    for name, batch in batches.items():
        metrics.split_metric[name] = evaluate(best_params, model, batch)
    metrics.wall_seconds = time.perf_counter() - started
    return best_params, metrics


def write_metrics_csv(path, metrics: Metrics):
    with open(path, "w") as fh:
        fh.write("epoch,lr,train_loss,val_metric\n")
        for e, (lr, loss, val) in enumerate(zip(metrics.lrs, metrics.losses, metrics.val_curve)):
            fh.write(f"{e},{lr!r},{loss!r},{val!r}\n")
