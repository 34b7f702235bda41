"""Message functions, layer updates, readout heads, and the FLOP estimator.

A layer dedicates one message function to each expanded neighborhood graph,
gathers the features of that graph's cells, runs the function, scatters the
result back to destination cells, aggregates across neighborhoods per cell,
and applies the row-wise update relu(H @ W0 + M).

Message functions:

* ``conv``: neighbor aggregate (mean by default) times a weight matrix; no
  self term.
* ``gin``:  (1 + eps) * H + sum-aggregate, through a two-layer perceptron.
* ``sage``: concat(H, mean-aggregate) times a weight matrix.

Two sublayers compose the block twice with a relu in between.  Source-only
nodes emit messages; their own output rows are dropped at scatter time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Parameters, Tensor2
from .complexes import CombinatorialComplex
from .errors import ConfigMismatch, ShapeMismatch
from .hasse import DirectedCellGraph, HasseEnsemble, augmented_hasse, expand_ensemble
from .neighborhoods import NeighborhoodSpec, neighborhood_matrix

OMEGA_KINDS = ("conv", "gin", "sage")


@dataclass(frozen=True)
class OmegaConfig:
    kind: str
    in_dim: int
    out_dim: int
    sublayers: int = 1
    gin_epsilon: float = 0.0
    conv_agg: str = "mean"

    def __post_init__(self):
        if self.kind not in OMEGA_KINDS:
            raise ConfigMismatch(f"unknown message function kind {self.kind!r}")
        if self.sublayers not in (1, 2):
            raise ConfigMismatch("sublayers must be 1 or 2")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ConfigMismatch("dims must be positive")
        if self.conv_agg not in ("mean", "sum"):
            raise ConfigMismatch("conv_agg must be 'mean' or 'sum'")


def init_omega(params: Parameters, prefix: str, cfg: OmegaConfig, rng: np.random.Generator):
    d = cfg.in_dim
    for k in range(cfg.sublayers):
        if cfg.kind == "conv":
            params.glorot(f"{prefix}.w{k}", d, cfg.out_dim, rng)
        elif cfg.kind == "sage":
            params.glorot(f"{prefix}.w{k}", 2 * d, cfg.out_dim, rng)
        else:  # gin
            params.glorot(f"{prefix}.w{k}a", d, cfg.out_dim, rng)
            params.glorot(f"{prefix}.w{k}b", cfg.out_dim, cfg.out_dim, rng)
        d = cfg.out_dim


def _omega_block(cfg, g, h, params, prefix, k):
    if cfg.kind == "conv":
        return ad.matmul(ad.aggregate(g, h, cfg.conv_agg), params[f"{prefix}.w{k}"])
    if cfg.kind == "sage":
        neigh = ad.aggregate(g, h, "mean")
        return ad.matmul(ad.concat([h, neigh], axis=1), params[f"{prefix}.w{k}"])
    summed = ad.add(ad.scale(h, 1.0 + cfg.gin_epsilon), ad.aggregate(g, h, "sum"))
    hidden = ad.relu(ad.matmul(summed, params[f"{prefix}.w{k}a"]))
    return ad.matmul(hidden, params[f"{prefix}.w{k}b"])


def omega_forward(cfg: OmegaConfig, g: DirectedCellGraph, h_local: Tensor2,
                  params: Parameters, prefix: str) -> Tensor2:
    """Run one message function over a strict graph's local features."""
    if h_local.rows != g.n_nodes:
        raise ShapeMismatch(f"{h_local.rows} feature rows for {g.n_nodes} nodes")
    if h_local.cols != cfg.in_dim:
        raise ShapeMismatch(f"feature dim {h_local.cols} != configured {cfg.in_dim}")
    out = _omega_block(cfg, g, h_local, params, prefix, 0)
    if cfg.sublayers == 2:
        out = _omega_block(cfg, g, ad.relu(out), params, prefix, 1)
    return out


@dataclass(frozen=True)
class GccnLayerConfig:
    """One message function per expansion graph; a ``None`` spec slot marks
    the single unioned graph, which has no one originating neighborhood."""

    specs: tuple[NeighborhoodSpec | None, ...]
    omega_per_spec: tuple[OmegaConfig, ...]
    inter_agg: str = "sum"

    def __post_init__(self):
        if len(self.specs) != len(self.omega_per_spec):
            raise ConfigMismatch("one message function per neighborhood spec required")
        if not self.specs:
            raise ConfigMismatch("at least one neighborhood spec required")
        if self.inter_agg not in ("sum", "mean"):
            raise ConfigMismatch("inter_agg must be 'sum' or 'mean'")
        dims = {(o.in_dim, o.out_dim) for o in self.omega_per_spec}
        if len(dims) != 1:
            raise ConfigMismatch("message functions disagree on dimensions")

    @property
    def in_dim(self) -> int:
        return self.omega_per_spec[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.omega_per_spec[0].out_dim


def init_gccn_layer(params: Parameters, prefix: str, cfg: GccnLayerConfig, rng: np.random.Generator):
    for i, ocfg in enumerate(cfg.omega_per_spec):
        init_omega(params, f"{prefix}.omega{i}", ocfg, rng)
    params.glorot(f"{prefix}.update", cfg.in_dim, cfg.out_dim, rng)


def _destination_counts(ens: HasseEnsemble) -> np.ndarray:
    """Per cell, how many ensemble graphs deliver a message to it."""
    counts = np.zeros(ens.complex_size, dtype=np.int64)
    for g in ens.graphs:
        dests = g.destination_nodes()
        counts[g.node_cells[dests]] += 1
    return counts


def gccn_layer(h: Tensor2, ens: HasseEnsemble, cfg: GccnLayerConfig, params: Parameters,
               prefix: str = "layer0", activation: bool = True) -> Tensor2:
    """One generalized layer over an expanded ensemble.

    ``activation=False`` returns the pre-relu value H @ W0 + M.
    """
    if len(ens.graphs) != len(cfg.specs):
        raise ConfigMismatch(f"{len(ens.graphs)} graphs for {len(cfg.specs)} specs")
    if h.rows != ens.complex_size:
        raise ShapeMismatch(f"{h.rows} feature rows for {ens.complex_size} cells")
    n = ens.complex_size
    counts = _destination_counts(ens)
    inv_counts = np.where(counts > 0, 1.0 / np.maximum(counts, 1), 0.0)

    msg = None
    for i, (g, ocfg) in enumerate(zip(ens.graphs, cfg.omega_per_spec)):
        if g.n_nodes == 0:
            continue
        local = omega_forward(ocfg, g, ad.gather(h, g.node_cells), params, f"{prefix}.omega{i}")
        dests = g.destination_nodes()
        if dests.size == 0:
            continue
        cells = g.node_cells[dests]
        weights = inv_counts[cells] if cfg.inter_agg == "mean" else None
        part = ad.scatter_add(ad.gather(local, dests), cells, n, weights=weights)
        msg = part if msg is None else ad.add(msg, part)
    if msg is None:
        msg = Tensor2(np.zeros((n, cfg.out_dim)))

    pre = ad.add(ad.matmul(h, params[f"{prefix}.update"]), msg)
    return ad.relu(pre) if activation else pre


@dataclass(frozen=True)
class CcnnReference:
    """Per-neighborhood, per-destination-rank linear message passing.

    The message for a rank-r destination cell under spec s is the intra
    aggregate of its neighbors' rows times the weight ``psi{s}.r{r}``;
    messages are summed across neighborhoods and fed to the same
    relu(H @ W0 + M) update as the generalized layer.
    """

    specs: tuple[NeighborhoodSpec, ...]
    in_dim: int
    out_dim: int
    intra_agg: str = "sum"
    inter_agg: str = "sum"

    def __post_init__(self):
        if not self.specs:
            raise ConfigMismatch("at least one neighborhood spec required")
        if self.intra_agg not in ("sum", "mean") or self.inter_agg not in ("sum", "mean"):
            raise ConfigMismatch("aggregations must be 'sum' or 'mean'")


def init_ccnn(params: Parameters, ref: CcnnReference, cc: CombinatorialComplex,
              rng: np.random.Generator):
    for s in range(len(ref.specs)):
        for r in range(cc.dim + 1):
            params.glorot(f"psi{s}.r{r}", ref.in_dim, ref.out_dim, rng)
    params.glorot("update", ref.in_dim, ref.out_dim, rng)


def ccnn_layer(h: Tensor2, cc: CombinatorialComplex, ref: CcnnReference, params: Parameters,
               activation: bool = True) -> Tensor2:
    """Reference layer computed through dense neighborhood matrices."""
    if h.rows != cc.n_cells:
        raise ShapeMismatch(f"{h.rows} feature rows for {cc.n_cells} cells")
    ranks = cc.ranks()
    n = cc.n_cells
    msg = None
    for s, spec in enumerate(ref.specs):
        mat = neighborhood_matrix(cc, spec).toarray().astype(np.float64)
        if ref.intra_agg == "mean":
            deg = mat.sum(axis=1, keepdims=True)
            mat = np.divide(mat, deg, out=np.zeros_like(mat), where=deg > 0)
        agg = ad.matmul(Tensor2(mat), h)
        counts = None
        if ref.inter_agg == "mean":
            counts = _ccnn_delivery_counts(cc, ref.specs)
        for r in range(cc.dim + 1):
            ids = np.flatnonzero(ranks == r)
            if ids.size == 0 or f"psi{s}.r{r}" not in params:
                continue
            part_rows = ad.matmul(ad.gather(agg, ids), params[f"psi{s}.r{r}"])
            weights = None
            if counts is not None:
                inv = np.where(counts > 0, 1.0 / np.maximum(counts, 1), 0.0)
                weights = inv[ids]
            part = ad.scatter_add(part_rows, ids, n, weights=weights)
            msg = part if msg is None else ad.add(msg, part)
    if msg is None:
        msg = Tensor2(np.zeros((n, ref.out_dim)))
    pre = ad.add(ad.matmul(h, params["update"]), msg)
    return ad.relu(pre) if activation else pre


def _ccnn_delivery_counts(cc: CombinatorialComplex, specs) -> np.ndarray:
    counts = np.zeros(cc.n_cells, dtype=np.int64)
    for spec in specs:
        mat = neighborhood_matrix(cc, spec)
        receiving = np.unique(mat.rows)
        counts[receiving] += 1
    return counts


# -- readout -------------------------------------------------------------------

def init_readout(params: Parameters, task: str, feat_dim: int, max_rank: int,
                 out_dim: int, rng: np.random.Generator):
    in_dim = feat_dim if task == "node_class" else (max_rank + 1) * feat_dim
    params.glorot("head", in_dim, out_dim, rng)


def readout(h: Tensor2, ranks, graph_ids, n_graphs: int, max_rank: int,
            task: str, params: Parameters) -> Tensor2:
    """Predictions from cell embeddings.

    Graph tasks mean-pool rows per (graph, rank), concatenate the rank
    blocks (a rank with no cells contributes zeros), and apply the linear
    head.  Node tasks apply the head to rank-0 rows directly.
    """
    ranks = np.asarray(ranks, dtype=np.int64)
    graph_ids = np.asarray(graph_ids, dtype=np.int64)
    if task == "node_class":
        node_ids = np.flatnonzero(ranks == 0)
        return ad.matmul(ad.gather(h, node_ids), params["head"])
    if task not in ("graph_class", "graph_reg"):
        raise ConfigMismatch(f"unknown task {task!r}")
    r1 = max_rank + 1
    groups = graph_ids * r1 + ranks
    pooled = ad.group_mean_pool(h, groups, n_graphs * r1)
    blocks = [ad.gather(pooled, np.arange(n_graphs) * r1 + r) for r in range(r1)]
    return ad.matmul(ad.concat(blocks, axis=1), params["head"])


# -- FLOP estimate ---------------------------------------------------------------

@dataclass(frozen=True)
class FlopEstimate:
    """Closed-form per-layer cost; message counts one matrix-vector product
    of F**2 multiply-adds per directed relation entry, twice."""

    message: int
    aggregation: int
    update: int
    inter_agg: int
    total: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.message + self.aggregation + self.update + self.inter_agg)

    def to_json_dict(self) -> dict:
        return {
            "message": self.message,
            "aggregation": self.aggregation,
            "update": self.update,
            "inter_agg": self.inter_agg,
            "total": self.total,
        }


def estimate_layer_flops(cc: CombinatorialComplex, specs, feat_dim: int) -> FlopEstimate:
    """Cost of one layer: 2|E|F^2 messages, |E|F aggregation, one update per
    graph node, and per-rank synchronization across neighborhoods."""
    ranks = cc.ranks()
    n_per_rank = np.bincount(ranks, minlength=cc.dim + 1)
    message = aggregation = update = 0
    senders_per_rank = np.zeros(cc.dim + 1, dtype=np.int64)
    for spec in specs:
        mat = neighborhood_matrix(cc, spec)
        edges = mat.nnz
        participants = np.unique(np.concatenate([mat.rows, mat.cols])) if edges else np.empty(0, dtype=np.int64)
        message += 2 * edges * feat_dim * feat_dim
        aggregation += edges * feat_dim
        update += int(participants.size)
        for r in np.unique(ranks[np.unique(mat.rows)]) if edges else ():
            senders_per_rank[r] += 1
    inter = int((n_per_rank * senders_per_rank).sum()) * feat_dim
    return FlopEstimate(message=message, aggregation=aggregation, update=update, inter_agg=inter)


# -- whole model -----------------------------------------------------------------

@dataclass(frozen=True)
class ModelConfig:
    """Architecture settings.

    ``single_graph=True`` runs one message function on the single unioned
    expansion graph instead of one per neighborhood.
    """

    specs: tuple[NeighborhoodSpec, ...]
    omega_kind: str = "gin"
    sublayers: int = 1
    hidden: int = 32
    layers: int = 2
    inter_agg: str = "sum"
    task: str = "graph_class"
    out_dim: int = 2
    gin_epsilon: float = 0.0
    max_rank: int = 2
    single_graph: bool = False

    @property
    def n_graphs_per_layer(self) -> int:
        return 1 if self.single_graph else len(self.specs)

    def layer_config(self, layer: int, in_dim: int) -> GccnLayerConfig:
        d_in = in_dim if layer == 0 else self.hidden
        omegas = tuple(
            OmegaConfig(self.omega_kind, d_in, self.hidden, self.sublayers, self.gin_epsilon)
            for _ in range(self.n_graphs_per_layer)
        )
        specs = (None,) if self.single_graph else self.specs
        return GccnLayerConfig(specs=specs, omega_per_spec=omegas, inter_agg=self.inter_agg)


class GccnModel:
    """A stack of generalized layers plus a readout head."""

    def __init__(self, cfg: ModelConfig, in_dim: int):
        self.cfg = cfg
        self.in_dim = in_dim
        self.layer_cfgs = [cfg.layer_config(l, in_dim) for l in range(cfg.layers)]

    def init_params(self, rng: np.random.Generator) -> Parameters:
        params = Parameters()
        for l, lc in enumerate(self.layer_cfgs):
            init_gccn_layer(params, f"layer{l}", lc, rng)
        init_readout(params, self.cfg.task, self.cfg.hidden, self.cfg.max_rank,
                     self.cfg.out_dim, rng)
        return params

    def forward(self, features: Tensor2, ens: HasseEnsemble, ranks, graph_ids,
                n_graphs: int, params: Parameters) -> Tensor2:
        h = features
        for l, lc in enumerate(self.layer_cfgs):
            h = gccn_layer(h, ens, lc, params, prefix=f"layer{l}")
        return readout(h, ranks, graph_ids, n_graphs, self.cfg.max_rank, self.cfg.task, params)


def ensemble_for(cc: CombinatorialComplex, cfg: ModelConfig) -> HasseEnsemble:
    if cfg.single_graph:
        return HasseEnsemble(graphs=(augmented_hasse(cc, cfg.specs),),
                             complex_size=cc.n_cells)
    return expand_ensemble(cc, cfg.specs)
