"""Dataset ingestion, graph-to-complex liftings, and fixture complexes.

The text dataset format is the usual multi-graph layout: ``<DS>_A.txt``
holds 1-based edge pairs, ``<DS>_graph_indicator.txt`` maps nodes to graphs,
``<DS>_graph_labels.txt`` one label per graph, and optional
``<DS>_node_labels.txt`` per-node integer labels (one-hot encoded as
features; graphs without node labels get a constant scalar feature).
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .complexes import CombinatorialComplex, build_complex, cells_of_rank
from .errors import DanglingNodeReference, MalformedLine, MissingFile, UnknownName


@dataclass(frozen=True)
class GraphRecord:
    """An undirected simple graph with an optional feature matrix and a label."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    features: np.ndarray | None = None
    label: float | int = 0

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < v < self.node_count):
                raise ValueError(f"edge ({u}, {v}) not normalized for {self.node_count} nodes")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")

    def adjacency_sets(self) -> list[set]:
        adj: list[set] = [set() for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


def normalize_edges(pairs) -> tuple[tuple[int, int], ...]:
    """Dedup an undirected edge listing into sorted (u < v) pairs, dropping loops."""
    return tuple(sorted({(min(u, v), max(u, v)) for u, v in pairs if u != v}))


@dataclass(frozen=True)
class Dataset:
    graphs: tuple[GraphRecord, ...]
    task: str
    splits: dict

    def __post_init__(self):
        seen = sorted(i for part in self.splits.values() for i in part)
        if seen != list(range(len(self.graphs))):
            raise ValueError("splits must partition the graph indices")

    def split(self, name: str) -> list[GraphRecord]:
        return [self.graphs[i] for i in self.splits[name]]


def make_splits(n: int, seed: int | None = None) -> dict:
    """50/25/25 train/val/test indices; shuffled when a seed is given."""
    order = np.arange(n)
    if seed is not None:
        np.random.default_rng(seed).shuffle(order)
    n_train = n // 2
    n_val = (n - n_train) // 2
    return {
        "train": order[:n_train].tolist(),
        "val": order[n_train:n_train + n_val].tolist(),
        "test": order[n_train + n_val:].tolist(),
    }


# -- text dataset parsing ---------------------------------------------------------

def _read_int_rows(path, n_fields):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            parts = text.replace(",", " ").split()
            if len(parts) != n_fields:
                raise MalformedLine(path, lineno, f"expected {n_fields} fields, got {len(parts)}")
            try:
                rows.append(tuple(int(p) for p in parts))
            except ValueError:
                raise MalformedLine(path, lineno, f"non-integer field in {text!r}") from None
    return rows


def _dataset_prefix(directory):
    hits = sorted(glob.glob(os.path.join(directory, "*_A.txt")))
    if not hits:
        raise MissingFile(f"no *_A.txt under {directory}")
    return hits[0][: -len("_A.txt")]


def parse_tudataset(directory) -> Dataset:
    """Parse a multi-graph text dataset directory into graph records.

    Node ids are rebased per graph; the symmetric edge listing is
    deduplicated.  Graph labels are remapped to contiguous classes.
    """
    if not os.path.isdir(directory):
        raise MissingFile(f"{directory} is not a directory")
    prefix = _dataset_prefix(directory)
    indicator_path = prefix + "_graph_indicator.txt"
    labels_path = prefix + "_graph_labels.txt"
    for p in (indicator_path, labels_path):
        if not os.path.exists(p):
            raise MissingFile(p)

    indicator = [r[0] for r in _read_int_rows(indicator_path, 1)]
    graph_labels = [r[0] for r in _read_int_rows(labels_path, 1)]
    n_graphs = len(graph_labels)
    if indicator and (min(indicator) < 1 or max(indicator) > n_graphs):
        raise DanglingNodeReference("graph indicator references a missing graph")

    node_graph = np.array(indicator, dtype=np.int64) - 1
    counts = np.bincount(node_graph, minlength=n_graphs)
    offsets = np.concatenate([[0], np.cumsum(counts)])

    edge_rows = _read_int_rows(prefix + "_A.txt", 2)
    per_graph_edges: list[list[tuple[int, int]]] = [[] for _ in range(n_graphs)]
    n_nodes = len(indicator)
    for u1, v1 in edge_rows:
        if not (1 <= u1 <= n_nodes and 1 <= v1 <= n_nodes):
            raise DanglingNodeReference(f"edge ({u1}, {v1}) references a missing node")
        gu, gv = int(node_graph[u1 - 1]), int(node_graph[v1 - 1])
        if gu != gv:
            raise DanglingNodeReference(f"edge ({u1}, {v1}) crosses graphs")
        base = int(offsets[gu])
        per_graph_edges[gu].append((u1 - 1 - base, v1 - 1 - base))

    node_labels_path = prefix + "_node_labels.txt"
    features_per_graph: list[np.ndarray | None] = [None] * n_graphs
    if os.path.exists(node_labels_path):
        node_labels = [r[0] for r in _read_int_rows(node_labels_path, 1)]
        if len(node_labels) != n_nodes:
            raise DanglingNodeReference("node label count disagrees with indicator")
        vocab = sorted(set(node_labels))
        col = {lab: i for i, lab in enumerate(vocab)}
        for gi in range(n_graphs):
            block = node_labels[offsets[gi]:offsets[gi + 1]]
            feats = np.zeros((len(block), len(vocab)))
            for row, lab in enumerate(block):
                feats[row, col[lab]] = 1.0
            features_per_graph[gi] = feats

    classes = {lab: i for i, lab in enumerate(sorted(set(graph_labels)))}
    graphs = []
    for gi in range(n_graphs):
        n = int(counts[gi])
        feats = features_per_graph[gi]
        if feats is None:
            feats = np.ones((n, 1))
        graphs.append(GraphRecord(
            node_count=n,
            edges=normalize_edges(per_graph_edges[gi]),
            features=feats,
            label=classes[graph_labels[gi]],
        ))
    return Dataset(graphs=tuple(graphs), task="graph_class", splits=make_splits(n_graphs))


def write_tudataset(directory, ds: Dataset, name: str = "DS"):
    """Serialize records back to the text layout (inverse of the parser)."""
    os.makedirs(directory, exist_ok=True)
    prefix = os.path.join(directory, name)
    offset = 0
    a_lines, ind_lines, lab_lines, node_lab_lines = [], [], [], []
    one_hot = all(
        g.features is not None and g.features.shape[1] > 0
        and np.array_equal(g.features.sum(axis=1), np.ones(g.node_count))
        and np.isin(g.features, (0.0, 1.0)).all()
        for g in ds.graphs
    )
    for gi, g in enumerate(ds.graphs, start=1):
        for u, v in g.edges:
            a_lines.append(f"{offset + u + 1}, {offset + v + 1}")
            a_lines.append(f"{offset + v + 1}, {offset + u + 1}")
        ind_lines.extend([str(gi)] * g.node_count)
        lab_lines.append(str(int(g.label)))
        if one_hot:
            node_lab_lines.extend(str(int(np.argmax(row))) for row in g.features)
        offset += g.node_count
    with open(prefix + "_A.txt", "w") as fh:
        fh.write("\n".join(a_lines) + "\n")
    with open(prefix + "_graph_indicator.txt", "w") as fh:
        fh.write("\n".join(ind_lines) + "\n")
    with open(prefix + "_graph_labels.txt", "w") as fh:
        fh.write("\n".join(lab_lines) + "\n")
    if one_hot:
        with open(prefix + "_node_labels.txt", "w") as fh:
            fh.write("\n".join(node_lab_lines) + "\n")


# -- liftings -----------------------------------------------------------------------

def triangles_of(g: GraphRecord) -> list[tuple[int, int, int]]:
    adj = g.adjacency_sets()
    out = []
    for u, v in g.edges:
        for w in sorted(adj[u] & adj[v]):
            if w > v:
                out.append((u, v, w))
    return out


def clique_lift(g: GraphRecord, max_rank: int = 2) -> CombinatorialComplex:
    """Nodes at rank 0, edges at rank 1, and 3-cliques at rank 2."""
    cells = []
    if max_rank >= 1:
        cells.extend((e, 1) for e in g.edges)
    if max_rank >= 2:
        cells.extend((t, 2) for t in triangles_of(g))
    return build_complex(g.node_count, cells)


def _fundamental_cycles(g: GraphRecord) -> list[tuple[int, ...]]:
    """Vertex sets of the fundamental cycles of a breadth-first spanning forest."""
    adj = g.adjacency_sets()
    parent = [-1] * g.node_count
    depth = [-1] * g.node_count
    tree_edges = set()
    for root in range(g.node_count):
        if depth[root] >= 0:
            continue
        depth[root] = 0
        queue = [root]
        while queue:
            nxt = []
            for u in queue:
                for v in sorted(adj[u]):
                    if depth[v] < 0:
                        depth[v] = depth[u] + 1
                        parent[v] = u
                        tree_edges.add((min(u, v), max(u, v)))
                        nxt.append(v)
            queue = nxt
    cycles = []
    for u, v in g.edges:
        if (u, v) in tree_edges:
            continue
        pu, pv = u, v
        members = {u, v}
        while pu != pv:
            if depth[pu] >= depth[pv]:
                pu = parent[pu]
                members.add(pu)
            else:
                pv = parent[pv]
                members.add(pv)
        cycles.append(tuple(sorted(members)))
    return cycles


def cycle_lift(g: GraphRecord, max_rank: int = 2) -> CombinatorialComplex:
    """Nodes, edges, and spanning-forest fundamental cycles as rank-2 cells.

    Two basis cycles with identical vertex sets merge into one cell (cells
    are keyed by vertex set).  The pre-merge count is the cycle rank
    |E| - |V| + #components regardless of basis.
    """
    cells = []
    if max_rank >= 1:
        cells.extend((e, 1) for e in g.edges)
    if max_rank >= 2:
        cells.extend((vs, 2) for vs in sorted(set(_fundamental_cycles(g))))
    return build_complex(g.node_count, cells)


def lift_features(cc: CombinatorialComplex, node_features, mode: str = "sum") -> np.ndarray:
    """Cell features from node features: copy for rank 0, sum or mean above."""
    if mode not in ("sum", "mean"):
        raise ValueError(f"unknown feature lift mode {mode!r}")
    node_features = np.asarray(node_features, dtype=np.float64)
    if node_features.ndim != 2 or node_features.shape[0] != cc.n_vertices:
        raise ValueError(f"need one feature row per vertex, got {node_features.shape}")
    out = np.zeros((cc.n_cells, node_features.shape[1]))
    for i, cell in enumerate(cc.cells):
        block = node_features[list(cell.vertices)]
        out[i] = block.sum(axis=0) if mode == "sum" else block.mean(axis=0)
    return out


def lift_complex(g: GraphRecord, domain: str = "simplicial", max_rank: int = 2,
                 feature_mode: str = "sum"):
    """Lift one graph and its node features; returns (complex, cell features)."""
    if domain in ("simplicial", "clique"):
        cc = clique_lift(g, max_rank)
    elif domain in ("cell", "cellular", "cycle"):
        cc = cycle_lift(g, max_rank)
    else:
        raise UnknownName(f"unknown lifting domain {domain!r}")
    feats = g.features if g.features is not None else np.ones((g.node_count, 1))
    return cc, lift_features(cc, feats, feature_mode)


# -- fixture complexes -----------------------------------------------------------

def _icosahedron_faces() -> list[tuple[int, int, int]]:
    # poles 0 and 11, upper pentagon 1..5, lower pentagon 6..10
    up = [1, 2, 3, 4, 5]
    low = [6, 7, 8, 9, 10]
    faces = []
    for i in range(5):
        j = (i + 1) % 5
        faces.append((0, up[i], up[j]))
        faces.append((up[i], up[j], low[i]))
        faces.append((low[i], low[j], up[j]))
        faces.append((11, low[i], low[j]))
    return [tuple(sorted(f)) for f in faces]


def canonical_complex(name: str) -> CombinatorialComplex:
    """Hard-coded complexes used throughout the test corpus.

    * ``triangle``: 3 vertices, 3 edges, 1 face (7 cells).
    * ``icosahedron_faces``: 12/30/20 cells at ranks 0/1/2; the rank-2
      down-adjacency is 3-regular.
    * ``five_tetrahedra``: 5 disjoint tetrahedra, 20/30/20 cells.
    * ``fig1_style``: two faces sharing a vertex, 5/6/2 cells.
    """
    if name == "triangle":
        return build_complex(3, [((0, 1), 1), ((0, 2), 1), ((1, 2), 1), ((0, 1, 2), 2)])
    if name == "icosahedron_faces":
        faces = _icosahedron_faces()
        edges = sorted({pair for f in faces for pair in combinations(f, 2)})
        return build_complex(12, [(e, 1) for e in edges] + [(f, 2) for f in faces])
    if name == "five_tetrahedra":
        cells = []
        for t in range(5):
            base = 4 * t
            quad = [base, base + 1, base + 2, base + 3]
            cells.extend((e, 1) for e in combinations(quad, 2))
            cells.extend((f, 2) for f in combinations(quad, 3))
        return build_complex(20, cells)
    if name == "fig1_style":
        return build_complex(5, [
            ((0, 1), 1), ((0, 2), 1), ((1, 2), 1), ((2, 3), 1), ((2, 4), 1), ((3, 4), 1),
            ((0, 1, 2), 2), ((2, 3, 4), 2),
        ])
    raise UnknownName(f"unknown canonical complex {name!r}")


# -- synthetic task ----------------------------------------------------------------

def _random_triangle_free(rng: np.random.Generator, n: int) -> GraphRecord:
    order = rng.permutation(n)
    edges = {tuple(sorted((int(order[i]), int(order[rng.integers(0, i)])))) for i in range(1, n)}
    adj: list[set] = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    for _ in range(2 * n):
        u, v = int(rng.integers(0, n)), int(rng.integers(0, n))
        if u == v:
            continue
        u, v = min(u, v), max(u, v)
        if (u, v) in edges or (adj[u] & adj[v]):
            continue
        edges.add((u, v))
        adj[u].add(v)
        adj[v].add(u)
    return GraphRecord(node_count=n, edges=tuple(sorted(edges)), features=np.ones((n, 1)), label=0)


def _plant_triangle(rng: np.random.Generator, g: GraphRecord) -> GraphRecord:
    verts = sorted(int(v) for v in rng.choice(g.node_count, size=3, replace=False))
    edges = set(g.edges) | set(combinations(verts, 2))
    return replace(g, edges=tuple(sorted(edges)), label=1)


def synth_dataset(n_graphs: int, seed: int) -> Dataset:
    """Balanced binary task: does the graph contain a triangle?

    Graphs have 6..12 nodes; class 0 graphs are triangle-free by
    construction, class 1 graphs get one planted triangle.  The 50/25/25
    split is seeded and reproducible.
    """
    if n_graphs < 2:
        raise ValueError("need at least two graphs")
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(n_graphs):
        g = _random_triangle_free(rng, int(rng.integers(6, 13)))
        if i % 2 == 1:
            g = _plant_triangle(rng, g)
        graphs.append(g)
    return Dataset(graphs=tuple(graphs), task="graph_class",
                   splits=make_splits(n_graphs, seed=seed))


def lift_dataset_stats(ds: Dataset, domain: str, max_rank: int = 2) -> list[int]:
    """Total cell counts per rank 0..max_rank over all lifted graphs."""
    totals = [0] * (max_rank + 1)
    for g in ds.graphs:
        cc = clique_lift(g, max_rank) if domain in ("simplicial", "clique") else cycle_lift(g, max_rank)
        for r in range(max_rank + 1):
            totals[r] += len(cells_of_rank(cc, r))
    return totals
