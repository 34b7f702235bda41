"""Graph expansions of a complex under neighborhood functions.

A strict expansion keeps one directed graph per neighborhood: nodes are the
cells that participate in that relation and each relation entry becomes an
edge source -> destination.  The single-graph expansion keeps all cells as
nodes and unions the edges of every neighborhood.

Node set note: destinations are cells with at least one neighbor; sources
are kept as nodes as well even when they receive nothing themselves, so that
no edge dangles.  Such source-only nodes emit messages but are never updated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexes import CombinatorialComplex
from .errors import EmptySpecList
from .neighborhoods import NeighborhoodMatrix, NeighborhoodSpec, neighborhood_matrix


@dataclass(frozen=True)
class DirectedCellGraph:
    """Directed graph over a subset of cells, in local node indices.

    ``node_cells[k]`` is the global cell id of local node k (strictly
    increasing).  ``src``/``dst`` are parallel arrays of local indices; the
    edge (src[e], dst[e]) carries a message from src to dst.  Edge pairs are
    unique and sorted by (src, dst).
    """

    node_cells: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    origin_spec: NeighborhoodSpec | None = None

    @property
    def n_nodes(self) -> int:
        return int(self.node_cells.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.src.shape[0])

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n_nodes).astype(np.int64)

    def destination_nodes(self) -> np.ndarray:
        """Local indices of nodes with at least one incoming edge."""
        return np.flatnonzero(self.in_degrees() > 0)

    def global_edges(self) -> set[tuple[int, int]]:
        nc = self.node_cells
        return {(int(nc[s]), int(nc[d])) for s, d in zip(self.src, self.dst)}


@dataclass(frozen=True)
class HasseEnsemble:
    graphs: tuple[DirectedCellGraph, ...]
    complex_size: int


def _graph_from_pairs(node_cells, edge_pairs, spec) -> DirectedCellGraph:
    node_cells = sorted(node_cells)
    local = {c: k for k, c in enumerate(node_cells)}
    edges = sorted({(local[s], local[d]) for s, d in edge_pairs})
    return DirectedCellGraph(
        node_cells=np.array(node_cells, dtype=np.int64),
        src=np.array([e[0] for e in edges], dtype=np.int64),
        dst=np.array([e[1] for e in edges], dtype=np.int64),
        origin_spec=spec,
    )


def graph_from_matrix(mat: NeighborhoodMatrix, spec: NeighborhoodSpec | None = None) -> DirectedCellGraph:
    """Strict graph of a relation: row i receives from column j, so edges run j -> i."""
    participants = set(mat.rows.tolist()) | set(mat.cols.tolist())
    pairs = [(int(j), int(i)) for i, j in zip(mat.rows, mat.cols)]
    return _graph_from_pairs(participants, pairs, spec)


def strict_hasse(cc: CombinatorialComplex, spec: NeighborhoodSpec) -> DirectedCellGraph:
    """Expansion of one neighborhood; empty graph when the relation is empty."""
    return graph_from_matrix(neighborhood_matrix(cc, spec), spec)


def augmented_hasse(cc: CombinatorialComplex, specs) -> DirectedCellGraph:
    """Single-graph expansion: every cell is a node, edges unioned over specs."""
    specs = list(specs)
    if not specs:
        raise EmptySpecList("expansion over an empty spec list")
    pairs: set[tuple[int, int]] = set()
    for spec in specs:
        m = neighborhood_matrix(cc, spec)
        pairs.update((int(j), int(i)) for i, j in zip(m.rows, m.cols))
    return _graph_from_pairs(range(cc.n_cells), pairs, None)


def expand_ensemble(cc: CombinatorialComplex, specs) -> HasseEnsemble:
    """One strict graph per spec, in spec order."""
    specs = list(specs)
    if not specs:
        raise EmptySpecList("expansion over an empty spec list")
    return HasseEnsemble(
        graphs=tuple(strict_hasse(cc, s) for s in specs),
        complex_size=cc.n_cells,
    )


# -- edge-list dump format -------------------------------------------------
#
# header "nodes=<n> cells=<global ids comma-separated>", then one "src dst"
# line per edge in local indices.

def dump_graph(g: DirectedCellGraph) -> str:
    ids = ",".join(str(int(c)) for c in g.node_cells)
    lines = [f"nodes={g.n_nodes} cells={ids}"]
    lines.extend(f"{int(s)} {int(d)}" for s, d in zip(g.src, g.dst))
    return "\n".join(lines) + "\n"


def parse_graph_dump(text: str) -> DirectedCellGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0]
    fields = dict(part.split("=", 1) for part in header.split())
    n = int(fields["nodes"])
    cells = [int(t) for t in fields["cells"].split(",") if t != ""]
    if len(cells) != n:
        raise ValueError("header node count disagrees with cell id list")
    edges = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
    return DirectedCellGraph(
        node_cells=np.array(cells, dtype=np.int64),
        src=np.array([e[0] for e in edges], dtype=np.int64),
        dst=np.array([e[1] for e in edges], dtype=np.int64),
    )
