"""Combinatorial complexes: ranked cell tables over a finite vertex set.

A complex is a triple (vertex set, cell family, rank function).  Cells are
non-empty vertex subsets; every singleton is a cell of rank 0 and the rank
function is order-preserving under inclusion.  Cells are stored in a fixed
table whose position is the cell id used by every downstream module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateCell, NotABijection, RankOrderViolation, SingletonRankNonzero


@dataclass(frozen=True, order=True)
class Cell:
    """A vertex subset with a rank; vertices kept strictly increasing."""

    rank: int
    vertices: tuple[int, ...]

    def __post_init__(self):
        if len(self.vertices) == 0:
            raise ValueError("cell must have at least one vertex")
        if any(b <= a for a, b in zip(self.vertices, self.vertices[1:])):
            raise ValueError(f"cell vertices must be strictly increasing: {self.vertices}")
        if self.rank < 0:
            raise ValueError("rank must be non-negative")


@dataclass(frozen=True)
class CombinatorialComplex:
    """Immutable ranked cell table.

    ``cells[i]`` is the cell with id ``i``.  ``build_complex`` produces the
    canonical ordering (by rank, then lexicographic vertex tuple);
    ``permute_cells`` produces relabeled tables that keep every other
    invariant.
    """

    n_vertices: int
    cells: tuple[Cell, ...]
    _masks: tuple[int, ...] = field(repr=False, default=())

    def __post_init__(self):
        if not self._masks:
            masks = tuple(_mask(c.vertices) for c in self.cells)
            object.__setattr__(self, "_masks", masks)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def dim(self) -> int:
        return max(c.rank for c in self.cells)

    def rank_of(self, cell_id: int) -> int:
        return self.cells[cell_id].rank

    def ranks(self) -> np.ndarray:
        """Rank of every cell, indexed by cell id."""
        return np.array([c.rank for c in self.cells], dtype=np.int64)

    def mask(self, cell_id: int) -> int:
        """Vertex set of a cell as a bitmask (bit v set iff v is a member)."""
        return self._masks[cell_id]

    def cell_id(self, vertices) -> int:
        table = {c.vertices: i for i, c in enumerate(self.cells)}
        return table[tuple(sorted(vertices))]


def _mask(vertices) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def build_complex(vertex_count: int, ranked_cells) -> CombinatorialComplex:
    """Validate and canonicalize a complex from (vertex-set, rank) pairs.

    Singletons omitted from the input are inserted at rank 0.  Cells are
    ordered by (rank, vertex tuple), which fixes cell ids deterministically.
    """
    if vertex_count < 1:
        raise ValueError("complex needs at least one vertex")
    seen: dict[tuple[int, ...], int] = {}
    for raw_vs, rank in ranked_cells:
        vs = tuple(sorted(set(raw_vs)))
        if len(vs) != len(tuple(raw_vs)):
            raise ValueError(f"repeated vertex in cell {raw_vs}")
        if not vs:
            raise ValueError("empty cell")
        if vs[0] < 0 or vs[-1] >= vertex_count:
            raise ValueError(f"cell {vs} references a vertex outside 0..{vertex_count - 1}")
        if vs in seen:
            raise DuplicateCell(f"cell {vs} listed twice")
        if len(vs) == 1 and rank != 0:
            raise SingletonRankNonzero(f"singleton {vs} must have rank 0, got {rank}")
        seen[vs] = int(rank)
    for v in range(vertex_count):
        seen.setdefault((v,), 0)

    cells = tuple(Cell(rank=r, vertices=vs) for vs, r in sorted(seen.items(), key=lambda kv: (kv[1], kv[0])))
    masks = [_mask(c.vertices) for c in cells]
    for i, ci in enumerate(cells):
        for j, cj in enumerate(cells):
            if i != j and masks[i] & masks[j] == masks[i] and ci.rank > cj.rank:
                raise RankOrderViolation(
                    f"{ci.vertices} (rank {ci.rank}) is contained in {cj.vertices} (rank {cj.rank})"
                )
    return CombinatorialComplex(n_vertices=vertex_count, cells=cells)


def cells_of_rank(cc: CombinatorialComplex, r: int) -> list[int]:
    """Ids of all rank-r cells, in table order (empty above dim)."""
    if r < 0:
        raise ValueError("rank must be non-negative")
    return [i for i, c in enumerate(cc.cells) if c.rank == r]


def rank_counts(cc: CombinatorialComplex) -> list[int]:
    """Number of cells per rank 0..dim."""
    counts = [0] * (cc.dim + 1)
    for c in cc.cells:
        counts[c.rank] += 1
    return counts


@dataclass(frozen=True)
class CellPermutation:
    """Bijection on cell ids; ``mapping[i]`` is the new id of old cell i."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        n = len(self.mapping)
        if sorted(self.mapping) != list(range(n)):
            raise NotABijection(f"mapping {self.mapping} is not a bijection on 0..{n - 1}")

    @property
    def n(self) -> int:
        return len(self.mapping)

    def inverse(self) -> "CellPermutation":
        inv = [0] * self.n
        for old, new in enumerate(self.mapping):
            inv[new] = old
        return CellPermutation(tuple(inv))

    def matrix(self) -> np.ndarray:
        """Permutation matrix P with (P H)[mapping[i]] = H[i]."""
        p = np.zeros((self.n, self.n))
        for old, new in enumerate(self.mapping):
            p[new, old] = 1.0
        return p


def permute_cells(cc: CombinatorialComplex, features: np.ndarray, p: CellPermutation):
    """Relabel cell ids by ``p`` and permute feature rows to match.

    Row ``p(i)`` of the output features is row ``i`` of the input, so the
    output equals P @ features for the matrix of ``p``.  The returned complex
    carries the same cells at permuted table positions; it is not
    re-canonicalized.
    """
    if p.n != cc.n_cells:
        raise NotABijection(f"permutation over {p.n} ids applied to {cc.n_cells} cells")
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != cc.n_cells:
        raise ValueError("feature rows must match cell count")
    new_cells: list[Cell | None] = [None] * cc.n_cells
    new_feats = np.empty_like(features)
    for old, new in enumerate(p.mapping):
        new_cells[new] = cc.cells[old]
        new_feats[new] = features[old]
    permuted = CombinatorialComplex(n_vertices=cc.n_vertices, cells=tuple(new_cells))
    return permuted, new_feats


def rank_preserving(cc: CombinatorialComplex, p: CellPermutation) -> bool:
    return all(cc.cells[old].rank == cc.cells[new].rank for old, new in enumerate(p.mapping))


# -- JSON interchange ----------------------------------------------------------
#
# {"vertices": n, "cells": [{"v": [..sorted ints..], "rank": r}, ...],
#  "features": optional row-major matrix keyed by canonical cell order}

def to_json_dict(cc: CombinatorialComplex, features: np.ndarray | None = None) -> dict:
    doc: dict = {
        "vertices": cc.n_vertices,
        "cells": [{"v": list(c.vertices), "rank": c.rank} for c in cc.cells],
    }
    if features is not None:
        features = np.asarray(features, dtype=np.float64)
        if features.shape[0] != cc.n_cells:
            raise ValueError("feature rows must match cell count")
        doc["features"] = [list(row) for row in features]
    return doc


def from_json_dict(doc: dict):
    cc = build_complex(doc["vertices"], [(c["v"], c["rank"]) for c in doc["cells"]])
    features = None
    if doc.get("features") is not None:
        features = np.array(doc["features"], dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != cc.n_cells:
            raise ValueError("features must be a matrix with one row per cell")
    return cc, features


def save_complex(path, cc: CombinatorialComplex, features: np.ndarray | None = None):
    with open(path, "w") as fh:
        json.dump(to_json_dict(cc, features), fh)
        fh.write("\n")


def load_complex(path):
    with open(path) as fh:
        return from_json_dict(json.load(fh))
