"""Matrix representations of cell neighborhood functions.

Four kinds are supported.  With ranks rk and strict containment on vertex
sets:

* ``up_incidence``:    tau is a neighbor of sigma iff rk(tau) = rk(sigma)+1 and sigma < tau
* ``down_incidence``:  tau is a neighbor of sigma iff rk(tau) = rk(sigma)-1 and tau < sigma
* ``up_adjacency``:    same rank, both contained in a common cell of rank+1
* ``down_adjacency``:  same rank, both containing a common cell of rank-1

A rank filter r restricts the function to act on rank-r cells only: rows of
cells of any other rank are empty.  Entry (i, j) of the matrix is 1 iff
cell j is a neighbor of cell i, i.e. rows index destinations and columns
index message sources.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexes import CombinatorialComplex
from .errors import EmptySpecList, RankFilterOutOfRange, UnknownSpec

KINDS = ("up_incidence", "down_incidence", "up_adjacency", "down_adjacency")


@dataclass(frozen=True)
class NeighborhoodSpec:
    kind: str
    rank_filter: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnknownSpec(f"unknown neighborhood kind {self.kind!r}")
        if self.rank_filter is not None and self.rank_filter < 0:
            raise RankFilterOutOfRange(f"rank filter must be non-negative, got {self.rank_filter}")

    def __str__(self) -> str:
        if self.rank_filter is None:
            return self.kind
        return f"{self.kind}@{self.rank_filter}"


def parse_spec(text: str) -> NeighborhoodSpec:
    """Parse the CLI/config grammar: kind name plus optional ``@r`` suffix."""
    text = text.strip()
    if "@" in text:
        kind, _, suffix = text.partition("@")
        try:
            r = int(suffix)
        except ValueError:
            raise UnknownSpec(f"bad rank filter in {text!r}") from None
        return NeighborhoodSpec(kind, r)
    return NeighborhoodSpec(text)


def parse_specs(texts) -> list[NeighborhoodSpec]:
    """Parse a list of spec strings; a preset name expands to its spec list."""
    out: list[NeighborhoodSpec] = []
    for t in texts:
        if t in PRESETS:
            out.extend(PRESETS[t])
        else:
            out.append(parse_spec(t))
    return out


def _p(*texts):
    return tuple(parse_spec(t) for t in texts)


# The ten stock neighborhood structures used throughout training runs.
# Short tokens: adj = up_adjacency, dadj = down_adjacency,
# inc = up_incidence, dinc = down_incidence; a digit is a rank filter.
PRESETS: dict[str, tuple[NeighborhoodSpec, ...]] = {
    "adj0_adj1": _p("up_adjacency@0", "up_adjacency@1"),
    "adj0_dinc2": _p("up_adjacency@0", "down_incidence@2"),
    "adj_inc": _p("up_adjacency", "up_incidence"),
    "adj_dadj_dinc": _p("up_adjacency", "down_adjacency", "down_incidence"),
    "adj": _p("up_adjacency"),
    "adj_dadj1": _p("up_adjacency", "down_adjacency@1"),
    "adj_dadj": _p("up_adjacency", "down_adjacency"),
    "adj_dinc": _p("up_adjacency", "down_incidence"),
    "adj_dadj_inc": _p("up_adjacency", "down_adjacency", "up_incidence"),
    "adj_dadj_dinc_inc": _p("up_adjacency", "down_adjacency", "down_incidence", "up_incidence"),
}


@dataclass(frozen=True)
class NeighborhoodMatrix:
    """Sparse boolean |C| x |C| relation; (rows[k], cols[k]) are the nonzeros.

    ``rows`` are destination cells, ``cols`` the corresponding sources;
    pairs are sorted lexicographically.  ``spec`` is None for unions.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    spec: NeighborhoodSpec | None = None

    @property
    def nnz(self) -> int:
        return int(self.rows.shape[0])

    def toarray(self) -> np.ndarray:
        dense = np.zeros((self.n, self.n), dtype=bool)
        dense[self.rows, self.cols] = True
        return dense

    def neighbors_of(self, cell_id: int) -> list[int]:
        return [int(j) for i, j in zip(self.rows, self.cols) if i == cell_id]


def _sorted_matrix(n: int, pairs, spec=None) -> NeighborhoodMatrix:
    pairs = sorted(set(pairs))
    if pairs:
        rows = np.array([p[0] for p in pairs], dtype=np.int64)
        cols = np.array([p[1] for p in pairs], dtype=np.int64)
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
    return NeighborhoodMatrix(n=n, rows=rows, cols=cols, spec=spec)


def _incidence_pairs(cc: CombinatorialComplex):
    """All (low, high) cell id pairs with rk(high) = rk(low)+1 and low < high as sets."""
    by_rank: dict[int, list[int]] = {}
    for i, c in enumerate(cc.cells):
        by_rank.setdefault(c.rank, []).append(i)
    pairs = []
    for r, lows in by_rank.items():
        for j in by_rank.get(r + 1, ()):
            mj = cc.mask(j)
            for i in lows:
                mi = cc.mask(i)
                if mi & mj == mi:
                    pairs.append((i, j))
    return pairs


def neighborhood_matrix(cc: CombinatorialComplex, spec: NeighborhoodSpec) -> NeighborhoodMatrix:
    """Matrix of one neighborhood function, honoring an optional rank filter."""
    if spec.rank_filter is not None and spec.rank_filter > cc.dim:
        raise RankFilterOutOfRange(
            f"rank filter {spec.rank_filter} exceeds complex dimension {cc.dim}"
        )
    inc = _incidence_pairs(cc)
    if spec.kind == "up_incidence":
        pairs = [(low, high) for low, high in inc]
    elif spec.kind == "down_incidence":
        pairs = [(high, low) for low, high in inc]
    elif spec.kind == "up_adjacency":
        below: dict[int, list[int]] = {}
        for low, high in inc:
            below.setdefault(high, []).append(low)
        pairs = [
            (a, b)
            for members in below.values()
            for a in members
            for b in members
            if a != b
        ]
    else:  # down_adjacency
        above: dict[int, list[int]] = {}
        for low, high in inc:
            above.setdefault(low, []).append(high)
        pairs = [
            (a, b)
            for members in above.values()
            for a in members
            for b in members
            if a != b
        ]
    if spec.rank_filter is not None:
        r = spec.rank_filter
        pairs = [(i, j) for i, j in pairs if cc.cells[i].rank == r]
    return _sorted_matrix(cc.n_cells, pairs, spec)


def union_neighborhood(cc: CombinatorialComplex, specs) -> NeighborhoodMatrix:
    """Entrywise OR over the matrices of the given specs."""
    specs = list(specs)
    if not specs:
        raise EmptySpecList("union over an empty spec list")
    pairs: set[tuple[int, int]] = set()
    for spec in specs:
        m = neighborhood_matrix(cc, spec)
        pairs.update(zip(m.rows.tolist(), m.cols.tolist()))
    return _sorted_matrix(cc.n_cells, pairs, None)
