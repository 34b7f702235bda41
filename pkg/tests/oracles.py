"""Independent brute-force oracles used to freeze expected test values.

Everything here works on plain Python sets and loops, deliberately avoiding
the package's bitmask / matrix-product / expansion code paths.
"""

from itertools import combinations

import numpy as np

from gccn.complexes import CombinatorialComplex, build_complex


def neighbor_sets(cc: CombinatorialComplex, kind: str, rank_filter=None) -> list:
    """Neighbors of every cell by scanning all (cell, cell, witness) triples."""
    vs = [set(c.vertices) for c in cc.cells]
    rk = [c.rank for c in cc.cells]
    n = cc.n_cells
    out = []
    for i in range(n):
        if rank_filter is not None and rk[i] != rank_filter:
            out.append(set())
            continue
        found = set()
        for j in range(n):
            if i == j:
                continue
            if kind == "up_incidence" and rk[j] == rk[i] + 1 and vs[i] < vs[j]:
                found.add(j)
            if kind == "down_incidence" and rk[j] == rk[i] - 1 and vs[j] < vs[i]:
                found.add(j)
            if kind == "up_adjacency" and rk[j] == rk[i]:
                for d in range(n):
                    if rk[d] == rk[i] + 1 and vs[i] < vs[d] and vs[j] < vs[d]:
                        found.add(j)
                        break
            if kind == "down_adjacency" and rk[j] == rk[i]:
                for d in range(n):
                    if rk[d] == rk[i] - 1 and vs[d] < vs[i] and vs[d] < vs[j]:
                        found.add(j)
                        break
        out.append(found)
    return out


def neighbor_pairs(cc, kind, rank_filter=None) -> set:
    """(destination, source) pairs of the relation, for matrix comparison."""
    return {
        (i, j)
        for i, nbrs in enumerate(neighbor_sets(cc, kind, rank_filter))
        for j in nbrs
    }


def triangles(n_nodes: int, edges) -> list:
    edge_set = {tuple(sorted(e)) for e in edges}
    return [
        t for t in combinations(range(n_nodes), 3)
        if all(tuple(sorted(p)) in edge_set for p in combinations(t, 2))
    ]


def component_count(n_nodes: int, edges) -> int:
    parent = list(range(n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    return len({find(x) for x in range(n_nodes)})


def joint_wl_distinguishable(in_nbrs_a, init_a, in_nbrs_b, init_b) -> bool:
    """Reference answer: refine both graphs together with one shared hash."""
    sizes = (len(in_nbrs_a), len(in_nbrs_b))
    offset = sizes[0]
    in_nbrs = list(in_nbrs_a) + [[u + offset for u in nb] for nb in in_nbrs_b]
    colors = list(init_a) + list(init_b)
    table = {}
    colors = [table.setdefault(c, len(table)) for c in colors]
    n = len(colors)
    for _ in range(n + 1):
        table = {}
        sigs = [(colors[v], tuple(sorted(colors[u] for u in in_nbrs[v]))) for v in range(n)]
        new = [table.setdefault(s, len(table)) for s in sigs]
        if len(set(new)) == len(set(colors)):
            colors = new
            break
        colors = new
    hist_a = sorted(np.bincount(colors[:offset], minlength=len(table)).tolist())
    hist_b = sorted(np.bincount(colors[offset:], minlength=len(table)).tolist())
    return hist_a != hist_b


def in_neighbor_lists(graph) -> list:
    nbrs = [[] for _ in range(graph.n_nodes)]
    for s, d in zip(graph.src, graph.dst):
        nbrs[int(d)].append(int(s))
    return nbrs


def random_complex(rng: np.random.Generator, max_vertices: int = 5,
                   ensure_dim2: bool = False, max_cells: int | None = None):
    """Small random complex; rank 1 for pairs, rank 1 or 2 for larger sets.

    Assigning non-decreasing ranks with set size keeps the rank function
    order-preserving by construction.
    """
    from gccn.errors import RankOrderViolation

    while True:
        n = int(rng.integers(2, max_vertices + 1))
        cells = []
        for size in (2, 3, 4):
            if size > n:
                continue
            pool = list(combinations(range(n), size))
            take = int(rng.integers(0, min(len(pool), 4) + 1))
            picks = rng.choice(len(pool), size=take, replace=False)
            for p in picks:
                vs = pool[int(p)]
                rank = 1 if size == 2 else int(rng.integers(1, 3))
                cells.append((vs, rank))
        try:
            cc = build_complex(n, cells)
        except RankOrderViolation:
            continue
        if ensure_dim2 and cc.dim < 2:
            continue
        if max_cells is not None and cc.n_cells > max_cells:
            continue
        return cc


def random_rank_preserving_permutation(rng: np.random.Generator, cc) -> list:
    ranks = cc.ranks()
    perm = np.arange(cc.n_cells)
    for r in range(cc.dim + 1):
        ids = np.flatnonzero(ranks == r)
        perm[ids] = ids[rng.permutation(len(ids))]
    return [int(x) for x in perm]
