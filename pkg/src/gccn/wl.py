"""Color refinement on cell graphs, on complexes, and on k-sets of cells.

Refinement replaces each unit's color with a fresh id for the pair
(old color, sorted multiset of in-neighbor colors) until the partition
stops changing.  Fresh ids come from an interning map, so hashing is
injective by construction.  Alongside the dense ids, every color carries a
content digest built from its derivation; histograms are keyed by these
digests and are therefore comparable across independently refined inputs.

``ccwl`` refines cells directly from the set definitions of the
neighborhood functions, while ``wl_refine`` works on an expanded graph;
agreement of the two routes on the same relation is a tested invariant.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .complexes import CombinatorialComplex
from .errors import KTooLarge, OutOfRange, RankFilterOutOfRange, UncoloredNode
from .hasse import DirectedCellGraph, strict_hasse


@dataclass(frozen=True)
class Coloring:
    """Dense color ids (canonicalized by first occurrence) after ``round`` rounds."""

    colors: np.ndarray
    round: int = 0

    @classmethod
    def uniform(cls, n: int) -> "Coloring":
        return cls(colors=np.zeros(n, dtype=np.int64))

    @classmethod
    def from_sequence(cls, seq) -> "Coloring":
        dense, _ = _dense(list(seq))
        return cls(colors=dense)

    @property
    def n_units(self) -> int:
        return int(self.colors.shape[0])

    @property
    def n_classes(self) -> int:
        return len(set(self.colors.tolist()))

    def partition(self) -> frozenset:
        """Grouping of unit indices, independent of color id names."""
        groups: dict[int, list[int]] = {}
        for i, c in enumerate(self.colors):
            groups.setdefault(int(c), []).append(i)
        return frozenset(tuple(g) for g in groups.values())


@dataclass(frozen=True)
class ColorHistogram:
    """Multiset of canonical color digests; ``round`` is the stable round."""

    counts: dict
    round: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def n_classes(self) -> int:
        return len(self.counts)

    def sorted_counts(self) -> list[int]:
        return sorted(self.counts.values(), reverse=True)


def distinguishable(a: ColorHistogram, b: ColorHistogram) -> bool:
    """True iff the color multisets differ."""
    return a.counts != b.counts


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _dense(seq: list) -> tuple[np.ndarray, dict]:
    table: dict = {}
    out = np.empty(len(seq), dtype=np.int64)
    for i, x in enumerate(seq):
        if x not in table:
            table[x] = len(table)
        out[i] = table[x]
    return out, table


def _refine(in_nbrs: list, init_units: list, init_digests: list,
            max_rounds: int | None = None) -> tuple[np.ndarray, list, int]:
    """Shared refinement engine over explicit in-neighbor lists.

    ``init_units`` may hold any hashable labels.  Returns dense colors, the
    per-color content digest table, and the number of rounds executed.
    """
    n = len(in_nbrs)
    colors, table = _dense(init_units)
    digests: list = [None] * len(table)
    for i, c in enumerate(colors):
        digests[int(c)] = init_digests[i]
    rounds = 0
    limit = n if max_rounds is None else min(n, max_rounds)
    n_classes = len(table)
    while rounds < limit:
        sigs = []
        for v in range(n):
            nbr = sorted(int(colors[u]) for u in in_nbrs[v])
            sigs.append((int(colors[v]), tuple(nbr)))
        new_colors, new_table = _dense(sigs)
        new_digests: list = [None] * len(new_table)
        for v in range(n):
            c = int(new_colors[v])
            if new_digests[c] is None:
                parts = ",".join(sorted(digests[int(colors[u])] for u in in_nbrs[v]))
                new_digests[c] = _digest(f"({digests[int(colors[v])]}|{parts})")
        stable = len(new_table) == n_classes
        colors, digests, n_classes = new_colors, new_digests, len(new_table)
        rounds += 1
        if stable:
            break
    return colors, digests, rounds


def _histogram(colors, digests, rounds) -> ColorHistogram:
    counts: dict = {}
    for c in colors:
        key = digests[int(c)]
        counts[key] = counts.get(key, 0) + 1
    return ColorHistogram(counts=counts, round=rounds)


def _in_neighbor_lists(g: DirectedCellGraph) -> list:
    nbrs: list = [[] for _ in range(g.n_nodes)]
    for s, d in zip(g.src, g.dst):
        nbrs[int(d)].append(int(s))
    return nbrs


def _init_seeds(colors) -> list:
    return [_digest(f"init:{int(c)}") for c in colors]


def wl_refine(g: DirectedCellGraph, init: Coloring, max_rounds: int | None = None) -> Coloring:
    """Classical refinement on a directed graph; stops at a stable partition."""
    if init.n_units != g.n_nodes:
        raise UncoloredNode(f"{init.n_units} colors for {g.n_nodes} nodes")
    colors, _, rounds = _refine(_in_neighbor_lists(g), init.colors.tolist(),
                                _init_seeds(init.colors), max_rounds=max_rounds)
    return Coloring(colors=colors, round=rounds)


def wl_histogram(g: DirectedCellGraph, init: Coloring, max_rounds: int | None = None) -> ColorHistogram:
    """Refine as ``wl_refine`` and report the stable color multiset."""
    if init.n_units != g.n_nodes:
        raise UncoloredNode(f"{init.n_units} colors for {g.n_nodes} nodes")
    colors, digests, rounds = _refine(_in_neighbor_lists(g), init.colors.tolist(),
                                      _init_seeds(init.colors), max_rounds=max_rounds)
    return _histogram(colors, digests, rounds)


# -- refinement on the complex itself -----------------------------------------

def direct_neighbor_sets(cc: CombinatorialComplex, spec) -> list:
    """Neighbor sets straight from the definitions, one set per cell.

    Incidence pairs cells whose ranks differ by one and whose vertex sets
    nest; adjacency pairs same-rank cells sharing a one-rank-higher superset
    (up) or a one-rank-lower subset (down).  A rank filter empties every row
    of a different rank.
    """
    if spec.rank_filter is not None and spec.rank_filter > cc.dim:
        raise RankFilterOutOfRange(
            f"rank filter {spec.rank_filter} exceeds complex dimension {cc.dim}"
        )
    sets = [frozenset(c.vertices) for c in cc.cells]
    ranks = [c.rank for c in cc.cells]
    n = cc.n_cells
    out = []
    for i in range(n):
        if spec.rank_filter is not None and ranks[i] != spec.rank_filter:
            out.append(set())
            continue
        nbrs = set()
        for j in range(n):
            if j == i:
                continue
            if spec.kind == "up_incidence":
                hit = ranks[j] == ranks[i] + 1 and sets[i] < sets[j]
            elif spec.kind == "down_incidence":
                hit = ranks[j] == ranks[i] - 1 and sets[j] < sets[i]
            elif spec.kind == "up_adjacency":
                hit = ranks[j] == ranks[i] and any(
                    ranks[d] == ranks[i] + 1 and sets[i] < sets[d] and sets[j] < sets[d]
                    for d in range(n)
                )
            else:  # down_adjacency
                hit = ranks[j] == ranks[i] and any(
                    ranks[d] == ranks[i] - 1 and sets[d] < sets[i] and sets[d] < sets[j]
                    for d in range(n)
                )
            if hit:
                nbrs.add(j)
        out.append(nbrs)
    return out


def _members_and_lists(cc: CombinatorialComplex, spec):
    nbrs = direct_neighbor_sets(cc, spec)
    participants = {i for i in range(cc.n_cells) if nbrs[i]}
    for s in nbrs:
        participants |= s
    members = sorted(participants)
    local = {c: k for k, c in enumerate(members)}
    in_nbrs = [[local[j] for j in sorted(nbrs[c])] for c in members]
    return members, in_nbrs


def ccwl(cc: CombinatorialComplex, spec, labels: Coloring) -> ColorHistogram:
    """Cell-level refinement over one neighborhood function.

    Participants are the cells with neighbors plus the cells appearing as
    someone's neighbor; colors start from ``labels`` restricted to them.
    """
    members, coloring = ccwl_partition(cc, spec, labels, _with_digests=True)
    colors, digests, rounds = coloring
    return _histogram(colors, digests, rounds)


def ccwl_partition(cc: CombinatorialComplex, spec, labels: Coloring,
                   _with_digests: bool = False):
    """Stable coloring of the participating cells (ids returned alongside)."""
    if labels.n_units != cc.n_cells:
        raise UncoloredNode(f"{labels.n_units} labels for {cc.n_cells} cells")
    members, in_nbrs = _members_and_lists(cc, spec)
    init = [int(labels.colors[c]) for c in members]
    colors, digests, rounds = _refine(in_nbrs, init, _init_seeds(init))
    if _with_digests:
        return members, (colors, digests, rounds)
    return members, Coloring(colors=colors, round=rounds)


# -- k-sets --------------------------------------------------------------------

def kset_neighbors(universe_size: int, s) -> list:
    """All k-sets sharing exactly k-1 members with ``s`` (k * (n-k) of them)."""
    s = tuple(s)
    k = len(s)
    if k < 2:
        raise OutOfRange("k-sets need k >= 2")
    if any(b <= a for a, b in zip(s, s[1:])):
        raise OutOfRange(f"k-set {s} must be strictly increasing")
    if s[0] < 0 or s[-1] >= universe_size:
        raise OutOfRange(f"k-set {s} outside universe of size {universe_size}")
    member = set(s)
    out = []
    for drop in s:
        rest = member - {drop}
        for new in range(universe_size):
            if new not in member:
                out.append(tuple(sorted(rest | {new})))
    return sorted(out)


def kset_isomorphism_type(s, rel: set, labels) -> tuple:
    """Canonical labeled type of the relation induced on the members of ``s``.

    The minimum over member orderings of (label tuple, relation bits) is a
    relabeling invariant; two k-sets share a type iff a labeled isomorphism
    of their induced directed relations exists.
    """
    k = len(s)
    best = None
    for perm in permutations(s):
        lab = tuple(int(labels[v]) for v in perm)
        bits = tuple(
            1 if (perm[a], perm[b]) in rel else 0
            for a in range(k) for b in range(k) if a != b
        )
        cand = (lab, bits)
        if best is None or cand < best:
            best = cand
    return best


def kset_color_refinement(n_units: int, relation, unit_labels, k: int,
                          max_rounds: int | None = None) -> ColorHistogram:
    """k-set refinement over an explicit directed relation on ``n_units``.

    Each k-set starts from the canonical type of its induced sub-relation
    (labeled via ``unit_labels``) and is refined over the k-sets sharing
    k-1 members.  ``max_rounds=0`` reports the initialization histogram.
    """
    if not 2 <= k <= 3:
        raise KTooLarge(f"k must be 2 or 3, got {k}")
    if n_units < k:
        return ColorHistogram(counts={}, round=0)
    rel = {(int(a), int(b)) for a, b in relation}
    labels = list(unit_labels)
    if len(labels) != n_units:
        raise UncoloredNode(f"{len(labels)} labels for {n_units} units")
    ksets = list(combinations(range(n_units), k))
    index = {s: i for i, s in enumerate(ksets)}
    types = [kset_isomorphism_type(s, rel, labels) for s in ksets]
    seeds = [_digest(f"ktype:{t!r}") for t in types]
    in_nbrs = [[index[t] for t in kset_neighbors(n_units, s)] for s in ksets]
    colors, digests, rounds = _refine(in_nbrs, types, seeds, max_rounds=max_rounds)
    return _histogram(colors, digests, rounds)


def kccwl(cc: CombinatorialComplex, spec, k: int, labels: Coloring,
          max_rounds: int | None = None) -> ColorHistogram:
    """Refinement over k-sets of the cells participating in one neighborhood."""
    if labels.n_units != cc.n_cells:
        raise UncoloredNode(f"{labels.n_units} labels for {cc.n_cells} cells")
    g = strict_hasse(cc, spec)
    member_labels = [int(c) for c in labels.colors[g.node_cells]]
    return kset_color_refinement(g.n_nodes, zip(g.src.tolist(), g.dst.tolist()),
                                 member_labels, k, max_rounds=max_rounds)
