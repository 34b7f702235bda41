import numpy as np
import pytest

from gccn.complexes import cells_of_rank, rank_counts
from gccn.data import (
    Dataset,
    GraphRecord,
    canonical_complex,
    clique_lift,
    cycle_lift,
    lift_complex,
    lift_features,
    make_splits,
    normalize_edges,
    parse_tudataset,
    synth_dataset,
    triangles_of,
    write_tudataset,
)
from gccn.errors import DanglingNodeReference, MalformedLine, MissingFile, UnknownName
from gccn.hasse import strict_hasse
from gccn.neighborhoods import NeighborhoodSpec

from oracles import component_count, triangles


def fixture_dataset():
    tri = GraphRecord(3, normalize_edges([(0, 1), (1, 0), (1, 2), (0, 2)]),
                      features=np.eye(3)[[0, 1, 1]], label=1)
    path = GraphRecord(4, normalize_edges([(0, 1), (1, 2), (2, 3)]),
                       features=np.eye(3)[[0, 0, 2, 1]], label=0)
    return Dataset(graphs=(tri, path), task="graph_class", splits=make_splits(2))


# -- text format --------------------------------------------------------------------

def test_round_trip_through_text_format(tmp_path):
    ds = fixture_dataset()
    write_tudataset(tmp_path, ds, name="TINY")
    back = parse_tudataset(tmp_path)
    assert len(back.graphs) == 2
    for a, b in zip(ds.graphs, back.graphs):
        assert a.node_count == b.node_count
        assert a.edges == b.edges
        assert a.label == b.label
        assert np.array_equal(a.features, b.features)
    # a second round trip is exact
    second = tmp_path / "again"
    write_tudataset(second, back, name="TINY")
    again = parse_tudataset(second)
    for a, b in zip(back.graphs, again.graphs):
        assert (a.node_count, a.edges, a.label) == (b.node_count, b.edges, b.label)
        assert np.array_equal(a.features, b.features)


def test_symmetric_edge_listing_is_deduplicated(tmp_path):
    write_tudataset(tmp_path, fixture_dataset(), name="TINY")
    back = parse_tudataset(tmp_path)
    assert back.graphs[0].edges == ((0, 1), (0, 2), (1, 2))
    assert back.graphs[1].edges == ((0, 1), (1, 2), (2, 3))


def test_missing_directory_and_files(tmp_path):
    with pytest.raises(MissingFile):
        parse_tudataset(tmp_path / "nope")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(MissingFile):
        parse_tudataset(empty)
    (empty / "DS_A.txt").write_text("1, 2\n")
    with pytest.raises(MissingFile):
        parse_tudataset(empty)


def test_malformed_line_reports_position(tmp_path):
    (tmp_path / "DS_A.txt").write_text("1, 2\n2, 1\nbogus line\n")
    (tmp_path / "DS_graph_indicator.txt").write_text("1\n1\n")
    (tmp_path / "DS_graph_labels.txt").write_text("1\n")
    with pytest.raises(MalformedLine) as exc:
        parse_tudataset(tmp_path)
    assert exc.value.line_no == 3


def test_dangling_node_reference(tmp_path):
    (tmp_path / "DS_A.txt").write_text("1, 9\n")
    (tmp_path / "DS_graph_indicator.txt").write_text("1\n1\n")
    (tmp_path / "DS_graph_labels.txt").write_text("1\n")
    with pytest.raises(DanglingNodeReference):
        parse_tudataset(tmp_path)


def test_edge_crossing_graphs_rejected(tmp_path):
    (tmp_path / "DS_A.txt").write_text("1, 2\n")
    (tmp_path / "DS_graph_indicator.txt").write_text("1\n2\n")
    (tmp_path / "DS_graph_labels.txt").write_text("1\n2\n")
    with pytest.raises(DanglingNodeReference):
        parse_tudataset(tmp_path)


def test_missing_node_labels_gives_scalar_features(tmp_path):
    (tmp_path / "DS_A.txt").write_text("1, 2\n2, 1\n")
    (tmp_path / "DS_graph_indicator.txt").write_text("1\n1\n")
    (tmp_path / "DS_graph_labels.txt").write_text("5\n")
    ds = parse_tudataset(tmp_path)
    assert np.array_equal(ds.graphs[0].features, np.ones((2, 1)))
    assert ds.graphs[0].label == 0  # labels remapped to contiguous classes


# -- liftings ------------------------------------------------------------------------

def test_clique_lift_four_cycle_has_no_faces():
    g = GraphRecord(4, normalize_edges([(0, 1), (1, 2), (2, 3), (3, 0)]))
    cc = clique_lift(g)
    assert rank_counts(cc) == [4, 4]  # dim stays 1, no 2-cells


def test_clique_lift_k4_has_four_faces():
    g = GraphRecord(4, normalize_edges([(a, b) for a in range(4) for b in range(a + 1, 4)]))
    cc = clique_lift(g)
    assert rank_counts(cc) == [4, 6, 4]
    assert len(triangles_of(g)) == len(triangles(4, g.edges)) == 4


def test_clique_lift_respects_max_rank():
    g = GraphRecord(3, normalize_edges([(0, 1), (1, 2), (0, 2)]))
    assert rank_counts(clique_lift(g, max_rank=1)) == [3, 3]
    assert rank_counts(clique_lift(g, max_rank=0)) == [3]


def test_cycle_lift_tree_has_no_faces():
    g = GraphRecord(5, normalize_edges([(0, 1), (0, 2), (2, 3), (2, 4)]))
    assert rank_counts(cycle_lift(g)) == [5, 4]


def test_cycle_lift_four_cycle_single_face():
    g = GraphRecord(4, normalize_edges([(0, 1), (1, 2), (2, 3), (3, 0)]))
    cc = cycle_lift(g)
    assert rank_counts(cc) == [4, 4, 1]
    assert cc.cells[-1].vertices == (0, 1, 2, 3)


def test_cycle_lift_euler_invariant(rng):
    for _ in range(30):
        n = int(rng.integers(3, 10))
        all_pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
        take = int(rng.integers(0, len(all_pairs) + 1))
        picked = [all_pairs[int(i)] for i in rng.choice(len(all_pairs), size=take, replace=False)]
        g = GraphRecord(n, normalize_edges(picked))
        expected = len(g.edges) - n + component_count(n, g.edges)
        from gccn.data import _fundamental_cycles

        basis = _fundamental_cycles(g)
        assert len(basis) == expected
        # merging duplicate vertex sets never increases the count
        assert len(cells_of_rank(cycle_lift(g), 2)) <= expected


def test_triangle_count_matches_bruteforce(rng):
    for _ in range(20):
        n = int(rng.integers(3, 9))
        all_pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
        take = int(rng.integers(0, len(all_pairs) + 1))
        picked = [all_pairs[int(i)] for i in rng.choice(len(all_pairs), size=take, replace=False)]
        g = GraphRecord(n, normalize_edges(picked))
        assert sorted(triangles_of(g)) == sorted(triangles(n, g.edges))
        assert len(cells_of_rank(clique_lift(g), 2)) == len(triangles(n, g.edges))


# -- feature lifting -------------------------------------------------------------------

def test_lift_features_cardinality(triangle):
    feats = lift_features(triangle, np.ones((3, 1)), "sum")
    assert feats[:3].ravel().tolist() == [1, 1, 1]
    assert feats[3:6].ravel().tolist() == [2, 2, 2]
    assert feats[6, 0] == 3


def test_lift_features_mean_of_constant(triangle):
    feats = lift_features(triangle, np.full((3, 2), 7.0), "mean")
    assert np.array_equal(feats, np.full((7, 2), 7.0))


def test_lift_features_hand_values(triangle):
    feats = lift_features(triangle, np.array([[1.0], [2.0], [4.0]]), "sum")
    # canonical edge order: (0,1), (0,2), (1,2)
    assert feats[3:6].ravel().tolist() == [3.0, 5.0, 6.0]
    assert feats[6, 0] == 7.0


def test_lift_features_is_linear(triangle, rng):
    x = rng.normal(size=(3, 4))
    y = rng.normal(size=(3, 4))
    lhs = lift_features(triangle, 2.0 * x - 3.0 * y, "sum")
    rhs = 2.0 * lift_features(triangle, x, "sum") - 3.0 * lift_features(triangle, y, "sum")
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_lift_complex_unknown_domain():
    g = GraphRecord(2, ((0, 1),))
    with pytest.raises(UnknownName):
        lift_complex(g, domain="hypercube")


# -- canonical complexes ----------------------------------------------------------------

def test_canonical_names(triangle):
    assert rank_counts(triangle) == [3, 3, 1]
    with pytest.raises(UnknownName):
        canonical_complex("octahedron")


def test_icosahedron_structure():
    cc = canonical_complex("icosahedron_faces")
    assert rank_counts(cc) == [12, 30, 20]
    faces = [c for c in cc.cells if c.rank == 2]
    edges = [c for c in cc.cells if c.rank == 1]
    # every edge lies in exactly two faces; every vertex in five
    for e in edges:
        assert sum(1 for f in faces if set(e.vertices) <= set(f.vertices)) == 2
    for v in range(12):
        assert sum(1 for f in faces if v in f.vertices) == 5


def test_five_tetrahedra_structure():
    cc = canonical_complex("five_tetrahedra")
    assert rank_counts(cc) == [20, 30, 20]
    g = strict_hasse(cc, NeighborhoodSpec("down_adjacency", 2))
    # faces of one tetrahedron form a complete directed graph on 4 nodes
    comp = {}
    for k, cell in enumerate(g.node_cells):
        comp.setdefault(min(cc.cells[int(cell)].vertices) // 4, []).append(k)
    assert len(comp) == 5
    edge_set = set(zip(g.src.tolist(), g.dst.tolist()))
    for members in comp.values():
        for a in members:
            for b in members:
                assert ((a, b) in edge_set) == (a != b)


# -- synthetic task ----------------------------------------------------------------------

def test_synth_dataset_is_reproducible(tmp_path):
    a = synth_dataset(30, seed=9)
    b = synth_dataset(30, seed=9)
    for ga, gb in zip(a.graphs, b.graphs):
        assert ga.node_count == gb.node_count
        assert ga.edges == gb.edges
        assert ga.label == gb.label
    assert a.splits == b.splits
    assert synth_dataset(30, seed=10).splits != a.splits
    # serialized forms are byte-identical across runs
    blobs = []
    for name, ds in (("a", a), ("b", b)):
        write_tudataset(tmp_path / name, ds, name="SYN")
        blobs.append(b"".join(
            (tmp_path / name / f"SYN_{part}.txt").read_bytes()
            for part in ("A", "graph_indicator", "graph_labels")
        ))
    assert blobs[0] == blobs[1]


def test_synth_split_sizes():
    ds = synth_dataset(100, seed=1)
    assert len(ds.splits["train"]) == 50
    assert len(ds.splits["val"]) == 25
    assert len(ds.splits["test"]) == 25
    joined = sorted(ds.splits["train"] + ds.splits["val"] + ds.splits["test"])
    assert joined == list(range(100))


def test_synth_labels_match_triangle_existence():
    ds = synth_dataset(60, seed=3)
    for g in ds.graphs:
        has_triangle = len(triangles(g.node_count, g.edges)) > 0
        assert g.label == int(has_triangle)
        assert 6 <= g.node_count <= 12
    labels = [g.label for g in ds.graphs]
    assert sum(labels) == 30  # balanced


def test_graph_record_validation():
    with pytest.raises(ValueError):
        GraphRecord(3, ((0, 0),))
    with pytest.raises(ValueError):
        GraphRecord(3, ((1, 0),))
    with pytest.raises(ValueError):
        GraphRecord(2, ((0, 1), (0, 1)))
