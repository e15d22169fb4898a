"""Synthetic generators, splits, and the on-disk dataset formats."""

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

import mcgl
from mcgl import IngestionError, InputError
from mcgl.datasets import _knn_edges


def _adj_matrix(g):
    n = g.num_nodes
    if g.num_edges == 0:
        return sp.csr_matrix((n, n))
    i, j = g.edges[:, 0], g.edges[:, 1]
    data = np.ones(2 * len(i))
    return sp.csr_matrix((data, (np.r_[i, j], np.r_[j, i])), shape=(n, n))


def test_graph_xor_exact():
    ds = mcgl.gen_graph_xor()
    assert np.array_equal(ds.x, [[0, 0], [0, 1], [1, 0], [1, 1]])
    assert np.array_equal(ds.y, [0, 1, 1, 0])
    assert np.array_equal(ds.graph.edges, [[0, 3], [1, 2]])
    assert np.array_equal(ds.split.train_ids, [0, 1, 2, 3])
    assert len(ds.split.val_ids) == 0 and len(ds.split.test_ids) == 0
    degrees = np.diff(_adj_matrix(ds.graph).indptr)
    assert np.array_equal(degrees, [1, 1, 1, 1])
    assert mcgl.noise_rate(ds.graph, ds.y) == 0.0


def test_graph_xor_aggregation_collapses_features():
    # one convolution step maps every corner onto the barycenter (0.5, 0.5);
    # mean aggregation gives it exactly, degree-scaled aggregation to 1 ulp
    ds = mcgl.gen_graph_xor()
    out = mcgl.spmm(mcgl.normalize(ds.graph, "row_stochastic"), ds.x)
    assert np.array_equal(out, np.full((4, 2), 0.5))
    sym = mcgl.spmm(mcgl.normalize(ds.graph, "symmetric"), ds.x)
    assert np.abs(sym - 0.5).max() <= 1e-15


def test_circles_geometry_and_split():
    ds = mcgl.gen_circles(60, seed=0)
    assert ds.num_nodes == 60 and ds.num_classes == 2
    r = np.linalg.norm(ds.x, axis=1)
    assert r[ds.y == 0].max() <= 1.0
    assert r[ds.y == 1].min() >= 1.0
    assert r.max() <= np.sqrt(2.0) + 1e-12
    assert mcgl.noise_rate(ds.graph, ds.y) == 0.0
    assert len(ds.split.train_ids) == 10
    for c in (0, 1):
        assert (ds.y[ds.split.train_ids] == c).sum() == 5
    assert len(ds.split.test_ids) == 50
    assert not np.intersect1d(ds.split.train_ids, ds.split.test_ids).size


def test_generators_deterministic_per_seed():
    for gen in (mcgl.gen_circles, mcgl.gen_communities, mcgl.gen_large_variance):
        a = gen(40, seed=7)
        b = gen(40, seed=7)
        c = gen(40, seed=8)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.graph.edges, b.graph.edges)
        assert np.array_equal(a.split.train_ids, b.split.train_ids)
        assert not np.array_equal(a.x, c.x)


def test_generator_size_validation():
    with pytest.raises(InputError):
        mcgl.gen_circles(61)
    with pytest.raises(InputError):
        mcgl.gen_communities(2)
    with pytest.raises(InputError):
        mcgl.generate(mcgl.SynthSpec("no_such_kind"))
    with pytest.raises(InputError):
        mcgl.generate(mcgl.SynthSpec("circles", knn_k=0))


def test_communities_structure():
    for seed in range(5):
        ds = mcgl.gen_communities(60, seed=seed)
        assert mcgl.noise_rate(ds.graph, ds.y) == 0.0
        # satellite communities never connect to the major one
        n_comp, labels = connected_components(_adj_matrix(ds.graph), directed=False)
        assert n_comp >= 4
        # training nodes all sit inside one component per class
        for c in (0, 1):
            ids = ds.split.train_ids[ds.y[ds.split.train_ids] == c]
            assert len(np.unique(labels[ids])) == 1


def test_communities_class_centers():
    # sample means concentrate near the configured centers (-1,-1) and (1,1)
    means = np.zeros((20, 2, 2))
    for seed in range(20):
        ds = mcgl.gen_communities(200, seed=seed)
        for c in (0, 1):
            means[seed, c] = ds.x[ds.y == c].mean(axis=0)
    grand = means.mean(axis=0)
    assert np.abs(grand[0] - (-1.0)).max() < 0.2
    assert np.abs(grand[1] - 1.0).max() < 0.2


def test_large_variance_spread():
    per_class_var = []
    for seed in range(10):
        ds = mcgl.gen_large_variance(400, seed=seed)
        for c in (0, 1):
            per_class_var.append(ds.x[ds.y == c].var(axis=0, ddof=1).mean())
    mean_var = np.mean(per_class_var)
    assert abs(mean_var - 2.0) < 0.3 * 2.0
    assert mcgl.noise_rate(ds.graph, ds.y) == 0.0


def test_aggregation_shrinks_intra_class_variance():
    # smoothing over intra-class edges concentrates features class by class
    for seed in range(10):
        ds = mcgl.gen_large_variance(100, seed=seed)
        adj = mcgl.normalize(ds.graph, "row_stochastic")
        smoothed = mcgl.spmm(adj, ds.x)
        for c in (0, 1):
            before = ds.x[ds.y == c].var(axis=0).mean()
            after = smoothed[ds.y == c].var(axis=0).mean()
            assert after < before


def test_knn_edges_stay_within_groups():
    rng = np.random.default_rng(0)
    points = rng.normal(size=(30, 2))
    groups = np.repeat([0, 1, 2], 10)
    edges = _knn_edges(points, groups, 3)
    assert np.array_equal(groups[edges[:, 0]], groups[edges[:, 1]])
    g = mcgl.build_graph(30, edges)
    degrees = np.diff(_adj_matrix(g).indptr)
    assert degrees.min() >= 1  # every node reached at least its nearest neighbor


def test_knn_edges_tiny_groups():
    points = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert _knn_edges(points, np.array([0, 1]), 3).size == 0
    # both directions appear; canonicalization collapses them to one pair
    g = mcgl.build_graph(2, _knn_edges(points, np.array([0, 0]), 3))
    assert np.array_equal(g.edges, [[0, 1]])


def test_make_split_counts():
    y = np.repeat([0, 1, 2], 40)
    split = mcgl.make_split(y, per_class=5, n_val=20, n_test=30, seed=0)
    assert len(split.train_ids) == 15
    for c in range(3):
        assert (y[split.train_ids] == c).sum() == 5
    assert len(split.val_ids) == 20
    assert len(split.test_ids) == 30
    combined = np.concatenate([split.train_ids, split.val_ids, split.test_ids])
    assert len(np.unique(combined)) == len(combined)


def test_make_split_rest_and_errors():
    y = np.repeat([0, 1], 20)
    split = mcgl.make_split(y, per_class=4, n_val=10, n_test=None, seed=1)
    assert len(split.test_ids) == 40 - 8 - 10
    with pytest.raises(InputError):
        mcgl.make_split(y, per_class=25, n_val=0, n_test=None)
    with pytest.raises(InputError):
        mcgl.make_split(y, per_class=4, n_val=40, n_test=10)


def test_text_dataset_roundtrip(tmp_path):
    ds = mcgl.gen_communities(40, seed=3)
    paths = mcgl.save_text_dataset(ds, tmp_path)
    assert sorted(p.name for p in paths) == [
        "communities.edges",
        "communities.features.csv",
        "communities.labels.csv",
        "communities.split.json",
    ]
    back = mcgl.load_text_dataset(tmp_path, "communities")
    assert np.array_equal(back.x, ds.x)
    assert np.array_equal(back.y, ds.y)
    assert np.array_equal(back.graph.edges, ds.graph.edges)
    for part in ("train_ids", "val_ids", "test_ids"):
        assert np.array_equal(getattr(back.split, part), getattr(ds.split, part))


def test_text_dataset_custom_name(tmp_path):
    ds = mcgl.gen_circles(20, seed=0)
    mcgl.save_text_dataset(ds, tmp_path, name="ring")
    back = mcgl.load_text_dataset(tmp_path, "ring")
    assert back.name == "ring"
    assert np.array_equal(back.x, ds.x)


def test_text_dataset_missing_file(tmp_path):
    ds = mcgl.gen_circles(20, seed=0)
    mcgl.save_text_dataset(ds, tmp_path)
    (tmp_path / "circles.features.csv").unlink()
    with pytest.raises(IngestionError):
        mcgl.load_text_dataset(tmp_path, "circles")


def test_text_dataset_corrupt_split(tmp_path):
    ds = mcgl.gen_circles(20, seed=0)
    mcgl.save_text_dataset(ds, tmp_path)
    (tmp_path / "circles.split.json").write_text("{not json")
    with pytest.raises(IngestionError):
        mcgl.load_text_dataset(tmp_path, "circles")


def test_load_planetoid_missing_files(tmp_path):
    with pytest.raises(IngestionError, match="ind.cora"):
        mcgl.load_planetoid(tmp_path, "cora")
    with pytest.raises(InputError):
        mcgl.load_planetoid(tmp_path, "reddit")


def test_load_coauthor_rejects_wrong_shape(tmp_path):
    # a graph with the wrong node count must be refused, not silently used
    n = 10
    adj = sp.random(n, n, density=0.3, format="csr", random_state=0)
    attr = sp.eye(n, 6805, format="csr")
    np.savez(
        tmp_path / "ms_academic.npz",
        adj_data=adj.data, adj_indices=adj.indices, adj_indptr=adj.indptr,
        adj_shape=np.array(adj.shape),
        attr_data=attr.data, attr_indices=attr.indices, attr_indptr=attr.indptr,
        attr_shape=np.array(attr.shape),
        labels=np.zeros(n, dtype=np.int64),
    )
    with pytest.raises(IngestionError, match="18333"):
        mcgl.load_coauthor(tmp_path)


def test_load_coauthor_missing_file(tmp_path):
    with pytest.raises(IngestionError):
        mcgl.load_coauthor(tmp_path)


def test_generate_dispatch():
    ds = mcgl.generate(mcgl.SynthSpec("graph_xor"))
    assert ds.name == "graph_xor"
    ds = mcgl.generate(mcgl.SynthSpec("large_variance", n=30, seed=2))
    assert ds.name == "large_variance" and ds.num_nodes == 30
    direct = mcgl.gen_large_variance(30, seed=2)
    assert np.array_equal(ds.x, direct.x)
