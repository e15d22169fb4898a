"""Sampling, inference, and the three training loops."""

import numpy as np
import pytest

import mcgl
from mcgl import InputError
from mcgl.models import (
    _gcn_backward,
    _gcn_forward,
    _sample_batch,
    _sampling_csr,
)

from oracles import (
    chi2_crit_99,
    hop_distances,
    make_noisy_dataset,
    random_graph,
    recursive_aggregate,
    tiny_cfg,
)


def test_sample_path_depth_zero_is_root():
    g = mcgl.build_graph(4, [[0, 1], [1, 2], [2, 3]])
    rng = np.random.default_rng(0)
    for root in range(4):
        assert mcgl.mc_sample_path(g, root, 0, rng) == root
    with pytest.raises(InputError):
        mcgl.mc_sample_path(g, 4, 1, rng)
    with pytest.raises(InputError):
        mcgl.mc_sample_path(g, 0, -1, rng)


def test_sample_path_stays_within_k_hops():
    rng = np.random.default_rng(1)
    for _ in range(10):
        g = random_graph(rng, max_nodes=15)
        root = int(rng.integers(0, g.num_nodes))
        dist = hop_distances(g, root)
        for depth in (1, 2, 3):
            for _ in range(20):
                leaf = mcgl.mc_sample_path(g, root, depth, rng)
                assert 0 <= dist[leaf] <= depth


def test_sample_path_isolated_node_stays_put_without_self():
    g = mcgl.build_graph(3, [[0, 1]])
    rng = np.random.default_rng(2)
    assert mcgl.mc_sample_path(g, 2, 5, rng, include_self=False) == 2
    # with self-loops the neighborhood is {2} so the walk still stays
    assert mcgl.mc_sample_path(g, 2, 5, rng, include_self=True) == 2


def test_sample_distribution_matches_matrix_power():
    # leaf histogram vs the row-stochastic (A+I) transition matrix power
    rng = np.random.default_rng(3)
    g = mcgl.build_graph(6, [[0, 1], [1, 2], [2, 3], [3, 4], [0, 4], [1, 3], [4, 5]])
    adj = mcgl.normalize(g, "row_stochastic")
    p = adj.matrix.toarray()
    indptr, targets = _sampling_csr(g, True)
    draws = 100_000
    for depth in (1, 3):
        want = np.linalg.matrix_power(p, depth)[0]
        leaves = _sample_batch(indptr, targets, np.zeros(draws, dtype=np.int64),
                               depth, rng)
        counts = np.bincount(leaves, minlength=g.num_nodes)
        support = want > 0
        assert counts[~support].sum() == 0
        chi2 = ((counts[support] - draws * want[support]) ** 2
                / (draws * want[support])).sum()
        assert chi2 < chi2_crit_99(support.sum() - 1)


def test_sample_distribution_without_self_loops():
    g = mcgl.build_graph(3, [[0, 1], [0, 2]])
    rng = np.random.default_rng(4)
    indptr, targets = _sampling_csr(g, False)
    leaves = _sample_batch(indptr, targets, np.zeros(50_000, dtype=np.int64), 1, rng)
    counts = np.bincount(leaves, minlength=3)
    assert counts[0] == 0  # self excluded
    chi2 = ((counts[1:] - 25_000.0) ** 2 / 25_000.0).sum()
    assert chi2 < chi2_crit_99(1)


def test_pseudo_labels_pure_on_clean_graphs():
    # intra-class edges only, so every sampled leaf shares its root's label
    rng = np.random.default_rng(5)
    for ds in (mcgl.gen_circles(60, seed=0), mcgl.gen_communities(60, seed=0)):
        indptr, targets = _sampling_csr(ds.graph, True)
        roots = rng.choice(ds.split.train_ids, size=2000)
        for depth in (1, 2, 3):
            leaves = _sample_batch(indptr, targets, roots, depth, rng)
            assert np.array_equal(ds.y[leaves], ds.y[roots])


def test_propagate_depth_zero_identity():
    g = mcgl.build_graph(3, [[0, 1], [1, 2]])
    adj = mcgl.normalize(g, "symmetric")
    scores = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(mcgl.propagate(adj, scores, 0), scores)


def test_infer_matrix_equals_per_node_recursion():
    rng = np.random.default_rng(6)
    for _ in range(20):
        g = random_graph(rng, max_nodes=9, density=0.6)
        params = mcgl.init_mlp([3, 5, 4], rng)
        x = rng.normal(size=(g.num_nodes, 3))
        depth = int(rng.integers(0, 4))
        for mode in ("symmetric", "row_stochastic"):
            adj = mcgl.normalize(g, mode)
            scores = mcgl.softmax(mcgl.mlp_forward(params, x)[0])
            want = recursive_aggregate(adj, scores, depth) if depth else scores
            got = mcgl.propagate(adj, scores, depth)
            assert np.abs(got - want).max() <= 1e-12
            preds = mcgl.mcgl_infer(params, x, adj, depth)
            assert np.array_equal(preds, np.argmax(want, axis=1))


def test_infer_depth_zero_equals_mlp_argmax():
    rng = np.random.default_rng(7)
    g = mcgl.build_graph(5, [[0, 1], [2, 3], [3, 4]])
    params = mcgl.init_mlp([2, 4, 3], rng)
    x = rng.normal(size=(5, 2))
    adj = mcgl.normalize(g, "row_stochastic")
    preds = mcgl.mcgl_infer(params, x, adj, 0)
    assert np.array_equal(preds, np.argmax(mcgl.mlp_forward(params, x)[0], axis=1))
    with pytest.raises(InputError):
        mcgl.mcgl_infer(params, x, adj, 1, aggregate="mean")


def test_accuracy_masks():
    preds = np.array([0, 1, 1, 0])
    y = np.array([0, 1, 0, 0])
    assert mcgl.accuracy(preds, y, np.array([0, 1])) == 1.0
    assert mcgl.accuracy(preds, y, np.array([True, True, True, True])) == 0.75
    with pytest.raises(InputError):
        mcgl.accuracy(preds, y, np.array([], dtype=int))


def test_gcn_forward_backward_matches_finite_differences():
    rng = np.random.default_rng(8)
    g = mcgl.build_graph(6, [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [0, 5]])
    adj = mcgl.normalize(g, "symmetric")
    x = rng.normal(size=(6, 4))
    y = rng.integers(0, 3, size=6)
    mask = np.array([0, 2, 5])
    params = mcgl.init_mlp([4, 5, 3], rng)

    def loss_at(p):
        logits, _ = _gcn_forward(p, adj, x)
        return mcgl.softmax_cross_entropy(logits, y, mask)[0]

    logits, cache = _gcn_forward(params, adj, x)
    _, dlogits = mcgl.softmax_cross_entropy(logits, y, mask)
    grads = _gcn_backward(params, adj, cache, dlogits)

    eps = 1e-5
    worst = 0.0
    for kind, arrays in (("w", params.weights), ("b", params.biases)):
        for li, arr in enumerate(arrays):
            got = (grads.weights if kind == "w" else grads.biases)[li]
            it = np.nditer(arr, flags=["multi_index"])
            while not it.finished:
                idx = it.multi_index
                old = arr[idx]
                arr[idx] = old + eps
                hi = loss_at(params)
                arr[idx] = old - eps
                lo = loss_at(params)
                arr[idx] = old
                num = (hi - lo) / (2 * eps)
                denom = max(abs(num) + abs(got[idx]), 1e-6)
                worst = max(worst, abs(num - got[idx]) / denom)
                it.iternext()
    assert worst <= 1e-4


def test_gcnstar_propagated_gradient_matches_finite_differences():
    rng = np.random.default_rng(9)
    g = mcgl.build_graph(5, [[0, 1], [1, 2], [2, 3], [3, 4]])
    adj = mcgl.normalize(g, "symmetric")
    x = rng.normal(size=(5, 3))
    y = rng.integers(0, 2, size=5)
    mask = np.array([1, 4])
    params = mcgl.init_mlp([3, 4, 2], rng)
    depth = 3

    def loss_at(p):
        out, _ = mcgl.mlp_forward(p, x)
        logits = mcgl.propagate(adj, out, depth)
        return mcgl.softmax_cross_entropy(logits, y, mask)[0]

    out, cache = mcgl.mlp_forward(params, x)
    logits = mcgl.propagate(adj, out, depth)
    _, dlogits = mcgl.softmax_cross_entropy(logits, y, mask)
    grads = mcgl.mlp_backward(cache, mcgl.propagate(adj, dlogits, depth))

    eps = 1e-5
    worst = 0.0
    for arrays, got_arrays in ((params.weights, grads.weights),
                               (params.biases, grads.biases)):
        for arr, got in zip(arrays, got_arrays):
            it = np.nditer(arr, flags=["multi_index"])
            while not it.finished:
                idx = it.multi_index
                old = arr[idx]
                arr[idx] = old + eps
                hi = loss_at(params)
                arr[idx] = old - eps
                lo = loss_at(params)
                arr[idx] = old
                num = (hi - lo) / (2 * eps)
                denom = max(abs(num) + abs(got[idx]), 1e-6)
                worst = max(worst, abs(num - got[idx]) / denom)
                it.iternext()
    assert worst <= 1e-4


def test_train_mcgl_um_solves_xor():
    ds = mcgl.gen_graph_xor()
    cfg = tiny_cfg(depth=1, max_epochs=200, patience=30, dropout_rate=0.1,
                   hidden_units=16, learning_rate=0.01)
    m = mcgl.train_mcgl_um(ds.graph, ds.x, ds.y, ds.split.train_ids, cfg,
                           np.random.default_rng(0))
    preds = mcgl.mcgl_predict(m, ds.x)
    assert mcgl.accuracy(preds, ds.y, ds.split.train_ids) == 1.0


def test_train_mcgl_um_reports_restored_best():
    ds = make_noisy_dataset(seed=1)
    cfg = tiny_cfg(max_epochs=6)
    m = mcgl.train_mcgl_um(ds.graph, ds.x, ds.y, ds.split.train_ids, cfg,
                           np.random.default_rng(0), val_ids=ds.split.val_ids)
    preds = mcgl.mcgl_predict(m, ds.x)
    assert mcgl.accuracy(preds, ds.y, ds.split.val_ids) == pytest.approx(m.best_val_accuracy)
    assert 1 <= m.epochs_run <= 6


def test_train_mcgl_um_validation_errors():
    ds = make_noisy_dataset(seed=2)
    cfg = tiny_cfg()
    with pytest.raises(InputError):
        mcgl.train_mcgl_um(ds.graph, ds.x, ds.y, np.array([], dtype=int), cfg,
                           np.random.default_rng(0))
    with pytest.raises(InputError):
        bad = tiny_cfg(learning_rate=-1.0)
        mcgl.train_mcgl_um(ds.graph, ds.x, ds.y, ds.split.train_ids, bad,
                           np.random.default_rng(0))


def test_train_gcn_learns_separable_blobs():
    ds = make_noisy_dataset(seed=3, bad_edges=2)
    cfg = tiny_cfg(max_epochs=120, patience=20, dropout_rate=0.2)
    m = mcgl.train_gcn(ds.graph, ds.x, ds.y, ds.split, cfg,
                       np.random.default_rng(0))
    preds = mcgl.gcn_predict(m, ds.x)
    assert mcgl.accuracy(preds, ds.y, ds.split.test_ids) >= 0.8
    assert m.adj.mode == "symmetric"


def test_train_gcnstar_learns_separable_blobs():
    ds = make_noisy_dataset(seed=4, bad_edges=2)
    cfg = tiny_cfg(max_epochs=120, patience=20, dropout_rate=0.2, depth=2)
    m = mcgl.train_gcnstar(ds.graph, ds.x, ds.y, ds.split, cfg,
                           np.random.default_rng(0))
    preds = mcgl.gcnstar_predict(m, ds.x)
    assert mcgl.accuracy(preds, ds.y, ds.split.test_ids) >= 0.8
    assert m.depth == 2


def test_train_gcnstar_depth_override():
    ds = make_noisy_dataset(seed=5)
    cfg = tiny_cfg(max_epochs=3, depth=2)
    m = mcgl.train_gcnstar(ds.graph, ds.x, ds.y, ds.split, cfg,
                           np.random.default_rng(0), depth=0)
    assert m.depth == 0


def test_split_overlap_rejected():
    ds = make_noisy_dataset(seed=6)
    bad_split = mcgl.Split(
        train_ids=np.array([0, 1]),
        val_ids=np.array([1, 2]),
        test_ids=np.array([3]),
    )
    with pytest.raises(InputError):
        mcgl.train_gcn(ds.graph, ds.x, ds.y, bad_split, tiny_cfg(),
                       np.random.default_rng(0))


def test_training_is_deterministic_given_seed():
    ds = make_noisy_dataset(seed=7)
    cfg = tiny_cfg(max_epochs=5)
    runs = []
    for _ in range(2):
        m = mcgl.train_mcgl_um(ds.graph, ds.x, ds.y, ds.split.train_ids, cfg,
                               np.random.default_rng(42), val_ids=ds.split.val_ids)
        runs.append(m)
    for a, b in zip(runs[0].params.weights, runs[1].params.weights):
        assert np.array_equal(a, b)
    assert runs[0].epochs_run == runs[1].epochs_run
