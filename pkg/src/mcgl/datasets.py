"""Synthetic dataset generators and citation/coauthor graph ingestion.

The four synthetic families are small 2-D point sets whose edges are clean
by construction (they only ever join nodes of the same class), so their
noise rate is exactly zero.  Real datasets arrive either in the published
binary formats (pickled planetoid splits, compressed sparse npz) or in a
plain-text triple that round-trips through save_text_dataset.
"""

from __future__ import annotations

import json
import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import IngestionError, InputError
from .graph import Graph, build_graph, read_edge_list, write_edge_list


@dataclass
class Split:
    """Disjoint train/val/test node id sets."""

    train_ids: np.ndarray
    val_ids: np.ndarray
    test_ids: np.ndarray


@dataclass
class Dataset:
    graph: Graph
    x: np.ndarray | sp.spmatrix
    y: np.ndarray
    split: Split
    name: str = "dataset"

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def num_classes(self) -> int:
        return int(np.max(self.y)) + 1


@dataclass
class SynthSpec:
    """Recipe for one synthetic dataset."""

    kind: str
    n: int = 60
    variance: float | None = None
    seed: int = 0
    knn_k: int = 3
    train_per_class: int = 5

    def validate(self) -> None:
        if self.kind not in ("graph_xor", "circles", "communities", "large_variance"):
            raise InputError(f"unknown synthetic kind {self.kind!r}")
        if self.kind != "graph_xor":
            if self.n < 4:
                raise InputError("n must be at least 4")
            if self.n % 2:
                raise InputError("n must be even (balanced classes)")
        if self.knn_k < 1:
            raise InputError("knn_k must be positive")
        if self.train_per_class < 1:
            raise InputError("train_per_class must be positive")


def _empty_ids() -> np.ndarray:
    return np.empty(0, dtype=np.int64)


def _check_dataset(ds: Dataset, err=InputError) -> Dataset:
    n = ds.graph.num_nodes
    if ds.x.shape[0] != n or len(ds.y) != n:
        raise err(
            f"{ds.name}: feature rows ({ds.x.shape[0]}) and labels ({len(ds.y)}) "
            f"must both match node count ({n})"
        )
    seen: set[int] = set()
    for part, ids in (
        ("train", ds.split.train_ids),
        ("val", ds.split.val_ids),
        ("test", ds.split.test_ids),
    ):
        ids = np.asarray(ids)
        if len(ids) and (ids.min() < 0 or ids.max() >= n):
            raise err(f"{ds.name}: {part} ids out of range")
        cur = set(ids.tolist())
        if len(cur) != len(ids) or cur & seen:
            raise err(f"{ds.name}: split sets must be disjoint without repeats")
        seen |= cur
    return ds


# ---------------------------------------------------------------------------
# Synthetic generators


def _knn_edges(points: np.ndarray, groups: np.ndarray, k: int) -> np.ndarray:
    """k nearest neighbors per node, restricted to the node's own group.

    Distance ties break toward the lower node id so the edge set is a pure
    function of the inputs.
    """
    pairs = []
    for grp in np.unique(groups):
        ids = np.flatnonzero(groups == grp)
        m = len(ids)
        if m < 2:
            continue
        pts = points[ids]
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        order = np.argsort(d2, axis=1, kind="stable")[:, : min(k, m - 1)]
        src = np.repeat(ids, order.shape[1])
        dst = ids[order.ravel()]
        pairs.append(np.column_stack([src, dst]))
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(pairs)


def _kmeans(points: np.ndarray, k: int, rng: np.random.Generator,
            max_iters: int = 100) -> np.ndarray:
    """Plain Lloyd's iteration; empty clusters are reseeded so all k survive."""
    n = len(points)
    k = min(k, n)
    centers = points[rng.choice(n, size=k, replace=False)]
    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iters):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        for c in range(k):
            if not np.any(new_assign == c):
                worst = int(np.argmax(d2[np.arange(n), new_assign]))
                new_assign[worst] = c
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            centers[c] = points[assign == c].mean(axis=0)
    return assign


def gen_graph_xor() -> Dataset:
    """Four nodes at the unit-square corners, XOR labels, same-label edges.

    All four nodes are training nodes; a single aggregation step maps every
    feature vector onto (0.5, 0.5), which is what makes this dataset a
    counterexample for convolution-first pipelines.
    """
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0], dtype=np.int64)
    g = build_graph(4, np.array([[0, 3], [1, 2]]))
    split = Split(np.arange(4, dtype=np.int64), _empty_ids(), _empty_ids())
    return _check_dataset(Dataset(g, x, y, split, name="graph_xor"))


def _train_rest_split(
    n: int, y: np.ndarray, per_class: int, rng: np.random.Generator,
    pool: np.ndarray | None = None,
) -> Split:
    """`per_class` training nodes (from `pool` when given), everything else test."""
    train = []
    for c in np.unique(y):
        ids = np.flatnonzero(y == c)
        if pool is not None:
            ids = np.intersect1d(ids, pool)
        take = min(per_class, len(ids))
        train.append(rng.choice(ids, size=take, replace=False))
    train_ids = np.sort(np.concatenate(train)).astype(np.int64)
    test_ids = np.setdiff1d(np.arange(n, dtype=np.int64), train_ids)
    return Split(train_ids, _empty_ids(), test_ids)


def gen_circles(n: int = 60, seed: int = 0, knn_k: int = 3,
                train_per_class: int = 5) -> Dataset:
    """Two equal-area annuli: class 0 inside r=1, class 1 out to r=sqrt(2)."""
    SynthSpec("circles", n, seed=seed, knn_k=knn_k,
              train_per_class=train_per_class).validate()
    rng = np.random.default_rng(seed)
    half = n // 2
    # uniform by area inside an annulus [r0, r1]: r = sqrt(r0^2 + u (r1^2 - r0^2))
    bounds = [(0.0, 1.0), (1.0, np.sqrt(2.0))]
    xs, ys = [], []
    for cls, (r0, r1) in enumerate(bounds):
        r = np.sqrt(r0**2 + rng.random(half) * (r1**2 - r0**2))
        theta = rng.random(half) * 2.0 * np.pi
        xs.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        ys.append(np.full(half, cls, dtype=np.int64))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    g = build_graph(n, _knn_edges(x, y, knn_k))
    split = _train_rest_split(n, y, train_per_class, rng)
    return _check_dataset(Dataset(g, x, y, split, name="circles"))


def _gaussian_classes(n: int, variance: float, rng: np.random.Generator):
    half = n // 2
    centers = np.array([[-1.0, -1.0], [1.0, 1.0]])
    x = np.concatenate([
        c + rng.normal(scale=np.sqrt(variance), size=(half, 2)) for c in centers
    ])
    y = np.concatenate([
        np.zeros(half, dtype=np.int64), np.ones(half, dtype=np.int64)
    ])
    return x, y


def gen_communities(n: int = 60, seed: int = 0, variance: float = 1.0,
                    knn_k: int = 3, train_per_class: int = 5,
                    communities_per_class: int = 4) -> Dataset:
    """Two Gaussian classes, each split into a major community plus satellites.

    Edges never cross community boundaries, so the graph has at least two
    connected components per class; training nodes come from the major
    (largest) community of each class only.
    """
    SynthSpec("communities", n, variance, seed, knn_k, train_per_class).validate()
    rng = np.random.default_rng(seed)
    x, y = _gaussian_classes(n, variance, rng)
    comm = np.zeros(n, dtype=np.int64)
    major_pool = []
    for c in range(2):
        ids = np.flatnonzero(y == c)
        local = _kmeans(x[ids], min(communities_per_class, len(ids)), rng)
        comm[ids] = 2 * local + c  # distinct ids across classes
        sizes = np.bincount(local)
        major = int(np.argmax(sizes))  # ties go to the lowest community id
        major_pool.append(ids[local == major])
    g = build_graph(n, _knn_edges(x, comm, knn_k))
    split = _train_rest_split(n, y, train_per_class, rng,
                              pool=np.concatenate(major_pool))
    return _check_dataset(Dataset(g, x, y, split, name="communities"))


def gen_large_variance(n: int = 60, seed: int = 0, variance: float = 2.0,
                       knn_k: int = 3, train_per_class: int = 5) -> Dataset:
    """Same Gaussian centers as gen_communities but variance 2 and no split
    into satellite communities: edges are plain intra-class kNN."""
    SynthSpec("large_variance", n, variance, seed, knn_k,
              train_per_class).validate()
    rng = np.random.default_rng(seed)
    x, y = _gaussian_classes(n, variance, rng)
    g = build_graph(n, _knn_edges(x, y, knn_k))
    split = _train_rest_split(n, y, train_per_class, rng)
    return _check_dataset(Dataset(g, x, y, split, name="large_variance"))


def generate(spec: SynthSpec) -> Dataset:
    """Dispatch a SynthSpec to its generator."""
    spec.validate()
    if spec.kind == "graph_xor":
        return gen_graph_xor()
    if spec.kind == "circles":
        return gen_circles(spec.n, spec.seed, spec.knn_k, spec.train_per_class)
    if spec.kind == "communities":
        return gen_communities(spec.n, spec.seed, spec.variance or 1.0,
                               spec.knn_k, spec.train_per_class)
    return gen_large_variance(spec.n, spec.seed, spec.variance or 2.0,
                              spec.knn_k, spec.train_per_class)


# ---------------------------------------------------------------------------
# Splits


def make_split(y: np.ndarray, per_class: int, n_val: int,
               n_test: int | None, seed: int = 0) -> Split:
    """`per_class` training nodes per class, then validation and test from the
    remainder; n_test=None takes everything left."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train = []
    for c in range(int(np.max(y)) + 1):
        ids = np.flatnonzero(y == c)
        if len(ids) < per_class:
            raise InputError(
                f"class {c} has {len(ids)} nodes, fewer than per_class={per_class}"
            )
        train.append(rng.choice(ids, size=per_class, replace=False))
    train_ids = np.sort(np.concatenate(train)).astype(np.int64)
    rest = np.setdiff1d(np.arange(len(y), dtype=np.int64), train_ids)
    if len(rest) < n_val + (n_test or 0):
        raise InputError("not enough nodes left for validation and test sets")
    rest = rng.permutation(rest)
    val_ids = np.sort(rest[:n_val])
    leftover = rest[n_val:]
    test_ids = np.sort(leftover if n_test is None else leftover[:n_test])
    return Split(train_ids, val_ids.astype(np.int64), test_ids.astype(np.int64))


# ---------------------------------------------------------------------------
# Real datasets

# Nodes/features/classes must match exactly; undirected edge-pair counts are
# checked against the counts obtained after symmetrizing and deduplicating
# the published adjacency (reporting conventions differ between sources).
_EXPECTED = {
    "cora": dict(nodes=2708, features=1433, classes=7, pairs=5278,
                 split=(140, 500, 1000)),
    "citeseer": dict(nodes=3327, features=3703, classes=6, pairs=4552,
                     split=(120, 500, 1000)),
    "pubmed": dict(nodes=19717, features=500, classes=3, pairs=44324,
                   split=(60, 500, 1000)),
    "ms_academic": dict(nodes=18333, features=6805, classes=15, pairs=81894,
                        split=(300, 500, 17533)),
}
_PAIR_TOLERANCE = 0.05


def _require_file(path: Path) -> Path:
    if not path.exists():
        raise IngestionError(f"missing dataset file: {path}")
    return path


def _load_pickle(path: Path):
    with open(_require_file(path), "rb") as f:
        try:
            return pickle.load(f, encoding="latin1")
        except Exception as exc:
            raise IngestionError(f"corrupt dataset file: {path}: {exc}") from exc


def _validate_counts(ds: Dataset, name: str) -> Dataset:
    exp = _EXPECTED[name]
    if ds.num_nodes != exp["nodes"]:
        raise IngestionError(
            f"{name}: expected {exp['nodes']} nodes, found {ds.num_nodes}"
        )
    if ds.x.shape[1] != exp["features"]:
        raise IngestionError(
            f"{name}: expected {exp['features']} features, found {ds.x.shape[1]}"
        )
    if ds.num_classes != exp["classes"]:
        raise IngestionError(
            f"{name}: expected {exp['classes']} classes, found {ds.num_classes}"
        )
    pairs = ds.graph.num_edges
    if abs(pairs - exp["pairs"]) > _PAIR_TOLERANCE * exp["pairs"]:
        raise IngestionError(
            f"{name}: edge pairs {pairs} differ from reference {exp['pairs']} "
            f"by more than {_PAIR_TOLERANCE:.0%}"
        )
    sizes = tuple(len(ids) for ids in
                  (ds.split.train_ids, ds.split.val_ids, ds.split.test_ids))
    if sizes != exp["split"]:
        raise IngestionError(
            f"{name}: split sizes {sizes} do not match expected {exp['split']}"
        )
    return _check_dataset(ds, err=IngestionError)


def load_planetoid(data_dir: str | Path, name: str) -> Dataset:
    """Read the published binary citation-graph files (ind.<name>.*).

    Test rows arrive in a separate block ordered by a permutation file; for
    citeseer that permutation has gaps, which become isolated feature-less
    nodes outside every split.
    """
    if name not in ("cora", "citeseer", "pubmed"):
        raise InputError(f"unknown planetoid dataset {name!r}")
    d = Path(data_dir)
    parts = {k: _load_pickle(d / f"ind.{name}.{k}")
             for k in ("x", "y", "tx", "ty", "allx", "ally", "graph")}
    idx_path = _require_file(d / f"ind.{name}.test.index")
    try:
        test_idx = np.loadtxt(idx_path, dtype=np.int64)
    except Exception as exc:
        raise IngestionError(f"corrupt dataset file: {idx_path}: {exc}") from exc
    test_sorted = np.sort(test_idx)

    tx, ty = parts["tx"], parts["ty"]
    lo, hi = int(test_sorted[0]), int(test_sorted[-1])
    if hi - lo + 1 != len(test_idx):
        # gap ids get all-zero features and labels
        full = sp.lil_matrix((hi - lo + 1, tx.shape[1]), dtype=np.float64)
        full[test_sorted - lo] = tx
        tx = full.tocsr()
        full_y = np.zeros((hi - lo + 1, ty.shape[1]), dtype=ty.dtype)
        full_y[test_sorted - lo] = ty
        ty = full_y

    features = sp.vstack([parts["allx"], tx]).tolil()
    features[test_idx] = features[test_sorted]
    features = features.tocsr().astype(np.float64)
    labels_1hot = np.vstack([parts["ally"], ty])
    labels_1hot[test_idx] = labels_1hot[test_sorted]
    y = np.argmax(labels_1hot, axis=1).astype(np.int64)  # all-zero rows -> 0

    n = features.shape[0]
    raw = [(u, v) for u, nbrs in parts["graph"].items() for v in nbrs if u != v]
    try:
        g = build_graph(n, np.asarray(raw, dtype=np.int64))
    except InputError as exc:
        raise IngestionError(f"corrupt dataset file: ind.{name}.graph: {exc}") from exc

    n_train = parts["y"].shape[0]
    split = Split(
        np.arange(n_train, dtype=np.int64),
        np.arange(n_train, n_train + 500, dtype=np.int64),
        test_sorted.astype(np.int64),
    )
    return _validate_counts(Dataset(g, features, y, split, name=name), name)


def load_coauthor(data_dir: str | Path, seed: int = 0) -> Dataset:
    """Read the coauthorship graph npz archive and draw a 20-per-class split."""
    path = Path(data_dir) / "ms_academic.npz"
    _require_file(path)
    try:
        with np.load(path, allow_pickle=True) as z:
            adj = sp.csr_matrix(
                (z["adj_data"], z["adj_indices"], z["adj_indptr"]),
                shape=tuple(z["adj_shape"]),
            )
            feats = sp.csr_matrix(
                (z["attr_data"], z["attr_indices"], z["attr_indptr"]),
                shape=tuple(z["attr_shape"]),
            ).astype(np.float64)
            y = np.asarray(z["labels"], dtype=np.int64)
    except IngestionError:
        raise
    except Exception as exc:
        raise IngestionError(f"corrupt dataset file: {path}: {exc}") from exc
    n = adj.shape[0]
    sym = adj + adj.T  # stored adjacency may be one-directional
    sym.setdiag(0)
    sym.eliminate_zeros()
    coo = sp.triu(sym, k=1).tocoo()
    try:
        g = build_graph(n, np.column_stack([coo.row, coo.col]).astype(np.int64))
    except InputError as exc:
        raise IngestionError(f"corrupt dataset file: {path}: {exc}") from exc
    exp = _EXPECTED["ms_academic"]
    if n != exp["nodes"]:  # refuse before drawing a split from a malformed file
        raise IngestionError(f"ms_academic: expected {exp['nodes']} nodes, found {n}")
    split = make_split(y, per_class=exp["split"][0] // exp["classes"],
                       n_val=exp["split"][1], n_test=None, seed=seed)
    ds = Dataset(g, feats, y, split, name="ms_academic")
    return _validate_counts(ds, "ms_academic")


# ---------------------------------------------------------------------------
# Plain-text interchange format


def save_text_dataset(ds: Dataset, out_dir: str | Path, name: str | None = None) -> list[Path]:
    """Write <name>.edges / .features.csv / .labels.csv / .split.json."""
    name = name or ds.name
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{name}.edges", out / f"{name}.features.csv",
             out / f"{name}.labels.csv", out / f"{name}.split.json"]
    write_edge_list(paths[0], ds.graph)
    x = np.asarray(ds.x.todense()) if sp.issparse(ds.x) else np.asarray(ds.x)
    np.savetxt(paths[1], x, fmt="%.17g", delimiter=",")
    np.savetxt(paths[2], np.asarray(ds.y, dtype=np.int64), fmt="%d")
    with open(paths[3], "w") as f:
        json.dump(
            {
                "train": np.asarray(ds.split.train_ids).tolist(),
                "val": np.asarray(ds.split.val_ids).tolist(),
                "test": np.asarray(ds.split.test_ids).tolist(),
            },
            f,
        )
        f.write("\n")
    return paths


def load_text_dataset(data_dir: str | Path, name: str) -> Dataset:
    """Read the triple written by save_text_dataset."""
    d = Path(data_dir)
    labels_path = _require_file(d / f"{name}.labels.csv")
    feats_path = _require_file(d / f"{name}.features.csv")
    edges_path = _require_file(d / f"{name}.edges")
    split_path = _require_file(d / f"{name}.split.json")
    try:
        y = np.loadtxt(labels_path, dtype=np.int64, ndmin=1)
        x = np.loadtxt(feats_path, delimiter=",", ndmin=2)
        with open(split_path) as f:
            raw_split = json.load(f)
        split = Split(*(np.asarray(raw_split[k], dtype=np.int64)
                        for k in ("train", "val", "test")))
    except IngestionError:
        raise
    except Exception as exc:
        raise IngestionError(f"corrupt dataset file in {d}: {exc}") from exc
    try:
        pairs = np.asarray(read_edge_list(edges_path), dtype=np.int64).reshape(-1, 2)
        g = build_graph(len(y), pairs)
    except InputError as exc:
        raise IngestionError(f"corrupt dataset file: {edges_path}: {exc}") from exc
    ds = Dataset(g, x, y, split, name=name)
    return _check_dataset(ds, err=IngestionError)
