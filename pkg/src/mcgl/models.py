"""The three trainable models: MCGL-UM, 2-layer GCN, and GCN*.

MCGL-UM expands the labeled set by Monte Carlo walks from training roots,
assigns each sampled leaf the root's label, and trains a plain MLP on the
(leaf feature, root label) pairs; at inference the MLP's class scores are
aggregated over the graph.  GCN interleaves normalized-adjacency
aggregation with its two learned layers.  GCN* keeps the 2-layer MLP fixed
and applies the adjacency a configurable number of times to its output.

Neighborhoods include the node itself (the A + I convention); sampling and
MCGL inference default to the row-stochastic adjacency so that the
aggregation weights match the uniform sampling distribution, while GCN and
GCN* use the symmetric one.  Both choices, and whether probabilities or raw
logits are aggregated, are exposed as switches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InputError
from .graph import Graph, NormalizedAdjacency, normalize, spmm, with_self_loops
from .nn import (
    MlpGrads,
    MlpParams,
    TrainConfig,
    adam_step,
    init_adam,
    init_mlp,
    mlp_backward,
    mlp_forward,
    relu,
    softmax,
    softmax_cross_entropy,
    _dropout_dense,
    _dropout_sparse,
)


@dataclass
class McglModel:
    """Trained MCGL-UM: MLP plus sampling/inference depths and adjacency."""

    params: MlpParams
    depth: int
    infer_depth: int
    adj: NormalizedAdjacency
    aggregate: str = "probability"
    best_val_accuracy: float = float("nan")
    epochs_run: int = 0


@dataclass
class GcnModel:
    """Trained 2-layer GCN with its symmetric normalized adjacency."""

    params: MlpParams
    adj: NormalizedAdjacency
    best_val_accuracy: float = float("nan")
    epochs_run: int = 0


@dataclass
class GcnStarModel:
    """Trained GCN*: fixed 2-layer MLP plus propagation depth."""

    params: MlpParams
    depth: int
    adj: NormalizedAdjacency
    best_val_accuracy: float = float("nan")
    epochs_run: int = 0


# ---------------------------------------------------------------------------
# Monte Carlo path sampling


def _sampling_csr(g: Graph, include_self: bool) -> tuple[np.ndarray, np.ndarray]:
    if include_self:
        return with_self_loops(g)
    return g.csr_offsets, g.csr_targets


def _sample_batch(
    indptr: np.ndarray,
    targets: np.ndarray,
    roots: np.ndarray,
    depth: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Walk every root `depth` uniform hops at once; returns the leaves."""
    cur = np.asarray(roots, dtype=np.int64).copy()
    for _ in range(depth):
        start = indptr[cur]
        deg = indptr[cur + 1] - start
        step = np.floor(rng.random(cur.shape[0]) * deg).astype(np.int64)
        step = np.minimum(step, np.maximum(deg - 1, 0))
        has = deg > 0  # empty neighborhoods (no self-loops) stay in place
        if targets.size:
            cur = np.where(has, targets[np.where(has, start + step, 0)], cur)
    return cur


def mc_sample_path(
    g: Graph,
    root: int,
    depth: int,
    rng: np.random.Generator,
    include_self: bool = True,
) -> int:
    """Final node of a `depth`-hop uniform walk from `root`.

    Each hop draws uniformly from the current node's neighborhood, which
    includes the node itself when ``include_self`` (never empty then).
    """
    if not 0 <= root < g.num_nodes:
        raise InputError(f"root {root} out of range [0, {g.num_nodes})")
    if depth < 0:
        raise InputError("depth must be non-negative")
    indptr, targets = _sampling_csr(g, include_self)
    return int(_sample_batch(indptr, targets, np.array([root]), depth, rng)[0])


# ---------------------------------------------------------------------------
# Inference


def propagate(adj: NormalizedAdjacency, scores: np.ndarray, depth: int) -> np.ndarray:
    """Apply the adjacency operator `depth` times (never materialized as a power)."""
    out = np.asarray(scores, dtype=np.float64)
    for _ in range(depth):
        out = spmm(adj, out)
    return out


def mcgl_infer(
    params: MlpParams,
    x,
    adj: NormalizedAdjacency,
    depth: int,
    aggregate: str = "probability",
) -> np.ndarray:
    """Per-node predictions: MLP scores aggregated `depth` times over the graph.

    Scores start as softmax probabilities (or raw logits when
    ``aggregate="logit"``); argmax ties break toward the lowest class index.
    """
    if aggregate not in ("probability", "logit"):
        raise InputError(f"unknown aggregate {aggregate!r}")
    logits, _ = mlp_forward(params, x)
    y0 = softmax(logits) if aggregate == "probability" else logits
    return np.argmax(propagate(adj, y0, depth), axis=1)


def accuracy(preds: np.ndarray, y: np.ndarray, mask: np.ndarray) -> float:
    """Fraction of masked nodes predicted correctly."""
    mask = np.asarray(mask)
    ids = np.flatnonzero(mask) if mask.dtype == bool else mask
    if len(ids) == 0:
        raise InputError("accuracy mask selects no nodes")
    return float(np.mean(preds[ids] == np.asarray(y)[ids]))


# ---------------------------------------------------------------------------
# Training loops


class _EarlyStopper:
    """Keep the best-monitor parameters; stop after `patience` stale epochs.

    The monitor orders epochs by (accuracy, -loss): the loss term keeps
    training alive while the decision boundary still sharpens after accuracy
    has saturated, which happens immediately when only a handful of
    training nodes are being watched.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best_score: tuple[float, float] | None = None
        self.best: float = -np.inf
        self.best_params: MlpParams | None = None
        self.wait = 0

    def update(self, acc: float, loss: float, params: MlpParams) -> bool:
        score = (acc, -loss)
        if self.best_score is None or score > self.best_score:
            self.best_score = score
            self.best = acc
            self.best_params = params.copy()
            self.wait = 0
        else:
            self.wait += 1
        return self.wait >= self.patience


def _rows(x, ids: np.ndarray) -> np.ndarray:
    sel = x[ids]
    return np.asarray(sel.todense()) if sp.issparse(sel) else np.asarray(sel)


def _check_split(split) -> None:
    train = set(np.asarray(split.train_ids).tolist())
    val = set(np.asarray(split.val_ids).tolist())
    test = set(np.asarray(split.test_ids).tolist())
    if train & val or train & test or val & test:
        raise InputError("split sets must be pairwise disjoint")


def _num_classes(y: np.ndarray) -> int:
    return int(np.max(y)) + 1


def train_mcgl_um(
    g: Graph,
    x,
    y: np.ndarray,
    train_ids: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
    val_ids: np.ndarray | None = None,
    include_self: bool = True,
    infer_mode: str = "row_stochastic",
    aggregate: str = "probability",
) -> McglModel:
    """Train MCGL-UM by repeated Monte Carlo batch sampling.

    Each batch draws roots uniformly from the training set, walks them
    ``cfg.depth`` hops, and trains the MLP on the leaf features labeled with
    the root labels.  Convergence means validation accuracy of the full
    inference pipeline has not improved for ``cfg.patience`` epochs (one
    epoch = ``cfg.batches_per_epoch`` batches), capped at ``cfg.max_epochs``;
    training accuracy is monitored instead when no validation ids exist.
    """
    cfg.validate()
    train_ids = np.asarray(train_ids, dtype=np.int64)
    if len(train_ids) == 0:
        raise InputError("training set is empty")
    y = np.asarray(y)
    infer_depth = cfg.resolved_infer_depth()
    adj = normalize(g, infer_mode)
    indptr, targets = _sampling_csr(g, include_self)
    monitor_ids = (
        np.asarray(val_ids, dtype=np.int64)
        if val_ids is not None and len(val_ids) > 0
        else train_ids
    )
    params = init_mlp([x.shape[1], cfg.hidden_units, _num_classes(y)], rng)
    state = init_adam(params)
    stopper = _EarlyStopper(cfg.patience)
    epochs = 0
    for epoch in range(1, cfg.max_epochs + 1):
        epochs = epoch
        epoch_loss = 0.0
        for _ in range(cfg.batches_per_epoch):
            roots = train_ids[rng.integers(0, len(train_ids), size=cfg.batch_size)]
            leaves = _sample_batch(indptr, targets, roots, cfg.depth, rng)
            logits, cache = mlp_forward(
                params, _rows(x, leaves), cfg.dropout_rate, train_mode=True, rng=rng
            )
            loss, dlogits = softmax_cross_entropy(logits, y[roots])
            epoch_loss += loss
            grads = mlp_backward(cache, dlogits)
            adam_step(params, grads, state, cfg.learning_rate, cfg.weight_decay)
        preds = mcgl_infer(params, x, adj, infer_depth, aggregate)
        acc = accuracy(preds, y, monitor_ids)
        if stopper.update(acc, epoch_loss / cfg.batches_per_epoch, params):
            break
    return McglModel(
        params=stopper.best_params,
        depth=cfg.depth,
        infer_depth=infer_depth,
        adj=adj,
        aggregate=aggregate,
        best_val_accuracy=stopper.best,
        epochs_run=epochs,
    )


def mcgl_predict(model: McglModel, x) -> np.ndarray:
    return mcgl_infer(model.params, x, model.adj, model.infer_depth, model.aggregate)


def _gcn_forward(
    params: MlpParams,
    adj: NormalizedAdjacency,
    x,
    dropout_rate: float = 0.0,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
):
    """Aggregate-transform-ReLU-aggregate-transform; dropout before each layer."""
    keep = 1.0 - dropout_rate
    use = train_mode and dropout_rate > 0.0
    if use:
        drop = _dropout_sparse if sp.issparse(x) else _dropout_dense
        z0, m0 = drop(x, keep, rng, None)
    else:
        z0, m0 = x, None
    a1 = spmm(adj, np.asarray(z0 @ params.weights[0])) + params.biases[0]
    h1 = relu(a1)
    if use:
        z1, m1 = _dropout_dense(h1, keep, rng, None)
    else:
        z1, m1 = h1, None
    logits = spmm(adj, z1 @ params.weights[1]) + params.biases[1]
    return logits, (z0, a1, z1, m1, keep)


def _gcn_backward(params: MlpParams, adj: NormalizedAdjacency, cache, dlogits):
    """Reverse pass of _gcn_forward; relies on the adjacency being symmetric."""
    z0, a1, z1, m1, keep = cache
    db1 = dlogits.sum(axis=0)
    dt1 = spmm(adj, dlogits)
    dw1 = np.asarray(z1.T @ dt1)
    dz1 = dt1 @ params.weights[1].T
    if m1 is not None:
        dz1 = dz1 * m1 / keep
    da1 = dz1 * (a1 > 0)
    db0 = da1.sum(axis=0)
    dt0 = spmm(adj, da1)
    dw0 = np.asarray(z0.T @ dt0)
    return MlpGrads(weights=[dw0, dw1], biases=[db0, db1])


def train_gcn(
    g: Graph,
    x,
    y: np.ndarray,
    split,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> GcnModel:
    """Full-batch 2-layer GCN with Adam and validation early stopping."""
    cfg.validate()
    _check_split(split)
    y = np.asarray(y)
    adj = normalize(g, "symmetric")
    train_ids = np.asarray(split.train_ids, dtype=np.int64)
    if len(train_ids) == 0:
        raise InputError("training set is empty")
    val_ids = np.asarray(split.val_ids, dtype=np.int64)
    monitor_ids = val_ids if len(val_ids) > 0 else train_ids
    params = init_mlp([x.shape[1], cfg.hidden_units, _num_classes(y)], rng)
    state = init_adam(params)
    stopper = _EarlyStopper(cfg.patience)
    epochs = 0
    for epoch in range(1, cfg.max_epochs + 1):
        epochs = epoch
        logits, cache = _gcn_forward(params, adj, x, cfg.dropout_rate, True, rng)
        _, dlogits = softmax_cross_entropy(logits, y, train_ids)
        grads = _gcn_backward(params, adj, cache, dlogits)
        adam_step(params, grads, state, cfg.learning_rate, cfg.weight_decay)
        eval_logits, _ = _gcn_forward(params, adj, x)
        eval_loss, _ = softmax_cross_entropy(eval_logits, y, train_ids)
        preds = np.argmax(eval_logits, axis=1)
        if stopper.update(accuracy(preds, y, monitor_ids), eval_loss, params):
            break
    return GcnModel(
        params=stopper.best_params,
        adj=adj,
        best_val_accuracy=stopper.best,
        epochs_run=epochs,
    )


def gcn_predict_with(params: MlpParams, adj: NormalizedAdjacency, x) -> np.ndarray:
    logits, _ = _gcn_forward(params, adj, x)
    return np.argmax(logits, axis=1)


def gcn_predict(model: GcnModel, x) -> np.ndarray:
    return gcn_predict_with(model.params, model.adj, x)


def train_gcnstar(
    g: Graph,
    x,
    y: np.ndarray,
    split,
    cfg: TrainConfig,
    rng: np.random.Generator,
    depth: int | None = None,
) -> GcnStarModel:
    """Full-batch GCN*: 2-layer MLP output propagated `depth` times.

    The adjacency is applied iteratively to the MLP output (and, transposed,
    to the incoming gradient), so the propagation depth never changes the
    parameter count.
    """
    cfg.validate()
    _check_split(split)
    depth = cfg.depth if depth is None else depth
    if depth < 0:
        raise InputError("depth must be non-negative")
    y = np.asarray(y)
    adj = normalize(g, "symmetric")
    train_ids = np.asarray(split.train_ids, dtype=np.int64)
    if len(train_ids) == 0:
        raise InputError("training set is empty")
    val_ids = np.asarray(split.val_ids, dtype=np.int64)
    monitor_ids = val_ids if len(val_ids) > 0 else train_ids
    params = init_mlp([x.shape[1], cfg.hidden_units, _num_classes(y)], rng)
    state = init_adam(params)
    stopper = _EarlyStopper(cfg.patience)
    epochs = 0
    for epoch in range(1, cfg.max_epochs + 1):
        epochs = epoch
        out, cache = mlp_forward(params, x, cfg.dropout_rate, train_mode=True, rng=rng)
        logits = propagate(adj, out, depth)
        _, dlogits = softmax_cross_entropy(logits, y, train_ids)
        dout = propagate(adj, dlogits, depth)  # symmetric adjacency
        grads = mlp_backward(cache, dout)
        adam_step(params, grads, state, cfg.learning_rate, cfg.weight_decay)
        eval_out, _ = mlp_forward(params, x)
        eval_logits = propagate(adj, eval_out, depth)
        eval_loss, _ = softmax_cross_entropy(eval_logits, y, train_ids)
        preds = np.argmax(eval_logits, axis=1)
        if stopper.update(accuracy(preds, y, monitor_ids), eval_loss, params):
            break
    return GcnStarModel(
        params=stopper.best_params,
        depth=depth,
        adj=adj,
        best_val_accuracy=stopper.best,
        epochs_run=epochs,
    )


def gcnstar_predict_with(
    params: MlpParams, adj: NormalizedAdjacency, x, depth: int
) -> np.ndarray:
    out, _ = mlp_forward(params, x)
    return np.argmax(propagate(adj, out, depth), axis=1)


def gcnstar_predict(model: GcnStarModel, x) -> np.ndarray:
    return gcnstar_predict_with(model.params, model.adj, x, model.depth)
