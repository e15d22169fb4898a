"""Dense MLP with hand-written backprop, Adam, dropout, and a gradient oracle.

Everything runs in float64.  Randomness (init, dropout) always comes from an
explicit numpy Generator, never global state.  Feature matrices may be dense
ndarrays or scipy CSR matrices; sparse input is only touched by the first
layer and by input dropout (which masks stored nonzeros, equivalent because
dropout fixes zeros).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InputError


@dataclass
class MlpParams:
    """Weights and biases of a fully-connected network."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "MlpParams":
        return MlpParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass
class MlpGrads:
    """Gradients shaped like MlpParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class AdamState:
    """First/second moment estimates and step counter for Adam."""

    m_weights: list[np.ndarray]
    v_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainConfig:
    """Hyper-parameters shared by every trainable model.

    ``depth`` is the graph-operation depth (sampling hops or propagation
    steps); the classifier itself is always a 2-layer MLP.  ``infer_depth``
    defaults to ``depth`` when left unset.  An MCGL-UM epoch consists of
    ``batches_per_epoch`` sampled batches; full-batch models take one
    gradient step per epoch.
    """

    hidden_units: int = 16
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    dropout_rate: float = 0.5
    batch_size: int = 32
    depth: int = 2
    max_epochs: int = 300
    patience: int = 30
    seed: int = 0
    infer_depth: int | None = None
    batches_per_epoch: int = 100

    def resolved_infer_depth(self) -> int:
        return self.depth if self.infer_depth is None else self.infer_depth

    def validate(self) -> None:
        if self.hidden_units <= 0:
            raise InputError("hidden_units must be positive")
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise InputError("weight_decay must be non-negative")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InputError("dropout_rate must lie in [0, 1)")
        if self.batch_size <= 0:
            raise InputError("batch_size must be positive")
        if self.depth < 0:
            raise InputError("depth must be non-negative")
        if self.infer_depth is not None and self.infer_depth < 0:
            raise InputError("infer_depth must be non-negative")
        if self.max_epochs <= 0 or self.patience <= 0 or self.batches_per_epoch <= 0:
            raise InputError("max_epochs, patience, batches_per_epoch must be positive")


def init_mlp(dims: Sequence[int], rng: np.random.Generator) -> MlpParams:
    """Glorot-uniform weights, zero biases, for the given layer dims."""
    if len(dims) < 2:
        raise InputError("an MLP needs at least input and output dims")
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _dropout_dense(x, keep, rng, fixed_mask):
    mask = fixed_mask if fixed_mask is not None else rng.random(x.shape) < keep
    return x * mask / keep, mask


def _dropout_sparse(x, keep, rng, fixed_mask):
    mask = fixed_mask if fixed_mask is not None else rng.random(len(x.data)) < keep
    out = x.copy()
    out.data = out.data * mask / keep
    return out, mask


@dataclass
class ForwardCache:
    """Intermediate state of one forward pass, consumed by mlp_backward."""

    params: MlpParams
    layer_inputs: list  # actual (post-dropout) input to each layer
    preacts: list[np.ndarray]  # pre-activation of each hidden layer
    masks: list  # dropout masks: masks[0] for input, masks[l] for hidden l
    keep: float


def mlp_forward(
    params: MlpParams,
    x,
    dropout_rate: float = 0.0,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    fixed_masks: list | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Forward pass; dropout hits the input and hidden activations only.

    In train mode dropout uses inverted scaling (kept units divided by the
    keep probability).  ``fixed_masks`` replays recorded masks, used by the
    finite-difference oracle.
    """
    sparse_in = sp.issparse(x)
    if not sparse_in:
        x = np.asarray(x, dtype=np.float64)
    if x.shape[1] != params.weights[0].shape[0]:
        raise InputError(
            f"input has {x.shape[1]} features, first layer expects "
            f"{params.weights[0].shape[0]}"
        )
    use_dropout = train_mode and dropout_rate > 0.0
    if use_dropout and rng is None and fixed_masks is None:
        raise InputError("dropout in train mode needs an rng (or fixed masks)")
    keep = 1.0 - dropout_rate

    def drop(z, idx):
        fixed = fixed_masks[idx] if fixed_masks is not None else None
        if sp.issparse(z):
            return _dropout_sparse(z, keep, rng, fixed)
        return _dropout_dense(z, keep, rng, fixed)

    masks: list = []
    z = x
    if use_dropout:
        z, mask = drop(z, 0)
        masks.append(mask)
    else:
        masks.append(None)
    layer_inputs = [z]
    preacts: list[np.ndarray] = []
    n_layers = params.num_layers
    for layer in range(n_layers):
        a = z @ params.weights[layer] + params.biases[layer]
        a = np.asarray(a)
        if layer == n_layers - 1:
            logits = a
            break
        preacts.append(a)
        h = relu(a)
        if use_dropout:
            h, mask = drop(h, layer + 1)
            masks.append(mask)
        else:
            masks.append(None)
        z = h
        layer_inputs.append(z)
    cache = ForwardCache(
        params=params, layer_inputs=layer_inputs, preacts=preacts, masks=masks, keep=keep
    )
    return logits, cache


def mlp_backward(cache: ForwardCache, dlogits: np.ndarray) -> MlpGrads:
    """Exact reverse-mode gradients through the cached forward pass."""
    params = cache.params
    n_layers = params.num_layers
    if len(cache.layer_inputs) != n_layers:
        raise InputError("cache does not match the forward pass layer count")
    g_w = [None] * n_layers
    g_b = [None] * n_layers
    d = dlogits
    for layer in range(n_layers - 1, -1, -1):
        z = cache.layer_inputs[layer]
        g_w[layer] = np.asarray(z.T @ d)
        g_b[layer] = d.sum(axis=0)
        if layer == 0:
            break
        dh = d @ params.weights[layer].T
        mask = cache.masks[layer]
        if mask is not None:
            dh = dh * mask / cache.keep
        d = dh * (cache.preacts[layer - 1] > 0)
    return MlpGrads(weights=g_w, biases=g_b)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row max."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray,
    labels: np.ndarray,
    mask: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Mean negative log-softmax over masked rows plus its logit gradient.

    ``mask`` may be a boolean vector or an index array; None means all rows.
    Gradient rows outside the mask are zero.
    """
    labels = np.asarray(labels)
    if mask is None:
        rows = np.arange(logits.shape[0])
    else:
        mask = np.asarray(mask)
        rows = np.flatnonzero(mask) if mask.dtype == bool else mask
    if len(rows) == 0:
        raise InputError("loss mask selects no rows")
    sel = logits[rows]
    y = labels[rows]
    if y.min() < 0 or y.max() >= logits.shape[1]:
        raise InputError("label outside the class range")
    shifted = sel - sel.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsumexp
    n = len(rows)
    loss = -float(logp[np.arange(n), y].mean())
    dsel = np.exp(logp)
    dsel[np.arange(n), y] -= 1.0
    dlogits = np.zeros_like(logits)
    dlogits[rows] = dsel / n
    return loss, dlogits


def init_adam(params: MlpParams, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    return AdamState(
        m_weights=[np.zeros_like(w) for w in params.weights],
        v_weights=[np.zeros_like(w) for w in params.weights],
        m_biases=[np.zeros_like(b) for b in params.biases],
        v_biases=[np.zeros_like(b) for b in params.biases],
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(
    params: MlpParams,
    grads: MlpGrads,
    state: AdamState,
    lr: float,
    weight_decay: float = 0.0,
) -> tuple[MlpParams, AdamState]:
    """One Adam update with bias correction; mutates params/state in place.

    Weight decay enters as an additive L2 gradient term on weight matrices
    only; biases are never decayed.
    """
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for i in range(params.num_layers):
        for arr, g, m, v in (
            (params.weights[i], grads.weights[i] + weight_decay * params.weights[i],
             state.m_weights[i], state.v_weights[i]),
            (params.biases[i], grads.biases[i], state.m_biases[i], state.v_biases[i]),
        ):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**t)
            v_hat = v / (1 - b2**t)
            arr -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


def finite_diff_check(
    params: MlpParams,
    x,
    labels: np.ndarray,
    eps: float = 1e-5,
    dropout_rate: float = 0.0,
    fixed_masks: list | None = None,
) -> float:
    """Worst relative error of analytic vs central-difference gradients.

    With dropout, ``fixed_masks`` must replay the same masks on every
    evaluation so both sides differentiate the identical function.
    """
    train = dropout_rate > 0.0
    if train and fixed_masks is None:
        raise InputError("dropout gradient checks need fixed masks to replay")

    def loss_at(p: MlpParams) -> float:
        logits, _ = mlp_forward(
            p, x, dropout_rate=dropout_rate, train_mode=train, fixed_masks=fixed_masks
        )
        loss, _ = softmax_cross_entropy(logits, labels)
        return loss

    logits, cache = mlp_forward(
        params, x, dropout_rate=dropout_rate, train_mode=train, fixed_masks=fixed_masks
    )
    _, dlogits = softmax_cross_entropy(logits, labels)
    grads = mlp_backward(cache, dlogits)

    worst = 0.0
    work = params.copy()
    for analytic, arr in (
        *zip(grads.weights, work.weights),
        *zip(grads.biases, work.biases),
    ):
        flat = arr.reshape(-1)
        aflat = analytic.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            hi = loss_at(work)
            flat[j] = orig - eps
            lo = loss_at(work)
            flat[j] = orig
            numeric = (hi - lo) / (2 * eps)
            denom = max(abs(aflat[j]) + abs(numeric), 1e-6)
            worst = max(worst, abs(aflat[j] - numeric) / denom)
    return worst


def save_params(path: str | Path, params: MlpParams, extra: dict | None = None) -> None:
    """Checkpoint: JSON with layer dims and row-major value arrays."""
    payload = {
        "dims": params.dims,
        "layers": [
            {"weights": w.reshape(-1).tolist(), "bias": b.tolist()}
            for w, b in zip(params.weights, params.biases)
        ],
    }
    if extra:
        payload.update(extra)
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True)


def load_params(path: str | Path) -> tuple[MlpParams, dict]:
    """Load a checkpoint written by save_params; returns (params, metadata)."""
    with open(path) as f:
        payload = json.load(f)
    dims = payload["dims"]
    weights, biases = [], []
    for layer, (fan_in, fan_out) in zip(payload["layers"], zip(dims[:-1], dims[1:])):
        weights.append(np.asarray(layer["weights"], dtype=np.float64).reshape(fan_in, fan_out))
        biases.append(np.asarray(layer["bias"], dtype=np.float64))
    meta = {k: v for k, v in payload.items() if k not in ("dims", "layers")}
    return MlpParams(weights=weights, biases=biases), meta
