"""Benchmark hyper-parameters and the standard sweep grids.

The per-dataset/model settings below are the tuned values
(hidden units / weight decay / learning rate / dropout, batch size for the
sampled model); graph-operation depth is 2 everywhere and the classifier is
always a 2-layer network.  Synthetic datasets use a small generic config
with sampling depth 1.
"""

from __future__ import annotations

from dataclasses import replace

from .errors import InputError
from .nn import TrainConfig

REAL_DATASETS = ("cora", "citeseer", "pubmed", "ms_academic")
SYNTH_DATASETS = ("graph_xor", "circles", "communities", "large_variance")

BENCHMARKS: dict[tuple[str, str], TrainConfig] = {
    ("cora", "gcn"): TrainConfig(hidden_units=32, weight_decay=0.0005,
                                 learning_rate=0.005, dropout_rate=0.7),
    ("cora", "gcn_star"): TrainConfig(hidden_units=32, weight_decay=0.0005,
                                      learning_rate=0.01, dropout_rate=0.7),
    ("cora", "mcgl_um"): TrainConfig(hidden_units=32, weight_decay=0.001,
                                     learning_rate=0.005, dropout_rate=0.5,
                                     batch_size=50),
    ("citeseer", "gcn"): TrainConfig(hidden_units=64, weight_decay=0.001,
                                     learning_rate=0.05, dropout_rate=0.6),
    ("citeseer", "gcn_star"): TrainConfig(hidden_units=64, weight_decay=0.001,
                                          learning_rate=0.05, dropout_rate=0.4),
    ("citeseer", "mcgl_um"): TrainConfig(hidden_units=64, weight_decay=0.001,
                                         learning_rate=0.005, dropout_rate=0.3,
                                         batch_size=200),
    ("pubmed", "gcn"): TrainConfig(hidden_units=32, weight_decay=0.0005,
                                   learning_rate=0.05, dropout_rate=0.3),
    ("pubmed", "gcn_star"): TrainConfig(hidden_units=32, weight_decay=0.0005,
                                        learning_rate=0.005, dropout_rate=0.5),
    ("pubmed", "mcgl_um"): TrainConfig(hidden_units=32, weight_decay=0.001,
                                       learning_rate=0.005, dropout_rate=0.5,
                                       batch_size=50),
    ("ms_academic", "gcn"): TrainConfig(hidden_units=128, weight_decay=0.0005,
                                        learning_rate=0.01, dropout_rate=0.6),
    ("ms_academic", "gcn_star"): TrainConfig(hidden_units=128, weight_decay=0.0005,
                                             learning_rate=0.005, dropout_rate=0.7),
    ("ms_academic", "mcgl_um"): TrainConfig(hidden_units=128, weight_decay=0.0001,
                                            learning_rate=0.005, dropout_rate=0.5,
                                            batch_size=200),
}

# 2-D toy data: tiny net, one-hop sampling/propagation, light regularization
SYNTH_CONFIG = TrainConfig(hidden_units=16, learning_rate=0.01,
                           weight_decay=0.0005, dropout_rate=0.1,
                           batch_size=32, depth=1, max_epochs=200)

NOISE_RATES = [0.0, 0.03, 0.06, 0.09, 0.12, 0.15, 0.18]
DEPTHS = list(range(16))


def default_config(dataset: str, model: str) -> TrainConfig:
    """Tuned config for a benchmark pair, synthetic config otherwise."""
    if model not in ("gcn", "gcn_star", "mcgl_um"):
        raise InputError(f"unknown model {model!r}")
    key = (dataset, model)
    if key in BENCHMARKS:
        return replace(BENCHMARKS[key])
    return replace(SYNTH_CONFIG)
