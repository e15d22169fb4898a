"""Monte Carlo graph learning and graph-convolution baselines.

The package compares two ways of using graph structure for semi-supervised
node classification: convolving features over the graph (GCN and the
decoupled GCN*) versus sampling training pairs from it (MCGL-UM), plus the
graph-edit tooling and sweep harness that measure how both families respond
to edge noise and operation depth.
"""

from .defaults import default_config
from .datasets import (
    Dataset,
    Split,
    SynthSpec,
    gen_circles,
    gen_communities,
    gen_graph_xor,
    gen_large_variance,
    generate,
    load_coauthor,
    load_planetoid,
    load_text_dataset,
    make_split,
    save_text_dataset,
)
from .errors import IngestionError, InputError, InternalError, McglError
from .experiments import (
    ExperimentRecord,
    SweepSpec,
    format_pm,
    run_depth_sweep,
    run_noise_sweep,
    sample_std,
    save_records,
    summarize,
    train_and_score,
)
from .graph import (
    EdgePartition,
    Graph,
    NormalizedAdjacency,
    build_graph,
    classify_edges,
    neighbors,
    noise_rate,
    normalize,
    read_edge_list,
    reduce_noise,
    spmm,
    with_self_loops,
    write_edge_list,
)
from .models import (
    GcnModel,
    GcnStarModel,
    McglModel,
    accuracy,
    gcn_predict,
    gcnstar_predict,
    mc_sample_path,
    mcgl_infer,
    mcgl_predict,
    propagate,
    train_gcn,
    train_gcnstar,
    train_mcgl_um,
)
from .nn import (
    AdamState,
    MlpGrads,
    MlpParams,
    TrainConfig,
    adam_step,
    finite_diff_check,
    init_adam,
    init_mlp,
    load_params,
    mlp_backward,
    mlp_forward,
    relu,
    save_params,
    softmax,
    softmax_cross_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "Dataset", "EdgePartition", "ExperimentRecord", "GcnModel",
    "GcnStarModel", "Graph", "IngestionError", "InputError", "InternalError",
    "McglError", "McglModel", "MlpGrads", "MlpParams", "NormalizedAdjacency",
    "Split", "SweepSpec", "SynthSpec", "TrainConfig", "accuracy", "adam_step",
    "build_graph", "classify_edges", "default_config", "finite_diff_check",
    "format_pm",
    "gcn_predict", "gcnstar_predict", "gen_circles", "gen_communities",
    "gen_graph_xor", "gen_large_variance", "generate", "init_adam", "init_mlp",
    "load_coauthor", "load_params", "load_planetoid", "load_text_dataset",
    "make_split", "mc_sample_path", "mcgl_infer", "mcgl_predict",
    "mlp_backward", "mlp_forward", "neighbors", "noise_rate", "normalize",
    "propagate", "read_edge_list", "reduce_noise", "relu", "run_depth_sweep",
    "run_noise_sweep", "sample_std", "save_params", "save_records",
    "save_text_dataset", "softmax", "softmax_cross_entropy", "spmm",
    "summarize", "train_and_score", "train_gcn", "train_gcnstar",
    "train_mcgl_um", "with_self_loops", "write_edge_list",
]
