"""Meta-path similarity and label propagation on weighted typed graphs.

The pipeline: build a typed click-weight graph, compute PathSim similarity
per meta-path, fit per-path fusion weights with epsilon-SVR on labeled seed
pairs, combine the degree-normalized similarities, and propagate seed
labels to every target node.  A synthetic generator and an evaluation
harness reproduce the seed-fraction protocol end to end.
"""

__version__ = "0.1.0"

from .datagen import GenConfig, generate_dataset
from .errors import ConfigError, ConvergenceError, GraphError, HinpropError
from .experiment import (ExperimentReport, ExperimentSpec, PathOperatorCache,
                         SweepResult, accuracy, knn_baseline,
                         majority_baseline, run_experiment, split_seeds,
                         sweep_parameter)
from .graph import (HinGraph, Schema, build_graph, load_dataset, load_labels,
                    save_dataset)
from .metapath import (DEFAULT_METAPATHS, MetaPath, PathFactor,
                       commuting_matrix, parse_metapath, pathsim)
from .propagate import (LabelResult, PropagationConfig, assign_labels,
                        combine_similarities, label_matrix, normalize_sym,
                        propagate, spectral_radius_estimate)
from .weights import (BetaWeights, SvrConfig, TrainingPairs,
                      build_training_pairs, compute_connection_target,
                      fit_metapath_weights, fit_svr, normalize_beta)

__all__ = [
    "__version__",
    "BetaWeights", "ConfigError", "ConvergenceError", "DEFAULT_METAPATHS",
    "ExperimentReport", "ExperimentSpec", "GenConfig", "GraphError",
    "HinGraph", "HinpropError", "LabelResult", "MetaPath", "PathFactor",
    "PathOperatorCache", "PropagationConfig", "Schema", "SvrConfig",
    "SweepResult", "TrainingPairs", "accuracy", "assign_labels",
    "build_graph", "build_training_pairs", "combine_similarities",
    "commuting_matrix", "compute_connection_target", "fit_metapath_weights",
    "fit_svr", "generate_dataset", "knn_baseline", "label_matrix",
    "load_dataset", "load_labels", "majority_baseline", "normalize_beta",
    "normalize_sym", "parse_metapath", "pathsim", "propagate",
    "run_experiment", "save_dataset", "split_seeds", "spectral_radius_estimate",
    "sweep_parameter",
]
