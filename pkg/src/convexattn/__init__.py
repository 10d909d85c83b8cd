"""Convex attention classifier for capacitive gesture signals.

A tiny, fully convex gesture recognizer: random Fourier features fix
the nonlinearity at initialization, attention weights come from
Euclidean projection onto the probability simplex, training minimizes a
convex loss under a nuclear-norm constraint.
"""

from .dataio import Dataset, GestureSample, SynthConfig, load_csv, save_csv, synth_generate
from .features import PatchSpec, RffMap, patchify, rff_init, rff_transform, unpatchify
from .model import (
    ModelBundle,
    attend,
    attention_scores,
    attention_weights,
    class_scores,
    deserialize,
    load_model,
    param_count,
    predict,
    save_model,
    serialize,
)
from .numutil import RngStream, svd_thin
from .projections import (
    l1_ball_project_nonneg,
    nuclear_ball_project,
    nuclear_norm,
    simplex_project,
    softmax_ref,
    squared_distance_to_simplex,
)
from .trainer import (
    PRESETS,
    TrainConfig,
    evaluate,
    kfold_evaluate,
    macro_f1,
    preset_config,
    split_evaluate,
    train,
)
from .verify import convexity_check, nonexpansiveness_sweep, softmax_counterexample

__version__ = "0.1.0"
