"""Constants for the PRPD classifier."""

from __future__ import annotations

from typing import Final

VERSION: Final = "1.0.0"

# PRPD matrix dimensions
DEFAULT_PHASES: Final = 64
DEFAULT_CYCLES: Final = 60
MIN_PHASES: Final = 2
MIN_CYCLES: Final = 1

N_CLASSES: Final = 4

# Feature extraction
DEFAULT_THRESHOLD_RATIO: Final = 0.4
TOP_MAGNITUDES: Final = 3
META_FEATURE_NAMES: Final = ("total_magnitude", "max_magnitude", "longest_empty_band")

# Dataset CSV
CSV_ID_COLUMN: Final = "id"
CSV_LABEL_COLUMN: Final = "label"
CSV_VALUE_PREFIX: Final = "v"
CSV_FEATURE_PREFIX: Final = "f"
CSV_FLOAT_FORMAT: Final = "{:.12g}"

# Synthetic corpus class counts: corona, floating, particle, void
DEFAULT_CLASS_COUNTS: Final = (85, 99, 80, 64)
DEFAULT_NOISE_PROBABILITY: Final = 0.1
DEFAULT_NOISE_AMPLITUDE: Final = 0.05

# Classifier kinds
KIND_LR: Final = "lr"
KIND_RF: Final = "rf"
KIND_SVM: Final = "svm"
KIND_FSVM: Final = "fsvm"
KIND_GB: Final = "gb"
KIND_STACK: Final = "stack"

CLASSIFIER_KINDS: Final = (KIND_LR, KIND_RF, KIND_SVM, KIND_FSVM, KIND_GB)
MODEL_KINDS: Final = (*CLASSIFIER_KINDS, KIND_STACK)

KIND_NAMES: Final[dict[str, str]] = {
    KIND_LR: "Logistic Regression",
    KIND_RF: "Random Forest",
    KIND_SVM: "SVM",
    KIND_FSVM: "Fuzzy SVM (FSVM)",
    KIND_GB: "Gradient Boosting",
    KIND_STACK: "Stacking",
}

# Hyperparameter keys
CONF_LEARNING_RATE: Final = "learning_rate"
CONF_ITERATIONS: Final = "iterations"
CONF_L2: Final = "l2"
CONF_N_TREES: Final = "n_trees"
CONF_MAX_DEPTH: Final = "max_depth"
CONF_MIN_LEAF: Final = "min_leaf"
CONF_MAX_FEATURES: Final = "max_features"
CONF_BOOTSTRAP: Final = "bootstrap"
CONF_C: Final = "c"
CONF_KERNEL: Final = "kernel"
CONF_GAMMA: Final = "gamma"
CONF_TOL: Final = "tol"
CONF_MAX_ITER: Final = "max_iter"
CONF_DELTA: Final = "delta"
CONF_N_ROUNDS: Final = "n_rounds"

KERNEL_RBF: Final = "rbf"
KERNEL_LINEAR: Final = "linear"

# Hyperparameter defaults
DEFAULT_HYPERPARAMETERS: Final[dict[str, dict[str, object]]] = {
    KIND_LR: {
        CONF_LEARNING_RATE: 0.1,
        CONF_ITERATIONS: 500,
        CONF_L2: 1e-4,
    },
    KIND_RF: {
        CONF_N_TREES: 100,
        CONF_MAX_DEPTH: None,
        CONF_MIN_LEAF: 1,
        CONF_MAX_FEATURES: None,
        CONF_BOOTSTRAP: True,
    },
    KIND_SVM: {
        CONF_C: 1.0,
        CONF_KERNEL: KERNEL_RBF,
        CONF_GAMMA: None,
        CONF_TOL: 1e-3,
        CONF_MAX_ITER: 100_000,
    },
    KIND_FSVM: {
        CONF_C: 1.0,
        CONF_KERNEL: KERNEL_RBF,
        CONF_GAMMA: None,
        CONF_TOL: 1e-3,
        CONF_MAX_ITER: 100_000,
        CONF_DELTA: 1e-6,
    },
    KIND_GB: {
        CONF_N_ROUNDS: 100,
        CONF_MAX_DEPTH: 3,
        CONF_LEARNING_RATE: 0.1,
        CONF_MIN_LEAF: 1,
    },
}

# Stacking config keys
CONF_STACKING: Final = "stacking"
CONF_LEVEL_ONE: Final = "level_one"
CONF_META: Final = "meta"
CONF_KIND: Final = "kind"
CONF_HYPERPARAMETERS: Final = "hyperparameters"
CONF_SEED_OFFSET: Final = "seed_offset"
CONF_USE_PROBABILITIES: Final = "use_probabilities"
CONF_INCLUDE_ORIGINAL: Final = "include_original"
CONF_OOF_FOLDS: Final = "oof_folds"
CONF_VERSION: Final = "version"
CONF_PROFILES: Final = "profiles"

DEFAULT_OOF_FOLDS: Final = 5
META_SEED_OFFSET: Final = 1000
FOLD_SEED_KEY: Final = 65_536

# Evaluation protocol
DEFAULT_TRAIN_FRACTION: Final = 0.6
DEFAULT_TRIALS: Final = 100

# File formats
CONFIG_VERSION: Final = 1
MODEL_FORMAT: Final = "prpd-classifier-model"
MODEL_FORMAT_VERSION: Final = 1
REPORT_FORMAT: Final = "prpd-classifier-report"
REPORT_FORMAT_VERSION: Final = 1

# CLI exit codes
EXIT_OK: Final = 0
EXIT_USAGE: Final = 2
EXIT_DATA: Final = 3
EXIT_NUMERICAL: Final = 4
