"""PRPD Classifier: partial-discharge type classification from PRPD patterns."""

from __future__ import annotations

from .const import VERSION
from .ensemble import ClassifierSpec, StackingClassifier, StackingConfig
from .evaluation import EvalReport, SplitSpec, run_trials, score, stratified_split
from .features import FeatureKind, FeatureMatrix, MetaFeatures, extract_features, extract_meta
from .registry import build_classifier
from .signal_model import Dataset, PdLabel, PrpdSignal, load_dataset, save_dataset
from .synthetic import ClassProfile, SyntheticSpec, generate_corpus

__version__ = VERSION

__all__ = [
    "ClassProfile",
    "ClassifierSpec",
    "Dataset",
    "EvalReport",
    "FeatureKind",
    "FeatureMatrix",
    "MetaFeatures",
    "PdLabel",
    "PrpdSignal",
    "SplitSpec",
    "StackingClassifier",
    "StackingConfig",
    "SyntheticSpec",
    "build_classifier",
    "extract_features",
    "extract_meta",
    "generate_corpus",
    "load_dataset",
    "run_trials",
    "save_dataset",
    "score",
    "stratified_split",
]
