"""Classifier descriptions and construction by kind."""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass
from typing import Any

from .config import validate_hyperparameters
from .const import KIND_FSVM, KIND_GB, KIND_LR, KIND_NAMES, KIND_RF, KIND_SVM
from .exceptions import ConfigError, ModelFormatError
from .learners import Classifier, LogisticRegressionClassifier
from .svm import FuzzySvmClassifier, SvmClassifier
from .trees import GradientBoostingClassifier, RandomForestClassifier


@dataclass(frozen=True, kw_only=True)
class ClassifierDescription:
    """Describe one classifier kind."""

    key: str
    factory: Callable[[Mapping[str, Any], int], Classifier]
    stackable: bool = True

    @property
    def name(self) -> str:
        """Display name for report tables."""
        return KIND_NAMES[self.key]


CLASSIFIERS: tuple[ClassifierDescription, ...] = (
    ClassifierDescription(key=KIND_LR, factory=LogisticRegressionClassifier),
    ClassifierDescription(key=KIND_RF, factory=RandomForestClassifier),
    ClassifierDescription(key=KIND_SVM, factory=SvmClassifier),
    # rejected as a stacking member or meta-classifier
    ClassifierDescription(key=KIND_FSVM, factory=FuzzySvmClassifier, stackable=False),
    ClassifierDescription(key=KIND_GB, factory=GradientBoostingClassifier),
)

_BY_KEY = {description.key: description for description in CLASSIFIERS}


def get_description(kind: str) -> ClassifierDescription:
    """Description of a classifier kind."""
    try:
        return _BY_KEY[kind]
    except KeyError:
        raise ConfigError(f"unknown classifier kind {kind!r}") from None


def build_classifier(
    kind: str, hyperparameters: Mapping[str, Any] | None = None, seed: int = 0
) -> Classifier:
    """Unfitted classifier of the given kind with validated hyperparameters."""
    description = get_description(kind)
    return description.factory(validate_hyperparameters(kind, hyperparameters), seed)


def classifier_from_document(document: Mapping[str, Any]) -> Classifier:
    """Rebuild a fitted single classifier from its to_document form."""
    try:
        kind = document["kind"]
        seed = int(document["seed"])
        hyperparameters = document["hyperparameters"]
    except (KeyError, TypeError, ValueError) as err:
        raise ModelFormatError(f"malformed model document: {err}") from err
    if kind not in _BY_KEY:
        raise ModelFormatError(f"unknown model kind {kind!r}")
    try:
        classifier = build_classifier(kind, hyperparameters, seed)
    except ConfigError as err:
        raise ModelFormatError(str(err)) from err
    return classifier.load_document(document)
