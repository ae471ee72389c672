"""Versioned JSON model files."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
import json
import logging
from pathlib import Path
from typing import Any

from .const import (
    DEFAULT_THRESHOLD_RATIO,
    KIND_STACK,
    MODEL_FORMAT,
    MODEL_FORMAT_VERSION,
)
from .ensemble import stacking_from_document
from .exceptions import DataValidationError, ModelFormatError
from .features import FeatureKind
from .learners import Classifier
from .registry import classifier_from_document

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SavedModel:
    """A fitted classifier plus the feature settings it was trained with."""

    classifier: Classifier
    feature_kind: FeatureKind
    threshold_ratio: float = DEFAULT_THRESHOLD_RATIO


def model_to_json(saved: SavedModel) -> str:
    """Serialize with sorted keys so equal models give identical text."""
    document = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "feature_kind": str(saved.feature_kind),
        "threshold_ratio": saved.threshold_ratio,
        **saved.classifier.to_document(),
    }
    return json.dumps(document, sort_keys=True, indent=1) + "\n"


def model_from_json(text: str) -> SavedModel:
    """Inverse of model_to_json."""
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelFormatError(f"model file is not valid JSON: {err}") from err
    if not isinstance(document, Mapping):
        raise ModelFormatError("model file must hold a JSON object")
    if document.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"not a {MODEL_FORMAT} file")
    if document.get("version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model version {document.get('version')!r}, "
            f"expected {MODEL_FORMAT_VERSION}"
        )
    try:
        feature_kind = FeatureKind(document["feature_kind"])
        threshold_ratio = float(document["threshold_ratio"])
    except (KeyError, TypeError, ValueError) as err:
        raise ModelFormatError(f"malformed feature settings: {err}") from err
    return SavedModel(
        classifier=_classifier_from_document(document),
        feature_kind=feature_kind,
        threshold_ratio=threshold_ratio,
    )


def _classifier_from_document(document: Mapping[str, Any]) -> Classifier:
    if document.get("kind") == KIND_STACK:
        return stacking_from_document(document)
    return classifier_from_document(document)


def save_model(saved: SavedModel, path: str | Path) -> None:
    """Write a model file."""
    path = Path(path)
    try:
        path.write_text(model_to_json(saved), encoding="utf-8")
    except OSError as err:
        raise DataValidationError(f"cannot write {path}: {err}") from err
    _LOGGER.debug("Saved %s model to %s", saved.classifier.kind, path)


def load_model(path: str | Path) -> SavedModel:
    """Read a model file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ModelFormatError(f"cannot read model file {path}: {err}") from err
    return model_from_json(text)
