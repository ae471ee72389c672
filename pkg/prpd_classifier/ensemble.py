"""Stacking ensemble trained on out-of-fold level-one outputs."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
import logging
from typing import Any

import numpy as np
import numpy.typing as npt
import voluptuous as vol

from .config import CLASSIFIER_SPEC_SCHEMA, STACKING_SCHEMA, validate_hyperparameters
from .const import (
    CONF_HYPERPARAMETERS,
    CONF_INCLUDE_ORIGINAL,
    CONF_KERNEL,
    CONF_KIND,
    CONF_LEVEL_ONE,
    CONF_META,
    CONF_OOF_FOLDS,
    CONF_SEED_OFFSET,
    CONF_USE_PROBABILITIES,
    DEFAULT_OOF_FOLDS,
    FOLD_SEED_KEY,
    KERNEL_LINEAR,
    KERNEL_RBF,
    KIND_LR,
    KIND_NAMES,
    KIND_RF,
    KIND_STACK,
    KIND_SVM,
    META_SEED_OFFSET,
    N_CLASSES,
)
from .exceptions import ConfigError, DataValidationError, ModelFormatError
from .learners import Classifier, as_codes
from .registry import build_classifier, classifier_from_document, get_description
from .utils import derive_seed

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, kw_only=True)
class ClassifierSpec:
    """A classifier kind, its hyperparameter overrides and a seed offset."""

    kind: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed_offset: int = 0

    @property
    def name(self) -> str:
        """Display name; kernelized kinds name a non-default kernel."""
        name = KIND_NAMES.get(self.kind, self.kind)
        kernel = self.hyperparameters.get(CONF_KERNEL)
        if kernel is not None and kernel != KERNEL_RBF:
            name = f"{name} ({kernel})"
        return name

    def build(self, seed: int) -> Classifier:
        """Unfitted classifier seeded with ``seed``."""
        return build_classifier(self.kind, self.hyperparameters, seed)

    def to_dict(self) -> dict[str, Any]:
        """Config-file form."""
        return {
            CONF_KIND: self.kind,
            CONF_HYPERPARAMETERS: dict(self.hyperparameters),
            CONF_SEED_OFFSET: self.seed_offset,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ClassifierSpec:
        """Inverse of to_dict; validates the entry."""
        try:
            validated = CLASSIFIER_SPEC_SCHEMA(dict(data))
        except vol.Invalid as err:
            raise ConfigError(f"invalid classifier spec: {err}") from err
        return cls(
            kind=validated[CONF_KIND],
            hyperparameters=validated[CONF_HYPERPARAMETERS],
            seed_offset=validated[CONF_SEED_OFFSET],
        )


DEFAULT_LEVEL_ONE: tuple[ClassifierSpec, ...] = (
    ClassifierSpec(kind=KIND_SVM, hyperparameters={CONF_KERNEL: KERNEL_RBF}, seed_offset=0),
    ClassifierSpec(kind=KIND_SVM, hyperparameters={CONF_KERNEL: KERNEL_LINEAR}, seed_offset=1),
    ClassifierSpec(kind=KIND_LR, seed_offset=2),
    ClassifierSpec(kind=KIND_RF, seed_offset=3),
)

DEFAULT_META = ClassifierSpec(kind=KIND_RF, seed_offset=META_SEED_OFFSET)


@dataclass(frozen=True, kw_only=True)
class StackingConfig:
    """Level-one bank, meta-classifier and meta-feature assembly options."""

    level_one: tuple[ClassifierSpec, ...] = DEFAULT_LEVEL_ONE
    meta: ClassifierSpec = DEFAULT_META
    use_probabilities: bool = True
    include_original: bool = True
    oof_folds: int = DEFAULT_OOF_FOLDS

    @property
    def name(self) -> str:
        """Display name for report tables."""
        return KIND_NAMES[KIND_STACK]

    def validate(self) -> None:
        """Raise ConfigError for unusable configurations."""
        if not self.level_one:
            raise ConfigError("stacking needs at least one level-one classifier")
        if self.oof_folds < 2:
            raise ConfigError(f"oof_folds must be at least 2, got {self.oof_folds}")
        for role, spec in [*(("level-one", s) for s in self.level_one), ("meta", self.meta)]:
            if not get_description(spec.kind).stackable:
                raise ConfigError(f"{spec.kind} cannot be used as a {role} classifier")
            validate_hyperparameters(spec.kind, spec.hyperparameters)

    def level_one_width(self) -> int:
        """Columns contributed by each level-one classifier."""
        return N_CLASSES if self.use_probabilities else 1

    def meta_width(self, original_width: int) -> int:
        """Width of the assembled meta-feature matrix."""
        width = len(self.level_one) * self.level_one_width()
        return width + (original_width if self.include_original else 0)

    def to_dict(self) -> dict[str, Any]:
        """The ``stacking`` section of a config file."""
        return {
            CONF_LEVEL_ONE: [spec.to_dict() for spec in self.level_one],
            CONF_META: self.meta.to_dict(),
            CONF_USE_PROBABILITIES: self.use_probabilities,
            CONF_INCLUDE_ORIGINAL: self.include_original,
            CONF_OOF_FOLDS: self.oof_folds,
        }

    @classmethod
    def from_dict(cls, section: Mapping[str, Any]) -> StackingConfig:
        """Build from a ``stacking`` section; absent keys keep their defaults."""
        try:
            validated = STACKING_SCHEMA(dict(section))
        except vol.Invalid as err:
            raise ConfigError(f"invalid stacking config: {err}") from err
        options: dict[str, Any] = {}
        if CONF_LEVEL_ONE in validated:
            options["level_one"] = tuple(
                ClassifierSpec.from_dict(entry) for entry in validated[CONF_LEVEL_ONE]
            )
        if CONF_META in validated:
            options["meta"] = ClassifierSpec.from_dict(validated[CONF_META])
        for key in (CONF_USE_PROBABILITIES, CONF_INCLUDE_ORIGINAL, CONF_OOF_FOLDS):
            if key in validated:
                options[key] = validated[key]
        config = cls(**options)
        config.validate()
        return config


def stratified_kfold(y: npt.ArrayLike, n_folds: int, seed: int) -> np.ndarray:
    """Fold index per sample; every fold receives members of every present class."""
    codes = as_codes(y)
    counts = np.bincount(codes, minlength=N_CLASSES)
    present = counts[counts > 0]
    if present.size and n_folds > present.min():
        raise DataValidationError(
            f"{n_folds} folds exceed the smallest class count {int(present.min())}"
        )
    rng = np.random.default_rng(seed)
    folds = np.empty(codes.shape[0], dtype=np.int64)
    offset = 0
    for k in range(N_CLASSES):
        members = np.flatnonzero(codes == k)
        if not members.size:
            continue
        folds[rng.permutation(members)] = (np.arange(members.size) + offset) % n_folds
        offset += members.size
    return folds


def level_one_output(model: Classifier, X: np.ndarray, use_probabilities: bool) -> np.ndarray:
    """Probabilities (4 columns) or the predicted class code (1 column)."""
    if use_probabilities:
        return model.predict_proba(X)
    return model.predict(X).astype(np.float64).reshape(-1, 1)


class StackingClassifier(Classifier):
    """Two-level stacking ensemble.

    The meta-classifier is trained on level-one outputs produced out of fold
    (stratified k-fold), optionally alongside the original features. Level-one
    models used at prediction time are refitted on the full training set.
    """

    kind = KIND_STACK

    def __init__(self, config: StackingConfig | None = None, seed: int = 0) -> None:
        super().__init__(None, seed)
        self.config = config or StackingConfig()
        self.level_one: list[Classifier] = []
        self.meta: Classifier | None = None
        self.fold_assignment: np.ndarray | None = None

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        config = self.config
        config.validate()
        folds = stratified_kfold(y, config.oof_folds, derive_seed(self.seed, FOLD_SEED_KEY))
        blocks: list[np.ndarray] = []
        for spec in config.level_one:
            oof = np.zeros((X.shape[0], config.level_one_width()))
            for fold in range(config.oof_folds):
                held_out = folds == fold
                model = spec.build(derive_seed(self.seed, spec.seed_offset, fold + 1))
                model.fit(X[~held_out], y[~held_out])
                oof[held_out] = level_one_output(model, X[held_out], config.use_probabilities)
            blocks.append(oof)
            _LOGGER.debug("Out-of-fold outputs ready for %s", spec.name)
        if config.include_original:
            blocks.append(X)

        self.fold_assignment = folds
        self.level_one = [
            spec.build(derive_seed(self.seed, spec.seed_offset)).fit(X, y)
            for spec in config.level_one
        ]
        self.meta = config.meta.build(derive_seed(self.seed, config.meta.seed_offset))
        self.meta.fit(np.hstack(blocks), y)

    def meta_features(self, X: npt.ArrayLike) -> np.ndarray:
        """Assemble meta-classifier inputs from full-data level-one models."""
        rows = np.asarray(X, dtype=np.float64)
        blocks = [
            level_one_output(model, rows, self.config.use_probabilities)
            for model in self.level_one
        ]
        if self.config.include_original:
            blocks.append(rows)
        return np.hstack(blocks)

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        assert self.meta is not None
        return self.meta.predict_proba(self.meta_features(X))

    def _get_state(self) -> dict[str, Any]:
        assert self.meta is not None
        return {
            "config": self.config.to_dict(),
            "level_one": [model.to_document() for model in self.level_one],
            "meta": self.meta.to_document(),
        }

    def _set_state(self, state: Mapping[str, Any]) -> None:
        self.level_one = [classifier_from_document(doc) for doc in state["level_one"]]
        self.meta = classifier_from_document(state["meta"])
        if len(self.level_one) != len(self.config.level_one):
            raise ValueError("level-one models do not match the config")


def stacking_from_document(document: Mapping[str, Any]) -> StackingClassifier:
    """Rebuild a fitted stacking model from its to_document form."""
    try:
        config = StackingConfig.from_dict(document["state"]["config"])
        seed = int(document["seed"])
    except (KeyError, TypeError, ValueError, ConfigError) as err:
        raise ModelFormatError(f"malformed stacking document: {err}") from err
    return StackingClassifier(config, seed).load_document(document)


def fit_stacking(
    config: StackingConfig, X: npt.ArrayLike, y: npt.ArrayLike, seed: int
) -> StackingClassifier:
    """Fit a stacking model."""
    return StackingClassifier(config, seed).fit(X, y)


def predict_stacking(
    model: StackingClassifier, X: npt.ArrayLike
) -> tuple[np.ndarray, np.ndarray]:
    """Class codes and probability rows."""
    proba = model.predict_proba(X)
    return np.argmax(proba, axis=1).astype(np.int64), proba

