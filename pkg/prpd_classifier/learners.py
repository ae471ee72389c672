"""Classifier contract, feature standardizer and logistic regression."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Mapping
from dataclasses import dataclass
import logging
from typing import Any, ClassVar, Self

import numpy as np
import numpy.typing as npt
from scipy.special import logsumexp, softmax

from .const import (
    CONF_ITERATIONS,
    CONF_L2,
    CONF_LEARNING_RATE,
    DEFAULT_HYPERPARAMETERS,
    KIND_LR,
    N_CLASSES,
)
from .exceptions import DataValidationError, FeatureWidthError, ModelFormatError
from .utils import one_hot, population_std

_LOGGER = logging.getLogger(__name__)

# Columns whose training std is at or below this are only centered
MIN_SCALE = 1e-12

# Step halvings tried before an optimizer gives up on a step
MAX_HALVINGS = 40


def as_rows(X: npt.ArrayLike) -> np.ndarray:
    """Coerce a feature matrix to a 2-d float64 array."""
    rows = np.asarray(X, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(-1, 1) if rows.size else rows.reshape(0, 0)
    if rows.ndim != 2:
        raise DataValidationError(f"feature rows must be 2-d, got {rows.ndim}-d")
    return rows


def as_codes(y: npt.ArrayLike) -> np.ndarray:
    """Coerce labels to int64 class codes in 0..3."""
    codes = np.asarray(y)
    if codes.ndim != 1:
        raise DataValidationError("labels must be a 1-d sequence")
    codes = codes.astype(np.int64)
    if codes.size and (codes.min() < 0 or codes.max() >= N_CLASSES):
        raise DataValidationError(f"class codes must lie in 0..{N_CLASSES - 1}")
    return codes


def normalize_rows(proba: np.ndarray) -> np.ndarray:
    """Rescale nonnegative rows onto the probability simplex."""
    proba = np.clip(proba, 0.0, None)
    totals = proba.sum(axis=1, keepdims=True)
    empty = totals[:, 0] <= 0
    if empty.any():
        proba[empty] = 1.0 / N_CLASSES
        totals[empty] = 1.0
    return proba / totals


# ── Standardizer ──────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature centering and scaling learned from training rows."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, rows: npt.ArrayLike) -> Standardizer:
        """Learn column means and population standard deviations."""
        rows = as_rows(rows)
        if rows.shape[0] == 0:
            raise DataValidationError("cannot fit a standardizer on an empty matrix")
        std = population_std(rows, axis=0)
        return cls(mean=rows.mean(axis=0), scale=np.where(std > MIN_SCALE, std, 1.0))

    @property
    def width(self) -> int:
        """Number of features."""
        return int(self.mean.shape[0])

    def apply(self, rows: npt.ArrayLike) -> np.ndarray:
        """Transform rows with the learned statistics."""
        rows = as_rows(rows)
        if rows.shape[1] != self.width:
            raise FeatureWidthError(
                f"standardizer fitted on {self.width} features, got {rows.shape[1]}"
            )
        return (rows - self.mean) / self.scale

    def to_dict(self) -> dict[str, list[float]]:
        """JSON-friendly form."""
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Standardizer:
        """Inverse of to_dict."""
        try:
            mean = np.asarray(data["mean"], dtype=np.float64)
            scale = np.asarray(data["scale"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as err:
            raise ModelFormatError(f"malformed standardizer: {err}") from err
        if mean.shape != scale.shape or mean.ndim != 1:
            raise ModelFormatError("standardizer mean and scale must be equal-length vectors")
        return cls(mean=mean, scale=scale)


def fit_standardizer(train: npt.ArrayLike) -> Standardizer:
    """Fit a Standardizer on a training matrix."""
    return Standardizer.fit(train)


# ── Classifier contract ───────────────────────────────────────


class Classifier(ABC):
    """Four-class probabilistic classifier.

    Subclasses implement ``_fit`` / ``_predict_proba`` on (optionally
    standardized) rows and ``_get_state`` / ``_set_state`` for persistence.
    """

    kind: ClassVar[str]
    standardize: ClassVar[bool] = False

    def __init__(self, hyperparameters: Mapping[str, Any] | None = None, seed: int = 0) -> None:
        """Initialize with hyperparameters layered over the kind's defaults."""
        self.hyperparameters: dict[str, Any] = {
            **DEFAULT_HYPERPARAMETERS.get(self.kind, {}),
            **(hyperparameters or {}),
        }
        self.seed = int(seed)
        self.standardizer: Standardizer | None = None
        self.n_features: int | None = None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(seed={self.seed}, fitted={self.is_fitted})"

    @property
    def is_fitted(self) -> bool:
        """True once fit (or a state load) has completed."""
        return self.n_features is not None

    def fit(self, X: npt.ArrayLike, y: npt.ArrayLike) -> Self:
        """Fit on feature rows and class codes; returns self."""
        rows, codes = as_rows(X), as_codes(y)
        if rows.shape[0] == 0:
            raise DataValidationError("cannot fit on an empty training set")
        if rows.shape[0] != codes.shape[0]:
            raise DataValidationError(
                f"{rows.shape[0]} feature rows but {codes.shape[0]} labels"
            )
        if not np.isfinite(rows).all():
            raise DataValidationError("training features must be finite")
        if self.standardize:
            self.standardizer = Standardizer.fit(rows)
            rows = self.standardizer.apply(rows)
        self._fit(rows, codes)
        self.n_features = int(rows.shape[1])
        _LOGGER.debug("Fitted %s on %d x %d", self.kind, rows.shape[0], rows.shape[1])
        return self

    def predict_proba(self, X: npt.ArrayLike) -> np.ndarray:
        """Class probabilities, one length-4 simplex row per input row."""
        if not self.is_fitted:
            raise DataValidationError(f"{self.kind} classifier is not fitted")
        rows = as_rows(X)
        if rows.shape[0] == 0:
            return np.zeros((0, N_CLASSES), dtype=np.float64)
        if rows.shape[1] != self.n_features:
            raise FeatureWidthError(
                f"model expects {self.n_features} features, got {rows.shape[1]}"
            )
        if self.standardizer is not None:
            rows = self.standardizer.apply(rows)
        return normalize_rows(self._predict_proba(rows))

    def predict(self, X: npt.ArrayLike) -> np.ndarray:
        """Most probable class code per row; ties go to the lowest code."""
        return np.argmax(self.predict_proba(X), axis=1).astype(np.int64)

    def to_document(self) -> dict[str, Any]:
        """JSON-friendly description of the fitted model."""
        if not self.is_fitted:
            raise DataValidationError(f"{self.kind} classifier is not fitted")
        return {
            "kind": self.kind,
            "seed": self.seed,
            "hyperparameters": dict(self.hyperparameters),
            "n_features": self.n_features,
            "standardizer": self.standardizer.to_dict() if self.standardizer else None,
            "state": self._get_state(),
        }

    def load_document(self, document: Mapping[str, Any]) -> Self:
        """Restore fitted state written by to_document."""
        try:
            self.n_features = int(document["n_features"])
            standardizer = document.get("standardizer")
            self.standardizer = Standardizer.from_dict(standardizer) if standardizer else None
            self._set_state(document["state"])
        except (KeyError, TypeError, ValueError, IndexError) as err:
            self.n_features = None
            raise ModelFormatError(f"malformed {self.kind} model state: {err}") from err
        return self

    @abstractmethod
    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        """Fit on prepared rows."""

    @abstractmethod
    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Unnormalized or normalized probabilities for prepared rows."""

    @abstractmethod
    def _get_state(self) -> dict[str, Any]:
        """Fitted parameters as JSON-friendly values."""

    @abstractmethod
    def _set_state(self, state: Mapping[str, Any]) -> None:
        """Inverse of _get_state."""


def require_two_classes(y: np.ndarray, kind: str) -> None:
    """Raise unless at least two classes are present."""
    if np.unique(y).size < 2:
        raise DataValidationError(f"{kind} needs at least two classes in the training set")


# ── Logistic regression ───────────────────────────────────────


def softmax_loss_and_gradient(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    targets: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """L2-regularized mean negative log-likelihood of a softmax model.

    ``weights`` is (k, 4), ``bias`` is (4,), ``targets`` one-hot (n, 4). The
    bias is not regularized. Returns (loss, d_weights, d_bias).
    """
    scores = X @ weights + bias
    log_norm = logsumexp(scores, axis=1)
    n = X.shape[0]
    loss = float(np.mean(log_norm - (scores * targets).sum(axis=1)))
    loss += 0.5 * l2 * float(np.sum(weights * weights))
    residual = (softmax(scores, axis=1) - targets) / n
    return loss, X.T @ residual + l2 * weights, residual.sum(axis=0)


class LogisticRegressionClassifier(Classifier):
    """Multinomial softmax regression trained by full-batch gradient descent.

    A step that would raise the training loss is halved until it does not,
    so ``loss_trace`` is non-increasing.
    """

    kind = KIND_LR
    standardize = True

    def __init__(self, hyperparameters: Mapping[str, Any] | None = None, seed: int = 0) -> None:
        super().__init__(hyperparameters, seed)
        self.weights = np.zeros((0, N_CLASSES))
        self.bias = np.zeros(N_CLASSES)
        self.loss_trace: list[float] = []

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        require_two_classes(y, self.kind)
        l2 = float(self.hyperparameters[CONF_L2])
        step = float(self.hyperparameters[CONF_LEARNING_RATE])
        targets = one_hot(y, N_CLASSES)

        weights = np.zeros((X.shape[1], N_CLASSES))
        bias = np.zeros(N_CLASSES)
        loss, grad_w, grad_b = softmax_loss_and_gradient(weights, bias, X, targets, l2)
        self.loss_trace = [loss]

        for iteration in range(int(self.hyperparameters[CONF_ITERATIONS])):
            for _ in range(MAX_HALVINGS):
                new_w = weights - step * grad_w
                new_b = bias - step * grad_b
                new_loss, new_grad_w, new_grad_b = softmax_loss_and_gradient(
                    new_w, new_b, X, targets, l2
                )
                if new_loss <= loss:
                    break
                step /= 2.0
            else:
                _LOGGER.debug("Logistic regression stalled at iteration %d", iteration)
                break
            weights, bias = new_w, new_b
            loss, grad_w, grad_b = new_loss, new_grad_w, new_grad_b
            self.loss_trace.append(loss)

        self.weights, self.bias = weights, bias
        _LOGGER.debug(
            "Logistic regression: %d steps, loss %.6g -> %.6g",
            len(self.loss_trace) - 1,
            self.loss_trace[0],
            self.loss_trace[-1],
        )

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(X @ self.weights + self.bias, axis=1)

    def _get_state(self) -> dict[str, Any]:
        return {"weights": self.weights.tolist(), "bias": self.bias.tolist()}

    def _set_state(self, state: Mapping[str, Any]) -> None:
        weights = np.asarray(state["weights"], dtype=np.float64).reshape(-1, N_CLASSES)
        if weights.shape[0] != self.n_features:
            raise ValueError(f"weights for {weights.shape[0]} features, expected {self.n_features}")
        self.weights = weights
        self.bias = np.asarray(state["bias"], dtype=np.float64).reshape(N_CLASSES)
