"""Repeated stratified train/validation trials and their reports."""

from __future__ import annotations

import asyncio
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from .const import (
    DEFAULT_THRESHOLD_RATIO,
    DEFAULT_TRAIN_FRACTION,
    DEFAULT_TRIALS,
    N_CLASSES,
    REPORT_FORMAT,
    REPORT_FORMAT_VERSION,
)
from .ensemble import ClassifierSpec, StackingClassifier, StackingConfig
from .exceptions import ConfigError, DataValidationError
from .features import FeatureKind, FeatureMatrix, extract_features
from .learners import Classifier, as_codes
from .signal_model import Dataset, PdLabel
from .utils import derive_seed, population_std, round_half_up

_LOGGER = logging.getLogger(__name__)

ModelSpec = ClassifierSpec | StackingConfig | Callable[[int], Classifier]

_CELL_WIDTH = 17
_ROW_HEADING_WIDTH = 11


@dataclass(frozen=True, kw_only=True)
class SplitSpec:
    """Train fraction, stratification, trial count and master seed."""

    train_fraction: float = DEFAULT_TRAIN_FRACTION
    stratified: bool = True
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0

    def validate(self) -> None:
        """Raise ConfigError for unusable settings."""
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train fraction must lie in (0, 1), got {self.train_fraction}")
        if self.trials < 1:
            raise ConfigError(f"at least one trial is required, got {self.trials}")

    def to_dict(self) -> dict[str, Any]:
        """Echo for reports."""
        return {
            "train_fraction": self.train_fraction,
            "stratified": self.stratified,
            "trials": self.trials,
            "master_seed": self.master_seed,
        }


# ── Splitting ─────────────────────────────────────────────────


def _train_count(size: int, fraction: float) -> int:
    return min(max(round_half_up(fraction * size), 1), size - 1)


def stratified_split(
    labels: Dataset | npt.ArrayLike,
    fraction: float,
    seed: int,
    *,
    stratified: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint, exhaustive (train, validation) index arrays, both ascending.

    Stratified splits put round_half_up(fraction * n_c) samples of each class
    in training, clamped so both sides keep at least one sample.
    """
    codes = labels.label_codes() if isinstance(labels, Dataset) else as_codes(labels)
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"train fraction must lie in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)

    if not stratified:
        if codes.size < 2:
            raise DataValidationError("a split needs at least 2 samples")
        permutation = rng.permutation(codes.size)
        train = permutation[: _train_count(codes.size, fraction)]
    else:
        chosen: list[np.ndarray] = []
        for k in range(N_CLASSES):
            members = np.flatnonzero(codes == k)
            if not members.size:
                continue
            if members.size < 2:
                raise DataValidationError(
                    f"class {PdLabel(k).token} has {members.size} sample; "
                    "a stratified split needs at least 2"
                )
            chosen.append(rng.permutation(members)[: _train_count(members.size, fraction)])
        train = np.concatenate(chosen) if chosen else np.zeros(0, dtype=np.int64)

    in_train = np.zeros(codes.size, dtype=bool)
    in_train[train] = True
    return np.flatnonzero(in_train), np.flatnonzero(~in_train)


# ── Scoring ───────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class Score:
    """Metrics of one set of predictions.

    Recall of a class absent from the truth and precision of a class never
    predicted are reported as 0 with the matching ``*_defined`` flag False.
    """

    accuracy: float
    recall: np.ndarray
    precision: np.ndarray
    confusion: np.ndarray
    recall_defined: np.ndarray
    precision_defined: np.ndarray


def score(predictions: npt.ArrayLike, truth: npt.ArrayLike) -> Score:
    """Accuracy, per-class recall and precision, confusion[truth][predicted]."""
    predicted, actual = as_codes(predictions), as_codes(truth)
    if predicted.shape != actual.shape:
        raise DataValidationError(
            f"{predicted.size} predictions for {actual.size} truth labels"
        )
    if not actual.size:
        raise DataValidationError("cannot score an empty prediction set")
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (actual, predicted), 1)
    correct = np.diag(confusion).astype(np.float64)
    truth_counts = confusion.sum(axis=1)
    predicted_counts = confusion.sum(axis=0)
    recall_defined = truth_counts > 0
    precision_defined = predicted_counts > 0
    return Score(
        accuracy=float(correct.sum() / actual.size),
        recall=np.divide(correct, truth_counts, out=np.zeros(N_CLASSES), where=recall_defined),
        precision=np.divide(
            correct, predicted_counts, out=np.zeros(N_CLASSES), where=precision_defined
        ),
        confusion=confusion,
        recall_defined=recall_defined,
        precision_defined=precision_defined,
    )


# ── Reports ───────────────────────────────────────────────────


@dataclass(frozen=True)
class MetricSummary:
    """Mean and population standard deviation over trials."""

    mean: float
    std: float

    @classmethod
    def of(cls, values: Sequence[float] | np.ndarray) -> MetricSummary:
        """Summarize per-trial values."""
        values = np.asarray(values, dtype=np.float64)
        return cls(mean=float(values.mean()), std=float(population_std(values)))

    def cell(self) -> str:
        """``mean ± std`` with four decimals."""
        return f"{self.mean:.4f} ± {self.std:.4f}"


@dataclass(frozen=True, kw_only=True, eq=False)
class EvalReport:
    """Aggregated metrics of one model on one feature set."""

    model: str
    model_name: str
    feature_kind: FeatureKind
    trials: int
    accuracy: MetricSummary
    recall: dict[PdLabel, MetricSummary]
    precision: dict[PdLabel, MetricSummary]
    confusion: np.ndarray
    trial_accuracies: tuple[float, ...]
    undefined_recall: dict[PdLabel, int] = field(default_factory=dict)
    undefined_precision: dict[PdLabel, int] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """Machine-readable form."""

        def _per_class(
            summaries: dict[PdLabel, MetricSummary], undefined: dict[PdLabel, int]
        ) -> dict[str, Any]:
            return {
                label.token: {
                    "mean": summaries[label].mean,
                    "std": summaries[label].std,
                    "undefined_trials": undefined.get(label, 0),
                }
                for label in PdLabel
            }

        return {
            "format": REPORT_FORMAT,
            "version": REPORT_FORMAT_VERSION,
            "model": self.model,
            "model_name": self.model_name,
            "feature_kind": str(self.feature_kind),
            "trials": self.trials,
            "accuracy": {
                "mean": self.accuracy.mean,
                "std": self.accuracy.std,
                "per_trial": list(self.trial_accuracies),
            },
            "recall": _per_class(self.recall, self.undefined_recall),
            "precision": _per_class(self.precision, self.undefined_precision),
            "confusion": self.confusion.tolist(),
            "config": self.config,
        }

    def render_table(self) -> str:
        """Per-type recall and precision plus total accuracy, with top confusions."""
        header = "".ljust(_ROW_HEADING_WIDTH) + "".join(
            title.ljust(_CELL_WIDTH) for title in [*(label.title for label in PdLabel), "Total"]
        )
        recall = "Recall".ljust(_ROW_HEADING_WIDTH) + "".join(
            cell.ljust(_CELL_WIDTH)
            for cell in [*(self.recall[label].cell() for label in PdLabel), self.accuracy.cell()]
        )
        precision = "Precision".ljust(_ROW_HEADING_WIDTH) + "".join(
            cell.ljust(_CELL_WIDTH)
            for cell in [*(self.precision[label].cell() for label in PdLabel), "-"]
        )
        lines = [
            f"{self.model_name} | {self.feature_kind.heading} | {self.trials} trials",
            header.rstrip(),
            recall.rstrip(),
            precision.rstrip(),
        ]
        confusions = dominant_confusions(self)
        if confusions:
            lines.append(
                "Most frequent confusions: "
                + ", ".join(
                    f"{truth.token} as {predicted.token} ({count})"
                    for truth, predicted, count in confusions
                )
            )
        return "\n".join(lines) + "\n"


def dominant_confusions(report: EvalReport, top: int = 3) -> list[tuple[PdLabel, PdLabel, int]]:
    """Largest off-diagonal confusion counts as (truth, predicted, count)."""
    pairs = [
        (PdLabel(i), PdLabel(j), int(report.confusion[i, j]))
        for i in range(N_CLASSES)
        for j in range(N_CLASSES)
        if i != j and report.confusion[i, j] > 0
    ]
    pairs.sort(key=lambda pair: (-pair[2], int(pair[0]), int(pair[1])))
    return pairs[:top]


def reports_to_json(reports: Sequence[EvalReport]) -> str:
    """Stable JSON text; a single report is written as an object, several as a list."""
    payload: Any = reports[0].to_dict() if len(reports) == 1 else [r.to_dict() for r in reports]
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def save_reports(reports: Sequence[EvalReport], path: str | Path) -> None:
    """Write reports_to_json output to ``path``."""
    path = Path(path)
    try:
        path.write_text(reports_to_json(reports), encoding="utf-8")
    except OSError as err:
        raise DataValidationError(f"cannot write {path}: {err}") from err


# ── Trials ────────────────────────────────────────────────────


@dataclass(frozen=True)
class _ResolvedModel:
    key: str
    name: str
    factory: Callable[[int], Classifier]
    echo: dict[str, Any]


def _resolve_model(model_spec: ModelSpec) -> _ResolvedModel:
    if isinstance(model_spec, ClassifierSpec):
        return _ResolvedModel(
            model_spec.kind, model_spec.name, model_spec.build, model_spec.to_dict()
        )
    if isinstance(model_spec, StackingConfig):
        model_spec.validate()
        config = model_spec

        def _build_stacking(seed: int) -> Classifier:
            return StackingClassifier(config, seed)

        return _ResolvedModel(
            StackingClassifier.kind, config.name, _build_stacking, {"stacking": config.to_dict()}
        )
    if callable(model_spec):
        name = getattr(model_spec, "__name__", type(model_spec).__name__)
        return _ResolvedModel(name, name, model_spec, {"kind": "custom", "name": name})
    raise ConfigError(f"unsupported model spec {model_spec!r}")


def _feature_matrix(
    data: Dataset | FeatureMatrix, feature_kind: FeatureKind | str, threshold_ratio: float
) -> FeatureMatrix:
    if isinstance(data, FeatureMatrix):
        return data
    return extract_features(data, feature_kind, threshold_ratio)


def _run_trial(
    trial: int,
    model: _ResolvedModel,
    rows: np.ndarray,
    codes: np.ndarray,
    split_spec: SplitSpec,
) -> Score:
    seed = derive_seed(split_spec.master_seed, trial)
    train, validation = stratified_split(
        codes, split_spec.train_fraction, derive_seed(seed, 0), stratified=split_spec.stratified
    )
    classifier = model.factory(derive_seed(seed, 1))
    classifier.fit(rows[train], codes[train])
    result = score(classifier.predict(rows[validation]), codes[validation])
    _LOGGER.debug("Trial %d of %s: accuracy %.4f", trial, model.name, result.accuracy)
    return result


def _summarize(
    model: _ResolvedModel,
    features: FeatureMatrix,
    split_spec: SplitSpec,
    threshold_ratio: float,
    scores: Sequence[Score],
) -> EvalReport:
    recall = np.array([s.recall for s in scores])
    precision = np.array([s.precision for s in scores])
    recall_missing = np.sum([~s.recall_defined for s in scores], axis=0)
    precision_missing = np.sum([~s.precision_defined for s in scores], axis=0)
    for label in PdLabel:
        if precision_missing[label]:
            _LOGGER.warning(
                "%s never predicted %s in %d of %d trials; precision counted as 0",
                model.name,
                label.token,
                int(precision_missing[label]),
                len(scores),
            )
    report = EvalReport(
        model=model.key,
        model_name=model.name,
        feature_kind=features.feature_kind,
        trials=len(scores),
        accuracy=MetricSummary.of([s.accuracy for s in scores]),
        recall={label: MetricSummary.of(recall[:, label]) for label in PdLabel},
        precision={label: MetricSummary.of(precision[:, label]) for label in PdLabel},
        confusion=np.sum([s.confusion for s in scores], axis=0),
        trial_accuracies=tuple(s.accuracy for s in scores),
        undefined_recall={label: int(recall_missing[label]) for label in PdLabel},
        undefined_precision={label: int(precision_missing[label]) for label in PdLabel},
        config={
            "model": model.echo,
            "split": split_spec.to_dict(),
            "threshold_ratio": threshold_ratio,
            "samples": len(features),
        },
    )
    _LOGGER.info(
        "%s on %s: accuracy %s over %d trials",
        model.name,
        features.feature_kind.heading,
        report.accuracy.cell(),
        report.trials,
    )
    return report


async def async_run_trials(
    model_spec: ModelSpec,
    feature_kind: FeatureKind | str,
    data: Dataset | FeatureMatrix,
    split_spec: SplitSpec | None = None,
    *,
    threshold_ratio: float = DEFAULT_THRESHOLD_RATIO,
    max_workers: int = 4,
) -> EvalReport:
    """Run the trials on a thread pool, at most ``max_workers`` at a time.

    Results are reduced in trial-index order, so the report does not depend
    on completion order.
    """
    split_spec = split_spec or SplitSpec()
    split_spec.validate()
    model = _resolve_model(model_spec)
    features = _feature_matrix(data, feature_kind, threshold_ratio)
    codes = features.label_codes()
    loop = asyncio.get_running_loop()
    semaphore = asyncio.Semaphore(max(1, max_workers))

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as executor:

        async def _run_with_limit(trial: int) -> Score:
            async with semaphore:
                return await loop.run_in_executor(
                    executor, _run_trial, trial, model, features.rows, codes, split_spec
                )

        scores = await asyncio.gather(
            *(_run_with_limit(trial) for trial in range(split_spec.trials))
        )

    return _summarize(model, features, split_spec, threshold_ratio, scores)


def _loop_running() -> bool:
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        return False
    return True


def run_trials(
    model_spec: ModelSpec,
    feature_kind: FeatureKind | str,
    data: Dataset | FeatureMatrix,
    split_spec: SplitSpec | None = None,
    *,
    threshold_ratio: float = DEFAULT_THRESHOLD_RATIO,
    max_workers: int = 1,
) -> EvalReport:
    """Evaluate a model over repeated splits; deterministic given the master seed.

    With ``max_workers > 1`` the trials run through async_run_trials on a
    fresh event loop. Called from inside a running loop, where a second loop
    cannot be started, the trials run sequentially instead; await
    async_run_trials there to pool them. The report is the same either way.
    """
    split_spec = split_spec or SplitSpec()
    if max_workers > 1:
        if not _loop_running():
            return asyncio.run(
                async_run_trials(
                    model_spec,
                    feature_kind,
                    data,
                    split_spec,
                    threshold_ratio=threshold_ratio,
                    max_workers=max_workers,
                )
            )
        _LOGGER.warning(
            "Event loop already running; %d workers ignored, await async_run_trials to pool trials",
            max_workers,
        )
    split_spec.validate()
    model = _resolve_model(model_spec)
    features = _feature_matrix(data, feature_kind, threshold_ratio)
    codes = features.label_codes()
    scores = [
        _run_trial(trial, model, features.rows, codes, split_spec)
        for trial in range(split_spec.trials)
    ]
    return _summarize(model, features, split_spec, threshold_ratio, scores)


def evaluate_grid(
    model_specs: Sequence[ModelSpec],
    feature_kinds: Sequence[FeatureKind | str],
    dataset: Dataset,
    split_spec: SplitSpec | None = None,
    *,
    threshold_ratio: float = DEFAULT_THRESHOLD_RATIO,
    max_workers: int = 1,
) -> list[EvalReport]:
    """Every (model, feature set) pair under the same trial seeds, model-major."""
    matrices = {
        FeatureKind(kind): extract_features(dataset, kind, threshold_ratio)
        for kind in feature_kinds
    }
    return [
        run_trials(
            spec,
            kind,
            matrix,
            split_spec,
            threshold_ratio=threshold_ratio,
            max_workers=max_workers,
        )
        for spec in model_specs
        for kind, matrix in matrices.items()
    ]


def render_accuracy_table(reports: Sequence[EvalReport]) -> str:
    """Models as rows, feature sets as columns, cells ``mean ± std`` accuracy."""
    kinds = list(dict.fromkeys(report.feature_kind for report in reports))
    models = list(dict.fromkeys(report.model_name for report in reports))
    cells = {(r.model_name, r.feature_kind): r.accuracy.cell() for r in reports}
    name_width = max([len("Model"), *(len(name) for name in models)]) + 2
    widths = [max(len(kind.heading), len("0.0000 ± 0.0000")) + 2 for kind in kinds]
    lines = [
        (
            "Model".ljust(name_width)
            + "".join(kind.heading.ljust(width) for kind, width in zip(kinds, widths))
        ).rstrip()
    ]
    for name in models:
        lines.append(
            (
                name.ljust(name_width)
                + "".join(
                    cells.get((name, kind), "-").ljust(width) for kind, width in zip(kinds, widths)
                )
            ).rstrip()
        )
    return "\n".join(lines) + "\n"
