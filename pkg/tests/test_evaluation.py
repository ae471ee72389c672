"""Tests for splits, scoring and the repeated-trial protocol."""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from typing import Any

import numpy as np
import pytest

from prpd_classifier.ensemble import ClassifierSpec, StackingConfig
from prpd_classifier.evaluation import (
    MetricSummary,
    SplitSpec,
    async_run_trials,
    dominant_confusions,
    evaluate_grid,
    render_accuracy_table,
    reports_to_json,
    run_trials,
    save_reports,
    score,
    stratified_split,
)
from prpd_classifier.exceptions import ConfigError, DataValidationError
from prpd_classifier.features import FeatureKind
from prpd_classifier.learners import Classifier
from prpd_classifier.signal_model import PdLabel
from prpd_classifier.utils import one_hot

DEFAULT_LABELS = np.repeat(np.arange(4), [85, 99, 80, 64])
FAST_LR = ClassifierSpec(kind="lr", hyperparameters={"iterations": 50})


class ConstantCorona(Classifier):
    """Always predicts corona."""

    kind = "constant"

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        pass

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        return one_hot(np.zeros(X.shape[0], dtype=int), 4)

    def _get_state(self) -> dict[str, Any]:
        return {}

    def _set_state(self, state: Mapping[str, Any]) -> None:
        pass


def constant_corona(seed: int) -> Classifier:
    return ConstantCorona(seed=seed)


# ── Splits ────────────────────────────────────────────────────


class TestStratifiedSplit:
    """Tests for stratified_split."""

    def test_default_corpus_counts(self):
        train, validation = stratified_split(DEFAULT_LABELS, 0.6, seed=0)
        assert np.bincount(DEFAULT_LABELS[train]).tolist() == [51, 59, 48, 38]
        assert np.bincount(DEFAULT_LABELS[validation]).tolist() == [34, 40, 32, 26]

    def test_two_classes_of_five(self):
        labels = np.repeat([0, 1], 5)
        train, validation = stratified_split(labels, 0.6, seed=4)
        assert np.bincount(labels[train]).tolist() == [3, 3]
        assert np.bincount(labels[validation]).tolist() == [2, 2]

    def test_disjoint_exhaustive_sorted(self):
        train, validation = stratified_split(DEFAULT_LABELS, 0.6, seed=9)
        assert not set(train) & set(validation)
        assert sorted([*train, *validation]) == list(range(328))
        assert (np.diff(train) > 0).all() and (np.diff(validation) > 0).all()

    def test_deterministic(self):
        first = stratified_split(DEFAULT_LABELS, 0.6, seed=5)
        second = stratified_split(DEFAULT_LABELS, 0.6, seed=5)
        np.testing.assert_array_equal(first[0], second[0])
        assert not np.array_equal(first[0], stratified_split(DEFAULT_LABELS, 0.6, seed=6)[0])

    def test_accepts_dataset(self, small_corpus):
        train, validation = stratified_split(small_corpus, 0.6, seed=0)
        assert len(train) == 16 and len(validation) == 8

    def test_singleton_class(self):
        with pytest.raises(DataValidationError, match="class void has 1 sample"):
            stratified_split([0, 0, 3], 0.6, seed=0)

    def test_both_sides_non_empty(self):
        train, validation = stratified_split([1, 1], 0.9, seed=0)
        assert len(train) == 1 and len(validation) == 1

    def test_unstratified(self):
        train, validation = stratified_split(DEFAULT_LABELS, 0.6, seed=0, stratified=False)
        assert (len(train), len(validation)) == (197, 131)

    @pytest.mark.parametrize("fraction", [0.0, 1.0])
    def test_fraction_range(self, fraction):
        with pytest.raises(ConfigError):
            stratified_split(DEFAULT_LABELS, fraction, seed=0)


# ── Scoring ───────────────────────────────────────────────────


class TestScore:
    """Tests for score."""

    def test_perfect(self):
        result = score([0, 1, 2, 3], [0, 1, 2, 3])
        assert result.accuracy == 1.0
        np.testing.assert_array_equal(result.confusion, np.eye(4, dtype=int))

    def test_confusion_orientation(self):
        result = score([1], [3])
        assert result.confusion[3, 1] == 1
        assert result.accuracy == 0.0

    def test_recall_and_precision(self):
        result = score([0, 0, 0, 1, 1], [0, 0, 0, 0, 1])
        assert result.recall[0] == pytest.approx(0.75)
        assert result.precision[1] == pytest.approx(0.5)
        assert result.accuracy == pytest.approx(0.8)

    def test_undefined_flags(self):
        result = score([0, 0], [0, 1])
        assert result.recall_defined.tolist() == [True, True, False, False]
        assert result.precision_defined.tolist() == [True, False, False, False]
        assert result.precision[1] == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DataValidationError):
            score([0, 1], [0])

    def test_empty(self):
        with pytest.raises(DataValidationError):
            score([], [])


class TestMetricSummary:
    """Tests for MetricSummary."""

    def test_population_std(self):
        summary = MetricSummary.of([0.5, 1.0])
        assert (summary.mean, summary.std) == (0.75, 0.25)
        assert summary.cell() == "0.7500 ± 0.2500"


# ── Trials ────────────────────────────────────────────────────


class TestRunTrials:
    """Tests for run_trials and async_run_trials."""

    def test_constant_classifier(self, default_meta_features, caplog):
        with caplog.at_level(logging.WARNING):
            report = run_trials(
                constant_corona, "meta", default_meta_features, SplitSpec(trials=4, master_seed=1)
            )
        assert report.accuracy.mean == pytest.approx(34 / 132, abs=1e-12)
        assert report.accuracy.std == pytest.approx(0.0, abs=1e-12)
        assert report.confusion.sum(axis=1).tolist() == [34 * 4, 40 * 4, 32 * 4, 26 * 4]
        assert (report.confusion[:, 1:] == 0).all()
        assert report.recall[PdLabel.CORONA].mean == 1.0
        assert report.undefined_precision[PdLabel.VOID] == 4
        assert "never predicted floating" in caplog.text

    def test_single_trial_has_zero_std(self, blob_matrix):
        report = run_trials(FAST_LR, "meta", blob_matrix, SplitSpec(trials=1))
        assert report.accuracy.std == 0.0
        assert report.trials == 1

    def test_accuracy_matches_confusion(self, blob_matrix):
        report = run_trials(FAST_LR, "meta", blob_matrix, SplitSpec(trials=3))
        per_trial_total = report.confusion.sum() / 3
        assert per_trial_total == 16
        assert report.accuracy.mean == pytest.approx(np.trace(report.confusion) / report.confusion.sum())

    def test_same_seed_same_report(self, blob_matrix):
        split = SplitSpec(trials=3, master_seed=12)
        first = run_trials(FAST_LR, "meta", blob_matrix, split)
        second = run_trials(FAST_LR, "meta", blob_matrix, split)
        assert reports_to_json([first]) == reports_to_json([second])

    def test_thread_pool_matches_sequential(self, blob_matrix):
        split = SplitSpec(trials=4, master_seed=3)
        sequential = run_trials(FAST_LR, "meta", blob_matrix, split)
        pooled = run_trials(FAST_LR, "meta", blob_matrix, split, max_workers=2)
        assert pooled.to_dict() == sequential.to_dict()

    async def test_async_matches_sequential(self, blob_matrix):
        split = SplitSpec(trials=5, master_seed=2)
        pooled = await async_run_trials(FAST_LR, "meta", blob_matrix, split, max_workers=3)
        sequential = run_trials(FAST_LR, "meta", blob_matrix, split)
        assert pooled.to_dict() == sequential.to_dict()

    async def test_workers_inside_running_loop(self, blob_matrix, caplog):
        split = SplitSpec(trials=4, master_seed=3)
        with caplog.at_level(logging.WARNING, logger="prpd_classifier.evaluation"):
            pooled = run_trials(FAST_LR, "meta", blob_matrix, split, max_workers=2)
        assert "await async_run_trials" in caplog.text
        sequential = run_trials(FAST_LR, "meta", blob_matrix, split)
        assert pooled.to_dict() == sequential.to_dict()

    def test_stacking_config(self, blob_matrix):
        config = StackingConfig(
            level_one=(FAST_LR, ClassifierSpec(kind="rf", hyperparameters={"n_trees": 5})),
            meta=ClassifierSpec(kind="lr"),
        )
        report = run_trials(config, "meta", blob_matrix, SplitSpec(trials=2))
        assert report.model == "stack"
        assert report.model_name == "Stacking"
        assert report.accuracy.mean > 0.9

    def test_extracts_features_from_dataset(self, small_corpus):
        report = run_trials(FAST_LR, "meta", small_corpus, SplitSpec(trials=2))
        assert report.feature_kind is FeatureKind.META
        assert report.config["samples"] == 24

    def test_invalid_trial_count(self, blob_matrix):
        with pytest.raises(ConfigError):
            run_trials(FAST_LR, "meta", blob_matrix, SplitSpec(trials=0))

    def test_report_dict(self, blob_matrix):
        report = run_trials(FAST_LR, "meta", blob_matrix, SplitSpec(trials=2, master_seed=7))
        data = report.to_dict()
        assert data["format"] == "prpd-classifier-report"
        assert data["model"] == "lr"
        assert len(data["accuracy"]["per_trial"]) == 2
        assert set(data["recall"]) == {"corona", "floating", "particle", "void"}
        assert data["config"]["split"]["master_seed"] == 7


class TestEvaluateGrid:
    """Tests for evaluate_grid and the report renderers."""

    def test_grid_order(self, small_corpus):
        reports = evaluate_grid(
            [FAST_LR, ClassifierSpec(kind="gb", hyperparameters={"n_rounds": 5})],
            ["meta", "aligned"],
            small_corpus,
            SplitSpec(trials=2),
        )
        assert [(r.model, r.feature_kind.value) for r in reports] == [
            ("lr", "meta"),
            ("lr", "aligned"),
            ("gb", "meta"),
            ("gb", "aligned"),
        ]

    def test_accuracy_table(self, small_corpus):
        reports = evaluate_grid([FAST_LR], ["meta", "phase"], small_corpus, SplitSpec(trials=2))
        lines = render_accuracy_table(reports).splitlines()
        assert lines[0].split() == ["Model", "Meta", "Features", "Phase", "Magnitude"]
        assert lines[1].startswith("Logistic Regression")
        assert lines[1].count("±") == 2

    def test_render_table(self, default_meta_features):
        report = run_trials(constant_corona, "meta", default_meta_features, SplitSpec(trials=2))
        lines = report.render_table().splitlines()
        assert lines[0] == "constant_corona | Meta Features | 2 trials"
        assert lines[1].split() == ["Corona", "Floating", "Particle", "Void", "Total"]
        assert lines[2].startswith("Recall")
        assert lines[2].split()[1:4] == ["1.0000", "±", "0.0000"]
        assert lines[3].startswith("Precision")
        assert lines[4] == (
            "Most frequent confusions: floating as corona (80), "
            "particle as corona (64), void as corona (52)"
        )

    def test_dominant_confusions(self, default_meta_features):
        report = run_trials(constant_corona, "meta", default_meta_features, SplitSpec(trials=1))
        assert dominant_confusions(report, top=1) == [(PdLabel.FLOATING, PdLabel.CORONA, 40)]

    def test_json_shapes(self, blob_matrix, tmp_path):
        report = run_trials(FAST_LR, "meta", blob_matrix, SplitSpec(trials=1))
        assert isinstance(json.loads(reports_to_json([report])), dict)
        assert len(json.loads(reports_to_json([report, report]))) == 2
        path = tmp_path / "report.json"
        save_reports([report], path)
        assert path.read_text() == reports_to_json([report])
