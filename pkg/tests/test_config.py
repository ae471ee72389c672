"""Tests for config, profile and hyperparameter validation."""

from __future__ import annotations

import json

import pytest

from prpd_classifier.config import (
    load_json_document,
    parse_classifier_config,
    parse_profile_file,
    parse_stacking_config,
    validate_hyperparameters,
)
from prpd_classifier.const import DEFAULT_HYPERPARAMETERS
from prpd_classifier.ensemble import StackingConfig
from prpd_classifier.exceptions import ConfigError

# ── Hyperparameters ───────────────────────────────────────────


class TestValidateHyperparameters:
    """Tests for validate_hyperparameters."""

    def test_defaults(self):
        for kind, defaults in DEFAULT_HYPERPARAMETERS.items():
            assert validate_hyperparameters(kind, None) == defaults

    def test_override_merged(self):
        values = validate_hyperparameters("svm", {"kernel": "linear", "c": 10})
        assert values["kernel"] == "linear"
        assert values["c"] == 10.0
        assert values["tol"] == 1e-3

    def test_int_coerced_to_float(self):
        assert isinstance(validate_hyperparameters("lr", {"learning_rate": 1})["learning_rate"], float)

    @pytest.mark.parametrize(
        ("kind", "values"),
        [
            ("lr", {"learning_rate": 0}),
            ("lr", {"iterations": -1}),
            ("rf", {"n_trees": 0}),
            ("rf", {"bootstrap": "yes"}),
            ("svm", {"kernel": "poly"}),
            ("svm", {"c": -1.0}),
            ("fsvm", {"delta": 0}),
            ("gb", {"max_depth": 0}),
            ("gb", {"shrinkage": 0.1}),
        ],
    )
    def test_rejected(self, kind, values):
        with pytest.raises(ConfigError, match=f"invalid {kind} hyperparameters"):
            validate_hyperparameters(kind, values)

    def test_rf_depth_may_be_unlimited(self):
        assert validate_hyperparameters("rf", {"max_depth": None})["max_depth"] is None

    def test_delta_only_for_fsvm(self):
        with pytest.raises(ConfigError):
            validate_hyperparameters("svm", {"delta": 1e-6})

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="unknown classifier kind"):
            validate_hyperparameters("stack", {})


# ── Documents ─────────────────────────────────────────────────


class TestClassifierConfig:
    """Tests for parse_classifier_config."""

    def test_valid(self):
        values = parse_classifier_config({"version": 1, "hyperparameters": {"n_trees": 5}}, "rf")
        assert values["n_trees"] == 5
        assert values["bootstrap"] is True

    def test_missing_version(self):
        with pytest.raises(ConfigError, match="invalid classifier config"):
            parse_classifier_config({"hyperparameters": {}}, "rf")

    def test_unsupported_version(self):
        with pytest.raises(ConfigError, match="only version 1 is supported"):
            parse_classifier_config({"version": 2, "hyperparameters": {}}, "rf")


class TestStackingDocument:
    """Tests for parse_stacking_config."""

    def test_valid(self):
        section = parse_stacking_config(
            {
                "version": 1,
                "stacking": {
                    "level_one": [{"kind": "lr"}, {"kind": "gb", "seed_offset": 7}],
                    "meta": {"kind": "lr"},
                    "include_original": False,
                },
            }
        )
        config = StackingConfig.from_dict(section)
        assert [spec.kind for spec in config.level_one] == ["lr", "gb"]
        assert config.level_one[1].seed_offset == 7
        assert config.meta.kind == "lr"
        assert not config.include_original
        assert config.use_probabilities

    def test_empty_level_one(self):
        with pytest.raises(ConfigError):
            parse_stacking_config({"version": 1, "stacking": {"level_one": []}})

    def test_single_fold(self):
        with pytest.raises(ConfigError):
            parse_stacking_config({"version": 1, "stacking": {"oof_folds": 1}})


class TestProfileFile:
    """Tests for parse_profile_file."""

    def test_valid(self):
        profiles = parse_profile_file(
            {"version": 1, "profiles": {"void": {"cycle_fill": 0.3, "band_centers": [0.1, 0.6]}}}
        )
        assert profiles["void"]["cycle_fill"] == 0.3

    def test_unknown_label(self):
        with pytest.raises(ConfigError, match="invalid profile file"):
            parse_profile_file({"version": 1, "profiles": {"arc": {"cycle_fill": 0.3}}})

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            parse_profile_file({"version": 1, "profiles": {"void": {"cycle_fill": 1.3}}})


class TestLoadJsonDocument:
    """Tests for load_json_document."""

    def test_reads_object(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"version": 1}))
        assert load_json_document(path) == {"version": 1}

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="config file not found"):
            load_json_document(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{version: 1")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_json_document(path)

    def test_top_level_list(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            load_json_document(path)
