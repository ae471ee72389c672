"""Validation schemas for config, profile and hyperparameter documents."""

from __future__ import annotations

from collections.abc import Mapping
import json
import logging
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import (
    CLASSIFIER_KINDS,
    CONF_BOOTSTRAP,
    CONF_C,
    CONF_DELTA,
    CONF_GAMMA,
    CONF_HYPERPARAMETERS,
    CONF_INCLUDE_ORIGINAL,
    CONF_ITERATIONS,
    CONF_KERNEL,
    CONF_KIND,
    CONF_L2,
    CONF_LEARNING_RATE,
    CONF_LEVEL_ONE,
    CONF_MAX_DEPTH,
    CONF_MAX_FEATURES,
    CONF_MAX_ITER,
    CONF_META,
    CONF_MIN_LEAF,
    CONF_N_ROUNDS,
    CONF_N_TREES,
    CONF_OOF_FOLDS,
    CONF_PROFILES,
    CONF_SEED_OFFSET,
    CONF_STACKING,
    CONF_TOL,
    CONF_USE_PROBABILITIES,
    CONF_VERSION,
    CONFIG_VERSION,
    DEFAULT_HYPERPARAMETERS,
    KERNEL_LINEAR,
    KERNEL_RBF,
    KIND_FSVM,
    KIND_GB,
    KIND_LR,
    KIND_RF,
    KIND_SVM,
)
from .exceptions import ConfigError

_LOGGER = logging.getLogger(__name__)

LABEL_TOKENS = ("corona", "floating", "particle", "void")


_positive = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))
_non_negative = vol.All(vol.Coerce(float), vol.Range(min=0))
_probability = vol.All(vol.Coerce(float), vol.Range(min=0, max=1))


def _count(minimum: int) -> vol.All:
    return vol.All(int, vol.Range(min=minimum))


# ── Hyperparameters ───────────────────────────────────────────

_SVM_FIELDS = {
    vol.Optional(CONF_C): _positive,
    vol.Optional(CONF_KERNEL): vol.In((KERNEL_RBF, KERNEL_LINEAR)),
    vol.Optional(CONF_GAMMA): vol.Any(None, _positive),
    vol.Optional(CONF_TOL): _positive,
    vol.Optional(CONF_MAX_ITER): _count(1),
}

HYPERPARAMETER_SCHEMAS: dict[str, vol.Schema] = {
    KIND_LR: vol.Schema(
        {
            vol.Optional(CONF_LEARNING_RATE): _positive,
            vol.Optional(CONF_ITERATIONS): _count(0),
            vol.Optional(CONF_L2): _non_negative,
        }
    ),
    KIND_RF: vol.Schema(
        {
            vol.Optional(CONF_N_TREES): _count(1),
            vol.Optional(CONF_MAX_DEPTH): vol.Any(None, _count(1)),
            vol.Optional(CONF_MIN_LEAF): _count(1),
            vol.Optional(CONF_MAX_FEATURES): vol.Any(None, _count(1)),
            vol.Optional(CONF_BOOTSTRAP): bool,
        }
    ),
    KIND_SVM: vol.Schema(_SVM_FIELDS),
    KIND_FSVM: vol.Schema({**_SVM_FIELDS, vol.Optional(CONF_DELTA): _positive}),
    KIND_GB: vol.Schema(
        {
            vol.Optional(CONF_N_ROUNDS): _count(0),
            vol.Optional(CONF_MAX_DEPTH): _count(1),
            vol.Optional(CONF_LEARNING_RATE): _positive,
            vol.Optional(CONF_MIN_LEAF): _count(1),
        }
    ),
}


def validate_hyperparameters(kind: str, values: Mapping[str, Any] | None) -> dict[str, Any]:
    """Validate overrides for a classifier kind and merge them over its defaults."""
    if kind not in HYPERPARAMETER_SCHEMAS:
        raise ConfigError(f"unknown classifier kind {kind!r}")
    try:
        overrides = HYPERPARAMETER_SCHEMAS[kind](dict(values or {}))
    except vol.Invalid as err:
        raise ConfigError(f"invalid {kind} hyperparameters: {err}") from err
    return {**DEFAULT_HYPERPARAMETERS[kind], **overrides}


# ── Documents ─────────────────────────────────────────────────

_VERSION = vol.All(int, vol.In((CONFIG_VERSION,), msg=f"only version {CONFIG_VERSION} is supported"))

CLASSIFIER_SPEC_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_KIND): vol.In(CLASSIFIER_KINDS),
        vol.Optional(CONF_HYPERPARAMETERS, default=dict): dict,
        vol.Optional(CONF_SEED_OFFSET, default=0): _count(0),
    }
)

STACKING_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_LEVEL_ONE): vol.All([CLASSIFIER_SPEC_SCHEMA], vol.Length(min=1)),
        vol.Optional(CONF_META): CLASSIFIER_SPEC_SCHEMA,
        vol.Optional(CONF_USE_PROBABILITIES): bool,
        vol.Optional(CONF_INCLUDE_ORIGINAL): bool,
        vol.Optional(CONF_OOF_FOLDS): _count(2),
    }
)

CLASSIFIER_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_VERSION): _VERSION,
        vol.Required(CONF_HYPERPARAMETERS): dict,
    }
)

STACKING_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_VERSION): _VERSION,
        vol.Required(CONF_STACKING): STACKING_SCHEMA,
    }
)

PROFILE_SCHEMA = vol.Schema(
    {
        vol.Optional("band_centers"): [_probability],
        vol.Optional("band_widths"): [_positive],
        vol.Optional("cycle_fill"): _probability,
        vol.Optional("amplitude_range"): vol.ExactSequence([_non_negative, _non_negative]),
        vol.Optional("scatter_fraction"): _probability,
        vol.Optional("noise_amplitude"): _non_negative,
        vol.Optional("noise_probability"): _probability,
        vol.Optional("width_jitter"): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=1, max_included=False)
        ),
        vol.Optional("fill_jitter"): _probability,
        vol.Optional("gain_range"): vol.ExactSequence([_positive, _positive]),
        vol.Optional("random_offset"): bool,
    }
)

PROFILE_FILE_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_VERSION): _VERSION,
        vol.Required(CONF_PROFILES): {vol.In(LABEL_TOKENS): PROFILE_SCHEMA},
    }
)


def load_json_document(path: str | Path) -> dict[str, Any]:
    """Read a JSON object from disk."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON: {err}") from err
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return document


def _validate(schema: vol.Schema, document: Mapping[str, Any], what: str) -> dict[str, Any]:
    try:
        return schema(dict(document))
    except vol.Invalid as err:
        raise ConfigError(f"invalid {what}: {err}") from err


def parse_classifier_config(document: Mapping[str, Any], kind: str) -> dict[str, Any]:
    """Hyperparameters of a classifier config document, defaults filled in."""
    validated = _validate(CLASSIFIER_CONFIG_SCHEMA, document, "classifier config")
    return validate_hyperparameters(kind, validated[CONF_HYPERPARAMETERS])


def parse_stacking_config(document: Mapping[str, Any]) -> dict[str, Any]:
    """The validated ``stacking`` section of a stacking config document."""
    validated = _validate(STACKING_CONFIG_SCHEMA, document, "stacking config")
    return validated[CONF_STACKING]


def parse_profile_file(document: Mapping[str, Any]) -> dict[str, dict[str, Any]]:
    """Per-label profile overrides keyed by label token."""
    validated = _validate(PROFILE_FILE_SCHEMA, document, "profile file")
    profiles = validated[CONF_PROFILES]
    _LOGGER.debug("Profile overrides for %s", ", ".join(sorted(profiles)) or "no classes")
    return profiles
