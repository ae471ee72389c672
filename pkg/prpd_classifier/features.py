"""Phase-magnitude and meta-feature extraction."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import StrEnum
import logging
from pathlib import Path

import numpy as np

from .const import (
    CSV_FEATURE_PREFIX,
    CSV_FLOAT_FORMAT,
    CSV_ID_COLUMN,
    CSV_LABEL_COLUMN,
    DEFAULT_THRESHOLD_RATIO,
    META_FEATURE_NAMES,
    TOP_MAGNITUDES,
)
from .exceptions import ConfigError, DataValidationError, DatasetFormatError
from .signal_model import Dataset, PdLabel, PrpdSignal

_LOGGER = logging.getLogger(__name__)

# Length-P vector m_1..m_P of per-phase magnitude sums
PhaseMagnitudeVector = np.ndarray


class FeatureKind(StrEnum):
    """Feature families; values double as CLI tokens."""

    PHASE = "phase"
    ALIGNED = "aligned"
    META = "meta"

    @property
    def heading(self) -> str:
        """Column heading used in comparison tables."""
        return _FEATURE_TITLES[self]


_FEATURE_TITLES = {
    FeatureKind.PHASE: "Phase Magnitude",
    FeatureKind.ALIGNED: "Aligned Phase Magnitude",
    FeatureKind.META: "Meta Features",
}


@dataclass(frozen=True)
class MetaFeatures:
    """Total magnitude, mean of the top-3 magnitudes, longest empty band."""

    total_magnitude: float
    max_magnitude: float
    longest_empty_band: int

    def as_array(self) -> np.ndarray:
        """Feature row in the order of META_FEATURE_NAMES."""
        return np.array(
            [self.total_magnitude, self.max_magnitude, float(self.longest_empty_band)],
            dtype=np.float64,
        )


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """One feature row per sample, with parallel labels and ids."""

    rows: np.ndarray
    labels: tuple[PdLabel | None, ...]
    feature_kind: FeatureKind
    sample_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Check the matrix is rectangular and parallel to its labels."""
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise DataValidationError(f"feature rows must be 2-d, got {rows.ndim}-d")
        if rows.shape[0] != len(self.labels):
            raise DataValidationError(
                f"{rows.shape[0]} feature rows but {len(self.labels)} labels"
            )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.sample_ids:
            object.__setattr__(self, "sample_ids", tuple(str(i) for i in range(rows.shape[0])))

    @property
    def width(self) -> int:
        """Number of feature columns."""
        return int(self.rows.shape[1])

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    def label_codes(self) -> np.ndarray:
        """Integer class codes; requires every row to be labeled."""
        if any(label is None for label in self.labels):
            raise DataValidationError("training requires labels")
        return np.array([int(label) for label in self.labels], dtype=np.int64)


# ── Phase magnitude ───────────────────────────────────────────


def phase_magnitude(signal: PrpdSignal) -> PhaseMagnitudeVector:
    """Sum of each phase's magnitudes over all cycles."""
    return signal.magnitudes.sum(axis=1)


def align_phases(signal: PrpdSignal) -> PrpdSignal:
    """Rotate phase rows so the phase with the largest magnitude sum comes first.

    Ties go to the lowest phase index. All-zero signals are returned unchanged.
    """
    sums = phase_magnitude(signal)
    if not sums.any():
        return signal
    shift = int(np.argmax(sums))
    if shift == 0:
        return signal
    return signal.with_magnitudes(np.roll(signal.magnitudes, -shift, axis=0))


# ── Meta-features ─────────────────────────────────────────────


def total_magnitude(signal: PrpdSignal) -> float:
    """Sum of all point magnitudes."""
    return float(signal.magnitudes.sum())


def max_magnitude(signal: PrpdSignal) -> float:
    """Mean of the three largest point magnitudes, counted with multiplicity."""
    flat = signal.magnitudes.ravel()
    if flat.size < TOP_MAGNITUDES:
        raise DataValidationError(
            f"max magnitude needs at least {TOP_MAGNITUDES} points, got {flat.size}"
        )
    top = np.partition(flat, flat.size - TOP_MAGNITUDES)[-TOP_MAGNITUDES:]
    return float(top.mean())


def _check_threshold(threshold_ratio: float) -> None:
    if not 0.0 < threshold_ratio < 1.0:
        raise ConfigError(f"threshold ratio must lie in (0, 1), got {threshold_ratio}")


def significant_phase_counts(
    signal: PrpdSignal, threshold_ratio: float = DEFAULT_THRESHOLD_RATIO
) -> np.ndarray:
    """Per phase of the aligned signal, the number of cycles above the threshold.

    A point is significant when strictly greater than threshold_ratio times
    the largest point magnitude of the signal.
    """
    _check_threshold(threshold_ratio)
    aligned = align_phases(signal).magnitudes
    cutoff = threshold_ratio * float(signal.magnitudes.max())
    return (aligned > cutoff).sum(axis=1).astype(np.int64)


def longest_empty_band(
    signal: PrpdSignal, threshold_ratio: float = DEFAULT_THRESHOLD_RATIO
) -> int:
    """Length of the longest run of consecutive empty phases.

    The scan is linear over phases 0..P-1 of the aligned signal, without
    wrapping. An all-zero signal has every phase empty and returns P.
    """
    empty = significant_phase_counts(signal, threshold_ratio) == 0
    if not empty.any():
        return 0
    edges = np.diff(np.concatenate(([0], empty.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return int((ends - starts).max())


def extract_meta(
    signal: PrpdSignal, threshold_ratio: float = DEFAULT_THRESHOLD_RATIO
) -> MetaFeatures:
    """Compute the three meta-features of a signal."""
    return MetaFeatures(
        total_magnitude=total_magnitude(signal),
        max_magnitude=max_magnitude(signal),
        longest_empty_band=longest_empty_band(signal, threshold_ratio),
    )


def feature_width(kind: FeatureKind, phases: int) -> int:
    """Number of columns a feature kind produces."""
    return len(META_FEATURE_NAMES) if kind is FeatureKind.META else phases


def feature_vector(
    signal: PrpdSignal,
    kind: FeatureKind,
    threshold_ratio: float = DEFAULT_THRESHOLD_RATIO,
) -> np.ndarray:
    """Feature row of one signal for the given kind."""
    if kind is FeatureKind.PHASE:
        return phase_magnitude(signal)
    if kind is FeatureKind.ALIGNED:
        return phase_magnitude(align_phases(signal))
    return extract_meta(signal, threshold_ratio).as_array()


def extract_features(
    dataset: Dataset,
    kind: FeatureKind | str,
    threshold_ratio: float = DEFAULT_THRESHOLD_RATIO,
) -> FeatureMatrix:
    """Feature matrix of a dataset; widths P, P and 3 for phase, aligned, meta."""
    kind = FeatureKind(kind)
    _check_threshold(threshold_ratio)
    width = feature_width(kind, dataset.phases)
    rows = np.empty((len(dataset), width), dtype=np.float64)
    for i, sample in enumerate(dataset):
        rows[i] = feature_vector(sample, kind, threshold_ratio)
    _LOGGER.debug("Extracted %s features: %d x %d", kind, rows.shape[0], width)
    return FeatureMatrix(
        rows=rows,
        labels=tuple(sample.label for sample in dataset),
        feature_kind=kind,
        sample_ids=tuple(sample.sample_id for sample in dataset),
    )


# ── Feature CSV ───────────────────────────────────────────────


def save_feature_matrix(matrix: FeatureMatrix, path: str | Path) -> None:
    """Write ``id,label,f0..f{k-1}``."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(
                [
                    CSV_ID_COLUMN,
                    CSV_LABEL_COLUMN,
                    *(f"{CSV_FEATURE_PREFIX}{i}" for i in range(matrix.width)),
                ]
            )
            for sample_id, label, row in zip(matrix.sample_ids, matrix.labels, matrix.rows):
                writer.writerow(
                    [
                        sample_id,
                        label.token if label is not None else "",
                        *(CSV_FLOAT_FORMAT.format(v) for v in row),
                    ]
                )
    except OSError as err:
        raise DatasetFormatError(f"cannot write {path}: {err}") from err
