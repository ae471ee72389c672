"""Shared fixtures for PRPD classifier tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from prpd_classifier.const import CSV_FLOAT_FORMAT
from prpd_classifier.features import FeatureKind, FeatureMatrix, extract_features
from prpd_classifier.signal_model import Dataset, PdLabel, PrpdSignal
from prpd_classifier.synthetic import SyntheticSpec, generate_corpus


# ── Sample matrices ───────────────────────────────────────────

SAMPLE_ONES = np.ones((64, 60))
SAMPLE_ZEROS = np.zeros((64, 60))

# Values {10, 9, 8} scattered over an otherwise empty matrix
SAMPLE_TOP_THREE = np.zeros((64, 60))
SAMPLE_TOP_THREE[5, 3] = 10.0
SAMPLE_TOP_THREE[40, 0] = 9.0
SAMPLE_TOP_THREE[63, 59] = 8.0

# Spike of 1.0 at (0, 0), every other entry 0.1
SAMPLE_SPIKE = np.full((64, 60), 0.1)
SAMPLE_SPIKE[0, 0] = 1.0

# Two well separated points per side of the origin, one feature
SAMPLE_LINE_X = np.array([[0.0], [1.0], [10.0], [11.0]])
SAMPLE_LINE_Y = np.array([0, 0, 1, 1])

SAMPLE_XOR_X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
SAMPLE_XOR_Y = np.array([0, 0, 1, 1])

SAMPLE_SEPARABLE_X = np.array(
    [
        [-2.0, -1.0],
        [-1.5, -2.0],
        [-3.0, -1.5],
        [-2.5, -2.5],
        [-1.0, -1.0],
        [2.0, 1.0],
        [1.5, 2.0],
        [3.0, 1.5],
        [2.5, 2.5],
        [1.0, 1.0],
    ]
)
SAMPLE_SEPARABLE_Y = np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 1])

BLOB_CENTERS = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0], [8.0, 8.0]])


def make_signal(
    matrix: np.ndarray, label: PdLabel | None = None, sample_id: str = "s"
) -> PrpdSignal:
    """PrpdSignal around a matrix."""
    return PrpdSignal(magnitudes=matrix, label=label, sample_id=sample_id)


def make_blobs(per_class: int = 10, seed: int = 0, spread: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Four tight Gaussian clusters, one per class, in class order."""
    rng = np.random.default_rng(seed)
    X = np.vstack([center + spread * rng.standard_normal((per_class, 2)) for center in BLOB_CENTERS])
    y = np.repeat(np.arange(4), per_class)
    return X, y


def write_dataset_csv(path: Path, rows: list[tuple[str, str, np.ndarray]], n_values: int) -> None:
    """Write a dataset CSV by hand (independent of save_dataset)."""
    header = ["id", "label", *(f"v{i}" for i in range(n_values))]
    lines = [",".join(header)]
    for sample_id, token, values in rows:
        lines.append(
            ",".join([sample_id, token, *(CSV_FLOAT_FORMAT.format(v) for v in np.ravel(values))])
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def decode_pgm(data: bytes) -> np.ndarray:
    """Read back a P5 graymap written by encode_pgm."""
    magic, size, max_gray, raster = data.split(b"\n", 3)
    assert magic == b"P5"
    assert max_gray == b"255"
    width, height = (int(v) for v in size.split())
    pixels = np.frombuffer(raster, dtype=np.uint8)
    assert pixels.size == width * height
    return pixels.reshape(height, width)


# ── Fixtures ──────────────────────────────────────────────────


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for randomized properties."""
    return np.random.default_rng(20240615)


@pytest.fixture
def blobs() -> tuple[np.ndarray, np.ndarray]:
    """Four separable classes, ten samples each."""
    return make_blobs()


@pytest.fixture
def blob_matrix(blobs) -> FeatureMatrix:
    """The blobs as a labeled FeatureMatrix."""
    X, y = blobs
    return FeatureMatrix(
        rows=X, labels=tuple(PdLabel(int(c)) for c in y), feature_kind=FeatureKind.META
    )


@pytest.fixture(scope="session")
def default_corpus() -> Dataset:
    """Default 328-sample synthetic corpus."""
    return generate_corpus(SyntheticSpec(master_seed=7))


@pytest.fixture(scope="session")
def default_meta_features(default_corpus) -> FeatureMatrix:
    """Meta-features of the default corpus."""
    return extract_features(default_corpus, FeatureKind.META)


@pytest.fixture(scope="session")
def small_corpus() -> Dataset:
    """Six samples per class at default dimensions."""
    return generate_corpus(SyntheticSpec(counts=dict.fromkeys(PdLabel, 6), master_seed=3))
