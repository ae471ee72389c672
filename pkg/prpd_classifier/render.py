"""Grayscale PRPD heatmaps in binary PGM format."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .exceptions import DataValidationError
from .signal_model import PrpdSignal

_LOGGER = logging.getLogger(__name__)

MAX_GRAY = 255


def heatmap_pixels(signal: PrpdSignal) -> np.ndarray:
    """uint8 image with one row per phase and one column per cycle.

    Intensity is linear in magnitude, scaled so the sample maximum is white.
    An all-zero signal renders black.
    """
    magnitudes = signal.magnitudes
    peak = float(magnitudes.max()) if magnitudes.size else 0.0
    if peak <= 0.0:
        return np.zeros(magnitudes.shape, dtype=np.uint8)
    return np.floor(magnitudes * (MAX_GRAY / peak) + 0.5).astype(np.uint8)


def encode_pgm(pixels: np.ndarray) -> bytes:
    """Binary (P5) portable graymap bytes."""
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n{MAX_GRAY}\n".encode("ascii")
    return header + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


def render_heatmap(signal: PrpdSignal, path: str | Path) -> None:
    """Write the heatmap of one signal."""
    path = Path(path)
    try:
        path.write_bytes(encode_pgm(heatmap_pixels(signal)))
    except OSError as err:
        raise DataValidationError(f"cannot write {path}: {err}") from err
    _LOGGER.debug("Rendered %s (%dx%d) to %s", signal.sample_id, signal.phases, signal.cycles, path)
