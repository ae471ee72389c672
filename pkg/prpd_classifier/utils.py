"""Utility functions for the PRPD classifier."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt


def derive_seed(master_seed: int, *keys: int) -> int:
    """Derive a child seed from a master seed and a path of integer keys.

    Uses numpy's SeedSequence spawn keys, so (master_seed, keys) always maps
    to the same 32-bit seed regardless of the order in which children are
    requested. Used for per-sample, per-trial, per-fold and per-tree seeds.
    """
    sequence = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys)
    )
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves away from zero for positives."""
    return int(math.floor(value + 0.5))


def population_std(values: Sequence[float] | npt.ArrayLike, axis: int = 0) -> np.ndarray:
    """Standard deviation with divisor n (0 for a single observation)."""
    return np.std(np.asarray(values, dtype=np.float64), axis=axis, ddof=0)


def one_hot(codes: npt.ArrayLike, n_classes: int) -> np.ndarray:
    """One-hot encode integer class codes."""
    codes = np.asarray(codes, dtype=np.int64)
    out = np.zeros((codes.shape[0], n_classes), dtype=np.float64)
    out[np.arange(codes.shape[0]), codes] = 1.0
    return out


def circular_distance(positions: np.ndarray, center: float, period: int) -> np.ndarray:
    """Distance between positions and a center on a circle of given period."""
    diff = np.abs(positions - center) % period
    return np.minimum(diff, period - diff)
