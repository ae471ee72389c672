"""Synthetic PRPD corpus generator.

Each PD class is described by a ClassProfile: zero or more discharge bands
(phase position and spread as fractions of the phase count) that fire on a
fraction of the cycles, an optional diffuse scatter over every cell, and a
low background noise floor. A random cyclic phase offset per sample mimics
acquisitions that do not start at the same phase.

Per-sample jitter keeps the classes from collapsing onto single points:
each band is narrowed by up to ``width_jitter`` of its nominal width and
placed anywhere inside the nominal band, the firing rate (cycle fill and
scatter fraction) is scaled down by up to ``fill_jitter``, and all discharge
amplitudes share one gain drawn from ``gain_range``. A generated band never
leaves the phases of its nominal band.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, fields, replace
import logging
from typing import Any, Final

import numpy as np

from .const import (
    DEFAULT_CLASS_COUNTS,
    DEFAULT_CYCLES,
    DEFAULT_NOISE_AMPLITUDE,
    DEFAULT_NOISE_PROBABILITY,
    DEFAULT_PHASES,
)
from .exceptions import ConfigError
from .signal_model import Dataset, PdLabel, PrpdSignal
from .utils import circular_distance, derive_seed

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, kw_only=True)
class ClassProfile:
    """Generative description of one PD class (amplitudes are normalized)."""

    band_centers: tuple[float, ...] = ()
    band_widths: tuple[float, ...] = ()
    cycle_fill: float = 0.0
    amplitude_range: tuple[float, float] = (0.0, 1.0)
    scatter_fraction: float = 0.0
    noise_amplitude: float = DEFAULT_NOISE_AMPLITUDE
    noise_probability: float = DEFAULT_NOISE_PROBABILITY
    width_jitter: float = 0.0
    fill_jitter: float = 0.0
    gain_range: tuple[float, float] = (1.0, 1.0)
    random_offset: bool = True

    def __post_init__(self) -> None:
        """Normalize sequences to tuples."""
        object.__setattr__(self, "band_centers", tuple(float(c) for c in self.band_centers))
        object.__setattr__(self, "band_widths", tuple(float(w) for w in self.band_widths))
        object.__setattr__(self, "amplitude_range", tuple(float(a) for a in self.amplitude_range))
        object.__setattr__(self, "gain_range", tuple(float(g) for g in self.gain_range))

    def validate(self) -> None:
        """Raise ConfigError when the profile is not usable."""
        for name in ("cycle_fill", "scatter_fraction", "noise_probability", "fill_jitter"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if not 0.0 <= self.width_jitter < 1.0:
            raise ConfigError(f"width_jitter must lie in [0, 1), got {self.width_jitter}")
        if len(self.amplitude_range) != 2:
            raise ConfigError("amplitude_range must be a (low, high) pair")
        low, high = self.amplitude_range
        if low < 0 or low > high:
            raise ConfigError(f"amplitude_range needs 0 <= low <= high, got {self.amplitude_range}")
        if len(self.gain_range) != 2:
            raise ConfigError("gain_range must be a (low, high) pair")
        low, high = self.gain_range
        if low <= 0 or low > high:
            raise ConfigError(f"gain_range needs 0 < low <= high, got {self.gain_range}")
        if self.noise_amplitude < 0:
            raise ConfigError(f"noise_amplitude must be >= 0, got {self.noise_amplitude}")
        if len(self.band_centers) != len(self.band_widths):
            raise ConfigError("band_centers and band_widths must have the same length")
        if any(w <= 0 for w in self.band_widths):
            raise ConfigError("band widths must be positive")
        if not self.band_centers and self.scatter_fraction == 0.0:
            raise ConfigError("a profile needs at least one band or a scatter fraction")

    def band_mask(self, phases: int) -> np.ndarray:
        """Boolean mask over phases covered by any band, before the random offset."""
        positions = np.arange(phases, dtype=np.float64)
        mask = np.zeros(phases, dtype=bool)
        for center, width in zip(self.band_centers, self.band_widths):
            mask |= self._band_phases(positions, center, width, phases)
        return mask

    @staticmethod
    def _band_phases(
        positions: np.ndarray, center: float, width: float, phases: int
    ) -> np.ndarray:
        distance = circular_distance(positions, center * phases, phases)
        covered = distance <= width * phases / 2.0
        if not covered.any():
            covered[int(round(center * phases)) % phases] = True
        return covered


DEFAULT_GAIN_RANGE: Final = (0.92, 1.08)

DEFAULT_PROFILES: dict[PdLabel, ClassProfile] = {
    # single thick band, totals and peaks overlapping particle
    PdLabel.CORONA: ClassProfile(
        band_centers=(0.25,),
        band_widths=(0.09,),
        cycle_fill=0.95,
        amplitude_range=(0.5, 0.9),
        width_jitter=0.3,
        fill_jitter=0.15,
        gain_range=DEFAULT_GAIN_RANGE,
    ),
    # strong double band, highest total magnitude
    PdLabel.FLOATING: ClassProfile(
        band_centers=(0.2, 0.7),
        band_widths=(0.1, 0.1),
        cycle_fill=0.85,
        amplitude_range=(0.7, 1.0),
        width_jitter=0.2,
        fill_jitter=0.3,
        gain_range=DEFAULT_GAIN_RANGE,
    ),
    # scattered lightly across most phases
    PdLabel.PARTICLE: ClassProfile(
        scatter_fraction=0.1,
        amplitude_range=(0.2, 0.8),
        fill_jitter=0.45,
        gain_range=DEFAULT_GAIN_RANGE,
    ),
    # two symmetric bands; phase sums close to floating, weaker peaks
    PdLabel.VOID: ClassProfile(
        band_centers=(0.25, 0.75),
        band_widths=(0.09, 0.09),
        cycle_fill=1.0,
        amplitude_range=(0.35, 0.7),
        width_jitter=0.3,
        fill_jitter=0.25,
        gain_range=DEFAULT_GAIN_RANGE,
    ),
}


@dataclass(frozen=True, kw_only=True)
class SyntheticSpec:
    """Corpus recipe: per-class counts, profiles, dimensions and master seed."""

    counts: Mapping[PdLabel, int] = field(
        default_factory=lambda: dict(zip(PdLabel, DEFAULT_CLASS_COUNTS))
    )
    profiles: Mapping[PdLabel, ClassProfile] = field(
        default_factory=lambda: dict(DEFAULT_PROFILES)
    )
    phases: int = DEFAULT_PHASES
    cycles: int = DEFAULT_CYCLES
    master_seed: int = 0

    def validate(self) -> None:
        """Raise ConfigError when the spec is not usable."""
        for label in PdLabel:
            if label not in self.profiles:
                raise ConfigError(f"no profile defined for {label.token}")
            if self.counts.get(label, 0) < 0:
                raise ConfigError(f"negative count for {label.token}")
            self.profiles[label].validate()
        if self.phases < 2 or self.cycles < 1:
            raise ConfigError(f"invalid dimensions {self.phases}x{self.cycles}")

    @property
    def total(self) -> int:
        """Number of samples the corpus will hold."""
        return sum(self.counts.get(label, 0) for label in PdLabel)


def generate_sample(
    label: PdLabel,
    profile: ClassProfile,
    seed: int,
    *,
    phases: int = DEFAULT_PHASES,
    cycles: int = DEFAULT_CYCLES,
    sample_id: str = "",
) -> PrpdSignal:
    """Generate one PRPD matrix; a pure function of (label, profile, seed)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(label)]))
    gain = rng.uniform(*profile.gain_range)
    low, high = (gain * bound for bound in profile.amplitude_range)
    rate = 1.0 - profile.fill_jitter * rng.random()

    magnitudes = np.zeros((phases, cycles), dtype=np.float64)
    noise = rng.random((phases, cycles)) < profile.noise_probability
    magnitudes[noise] = rng.uniform(0.0, profile.noise_amplitude, int(noise.sum()))

    if profile.scatter_fraction > 0:
        scatter = rng.random((phases, cycles)) < profile.scatter_fraction * rate
        magnitudes[scatter] = rng.uniform(low, high, int(scatter.sum()))

    positions = np.arange(phases, dtype=np.float64)
    for center, width in zip(profile.band_centers, profile.band_widths):
        narrowed = width * (1.0 - profile.width_jitter * rng.random())
        # stays inside the nominal band
        shifted = center + (width - narrowed) * (rng.random() - 0.5)
        rows = np.flatnonzero(profile._band_phases(positions, shifted, narrowed, phases))
        fired = np.flatnonzero(rng.random(cycles) < profile.cycle_fill * rate)
        if fired.size:
            magnitudes[np.ix_(rows, fired)] = rng.uniform(low, high, (rows.size, fired.size))

    if profile.random_offset:
        magnitudes = np.roll(magnitudes, int(rng.integers(phases)), axis=0)

    return PrpdSignal(magnitudes=magnitudes, label=label, sample_id=sample_id)


def generate_corpus(spec: SyntheticSpec) -> Dataset:
    """Generate a labeled corpus with exact per-class counts.

    Samples are grouped by class in label-code order; sample ``k`` of the
    corpus uses the seed derived from (master_seed, k).
    """
    spec.validate()
    samples: list[PrpdSignal] = []
    for label in PdLabel:
        for _ in range(spec.counts.get(label, 0)):
            index = len(samples)
            samples.append(
                generate_sample(
                    label,
                    spec.profiles[label],
                    derive_seed(spec.master_seed, index),
                    phases=spec.phases,
                    cycles=spec.cycles,
                    sample_id=f"{label.token}-{index:04d}",
                )
            )
    _LOGGER.debug(
        "Generated %d samples (%dx%d), master seed %d",
        len(samples),
        spec.phases,
        spec.cycles,
        spec.master_seed,
    )
    return Dataset(tuple(samples), phases=spec.phases, cycles=spec.cycles)


def profile_from_mapping(base: ClassProfile, overrides: Mapping[str, Any]) -> ClassProfile:
    """Apply validated profile-file overrides to a base profile."""
    known = {f.name for f in fields(ClassProfile)}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown profile keys: {', '.join(sorted(unknown))}")
    return replace(base, **dict(overrides))


def without_offsets(profiles: Mapping[PdLabel, ClassProfile]) -> dict[PdLabel, ClassProfile]:
    """Copy of the profiles with the random phase offset disabled."""
    return {label: replace(profile, random_offset=False) for label, profile in profiles.items()}
