"""PRPD signal types, validation and dataset CSV I/O."""

from __future__ import annotations

import csv
import io
from collections import Counter
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace
from enum import IntEnum
import logging
from pathlib import Path

import numpy as np
import numpy.typing as npt

from .const import (
    CSV_FLOAT_FORMAT,
    CSV_ID_COLUMN,
    CSV_LABEL_COLUMN,
    CSV_VALUE_PREFIX,
    DEFAULT_CYCLES,
    DEFAULT_PHASES,
    MIN_CYCLES,
    MIN_PHASES,
)
from .exceptions import DataValidationError, DatasetFormatError, SignalValidationError

_LOGGER = logging.getLogger(__name__)


class PdLabel(IntEnum):
    """The four partial-discharge types, with stable integer codes."""

    CORONA = 0
    FLOATING = 1
    PARTICLE = 2
    VOID = 3

    @property
    def token(self) -> str:
        """Lowercase file token, e.g. ``corona``."""
        return self.name.lower()

    @property
    def title(self) -> str:
        """Display name used in report tables."""
        return self.name.capitalize()

    @classmethod
    def parse(cls, token: str) -> PdLabel:
        """Parse a label token case-insensitively."""
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown label token {token!r}") from None


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of validate_signal: accepted, or the first violation found."""

    valid: bool
    reason: str | None = None
    phase: int | None = None
    cycle: int | None = None

    def raise_for_error(self, context: str = "") -> None:
        """Raise SignalValidationError when the signal was rejected.

        A non-empty ``context`` (e.g. ``data.csv: row 3``) prefixes the message.
        """
        if not self.valid:
            reason = self.reason or "invalid signal"
            raise SignalValidationError(
                f"{context}: {reason}" if context else reason,
                phase=self.phase,
                cycle=self.cycle,
            )


@dataclass(frozen=True, kw_only=True, eq=False)
class PrpdSignal:
    """One PD measurement: a phases x cycles magnitude matrix plus optional label.

    The matrix is copied to float64 and made read-only on construction.
    Construction does not validate; use validate_signal.
    """

    magnitudes: np.ndarray
    label: PdLabel | None = None
    sample_id: str = ""

    def __post_init__(self) -> None:
        """Freeze a private float64 copy of the matrix."""
        matrix = np.array(self.magnitudes, dtype=np.float64, copy=True)
        matrix.flags.writeable = False
        object.__setattr__(self, "magnitudes", matrix)

    @property
    def phases(self) -> int:
        """Number of phase rows."""
        return int(self.magnitudes.shape[0]) if self.magnitudes.ndim >= 1 else 0

    @property
    def cycles(self) -> int:
        """Number of cycle columns."""
        return int(self.magnitudes.shape[1]) if self.magnitudes.ndim == 2 else 0

    def with_magnitudes(self, magnitudes: npt.ArrayLike) -> PrpdSignal:
        """Return a copy carrying a different matrix, same label and id."""
        return replace(self, magnitudes=np.asarray(magnitudes))


def validate_signal(
    signal: PrpdSignal,
    phases: int | None = DEFAULT_PHASES,
    cycles: int | None = DEFAULT_CYCLES,
) -> ValidationResult:
    """Check a signal against the PRPD invariants.

    ``phases`` / ``cycles`` are the expected dimensions; pass None to accept
    any size that satisfies the minimums. Entries are scanned in phase-major
    order and the first negative or non-finite value is reported.
    """
    matrix = signal.magnitudes
    if matrix.ndim != 2:
        return ValidationResult(False, f"expected a 2-d matrix, got {matrix.ndim} dimensions")
    n_phases, n_cycles = matrix.shape
    if n_phases < MIN_PHASES:
        return ValidationResult(False, f"phase count {n_phases} < {MIN_PHASES}")
    if n_cycles < MIN_CYCLES:
        return ValidationResult(False, f"cycle count {n_cycles} < {MIN_CYCLES}")
    if phases is not None and n_phases != phases:
        return ValidationResult(False, f"phase count {n_phases} ≠ {phases}")
    if cycles is not None and n_cycles != cycles:
        return ValidationResult(False, f"cycle count {n_cycles} ≠ {cycles}")

    finite = np.isfinite(matrix)
    # NaN compares False, so only finite negatives are flagged here
    bad = ~finite | (matrix < 0)
    if bad.any():
        flat = int(np.argmax(bad.ravel()))
        phase, cycle = divmod(flat, n_cycles)
        kind = "non-finite value" if not finite[phase, cycle] else "negative value"
        return ValidationResult(
            False, f"{kind} at phase {phase}, cycle {cycle}", phase=phase, cycle=cycle
        )
    return ValidationResult(True)


@dataclass(frozen=True)
class Dataset:
    """Ordered PRPD samples sharing one (phases, cycles) shape."""

    samples: tuple[PrpdSignal, ...] = ()
    phases: int = DEFAULT_PHASES
    cycles: int = DEFAULT_CYCLES
    _index: dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Check that every sample has the dataset's dimensions."""
        object.__setattr__(self, "samples", tuple(self.samples))
        for position, sample in enumerate(self.samples):
            if sample.magnitudes.shape != (self.phases, self.cycles):
                raise DataValidationError(
                    f"sample {position} ({sample.sample_id!r}) has shape "
                    f"{sample.magnitudes.shape}, dataset expects "
                    f"({self.phases}, {self.cycles})"
                )
            self._index.setdefault(sample.sample_id, position)

    @classmethod
    def from_samples(cls, samples: Sequence[PrpdSignal]) -> Dataset:
        """Build a dataset whose dimensions are taken from the first sample."""
        if not samples:
            return cls()
        n_phases, n_cycles = samples[0].magnitudes.shape
        return cls(tuple(samples), phases=n_phases, cycles=n_cycles)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[PrpdSignal]:
        return iter(self.samples)

    def __getitem__(self, position: int) -> PrpdSignal:
        return self.samples[position]

    @property
    def is_labeled(self) -> bool:
        """True when every sample carries a label."""
        return all(sample.label is not None for sample in self.samples)

    def label_codes(self) -> np.ndarray:
        """Integer class codes of all samples; requires labels."""
        if not self.is_labeled:
            raise DataValidationError("training requires labels")
        return np.array([int(sample.label) for sample in self.samples], dtype=np.int64)

    def class_counts(self) -> dict[PdLabel, int]:
        """Number of samples per label (unlabeled samples are ignored)."""
        counts = Counter(sample.label for sample in self.samples if sample.label is not None)
        return {label: counts.get(label, 0) for label in PdLabel}

    def find(self, sample_id: str) -> PrpdSignal:
        """Return the first sample with the given id."""
        try:
            return self.samples[self._index[sample_id]]
        except KeyError:
            raise DataValidationError(f"unknown sample id {sample_id!r}") from None

    def subset(self, indices: Sequence[int] | np.ndarray) -> Dataset:
        """Dataset of the samples at the given positions, in that order."""
        return Dataset(
            tuple(self.samples[int(i)] for i in indices),
            phases=self.phases,
            cycles=self.cycles,
        )


# ── CSV I/O ───────────────────────────────────────────────────


def _value_header(n_values: int) -> list[str]:
    return [f"{CSV_VALUE_PREFIX}{i}" for i in range(n_values)]


def _where(line: int) -> str:
    return "header" if line <= 0 else f"row {line}"


def _check_header(path: Path, header: list[str], phases: int, cycles: int | None) -> int:
    """Validate the header and return the cycle count of the file."""
    if header[:2] != [CSV_ID_COLUMN, CSV_LABEL_COLUMN]:
        raise DatasetFormatError(
            f"{path}: header must start with '{CSV_ID_COLUMN},{CSV_LABEL_COLUMN}'"
        )
    n_values = len(header) - 2
    if n_values <= 0 or n_values % phases:
        raise DatasetFormatError(
            f"{path}: {n_values} value columns is not a multiple of {phases} phases"
        )
    if cycles is not None and n_values != phases * cycles:
        raise DatasetFormatError(
            f"{path}: {n_values} value columns, expected {phases}x{cycles} = {phases * cycles}"
        )
    if header[2:] != _value_header(n_values):
        raise DatasetFormatError(f"{path}: value columns must be named v0..v{n_values - 1}")
    return n_values // phases


def _parse_row(
    row: list[str], context: str, expect_labels: bool, phases: int, cycles: int
) -> PrpdSignal:
    n_values = phases * cycles
    if len(row) != n_values + 2:
        raise DatasetFormatError(
            f"{context}: expected {n_values + 2} columns ({n_values} values), got {len(row)}"
        )
    if any("\x00" in cell for cell in row):
        raise DatasetFormatError(f"{context}: NUL character in field")
    sample_id, token = row[0], row[1].strip()
    label: PdLabel | None = None
    if token:
        try:
            label = PdLabel.parse(token)
        except ValueError as err:
            raise DatasetFormatError(f"{context}: {err}") from err
    elif expect_labels:
        raise DatasetFormatError(f"{context}: missing label")

    try:
        values = np.array([float(v) for v in row[2:]], dtype=np.float64)
    except ValueError as err:
        raise DatasetFormatError(f"{context}: {err}") from err

    signal = PrpdSignal(
        magnitudes=values.reshape(phases, cycles), label=label, sample_id=sample_id
    )
    validate_signal(signal, phases, cycles).raise_for_error(context)
    return signal


def load_dataset(
    path: str | Path,
    expect_labels: bool = False,
    phases: int = DEFAULT_PHASES,
    cycles: int | None = DEFAULT_CYCLES,
) -> Dataset:
    """Read a dataset CSV.

    The header is ``id,label,v0..v{P*C-1}`` and must hold exactly
    ``phases * cycles`` value columns; with ``cycles=None`` the cycle count is
    taken from the header instead. Every row is validated. Errors name the
    file and the 1-based data row, undecodable bytes included.
    """
    path = Path(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as err:
        where = _where(raw.count(b"\n", 0, err.start))
        raise DatasetFormatError(f"{path}: {where}: not valid UTF-8 ({err.reason})") from err

    reader = csv.reader(io.StringIO(text, newline=""))
    samples: list[PrpdSignal] = []
    try:
        header = next(reader, None)
        if header is None:
            raise DatasetFormatError(f"{path}: empty file, header expected")
        cycles = _check_header(path, header, phases, cycles)
        for row in reader:
            if row:
                context = f"{path}: {_where(reader.line_num - 1)}"
                samples.append(_parse_row(row, context, expect_labels, phases, cycles))
    except csv.Error as err:
        raise DatasetFormatError(f"{path}: {_where(reader.line_num - 1)}: {err}") from err

    _LOGGER.debug("Loaded %d samples (%dx%d) from %s", len(samples), phases, cycles, path)
    return Dataset(tuple(samples), phases=phases, cycles=cycles)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset CSV in phase-major value order."""
    path = Path(path)
    n_values = dataset.phases * dataset.cycles
    try:
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow([CSV_ID_COLUMN, CSV_LABEL_COLUMN, *_value_header(n_values)])
            for sample in dataset:
                writer.writerow(
                    [
                        sample.sample_id,
                        sample.label.token if sample.label is not None else "",
                        *(CSV_FLOAT_FORMAT.format(v) for v in sample.magnitudes.ravel()),
                    ]
                )
    except OSError as err:
        raise DatasetFormatError(f"cannot write {path}: {err}") from err
    _LOGGER.debug("Saved %d samples to %s", len(dataset), path)
