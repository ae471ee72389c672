"""Tests for PRPD signal validation and dataset CSV I/O."""

from __future__ import annotations

import numpy as np
import pytest

from prpd_classifier.exceptions import (
    DataValidationError,
    DatasetFormatError,
    SignalValidationError,
)
from prpd_classifier.signal_model import (
    Dataset,
    PdLabel,
    PrpdSignal,
    load_dataset,
    save_dataset,
    validate_signal,
)

from .conftest import SAMPLE_ONES, SAMPLE_ZEROS, make_signal, write_dataset_csv


# ── PdLabel ───────────────────────────────────────────────────


class TestPdLabel:
    """Tests for label codes and tokens."""

    def test_codes_follow_display_order(self):
        assert [int(label) for label in PdLabel] == [0, 1, 2, 3]
        assert [label.title for label in PdLabel] == ["Corona", "Floating", "Particle", "Void"]

    def test_parse_is_case_insensitive(self):
        assert PdLabel.parse("CORONA") is PdLabel.CORONA
        assert PdLabel.parse(" void ") is PdLabel.VOID

    def test_parse_unknown_token(self):
        with pytest.raises(ValueError, match="unknown label token"):
            PdLabel.parse("arc")


# ── validate_signal ───────────────────────────────────────────


class TestValidateSignal:
    """Tests for validate_signal."""

    def test_zero_matrix_is_valid(self):
        assert validate_signal(make_signal(SAMPLE_ZEROS)).valid

    def test_negative_value_is_located(self):
        matrix = SAMPLE_ONES.copy()
        matrix[3, 5] = -1.0
        result = validate_signal(make_signal(matrix))
        assert not result.valid
        assert result.reason == "negative value at phase 3, cycle 5"
        assert (result.phase, result.cycle) == (3, 5)

    def test_first_violation_in_phase_major_order(self):
        matrix = SAMPLE_ONES.copy()
        matrix[2, 0] = -1.0
        matrix[1, 5] = -1.0
        result = validate_signal(make_signal(matrix))
        assert (result.phase, result.cycle) == (1, 5)

    def test_nan_is_rejected(self):
        matrix = SAMPLE_ONES.copy()
        matrix[0, 2] = np.nan
        result = validate_signal(make_signal(matrix))
        assert result.reason == "non-finite value at phase 0, cycle 2"

    def test_infinity_is_rejected(self):
        matrix = SAMPLE_ONES.copy()
        matrix[7, 1] = np.inf
        assert validate_signal(make_signal(matrix)).reason == "non-finite value at phase 7, cycle 1"

    def test_wrong_cycle_count(self):
        result = validate_signal(make_signal(np.ones((64, 59))))
        assert result.reason == "cycle count 59 ≠ 60"

    def test_wrong_phase_count(self):
        result = validate_signal(make_signal(np.ones((32, 60))))
        assert result.reason == "phase count 32 ≠ 64"

    def test_any_size_when_dimensions_unset(self):
        assert validate_signal(make_signal(np.ones((8, 3))), phases=None, cycles=None).valid

    def test_minimum_dimensions(self):
        assert not validate_signal(make_signal(np.ones((1, 3))), phases=None, cycles=None).valid

    def test_vector_is_rejected(self):
        assert not validate_signal(make_signal(np.ones(64))).valid

    def test_raise_for_error(self):
        matrix = SAMPLE_ONES.copy()
        matrix[4, 9] = -0.5
        with pytest.raises(SignalValidationError) as err:
            validate_signal(make_signal(matrix)).raise_for_error()
        assert (err.value.phase, err.value.cycle) == (4, 9)

    def test_raise_for_error_context(self):
        result = validate_signal(make_signal(np.ones((64, 59))))
        with pytest.raises(SignalValidationError, match="^row 7: cycle count 59 ≠ 60$"):
            result.raise_for_error("row 7")

    def test_raise_for_error_passes_valid(self):
        validate_signal(make_signal(SAMPLE_ONES)).raise_for_error()


# ── PrpdSignal / Dataset ──────────────────────────────────────


class TestPrpdSignal:
    """Tests for signal immutability."""

    def test_matrix_is_read_only(self):
        signal = make_signal(SAMPLE_ONES)
        with pytest.raises(ValueError):
            signal.magnitudes[0, 0] = 5.0

    def test_source_array_is_copied(self):
        source = np.ones((64, 60))
        signal = make_signal(source)
        source[0, 0] = 99.0
        assert signal.magnitudes[0, 0] == 1.0

    def test_dimensions(self):
        signal = make_signal(np.zeros((16, 4)))
        assert (signal.phases, signal.cycles) == (16, 4)


class TestDataset:
    """Tests for Dataset."""

    def test_mixed_shapes_rejected(self):
        with pytest.raises(DataValidationError, match="has shape"):
            Dataset((make_signal(SAMPLE_ONES), make_signal(np.ones((64, 59)))))

    def test_label_codes(self):
        dataset = Dataset(
            (
                make_signal(SAMPLE_ONES, PdLabel.VOID, "a"),
                make_signal(SAMPLE_ONES, PdLabel.CORONA, "b"),
            )
        )
        assert dataset.label_codes().tolist() == [3, 0]

    def test_label_codes_require_labels(self):
        dataset = Dataset((make_signal(SAMPLE_ONES, None, "a"),))
        with pytest.raises(DataValidationError, match="training requires labels"):
            dataset.label_codes()

    def test_find_and_subset(self):
        dataset = Dataset(
            tuple(make_signal(SAMPLE_ONES * i, PdLabel.CORONA, f"s{i}") for i in range(4))
        )
        assert dataset.find("s2").magnitudes[0, 0] == 2.0
        subset = dataset.subset([3, 1])
        assert [s.sample_id for s in subset] == ["s3", "s1"]
        with pytest.raises(DataValidationError, match="unknown sample id"):
            dataset.find("missing")

    def test_class_counts(self, small_corpus):
        assert small_corpus.class_counts() == dict.fromkeys(PdLabel, 6)

    def test_from_samples_takes_first_shape(self):
        dataset = Dataset.from_samples([make_signal(np.zeros((8, 2)))])
        assert (dataset.phases, dataset.cycles) == (8, 2)


# ── CSV I/O ───────────────────────────────────────────────────


class TestLoadDataset:
    """Tests for load_dataset."""

    def test_reads_labels_and_values(self, tmp_path, rng):
        values = rng.random((64, 60))
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("x1", "CORONA", values), ("x2", "", SAMPLE_ZEROS)], 3840)
        dataset = load_dataset(path)
        assert len(dataset) == 2
        assert dataset[0].label is PdLabel.CORONA
        assert dataset[1].label is None
        np.testing.assert_allclose(dataset[0].magnitudes, values, rtol=1e-11)

    def test_explicit_cycles(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("x", "void", np.ones((4, 5)))], 20)
        dataset = load_dataset(path, phases=4, cycles=5)
        assert (dataset.phases, dataset.cycles) == (4, 5)

    def test_cycles_inferred_when_unset(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("x", "void", np.ones((4, 5)))], 20)
        dataset = load_dataset(path, phases=4, cycles=None)
        assert (dataset.phases, dataset.cycles) == (4, 5)

    def test_cycle_count_mismatch(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("x", "void", np.ones((64, 59)))], 64 * 59)
        with pytest.raises(DatasetFormatError, match="expected 64x60 = 3840"):
            load_dataset(path)

    def test_invalid_utf8_names_row(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("a", "void", SAMPLE_ONES), ("b", "void", SAMPLE_ONES)], 3840)
        path.write_bytes(path.read_bytes().replace(b"\nb,", b"\n\xff\xfe,"))
        with pytest.raises(DatasetFormatError, match=r"d\.csv: row 2: not valid UTF-8"):
            load_dataset(path)

    def test_invalid_utf8_in_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_bytes(b"\xff\xfeid,label,v0,v1\n")
        with pytest.raises(DatasetFormatError, match="header: not valid UTF-8"):
            load_dataset(path, phases=2, cycles=1)

    def test_nul_character_names_row(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("a\x00b", "void", SAMPLE_ONES)], 3840)
        with pytest.raises(DatasetFormatError, match=r"row 1: .*NUL"):
            load_dataset(path)

    def test_errors_name_file(self, tmp_path):
        path = tmp_path / "named.csv"
        write_dataset_csv(path, [("x", "arc", SAMPLE_ONES)], 3840)
        with pytest.raises(DatasetFormatError, match=r"named\.csv: row 1"):
            load_dataset(path)

    def test_short_row_names_row(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("x", "void", SAMPLE_ONES)], 3840)
        text = path.read_text().rstrip("\n").rsplit(",", 1)[0] + "\n"
        path.write_text(text)
        with pytest.raises(DatasetFormatError, match="row 1"):
            load_dataset(path)

    def test_unknown_label(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("x", "arc", SAMPLE_ONES)], 3840)
        with pytest.raises(DatasetFormatError, match="row 1: unknown label token"):
            load_dataset(path)

    def test_negative_value_names_row(self, tmp_path):
        matrix = SAMPLE_ONES.copy()
        matrix[0, 0] = -1.0
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("a", "void", SAMPLE_ONES), ("b", "void", matrix)], 3840)
        with pytest.raises(SignalValidationError, match="row 2: negative value at phase 0, cycle 0"):
            load_dataset(path)

    def test_missing_label_when_expected(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("a", "", SAMPLE_ONES)], 3840)
        with pytest.raises(DatasetFormatError, match="missing label"):
            load_dataset(path, expect_labels=True)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("name,label,v0,v1\n")
        with pytest.raises(DatasetFormatError, match="header"):
            load_dataset(path, phases=2)

    def test_value_count_not_multiple_of_phases(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [("a", "void", np.ones(63))], 63)
        with pytest.raises(DatasetFormatError, match="not a multiple"):
            load_dataset(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(DatasetFormatError, match="empty file"):
            load_dataset(path)

    def test_header_only_is_empty_dataset(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, [], 3840)
        assert len(load_dataset(path)) == 0


class TestSaveDataset:
    """Tests for save_dataset."""

    def test_round_trip(self, tmp_path, small_corpus):
        path = tmp_path / "corpus.csv"
        save_dataset(small_corpus, path)
        loaded = load_dataset(path, expect_labels=True)
        assert [s.sample_id for s in loaded] == [s.sample_id for s in small_corpus]
        assert [s.label for s in loaded] == [s.label for s in small_corpus]
        for original, restored in zip(small_corpus, loaded):
            np.testing.assert_allclose(restored.magnitudes, original.magnitudes, rtol=1e-11)

    def test_unlabeled_sample_has_empty_label(self, tmp_path):
        path = tmp_path / "u.csv"
        save_dataset(Dataset((PrpdSignal(magnitudes=SAMPLE_ONES, sample_id="u1"),)), path)
        row = path.read_text().splitlines()[1]
        assert row.startswith("u1,,1,")

    def test_header(self, tmp_path):
        path = tmp_path / "h.csv"
        save_dataset(Dataset(phases=2, cycles=2), path)
        assert path.read_text() == "id,label,v0,v1,v2,v3\n"
