from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from domain.entities.features import FeatureBatch
from domain.errors import FormatError, IoError
from infrastructure.persistence.feature_files import CsvFeatureStore, format_header


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def test_written_files_read_back_bit_exact(tmp_path: Path):
    rng = np.random.default_rng(0)
    batch = FeatureBatch(rng.standard_normal((5, 3)), np.array([0, 1, 2, 1, 0]), 3)
    store = CsvFeatureStore()
    store.write(tmp_path / "nested" / "train.csv", batch)
    loaded = store.read(tmp_path / "nested" / "train.csv")
    np.testing.assert_array_equal(loaded.features, batch.features)
    np.testing.assert_array_equal(loaded.labels, batch.labels)
    assert loaded.num_classes == 3


def test_labels_are_one_based_on_disk(tmp_path: Path):
    store = CsvFeatureStore()
    store.write(tmp_path / "f.csv", FeatureBatch(np.zeros((2, 1)), np.array([0, 1]), 2))
    lines = (tmp_path / "f.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == format_header(1, 2, 2) == "dim=1,classes=2,rows=2"
    assert [line.split(",")[-1] for line in lines[1:]] == ["1", "2"]


def test_ood_label_is_only_accepted_for_evaluation_files(tmp_path: Path):
    path = _write(tmp_path / "t.csv", "dim=1,classes=2,rows=2\n0.5,1\n1.5,3\n")
    batch = CsvFeatureStore().read(path, allow_ood=True)
    np.testing.assert_array_equal(batch.labels, [0, 2])
    with pytest.raises(FormatError) as info:
        CsvFeatureStore().read(path)
    assert info.value.line_number == 3


@pytest.mark.parametrize(
    "text,line",
    [
        ("", 1),
        ("dims=1,classes=2,rows=1\n0.5,1\n", 1),
        ("dim=2,classes=2,rows=1\n0.5,1\n", 2),
        ("dim=1,classes=2,rows=2\n0.5,1\nabc,2\n", 3),
        ("dim=1,classes=2,rows=1\nnan,1\n", 2),
        ("dim=1,classes=2,rows=1\n0.5,1.5\n", 2),
        ("dim=1,classes=2,rows=3\n0.5,1\n", 1),
    ],
)
def test_malformed_files_report_the_line(tmp_path: Path, text: str, line: int):
    path = _write(tmp_path / "bad.csv", text)
    with pytest.raises(FormatError) as info:
        CsvFeatureStore().read(path)
    assert info.value.line_number == line
    assert str(info.value).startswith(f"line {line}:")


def test_blank_lines_are_skipped_but_counted(tmp_path: Path):
    path = _write(tmp_path / "gaps.csv", "dim=1,classes=1,rows=2\n0.5,1\n\n2.5,x\n")
    with pytest.raises(FormatError) as info:
        CsvFeatureStore().read(path)
    assert info.value.line_number == 4


def test_missing_file_is_an_io_error(tmp_path: Path):
    with pytest.raises(IoError):
        CsvFeatureStore().read(tmp_path / "absent.csv")
