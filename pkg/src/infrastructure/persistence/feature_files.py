"""Feature files: a ``dim=<s>,classes=<K>,rows=<n>`` header then ``s`` reals and a 1-based label per row."""

from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import List

import numpy as np

from domain.entities.features import FeatureBatch
from domain.errors import FormatError, IoError

_HEADER = re.compile(r"^dim=(\d+),classes=(\d+),rows=(\d+)$")


def format_header(dim: int, num_classes: int, rows: int) -> str:
    return f"dim={dim},classes={num_classes},rows={rows}"


class CsvFeatureStore:
    """Reads/writes ``FeatureBatch`` objects; labels are 0-based in memory, 1-based on disk."""

    def write(self, path: Path, batch: FeatureBatch) -> None:
        path = Path(path)
        labels = batch.hard_labels()
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", encoding="utf-8", newline="") as handle:
                handle.write(format_header(batch.dim, batch.num_classes, batch.rows) + "\n")
                writer = csv.writer(handle, lineterminator="\n")
                for row, label in zip(batch.features, labels):
                    writer.writerow([repr(float(value)) for value in row] + [int(label) + 1])
        except OSError as exc:
            raise IoError(f"cannot write feature file {path}: {exc}") from exc

    def read(self, path: Path, allow_ood: bool = False) -> FeatureBatch:
        """Parse a feature file; eval files (``allow_ood``) may carry label ``K+1``."""
        path = Path(path)
        try:
            with path.open("r", encoding="utf-8", newline="") as handle:
                lines = handle.read().splitlines()
        except OSError as exc:
            raise IoError(f"cannot read feature file {path}: {exc}") from exc
        if not lines:
            raise FormatError("missing header", line_number=1)
        match = _HEADER.match(lines[0].strip())
        if not match:
            raise FormatError(f"bad header '{lines[0].strip()}'", line_number=1)
        dim, num_classes, expected_rows = (int(group) for group in match.groups())
        if dim < 1 or num_classes < 1:
            raise FormatError("dim and classes must be >= 1", line_number=1)
        max_label = num_classes + 1 if allow_ood else num_classes

        body = [(number, text) for number, text in enumerate(lines[1:], start=2) if text.strip()]
        features: List[List[float]] = []
        labels: List[int] = []
        for number, fields in zip((n for n, _ in body), csv.reader(text for _, text in body)):
            if len(fields) != dim + 1:
                raise FormatError(f"expected {dim + 1} fields, got {len(fields)}", line_number=number)
            try:
                values = [float(value) for value in fields[:dim]]
                label = int(fields[dim])
            except ValueError as exc:
                raise FormatError(f"unparsable value ({exc})", line_number=number) from exc
            if not np.all(np.isfinite(values)):
                raise FormatError("non-finite feature value", line_number=number)
            if not 1 <= label <= max_label:
                raise FormatError(f"label {label} outside 1..{max_label}", line_number=number)
            features.append(values)
            labels.append(label - 1)
        if len(features) != expected_rows:
            raise FormatError(f"header announces {expected_rows} rows, found {len(features)}", line_number=1)
        matrix = np.asarray(features, dtype=np.float64).reshape(len(features), dim)
        return FeatureBatch(matrix, np.asarray(labels, dtype=np.int64), num_classes)


__all__ = ["CsvFeatureStore", "format_header"]
