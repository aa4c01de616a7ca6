"""Tabular dataset loading, feature typing, and standardization.

Datasets are static binary-classification tables read from CSV or LIBSVM
files. Records are sparse maps from feature index to value; absent entries
are missing, not zero. Labels are canonicalized to {-1, +1}.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, SchemaError, UnsupportedTaskError

CONTINUOUS = "continuous"
ORDINAL = "ordinal"
BINARY = "binary"

DEFAULT_ORDINAL_MAX_LEVELS = 20


@dataclass(frozen=True)
class FeatureType:
    kind: str
    levels: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (CONTINUOUS, ORDINAL, BINARY):
            raise SchemaError(f"unknown feature kind {self.kind!r}")
        if self.kind == ORDINAL and (self.levels is None or self.levels < 2):
            raise SchemaError("ordinal features need at least 2 levels")


@dataclass(frozen=True)
class TypedSchema:
    """Per-feature type assignments, stable for the lifetime of a run."""

    features: tuple[FeatureType, ...]

    @property
    def d(self) -> int:
        return len(self.features)

    def kind(self, feature_id: int) -> str:
        return self.features[feature_id].kind

    def is_continuous(self, feature_id: int) -> bool:
        return self.features[feature_id].kind == CONTINUOUS


@dataclass
class Dataset:
    """An ordered collection of sparse records with {-1,+1} labels."""

    name: str
    records: list[dict[int, float]]
    labels: list[int]
    d: int
    schema: TypedSchema | None = field(default=None)

    @property
    def n(self) -> int:
        return len(self.records)

    def validate(self) -> None:
        if len(self.labels) != len(self.records):
            raise SchemaError("label count does not match record count")
        for rec in self.records:
            for j in rec:
                if not 0 <= j < self.d:
                    raise SchemaError(f"feature index {j} outside [0, {self.d})")
        bad = set(self.labels) - {-1, 1}
        if bad:
            raise SchemaError(f"labels must be in {{-1,+1}}, found {sorted(bad)}")


def _canonicalize_labels(raw: list[float], path: str) -> list[int]:
    """Map the two raw label values onto {-1,+1}, smaller value to -1."""
    values = sorted(set(raw))
    if len(values) > 2:
        raise UnsupportedTaskError(
            f"{path}: expected a binary task, found {len(values)} label values"
        )
    if len(values) == 2:
        mapping = {values[0]: -1, values[1]: 1}
    else:
        mapping = {values[0]: 1} if values else {}
    return [mapping[v] for v in raw]


def _parse_csv(path: Path) -> tuple[list[dict[int, float]], list[float], int]:
    records: list[dict[int, float]] = []
    raw_labels: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(str(path), 1, "empty file") from None
        d = len(header) - 1
        if d < 1:
            raise ParseError(str(path), 1, "need at least one feature column")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ParseError(
                    str(path), line_no, f"expected {d + 1} cells, got {len(row)}"
                )
            rec: dict[int, float] = {}
            for j, cell in enumerate(row[:-1]):
                cell = cell.strip()
                if cell == "":
                    continue
                try:
                    rec[j] = float(cell)
                except ValueError:
                    raise ParseError(
                        str(path), line_no, f"bad numeric value {cell!r}"
                    ) from None
            label_cell = row[-1].strip()
            if label_cell == "":
                raise ParseError(str(path), line_no, "missing label")
            try:
                raw_labels.append(float(label_cell))
            except ValueError:
                raise ParseError(
                    str(path), line_no, f"bad label {label_cell!r}"
                ) from None
            records.append(rec)
    return records, raw_labels, d


def _parse_libsvm(path: Path) -> tuple[list[dict[int, float]], list[float], int]:
    records: list[dict[int, float]] = []
    raw_labels: list[float] = []
    min_index = None
    max_index = -1
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                raw_labels.append(float(parts[0]))
            except ValueError:
                raise ParseError(
                    str(path), line_no, f"bad label token {parts[0]!r}"
                ) from None
            rec: dict[int, float] = {}
            for token in parts[1:]:
                idx, sep, val = token.partition(":")
                if not sep:
                    raise ParseError(
                        str(path), line_no, f"bad feature token {token!r}"
                    )
                try:
                    j = int(idx)
                    v = float(val)
                except ValueError:
                    raise ParseError(
                        str(path), line_no, f"bad feature token {token!r}"
                    ) from None
                if j < 0:
                    raise ParseError(str(path), line_no, f"negative index {j}")
                rec[j] = v
                min_index = j if min_index is None else min(min_index, j)
                max_index = max(max_index, j)
            records.append(rec)
    if not records:
        raise ParseError(str(path), 1, "empty file")
    # Indices are 1-based unless an explicit 0 appears anywhere.
    offset = 0 if min_index == 0 else 1
    if offset:
        records = [{j - 1: v for j, v in rec.items()} for rec in records]
        max_index -= 1
    return records, raw_labels, max_index + 1


def parse_dataset(path: str | Path, format: str | None = None) -> Dataset:
    """Load a dataset file, inferring the format from the extension if omitted.

    CSV files need a header row and keep the label in the last column; empty
    cells are missing values. LIBSVM lines are ``<label> <idx>:<val> ...``
    with the index base auto-detected (minimum index 0 means 0-based).
    """
    path = Path(path)
    if format is None:
        format = "libsvm" if path.suffix in (".libsvm", ".svm", ".txt") else "csv"
    if format == "csv":
        records, raw_labels, d = _parse_csv(path)
    elif format == "libsvm":
        records, raw_labels, d = _parse_libsvm(path)
    else:
        raise ValueError(f"unknown format {format!r}")
    labels = _canonicalize_labels(raw_labels, str(path))
    ds = Dataset(name=path.stem, records=records, labels=labels, d=d)
    ds.validate()
    return ds


def write_dataset(dataset: Dataset, path: str | Path, format: str = "csv") -> None:
    """Serialize a dataset; CSV round-trips exactly, LIBSVM writes 1-based indices."""
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"f{j}" for j in range(dataset.d)] + ["label"])
            for rec, label in zip(dataset.records, dataset.labels):
                row = [repr(rec[j]) if j in rec else "" for j in range(dataset.d)]
                row.append(str(label))
                writer.writerow(row)
    elif format == "libsvm":
        with open(path, "w") as fh:
            for rec, label in zip(dataset.records, dataset.labels):
                toks = [str(label)]
                toks += [f"{j + 1}:{rec[j]!r}" for j in sorted(rec)]
                fh.write(" ".join(toks) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")


def infer_feature_types(
    dataset: Dataset, ordinal_max_levels: int = DEFAULT_ORDINAL_MAX_LEVELS
) -> TypedSchema:
    """Classify each feature as binary, ordinal, or continuous.

    At most 2 distinct finite values is binary; integer-valued with at most
    ``ordinal_max_levels`` distinct values is ordinal; anything else is
    continuous. A feature with no observed value at all is a schema error.
    """
    if ordinal_max_levels < 2:
        raise ValueError("ordinal_max_levels must be >= 2")
    distinct: list[set[float]] = [set() for _ in range(dataset.d)]
    for rec in dataset.records:
        for j, v in rec.items():
            if math.isfinite(v):
                distinct[j].add(v)
    empty = [j for j, vals in enumerate(distinct) if not vals]
    if empty:
        raise SchemaError(f"features with no observed values: {empty}")
    features = []
    for vals in distinct:
        if len(vals) <= 2:
            features.append(FeatureType(BINARY))
        elif len(vals) <= ordinal_max_levels and all(
            float(v).is_integer() for v in vals
        ):
            features.append(FeatureType(ORDINAL, levels=len(vals)))
        else:
            features.append(FeatureType(CONTINUOUS))
    return TypedSchema(tuple(features))


def standardize(dataset: Dataset, schema: TypedSchema) -> Dataset:
    """Rescale continuous features to zero mean and unit variance.

    Statistics are computed over all observed values of the full dataset
    (stream synthesis masks a static table, so offline statistics are the
    reference frame). Ordinal and binary features are re-encoded to level
    indices 0..L-1 by ascending value. Constant features map to 0.
    """
    if schema.d != dataset.d:
        raise SchemaError(
            f"schema describes {schema.d} features, dataset has {dataset.d}"
        )
    stats: list[tuple[float, float] | dict[float, int]] = []
    for j in range(dataset.d):
        values = [rec[j] for rec in dataset.records if j in rec]
        if schema.is_continuous(j):
            mean = sum(values) / len(values)
            var = sum((v - mean) ** 2 for v in values) / len(values)
            stats.append((mean, math.sqrt(var)))
        else:
            stats.append({v: i for i, v in enumerate(sorted(set(values)))})
    records = []
    for rec in dataset.records:
        new: dict[int, float] = {}
        for j, v in rec.items():
            st = stats[j]
            if isinstance(st, tuple):
                mean, sd = st
                new[j] = (v - mean) / sd if sd > 0 else 0.0
            else:
                new[j] = float(st[v])
        records.append(new)
    return Dataset(
        name=dataset.name,
        records=records,
        labels=list(dataset.labels),
        d=dataset.d,
        schema=schema,
    )
