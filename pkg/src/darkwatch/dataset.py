"""Tabular threat records: CSV ingestion, null checks, one-hot encoding, splits."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO, Union

import numpy as np

from .errors import (
    BadRatio,
    EmptyInput,
    EmptyTable,
    MalformedRow,
    MissingColumn,
    NullValues,
    TooFewRows,
)

FIELDS = ("threat_type", "targeted_sector", "num_attempts", "impact_level", "target")
CATEGORICAL = ("threat_type", "targeted_sector")
NUMERIC = ("num_attempts", "impact_level")

HEADERS = {
    "threat_type": "Type of Threat",
    "targeted_sector": "Targeted Sector",
    "num_attempts": "Number of Attempts",
    "impact_level": "Impact Level",
    "target": "Target",
}
_HEADER_LOOKUP = {v.lower(): k for k, v in HEADERS.items()}

NULL_SENTINELS = frozenset({"", "na", "null"})


def is_null_cell(cell: Optional[str]) -> bool:
    return cell is None or cell.strip().lower() in NULL_SENTINELS


@dataclass(frozen=True)
class ThreatRecord:
    """One row of the threat table.

    Fields read from a null cell (empty, whitespace, ``NA`` or ``null``) hold
    ``None`` so that :func:`validate_no_nulls` can report them.
    """

    threat_type: Optional[str]
    targeted_sector: Optional[str]
    num_attempts: Optional[int]
    impact_level: Optional[int]
    target: Optional[int]

    def __post_init__(self):
        for name in CATEGORICAL:
            value = getattr(self, name)
            if value is not None and not value.strip():
                raise MalformedRow(f"{name} must be a non-empty string")
        if self.num_attempts is not None and self.num_attempts < 0:
            raise MalformedRow(f"num_attempts must be >= 0, got {self.num_attempts}")
        if self.impact_level is not None and not 0 <= self.impact_level <= 100:
            raise MalformedRow(f"impact_level must be in [0, 100], got {self.impact_level}")
        if self.target is not None and self.target not in (0, 1):
            raise MalformedRow(f"target must be 0 or 1, got {self.target}")

    def is_complete(self) -> bool:
        return all(getattr(self, name) is not None for name in FIELDS)


@dataclass(frozen=True)
class ThreatTable:
    records: tuple[ThreatRecord, ...]
    source_name: str = "<memory>"

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]


@dataclass(frozen=True)
class NullReport:
    counts: dict[str, int]

    @property
    def clean(self) -> bool:
        return not any(self.counts.values())

    def to_dict(self) -> dict:
        return {"counts": dict(self.counts), "clean": self.clean}


@dataclass(frozen=True, eq=False)
class EncodedDataset:
    """Numeric design matrix with the maps needed to encode new rows the same way."""

    features: np.ndarray
    labels: np.ndarray
    column_names: tuple[str, ...]
    encoders: dict[str, tuple[str, ...]]
    scaling: dict[str, tuple[float, float]]
    row_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        features = np.array(self.features, dtype=float, ndmin=2)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if features.shape[0] != labels.shape[0]:
            raise MalformedRow("features row count differs from labels length")
        if features.shape[1] != len(self.column_names):
            raise MalformedRow("column_names length differs from feature column count")
        for name, (_, divisor) in self.scaling.items():
            if not divisor > 0:
                raise MalformedRow(f"scaling divisor for {name} must be positive")
        row_ids = np.arange(len(labels)) if self.row_ids is None else np.asarray(self.row_ids)
        for arr in (features, labels, row_ids):
            arr.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "row_ids", row_ids)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    def __len__(self) -> int:
        return self.labels.shape[0]

    def take(self, rows: np.ndarray) -> "EncodedDataset":
        return EncodedDataset(
            self.features[rows], self.labels[rows], self.column_names,
            self.encoders, self.scaling, self.row_ids[rows],
        )

    def to_dict(self) -> dict:
        return {
            "column_names": list(self.column_names),
            "features": self.features.tolist(),
            "labels": self.labels.tolist(),
            "encoders": {k: list(v) for k, v in self.encoders.items()},
            "scaling": {k: list(v) for k, v in self.scaling.items()},
        }


@dataclass(frozen=True)
class SplitPair:
    train: EncodedDataset
    test: EncodedDataset
    seed: int
    ratio: float


def parse_threat_csv(text: Union[str, TextIO], source_name: str = "<memory>") -> ThreatTable:
    """Parse CSV text (or an open text stream) into a :class:`ThreatTable`.

    The header must name the five columns of the threat schema, in any order
    and any letter case. Extra columns are ignored.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    header = None
    for row in reader:
        if any(cell.strip() for cell in row):
            header = row
            break
    if header is None:
        raise EmptyInput(f"{source_name}: no header line")

    positions = {}
    for i, name in enumerate(header):
        key = _HEADER_LOOKUP.get(name.strip().lower())
        if key is not None:
            positions[key] = i
    missing = [HEADERS[f] for f in FIELDS if f not in positions]
    if missing:
        raise MissingColumn(f"{source_name}: header lacks column(s) {missing}")

    records = []
    for row in reader:
        if not any(cell.strip() for cell in row):
            continue
        lineno = reader.line_num
        if len(row) != len(header):
            raise MalformedRow(
                f"{source_name}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        values = {}
        for name in FIELDS:
            cell = row[positions[name]]
            if is_null_cell(cell):
                values[name] = None
            elif name in CATEGORICAL:
                values[name] = cell.strip()
            else:
                try:
                    values[name] = int(cell.strip())
                except ValueError:
                    raise MalformedRow(
                        f"{source_name}:{lineno}: {HEADERS[name]!r} is not an integer: {cell!r}"
                    ) from None
        try:
            records.append(ThreatRecord(**values))
        except MalformedRow as exc:
            raise MalformedRow(f"{source_name}:{lineno}: {exc}") from None

    if not records:
        raise EmptyInput(f"{source_name}: header present but no data rows")
    return ThreatTable(tuple(records), source_name)


def read_threat_csv(path) -> ThreatTable:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_threat_csv(fh, source_name=str(path))


def to_csv(table: ThreatTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([HEADERS[f] for f in FIELDS])
    for rec in table.records:
        writer.writerow(["" if getattr(rec, f) is None else getattr(rec, f) for f in FIELDS])
    return out.getvalue()


def validate_no_nulls(table: ThreatTable) -> NullReport:
    counts = {name: 0 for name in FIELDS}
    for rec in table.records:
        for name in FIELDS:
            if getattr(rec, name) is None:
                counts[name] += 1
    return NullReport(counts)


def _require_clean(table: ThreatTable) -> None:
    if not len(table):
        raise EmptyTable("table has no records")
    report = validate_no_nulls(table)
    if not report.clean:
        bad = {k: v for k, v in report.counts.items() if v}
        raise NullValues(f"table contains null cells: {bad}")


def fit_encoders(table: ThreatTable, scale_numeric: bool = True):
    """Level lists (first-appearance order) and numeric scaling for ``table``."""
    _require_clean(table)
    encoders = {}
    for name in CATEGORICAL:
        encoders[name] = tuple(dict.fromkeys(table.column(name)))
    scaling = {}
    for name in NUMERIC:
        col = table.column(name)
        if scale_numeric:
            lo, hi = float(min(col)), float(max(col))
            scaling[name] = (lo, hi - lo if hi > lo else 1.0)
        else:
            scaling[name] = (0.0, 1.0)
    return encoders, scaling


def column_names_for(encoders: dict[str, Iterable[str]]) -> tuple[str, ...]:
    names = [f"{cat}={level}" for cat in CATEGORICAL for level in encoders[cat]]
    return tuple(names) + NUMERIC


def transform(table: ThreatTable, encoders, scaling) -> EncodedDataset:
    """Encode ``table`` with previously fitted maps.

    Levels absent from ``encoders`` leave their indicator block all zero.
    """
    _require_clean(table)
    names = column_names_for(encoders)
    index = {name: i for i, name in enumerate(names)}
    features = np.zeros((len(table), len(names)))
    for r, rec in enumerate(table.records):
        for cat in CATEGORICAL:
            col = index.get(f"{cat}={getattr(rec, cat)}")
            if col is not None:
                features[r, col] = 1.0
        for num in NUMERIC:
            offset, divisor = scaling[num]
            features[r, index[num]] = (getattr(rec, num) - offset) / divisor
    labels = np.array(table.column("target"), dtype=np.int64)
    return EncodedDataset(features, labels, names, dict(encoders), dict(scaling))


def encode(table: ThreatTable, scale_numeric: bool = True) -> EncodedDataset:
    encoders, scaling = fit_encoders(table, scale_numeric)
    return transform(table, encoders, scaling)


def decode_categories(data: EncodedDataset, row: int) -> dict[str, Optional[str]]:
    """Recover the categorical strings behind one encoded row."""
    out = {}
    values = data.features[row]
    for cat in CATEGORICAL:
        out[cat] = None
        for level in data.encoders[cat]:
            if values[data.column_names.index(f"{cat}={level}")] == 1.0:
                out[cat] = level
                break
    return out


def split(data: EncodedDataset, ratio: float = 0.8, seed: int = 0) -> SplitPair:
    """Seeded shuffle, then the first ``ceil(ratio * n)`` rows become the train half."""
    if not 0.0 < ratio < 1.0:
        raise BadRatio(f"ratio must lie in (0, 1), got {ratio}")
    n = len(data)
    if n < 2:
        raise TooFewRows(f"need at least 2 rows to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    # guard against ratio*n landing a hair above an integer
    n_train = min(n, math.ceil(ratio * n - 1e-9))
    return SplitPair(data.take(order[:n_train]), data.take(order[n_train:]), seed, ratio)
