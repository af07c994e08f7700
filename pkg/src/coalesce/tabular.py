"""Tabular ingestion: schema inference, design matrices and Gram systems.

CSV conventions: comma delimited, UTF-8, header row required, '.' decimal
separator. A column is inferred categorical as soon as any cell fails to
parse as a number, unless a hint overrides the inference. Categorical
features are treatment coded against the lexicographically first level, so
a feature with L levels owns L - 1 contiguous design columns; column 0 is
always the intercept. Rows with missing cells are rejected, not imputed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateColumnError,
    MissingCellError,
    MissingFeatureError,
    TableFormatError,
    UnknownLevelError,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"

#: Index of the all-ones column every design matrix carries.
INTERCEPT_COLUMN = 0


@dataclass(frozen=True)
class Feature:
    """One input column: a name, a kind, and the level list if categorical."""

    name: str
    kind: str
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if not self.name:
            raise ValueError("feature name must be nonempty")
        if self.kind == CATEGORICAL:
            if len(self.levels) < 2:
                raise ValueError(
                    f"categorical feature {self.name!r} needs at least 2 levels, "
                    f"got {len(self.levels)}")
            if len(set(self.levels)) != len(self.levels):
                raise ValueError(f"duplicate levels in feature {self.name!r}")
        elif self.levels:
            raise ValueError(f"numeric feature {self.name!r} cannot carry levels")

    @property
    def n_columns(self) -> int:
        """Design columns this feature owns (levels - 1 when categorical)."""
        return 1 if self.kind == NUMERIC else len(self.levels) - 1


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature list plus the name of the prediction column, if any.

    Feature order is fixed at load time and reused identically by every
    downstream encoding.
    """

    features: tuple[Feature, ...]
    prediction_column: str | None = None

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")

    @property
    def p(self) -> int:
        return len(self.features)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)


@dataclass(frozen=True)
class DesignMatrix:
    """Dense encoded training data.

    ``values`` is the N x q float64 matrix with the intercept in column 0.
    ``column_ranges`` lists, per feature in schema order, the half-open
    [start, stop) range of design columns the feature owns; the ranges are
    disjoint and cover columns 1..q-1.
    """

    values: np.ndarray
    column_ranges: tuple[tuple[int, int], ...]

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def q(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class GramSystem:
    """Normal-equation data: Q = XᵀX, m = Xᵀf, and the largest diagonal of Q.

    Q is symmetric by construction (upper triangle computed, then mirrored),
    so Q[i, j] == Q[j, i] holds exactly.
    """

    Q: np.ndarray
    m: np.ndarray
    max_diag: float

    @property
    def q(self) -> int:
        return int(self.Q.shape[0])


def column_ranges_for(schema: FeatureSchema) -> tuple[tuple[int, int], ...]:
    """Column ranges each feature owns, starting after the intercept."""
    ranges = []
    start = 1
    for feature in schema.features:
        stop = start + feature.n_columns
        ranges.append((start, stop))
        start = stop
    return tuple(ranges)


def design_width(schema: FeatureSchema) -> int:
    """Total number of design columns including the intercept."""
    return 1 + sum(f.n_columns for f in schema.features)


def _parse_float(token: str) -> float | None:
    try:
        return float(token)
    except ValueError:
        return None


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            records = [row for row in csv.reader(handle)]
    except OSError as exc:
        raise TableFormatError(f"cannot read {path}: {exc}") from exc
    if not records:
        raise TableFormatError(f"{path}: file is empty")
    header = [cell.strip() for cell in records[0]]
    if any(not name for name in header):
        raise TableFormatError(f"{path}: header contains an empty column name")
    seen = set()
    for name in header:
        if name in seen:
            raise DuplicateColumnError(f"{path}: duplicate column {name!r}")
        seen.add(name)
    data = records[1:]
    if not data:
        raise TableFormatError(f"{path}: table has a header but no data rows")
    for index, row in enumerate(data, start=1):
        if len(row) != len(header) or any(not cell.strip() for cell in row):
            raise MissingCellError(
                f"{path}: data row {index} has a missing cell", row_index=index)
    cleaned = [[cell.strip() for cell in row] for row in data]
    return header, cleaned


def load_table(path, *, categorical=(), numeric=(),
               prediction_column: str | None = None,
               ) -> tuple[FeatureSchema, list[tuple[str, ...]]]:
    """Read a delimited table and infer its feature schema.

    Parameters
    ----------
    path : str or Path
        CSV file with a header row.
    categorical, numeric : iterable of str
        Column names whose kind overrides the inference. A numeric hint on a
        column holding non-numeric tokens is an error.
    prediction_column : str, optional
        Column holding model predictions. It is recorded on the schema and
        excluded from the features; read its values with
        :func:`load_predictions`.

    Returns
    -------
    (FeatureSchema, rows)
        Rows are tuples of cell strings aligned with the schema's features.
    """
    header, data = _read_csv(path)
    categorical = set(categorical)
    numeric = set(numeric)
    for hint in categorical | numeric:
        if hint not in header:
            raise TableFormatError(f"{path}: hinted column {hint!r} not in header")
    if overlap := categorical & numeric:
        raise TableFormatError(
            f"{path}: columns hinted both categorical and numeric: {sorted(overlap)}")
    if prediction_column is not None and prediction_column not in header:
        raise TableFormatError(
            f"{path}: prediction column {prediction_column!r} not in header")

    features = []
    feature_indices = []
    for col, name in enumerate(header):
        if name == prediction_column:
            continue
        tokens = [row[col] for row in data]
        if name in numeric:
            kind = NUMERIC
            for index, token in enumerate(tokens, start=1):
                if _parse_float(token) is None:
                    raise TableFormatError(
                        f"{path}: column {name!r} hinted numeric but row {index} "
                        f"holds {token!r}")
        elif name in categorical:
            kind = CATEGORICAL
        else:
            kind = NUMERIC
            if any(_parse_float(token) is None for token in tokens):
                kind = CATEGORICAL
        if kind == CATEGORICAL:
            levels = tuple(sorted(set(tokens)))
            if len(levels) < 2:
                raise TableFormatError(
                    f"{path}: categorical column {name!r} has a single level "
                    f"{levels[0]!r}")
            features.append(Feature(name, CATEGORICAL, levels))
        else:
            features.append(Feature(name, NUMERIC))
        feature_indices.append(col)

    if not features:
        raise TableFormatError(f"{path}: no feature columns besides the prediction")
    schema = FeatureSchema(tuple(features), prediction_column=prediction_column)
    rows = [tuple(row[col] for col in feature_indices) for row in data]
    return schema, rows


def load_predictions(path, column: str | None = None) -> np.ndarray:
    """Read model predictions from a CSV file.

    With ``column`` given the file may hold any columns and that one is
    extracted; otherwise the file must hold exactly one column.
    """
    header, data = _read_csv(path)
    if column is None:
        if len(header) != 1:
            raise TableFormatError(
                f"{path}: expected a single prediction column, found {len(header)}")
        col = 0
    else:
        if column not in header:
            raise TableFormatError(f"{path}: prediction column {column!r} not in header")
        col = header.index(column)
    values = np.empty(len(data), dtype=np.float64)
    for index, row in enumerate(data):
        parsed = _parse_float(row[col])
        if parsed is None or not math.isfinite(parsed):
            raise TableFormatError(
                f"{path}: prediction in data row {index + 1} is not a finite "
                f"number: {row[col]!r}")
        values[index] = parsed
    return values


def _numeric_cell(value, feature: Feature, row_index: int) -> float:
    if isinstance(value, str):
        parsed = _parse_float(value)
        if parsed is None:
            raise ValueError(
                f"feature {feature.name!r}, row {row_index}: cannot parse "
                f"{value!r} as a number")
    else:
        parsed = float(value)
    if not math.isfinite(parsed):
        raise ValueError(
            f"feature {feature.name!r}, row {row_index}: non-finite value {parsed!r}")
    return parsed


def _level_index(value, feature: Feature, row_index: int) -> int:
    key = value if isinstance(value, str) else str(value)
    try:
        return feature.levels.index(key)
    except ValueError:
        raise UnknownLevelError(
            f"feature {feature.name!r}, row {row_index}: unseen level {key!r} "
            f"(known: {list(feature.levels)})") from None


def build_design(schema: FeatureSchema, rows) -> DesignMatrix:
    """Encode raw rows into the dense design matrix.

    Column 0 is all ones; numeric features are copied as-is; a categorical
    feature with L levels emits L - 1 indicator columns for its non-reference
    levels (reference = first lexicographic level). Requires at least q rows
    so the full-coalition Gram can be full rank.
    """
    rows = list(rows)
    ranges = column_ranges_for(schema)
    q = design_width(schema)
    n = len(rows)
    if n < q:
        raise ValueError(
            f"need at least as many rows as design columns: {n} rows < q = {q}")
    values = np.zeros((n, q), dtype=np.float64)
    values[:, INTERCEPT_COLUMN] = 1.0
    for row_index, row in enumerate(rows, start=1):
        if len(row) != schema.p:
            raise MissingFeatureError(
                f"row {row_index} has {len(row)} values, schema expects {schema.p}")
    for position, (feature, (start, stop)) in enumerate(zip(schema.features, ranges)):
        if feature.kind == NUMERIC:
            for row_index, row in enumerate(rows):
                values[row_index, start] = _numeric_cell(
                    row[position], feature, row_index + 1)
        else:
            for row_index, row in enumerate(rows):
                level = _level_index(row[position], feature, row_index + 1)
                if level > 0:
                    values[row_index, start + level - 1] = 1.0
    return DesignMatrix(values=values, column_ranges=ranges)


def encode_row(schema: FeatureSchema, column_ranges, x_star) -> np.ndarray:
    """Encode one feature-value tuple exactly as :func:`build_design` would.

    ``x_star`` must supply a value for every feature in schema order.
    """
    x_star = tuple(x_star)
    if len(x_star) != schema.p:
        raise MissingFeatureError(
            f"expected {schema.p} feature values, got {len(x_star)}")
    q = design_width(schema)
    out = np.zeros(q, dtype=np.float64)
    out[INTERCEPT_COLUMN] = 1.0
    for position, (feature, (start, stop)) in enumerate(zip(schema.features,
                                                            column_ranges)):
        if feature.kind == NUMERIC:
            out[start] = _numeric_cell(x_star[position], feature, 1)
        else:
            level = _level_index(x_star[position], feature, 1)
            if level > 0:
                out[start + level - 1] = 1.0
    return out


def compute_gram(design: DesignMatrix, predictions) -> GramSystem:
    """Form Q = XᵀX and m = Xᵀf, mirroring the upper triangle of Q."""
    f = np.asarray(predictions, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] != design.n_rows:
        raise ValueError(
            f"predictions must be a vector of length {design.n_rows}, "
            f"got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("predictions contain non-finite values")
    X = design.values
    raw = X.T @ X
    upper = np.triu(raw)
    Q = upper + np.triu(raw, 1).T
    m = X.T @ f
    return GramSystem(Q=Q, m=m, max_diag=float(np.max(np.diag(Q))))
