"""Seeded synthetic tabular fixtures for benchmarks and tests.

The generator produces a mixed-type table (Gaussian numerics plus
categorical columns) together with a prediction vector that carries real
signal, so attribution magnitudes are O(1) and relative tolerances are
meaningful. Everything is a pure function of the seed.
"""

from __future__ import annotations

import csv

import numpy as np

from .tabular import (
    CATEGORICAL,
    NUMERIC,
    Feature,
    FeatureSchema,
    build_design,
    design_width,
)

_LEVEL_NAMES = "abcdefghij"


def make_synthetic_table(n_rows: int, n_numeric: int, categorical_levels,
                         seed: int, *, noise: float = 0.1,
                         intercept: float = 4.0):
    """Build a schema, raw rows and predictions for a synthetic dataset.

    Parameters
    ----------
    n_rows : int
        Training rows to generate.
    n_numeric : int
        Number of numeric features (named n0, n1, ...).
    categorical_levels : sequence of int
        One entry per categorical feature giving its level count (features
        named c0, c1, ...; levels are single letters, already in
        lexicographic order).
    seed : int
        Everything (values, level frequencies, prediction coefficients,
        noise) derives from this seed.

    Returns
    -------
    (schema, rows, predictions)
        ``rows`` hold floats and level strings; written through
        :func:`write_table_csv` they round-trip bit-exactly.
    """
    categorical_levels = list(categorical_levels)
    rng = np.random.default_rng(seed)
    features = []
    for index in range(n_numeric):
        features.append(Feature(f"n{index}", NUMERIC))
    for index, n_levels in enumerate(categorical_levels):
        if not 2 <= n_levels <= len(_LEVEL_NAMES):
            raise ValueError(f"level count {n_levels} out of range")
        features.append(Feature(f"c{index}", CATEGORICAL,
                                tuple(_LEVEL_NAMES[:n_levels])))
    schema = FeatureSchema(tuple(features))
    if n_rows < design_width(schema):
        raise ValueError(
            f"{n_rows} rows cannot support {design_width(schema)} design columns")

    numeric_scales = rng.uniform(0.5, 2.0, size=n_numeric)
    numeric_values = rng.normal(size=(n_rows, n_numeric)) * numeric_scales
    categorical_values = []
    for n_levels in categorical_levels:
        probs = rng.dirichlet(np.full(n_levels, 4.0))
        draws = rng.choice(n_levels, size=n_rows, p=probs)
        categorical_values.append(draws)

    rows = []
    for i in range(n_rows):
        row = [float(numeric_values[i, j]) for j in range(n_numeric)]
        for feature_index, n_levels in enumerate(categorical_levels):
            row.append(_LEVEL_NAMES[categorical_values[feature_index][i]])
        rows.append(tuple(row))

    design = build_design(schema, rows)
    coefficients = rng.normal(scale=1.0, size=design.q)
    coefficients[0] = intercept
    predictions = design.values @ coefficients
    if n_numeric:
        predictions = predictions + 0.3 * np.sin(design.values[:, 1])
    predictions = predictions + noise * rng.normal(size=n_rows)
    return schema, rows, predictions


def default_feature_mix(p: int) -> tuple[int, list[int]]:
    """Feature composition used by the benchmark for a given p.

    Two three-level categoricals once p is at least 4, the rest numeric.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    n_categorical = 2 if p >= 4 else 0
    return p - n_categorical, [3] * n_categorical


def write_table_csv(path, schema: FeatureSchema, rows, predictions,
                    prediction_column: str = "prediction") -> None:
    """Write rows plus a prediction column; floats use repr round-tripping."""
    predictions = np.asarray(predictions, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(schema.feature_names) + [prediction_column])
        for row, prediction in zip(rows, predictions):
            cells = [cell if isinstance(cell, str) else repr(float(cell))
                     for cell in row]
            writer.writerow(cells + [repr(float(prediction))])


def write_rows_csv(path, schema: FeatureSchema, rows) -> None:
    """Write feature rows without predictions (an explain-rows file)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(schema.feature_names))
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else repr(float(cell))
                             for cell in row])
