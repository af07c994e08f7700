"""Shared fixtures: synthetic datasets at the sizes the test suite uses."""

from dataclasses import dataclass

import numpy as np
import pytest

from coalesce import (
    CoalitionPlan,
    DesignMatrix,
    FeatureSchema,
    GramSystem,
    build_design,
    column_ranges_for,
    compute_gram,
    enumerate_all,
)
from coalesce.synth import make_synthetic_table


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    rows: list
    predictions: np.ndarray
    design: DesignMatrix
    column_ranges: tuple
    gram: GramSystem
    plan: CoalitionPlan


def make_dataset(n_rows, n_numeric, categorical_levels, seed) -> Dataset:
    schema, rows, predictions = make_synthetic_table(
        n_rows, n_numeric, categorical_levels, seed)
    design = build_design(schema, rows)
    ranges = column_ranges_for(schema)
    gram = compute_gram(design, predictions)
    plan = enumerate_all(schema.p)
    return Dataset(schema, rows, predictions, design, ranges, gram, plan)


@pytest.fixture(scope="session")
def data_p6() -> Dataset:
    """p = 6 (4 numeric + 2 three-level categoricals), N = 200."""
    return make_dataset(200, 4, [3, 3], seed=11)


@pytest.fixture(scope="session")
def data_p10() -> Dataset:
    """p = 10 (7 numeric + 3 three-level categoricals), N = 1000."""
    return make_dataset(1000, 7, [3, 3, 3], seed=23)


@pytest.fixture(scope="session")
def data_p4() -> Dataset:
    """p = 4 (2 numeric + 2 three-level categoricals), N = 120."""
    return make_dataset(120, 2, [3, 3], seed=7)
