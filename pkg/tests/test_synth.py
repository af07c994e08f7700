"""Synthetic fixture generator."""

import numpy as np
import pytest

from coalesce import build_design, compute_gram, load_predictions, load_table
from coalesce.synth import (
    default_feature_mix,
    make_synthetic_table,
    write_table_csv,
)


def test_deterministic_by_seed():
    first = make_synthetic_table(50, 3, [3], seed=5)
    second = make_synthetic_table(50, 3, [3], seed=5)
    assert first[1] == second[1]
    assert np.array_equal(first[2], second[2])


def test_seed_changes_data():
    first = make_synthetic_table(50, 3, [3], seed=5)
    second = make_synthetic_table(50, 3, [3], seed=6)
    assert first[1] != second[1]


def test_schema_shape():
    schema, rows, predictions = make_synthetic_table(60, 4, [3, 5], seed=1)
    assert schema.p == 6
    assert len(rows) == 60 and len(predictions) == 60
    assert schema.features[4].levels == ("a", "b", "c")
    assert schema.features[5].levels == ("a", "b", "c", "d", "e")


def test_gram_is_full_rank():
    schema, rows, predictions = make_synthetic_table(200, 5, [3, 4], seed=13)
    design = build_design(schema, rows)
    gram = compute_gram(design, predictions)
    assert np.linalg.matrix_rank(gram.Q) == gram.q


def test_csv_round_trip_is_exact(tmp_path):
    schema, rows, predictions = make_synthetic_table(40, 2, [3], seed=3)
    path = tmp_path / "synth.csv"
    write_table_csv(path, schema, rows, predictions)
    loaded_schema, loaded_rows = load_table(path, prediction_column="prediction")
    assert loaded_schema.features == schema.features
    reloaded = build_design(loaded_schema, loaded_rows)
    original = build_design(schema, rows)
    assert reloaded.values.tobytes() == original.values.tobytes()
    assert np.array_equal(load_predictions(path, "prediction"), predictions)


def test_feature_mix():
    assert default_feature_mix(12) == (10, [3, 3])
    assert default_feature_mix(3) == (3, [])
    with pytest.raises(ValueError):
        default_feature_mix(0)


def test_too_few_rows():
    with pytest.raises(ValueError):
        make_synthetic_table(3, 4, [], seed=0)
