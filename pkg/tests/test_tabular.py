"""Ingestion, encoding and Gram construction."""

import numpy as np
import pytest

from coalesce import (
    DuplicateColumnError,
    Feature,
    FeatureSchema,
    MissingCellError,
    MissingFeatureError,
    TableFormatError,
    UnknownLevelError,
    build_design,
    column_ranges_for,
    compute_gram,
    design_width,
    encode_row,
    load_predictions,
    load_table,
)
from coalesce.synth import make_synthetic_table


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadTable:
    def test_infers_numeric_and_categorical(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,b\n1.0,x\n2.5,y\n3.0,x\n")
        schema, rows = load_table(path)
        assert [f.kind for f in schema.features] == ["numeric", "categorical"]
        assert schema.features[1].levels == ("x", "y")
        assert rows == [("1.0", "x"), ("2.5", "y"), ("3.0", "x")]

    def test_duplicate_column(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,a\n1,2\n")
        with pytest.raises(DuplicateColumnError):
            load_table(path)

    def test_missing_cell_reports_row(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,b\n1,x\n2,\n3,y\n")
        with pytest.raises(MissingCellError) as info:
            load_table(path)
        assert info.value.row_index == 2
        assert "row 2" in str(info.value)

    def test_short_row_is_missing_cell(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,b\n1,x\n2\n")
        with pytest.raises(MissingCellError):
            load_table(path)

    def test_empty_file_and_header_only(self, tmp_path):
        with pytest.raises(TableFormatError):
            load_table(write(tmp_path / "e.csv", ""))
        with pytest.raises(TableFormatError):
            load_table(write(tmp_path / "h.csv", "a,b\n"))

    def test_nonexistent_file(self, tmp_path):
        with pytest.raises(TableFormatError):
            load_table(tmp_path / "nope.csv")

    def test_categorical_hint_overrides_inference(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,b\n1,4\n2,5\n3,4\n")
        schema, _ = load_table(path, categorical=["b"])
        assert schema.features[1].kind == "categorical"
        assert schema.features[1].levels == ("4", "5")

    def test_numeric_hint_on_text_column_fails(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,b\n1,x\n2,y\n")
        with pytest.raises(TableFormatError, match="hinted numeric"):
            load_table(path, numeric=["b"])

    def test_unknown_hint_name(self, tmp_path):
        path = write(tmp_path / "t.csv", "a\n1\n2\n")
        with pytest.raises(TableFormatError):
            load_table(path, categorical=["zzz"])

    def test_single_level_categorical_rejected(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,b\n1,x\n2,x\n")
        with pytest.raises(TableFormatError, match="single level"):
            load_table(path)

    def test_prediction_column_excluded(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,y\n1,2.0\n2,3.0\n")
        schema, rows = load_table(path, prediction_column="y")
        assert schema.feature_names == ("a",)
        assert schema.prediction_column == "y"
        assert rows == [("1",), ("2",)]

    def test_sixteen_covariate_table(self, tmp_path):
        # survey-scale table: 16 mixed covariates, full-rank Gram
        from coalesce.synth import write_table_csv
        schema, rows, predictions = make_synthetic_table(300, 14, [3, 3],
                                                         seed=77)
        path = tmp_path / "wide.csv"
        write_table_csv(path, schema, rows, predictions)
        loaded, loaded_rows = load_table(path, prediction_column="prediction")
        assert loaded.p == 16
        design = build_design(loaded, loaded_rows)
        gram = compute_gram(design, predictions)
        assert np.linalg.matrix_rank(gram.Q) == gram.q


class TestLoadPredictions:
    def test_named_column(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,y\n1,2.0\n2,3.5\n")
        assert load_predictions(path, "y").tolist() == [2.0, 3.5]

    def test_single_column_file(self, tmp_path):
        path = write(tmp_path / "f.csv", "pred\n1.5\n2.5\n")
        assert load_predictions(path).tolist() == [1.5, 2.5]

    def test_multi_column_without_name_fails(self, tmp_path):
        path = write(tmp_path / "f.csv", "a,b\n1,2\n")
        with pytest.raises(TableFormatError):
            load_predictions(path)

    def test_non_numeric_prediction_fails(self, tmp_path):
        path = write(tmp_path / "f.csv", "pred\nabc\n")
        with pytest.raises(TableFormatError):
            load_predictions(path)


class TestBuildDesign:
    def test_single_numeric_feature(self):
        schema = FeatureSchema((Feature("f", "numeric"),))
        design = build_design(schema, [(2.0,), (3.0,)])
        assert design.values.tolist() == [[1.0, 2.0], [1.0, 3.0]]
        assert design.column_ranges == ((1, 2),)

    def test_treatment_coding(self):
        schema = FeatureSchema((Feature("c", "categorical", ("x", "y", "z")),))
        design = build_design(schema, [("y",), ("x",), ("z",)])
        assert design.values[:, 1:].tolist() == [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]

    def test_unseen_level(self):
        schema = FeatureSchema((Feature("c", "categorical", ("x", "y", "z")),))
        with pytest.raises(UnknownLevelError, match="'w'"):
            build_design(schema, [("x",), ("y",), ("w",)])

    def test_non_finite_numeric_cell(self):
        schema = FeatureSchema((Feature("f", "numeric"),))
        with pytest.raises(ValueError, match="non-finite"):
            build_design(schema, [(1.0,), (float("nan"),)])

    def test_needs_at_least_q_rows(self):
        schema = FeatureSchema((Feature("c", "categorical", ("x", "y", "z")),))
        with pytest.raises(ValueError, match="q = 3"):
            build_design(schema, [("x",), ("y",)])

    def test_row_width_checked(self):
        schema = FeatureSchema((Feature("a", "numeric"), Feature("b", "numeric")))
        with pytest.raises(MissingFeatureError):
            build_design(schema, [(1.0,), (2.0,), (3.0,)])

    def test_column_ranges_partition(self):
        schema, rows, _ = make_synthetic_table(60, 3, [3, 4], seed=3)
        design = build_design(schema, rows)
        covered = []
        for start, stop in design.column_ranges:
            covered.extend(range(start, stop))
        assert sorted(covered) == list(range(1, design.q))
        assert design.q == design_width(schema)

    def test_dummy_row_sums_zero_or_one(self):
        schema, rows, _ = make_synthetic_table(60, 1, [4], seed=9)
        design = build_design(schema, rows)
        start, stop = design.column_ranges[1]
        sums = design.values[:, start:stop].sum(axis=1)
        assert set(np.unique(sums)) <= {0.0, 1.0}

    def test_deterministic(self, tmp_path):
        path = write(tmp_path / "t.csv", "a,b\n1.5,x\n2.5,y\n0.5,x\n")
        first_schema, first_rows = load_table(path)
        second_schema, second_rows = load_table(path)
        assert first_schema == second_schema
        first = build_design(first_schema, first_rows)
        second = build_design(second_schema, second_rows)
        assert first.values.tobytes() == second.values.tobytes()


class TestEncodeRow:
    def test_numeric_only(self):
        schema = FeatureSchema((Feature("f", "numeric"),))
        ranges = column_ranges_for(schema)
        assert encode_row(schema, ranges, (2.5,)).tolist() == [1.0, 2.5]

    def test_reference_level_is_all_zeros(self):
        schema = FeatureSchema((Feature("c", "categorical", ("x", "y", "z")),))
        ranges = column_ranges_for(schema)
        assert encode_row(schema, ranges, ("x",)).tolist() == [1.0, 0.0, 0.0]

    def test_round_trip_matches_design_rows(self):
        schema, rows, _ = make_synthetic_table(80, 3, [3, 3], seed=21)
        design = build_design(schema, rows)
        ranges = column_ranges_for(schema)
        for index in (0, 17, 79):
            encoded = encode_row(schema, ranges, rows[index])
            assert np.array_equal(encoded, design.values[index])

    def test_missing_feature(self):
        schema = FeatureSchema((Feature("a", "numeric"), Feature("b", "numeric")))
        with pytest.raises(MissingFeatureError):
            encode_row(schema, column_ranges_for(schema), (1.0,))

    def test_unknown_level(self):
        schema = FeatureSchema((Feature("c", "categorical", ("x", "y")),))
        with pytest.raises(UnknownLevelError):
            encode_row(schema, column_ranges_for(schema), ("q",))


class TestComputeGram:
    def test_intercept_only(self):
        schema = FeatureSchema((Feature("f", "numeric"),))
        design = build_design(schema, [(0.0,), (0.0,)])
        # use only the intercept column by hand
        from coalesce.tabular import DesignMatrix
        intercept = DesignMatrix(values=design.values[:, :1], column_ranges=())
        gram = compute_gram(intercept, [1.0, 3.0])
        assert gram.Q.tolist() == [[2.0]]
        assert gram.m.tolist() == [4.0]

    def test_hand_computed_two_by_two(self):
        from coalesce.tabular import DesignMatrix
        design = DesignMatrix(values=np.array([[1.0, 0.0], [1.0, 1.0]]),
                              column_ranges=((1, 2),))
        gram = compute_gram(design, [0.0, 1.0])
        assert gram.Q.tolist() == [[2.0, 1.0], [1.0, 1.0]]
        assert gram.m.tolist() == [1.0, 1.0]
        assert gram.max_diag == 2.0

    def test_intercept_diagonal_equals_row_count(self):
        schema, rows, predictions = make_synthetic_table(150, 2, [3], seed=2)
        design = build_design(schema, rows)
        gram = compute_gram(design, predictions)
        assert gram.Q[0, 0] == 150.0

    def test_exact_symmetry(self):
        schema, rows, predictions = make_synthetic_table(100, 4, [3], seed=4)
        design = build_design(schema, rows)
        gram = compute_gram(design, predictions)
        assert np.array_equal(gram.Q, gram.Q.T)

    def test_length_mismatch(self):
        schema, rows, _ = make_synthetic_table(50, 2, [], seed=1)
        design = build_design(schema, rows)
        with pytest.raises(ValueError):
            compute_gram(design, np.ones(49))

    def test_non_finite_predictions(self):
        schema, rows, predictions = make_synthetic_table(50, 2, [], seed=1)
        design = build_design(schema, rows)
        predictions = predictions.copy()
        predictions[3] = np.inf
        with pytest.raises(ValueError):
            compute_gram(design, predictions)
