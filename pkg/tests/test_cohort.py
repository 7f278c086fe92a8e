"""Cohort table invariants, CSV round trips, stratified splitting, and
per-class summaries."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icurisk.cohort import (CohortTable, load_cohort, save_cohort,
                            stratified_split, summarize, validate_values)
from icurisk.errors import ConfigError, DataError, SchemaError
from icurisk.schema import FeatureSpec

from conftest import make_table, small_schema


def test_table_is_immutable(table40):
    with pytest.raises(AttributeError):
        table40.X = np.zeros((1, 4))
    with pytest.raises(ValueError):
        table40.X[0, 0] = 1.0


def test_label_validation(schema4):
    X = np.zeros((3, 4))
    with pytest.raises(DataError):
        CohortTable(schema4, X, [0, 1, 2])
    with pytest.raises(DataError):
        CohortTable(schema4, X, [0, 1])
    with pytest.raises(SchemaError):
        CohortTable(schema4, np.zeros((3, 5)), [0, 1, 0])


def test_subset_and_drop(table40):
    sub = table40.subset([0, 5, 7])
    assert sub.n == 3
    assert np.array_equal(sub.X, table40.X[[0, 5, 7]], equal_nan=True)
    smaller = table40.drop_features(["vent"])
    assert smaller.d == 3
    assert "vent" not in smaller.feature_names
    with pytest.raises(SchemaError):
        table40.drop_features(["nope"])
    with pytest.raises(SchemaError):
        table40.drop_features(table40.feature_names)


def test_csv_round_trip_is_bit_exact(tmp_path):
    schema = small_schema() + (
        FeatureSpec(name="unit", kind="categorical", levels=("micu", "sicu")),
    )
    rng = np.random.default_rng(1)
    table = make_table(30, seed=1, missing=0.15, schema=schema)
    # overwrite the categorical column with valid codes
    X = table.X.copy()
    X[:, 4] = rng.integers(0, 2, 30).astype(float)
    X[3, 4] = np.nan
    table = table.with_matrix(X)
    path = tmp_path / "cohort.csv"
    save_cohort(table, path)
    back = load_cohort(path, schema)
    assert back.equals(table)


def test_load_rejects_header_mismatch(tmp_path, schema4):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(SchemaError):
        load_cohort(path, schema4)


def test_load_rejects_bad_cells(tmp_path, schema4):
    header = ",".join([s.name for s in schema4] + ["label"])
    path = tmp_path / "bad.csv"
    path.write_text(f"{header}\n20,1.0,0,3,maybe\n")
    with pytest.raises(DataError):
        load_cohort(path, schema4)


def test_validate_values_catches_off_grid(schema4):
    table = make_table(20, seed=2)
    validate_values(table)  # clean by construction
    X = table.X.copy()
    X[0, 2] = 0.5  # binary feature off the grid
    with pytest.raises(DataError):
        validate_values(table.with_matrix(X))


def test_split_is_a_partition(table40):
    split = stratified_split(table40, 0.7, seed=4)
    both = np.concatenate([split.train_rows, split.test_rows])
    assert np.array_equal(np.sort(both), np.arange(table40.n))


def test_split_class_counts_round_half_up():
    table = make_table(100, seed=6)
    split = stratified_split(table, 0.75, seed=0)
    y = table.y
    for c in (0, 1):
        total = int((y == c).sum())
        in_train = int((y[split.train_rows] == c).sum())
        assert in_train == int(np.floor(total * 0.75 + 0.5))


def test_split_determinism(table40):
    a = stratified_split(table40, 0.7, seed=9)
    b = stratified_split(table40, 0.7, seed=9)
    assert np.array_equal(a.train_rows, b.train_rows)
    c = stratified_split(table40, 0.7, seed=10)
    assert not np.array_equal(a.train_rows, c.train_rows)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(10, 120), frac=st.floats(0.2, 0.8), seed=st.integers(0, 50))
def test_split_properties(n, frac, seed):
    table = make_table(n, seed=seed)
    split = stratified_split(table, frac, seed)
    assert np.intersect1d(split.train_rows, split.test_rows).size == 0
    assert split.train_rows.size + split.test_rows.size == n
    # both sides sorted
    assert np.array_equal(split.train_rows, np.sort(split.train_rows))


def test_split_rejects_degenerate(table40):
    with pytest.raises(ConfigError):
        stratified_split(table40, 1.0, 0)
    one_class = CohortTable(table40.schema, table40.X, np.zeros(table40.n, dtype=int))
    with pytest.raises(DataError):
        stratified_split(one_class, 0.7, 0)


def test_summarize_matches_nan_moments(table40):
    summary = summarize(table40, by_label=True)
    for c in (0, 1):
        Xc = table40.X[table40.y == c]
        g = summary.groups[f"class{c}"]
        assert np.allclose(g.mean, np.nanmean(Xc, axis=0), equal_nan=True)
        assert np.allclose(g.sd, np.nanstd(Xc, axis=0, ddof=1), equal_nan=True)
        assert np.array_equal(g.count, (~np.isnan(Xc)).sum(axis=0))
    assert summary.event_rate == table40.y.mean()
