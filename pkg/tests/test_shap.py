"""Shapley attribution: exact axioms on the exhaustive game, agreement of
the polynomial tree walk with brute-force enumeration."""

import numpy as np
import pytest

from icurisk.errors import ConfigError, DataError
from icurisk.explain.shapley import ShapMatrix, shap_exhaustive, shap_tree
from icurisk.models.gbdt import GbdtParams, gbdt_margin, train_gbdt

from conftest import make_table


def test_linear_game_has_closed_form():
    rng = np.random.default_rng(0)
    beta = np.array([2.0, -1.0, 0.5, 3.0])
    f = lambda X: X @ beta + 7.0
    Z = rng.normal(size=(20, 4))
    x = rng.normal(size=4)
    phi = shap_exhaustive(f, x, Z)
    assert phi == pytest.approx(beta * (x - Z.mean(axis=0)), abs=1e-12)


def test_dummy_feature_gets_exactly_zero():
    f = lambda X: np.sin(X[:, 0]) + X[:, 2] ** 2
    rng = np.random.default_rng(1)
    phi = shap_exhaustive(f, rng.normal(size=4), rng.normal(size=(10, 4)))
    assert phi[1] == 0.0 and phi[3] == 0.0


def test_symmetric_players_get_equal_credit():
    # x0 and x1 enter the model identically; with equal background means
    # and x0 == x1 the symmetry axiom forces equal attributions
    f = lambda X: np.exp(X[:, 0] + X[:, 1]) + X[:, 2]
    rng = np.random.default_rng(2)
    Z = rng.normal(size=(12, 3))
    Z[:, 1] = Z[:, 0]
    x = np.array([0.4, 0.4, -1.0])
    phi = shap_exhaustive(f, x, Z)
    assert phi[0] == pytest.approx(phi[1], abs=1e-12)


def test_exhaustive_efficiency():
    rng = np.random.default_rng(3)
    beta = rng.normal(size=5)
    f = lambda X: np.tanh(X @ beta) * 3.0
    Z = rng.normal(size=(15, 5))
    x = rng.normal(size=5)
    phi = shap_exhaustive(f, x, Z)
    assert phi.sum() == pytest.approx(float(f(x[None, :])[0]) - f(Z).mean(),
                                      abs=1e-10)


def test_exhaustive_refuses_wide_inputs():
    f = lambda X: X.sum(axis=1)
    with pytest.raises(ConfigError):
        shap_exhaustive(f, np.zeros(16), np.zeros((3, 16)))
    with pytest.raises(DataError):
        shap_exhaustive(f, np.zeros(3), np.zeros((0, 3)))


def test_tree_walk_matches_enumeration():
    table = make_table(120, seed=17, informative=True)
    model = train_gbdt(table, GbdtParams(depth=3, n_trees=12), seed=1)
    Z = table.X[:25]
    rows = table.X[40:46]
    result = shap_tree(model, rows, Z)
    assert isinstance(result, ShapMatrix)
    assert result.values.shape == (6, 4)
    assert result.feature_names == tuple(table.feature_names)
    margin_fn = lambda X: gbdt_margin(model, X)
    for i in range(rows.shape[0]):
        brute = shap_exhaustive(margin_fn, rows[i], Z)
        assert np.max(np.abs(result.values[i] - brute)) < 1e-10


def test_tree_efficiency_per_row():
    table = make_table(200, seed=23, informative=True)
    model = train_gbdt(table, GbdtParams(depth=4, n_trees=30), seed=2)
    Z = table.X[:60]
    rows = table.X[60:90]
    result = shap_tree(model, rows, Z)
    assert result.base_value == pytest.approx(gbdt_margin(model, Z).mean())
    total = result.base_value + result.values.sum(axis=1)
    assert total == pytest.approx(gbdt_margin(model, rows), abs=1e-9)


def test_tree_accepts_tables():
    table = make_table(80, seed=29, informative=True)
    model = train_gbdt(table, GbdtParams(depth=2, n_trees=8), seed=0)
    via_table = shap_tree(model, table.subset(np.arange(5)),
                          table.subset(np.arange(20, 50)))
    via_array = shap_tree(model, table.X[:5], table.X[20:50])
    assert np.array_equal(via_table.values, via_array.values)
