"""Leave-one-feature-out refits scored by paired bootstrap AUROC."""

import numpy as np
import pytest

from icurisk.errors import ConfigError, DataError
from icurisk.explain.ablation import ablation
from icurisk.models.cv import ModelSpec

from conftest import make_table


def _split(table, n_train):
    idx = np.arange(table.n)
    return table.subset(idx[:n_train]), table.subset(idx[n_train:])


def test_report_structure_and_determinism():
    train, test = _split(make_table(220, seed=51, informative=True), 150)
    spec = ModelSpec(family="logreg", params={"C": 1.0})
    rep = ablation(spec, train, test, n_resamples=25, seed=3)
    assert rep.features == tuple(train.feature_names)
    assert rep.baseline_dist.shape == (25,)
    assert set(rep.dropped_dist) == set(rep.features)
    for name in rep.features:
        assert rep.dropped_dist[name].shape == (25,)
        assert 0.0 <= rep.dropped_auroc[name] <= 1.0
    assert 0.0 <= rep.baseline_auroc <= 1.0
    again = ablation(spec, train, test, n_resamples=25, seed=3)
    assert np.array_equal(rep.baseline_dist, again.baseline_dist)
    for name in rep.features:
        assert np.array_equal(rep.dropped_dist[name], again.dropped_dist[name])


def test_informative_feature_costs_auroc():
    # conftest couples the label to age only, so removing age must hurt
    train, test = _split(make_table(400, seed=53, informative=True), 280)
    spec = ModelSpec(family="gnb")
    rep = ablation(spec, train, test, n_resamples=40, seed=1)
    assert rep.mean_drop("age") > 0.05
    others = [rep.mean_drop(n) for n in rep.features if n != "age"]
    assert rep.mean_drop("age") > max(others)


def test_feature_subset_and_validation():
    train, test = _split(make_table(120, seed=55, informative=True), 80)
    spec = ModelSpec(family="gnb")
    rep = ablation(spec, train, test, features=["age", "vent"],
                   n_resamples=10, seed=0)
    assert rep.features == ("age", "vent")
    with pytest.raises(ConfigError):
        ablation(spec, train, test, features=["nope"], n_resamples=5)
    with pytest.raises(ConfigError):
        ablation(spec, train, test, n_resamples=0)
    with pytest.raises(DataError):
        ablation(spec, train, test.drop_features(["vent"]), n_resamples=5)
