import json

import numpy as np
import pytest

from pointwinner import models
from pointwinner.models.linear import LinearModel

from conftest import learnable

SMALL = {"baseline": {}, "logistic": {"epochs": 3}, "forest": {"n_trees": 5},
         "adaboost": {"rounds": 5}, "gbt": {"rounds": 5}}


@pytest.mark.parametrize("family", models.FAMILIES)
def test_roundtrip_and_determinism(family, tmp_path):
    X, y = learnable(120, seed=1, noise=0.5)
    probe = np.random.default_rng(2).normal(size=(30, X.shape[1])) * 3
    a = models.fit(family, X, y, SMALL[family])
    b = models.fit(family, X, y, SMALL[family])
    pa = models.predict_proba(a, probe)
    assert np.array_equal(pa, models.predict_proba(b, probe))
    assert ((pa >= 0) & (pa <= 1)).all() and not np.isnan(pa).any()
    models.save_model(a, tmp_path / "m.json", meta={"k": 1})
    back = models.load_model(tmp_path / "m.json")
    assert np.array_equal(models.predict_proba(back, probe), pa)
    assert back.meta == {"k": 1}
    models.save_model(back, tmp_path / "n.json", meta={"k": 1})
    assert (tmp_path / "m.json").read_bytes() == (tmp_path / "n.json").read_bytes()


def test_zero_weights_give_half():
    m = LinearModel(np.zeros(3), 0.0, {})
    assert (models.predict_proba(m, np.ones((4, 3))) == 0.5).all()


def test_schema_mismatch():
    X, y = learnable(40, seed=3)
    m = models.fit("gbt", X, y, {"rounds": 2})
    with pytest.raises(models.SchemaMismatch):
        models.predict_proba(m, X[:, :2])
    m.schema_fingerprint = "abc"
    with pytest.raises(models.SchemaMismatch):
        models.predict_proba(m, X, schema_fingerprint="xyz")


def test_rejects_non_finite():
    X, y = learnable(40, seed=3)
    m = models.fit("logistic", X, y, {"epochs": 1})
    X[0, 0] = np.nan
    with pytest.raises(ValueError):
        models.predict_proba(m, X)


def test_param_validation():
    with pytest.raises(ValueError):
        models.resolve_params("gbt", {"eta": 5.0})
    with pytest.raises(ValueError):
        models.resolve_params("forest", {"learning_rate": 0.1})
    with pytest.raises(ValueError):
        models.resolve_params("svm")
    assert models.resolve_params("gbt")["eta"] == 0.3


def test_threshold_configurable():
    m = models.fit_prior_baseline([1, 1, 0, 0, 0])
    X = np.zeros((2, 1))
    assert models.predict(m, X).tolist() == [0, 0]
    assert models.predict(m, X, threshold=0.4).tolist() == [1, 1]


def test_hyperparameters_saved(tmp_path):
    X, y = learnable(40, seed=4)
    m = models.fit("gbt", X, y, {"rounds": 3, "eta": 0.1})
    models.save_model(m, tmp_path / "m.json")
    d = json.loads((tmp_path / "m.json").read_text())
    assert d["family"] == "gbt" and d["params"]["eta"] == 0.1 and d["params"]["rounds"] == 3
