import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from pointwinner import models
from pointwinner.models.linear import (EmptyInput, fit_logistic, fit_prior_baseline,
                                       logistic_grad, logistic_loss, sigmoid)


def test_sigmoid_values():
    assert sigmoid(0.0) == 0.5
    assert abs(sigmoid(2.0) - 0.8807970779778823) < 1e-15
    assert 0.0 < sigmoid(-1e6) < 1e-200 and sigmoid(1e6) == 1.0


@given(st.floats(-700, 700))
def test_sigmoid_symmetry(z):
    assert abs(sigmoid(z) + sigmoid(-z) - 1) < 1e-15


def test_baseline():
    assert fit_prior_baseline([1, 0]).p_server_win == 0.5
    m = fit_prior_baseline([1, 1, 1, 0])
    assert np.array_equal(models.predict_proba(m, np.zeros((5, 2))), np.full(5, 0.75))
    with pytest.raises(EmptyInput):
        fit_prior_baseline([])


def test_loss_at_zero_weights():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(7, 3)), rng.integers(0, 2, 7)
    assert abs(logistic_loss(np.zeros(3), X, y) - math.log(2)) < 1e-15


def test_loss_elementwise_oracle():
    rng = np.random.default_rng(1)
    X, y, w = rng.normal(size=(5, 3)), rng.integers(0, 2, 5), rng.normal(size=3)
    total = 0.0
    for xi, yi in zip(X, y):
        g = 1 / (1 + math.exp(-sum(a * b for a, b in zip(xi, w))))
        g = min(max(g, 1e-12), 1 - 1e-12)
        total += -(1 - yi) * math.log(1 + yi - g) - yi * math.log(g)
    assert abs(logistic_loss(w, X, y) - total / 5) < 1e-12


def test_loss_vanishes_when_separated():
    X = np.array([[-1.0], [1.0]])
    # the probability clamp at 1e-12 puts a floor of about 1e-12 under the loss
    assert logistic_loss(np.array([60.0]), X, np.array([0, 1])) < 2e-12


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        logistic_loss(np.zeros(2), np.zeros((3, 3)), np.zeros(3))


@settings(max_examples=100)
@given(st.integers(1, 20), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_gradient_vs_central_differences(m, d, seed):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(m, d)), rng.integers(0, 2, m).astype(float)
    w, b = rng.normal(size=d), float(rng.normal())
    gw, gb = logistic_grad(w, X, y, b)
    h = 1e-5
    num = np.empty(d + 1)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        num[j] = (logistic_loss(w + e, X, y, b) - logistic_loss(w - e, X, y, b)) / (2 * h)
    num[d] = (logistic_loss(w, X, y, b + h) - logistic_loss(w, X, y, b - h)) / (2 * h)
    ana = np.append(gw, gb)
    # relative error, with a floor on the scale so that components near zero
    # are judged against the loss's rounding noise rather than 0
    rel = np.abs(ana - num) / np.maximum(np.maximum(np.abs(ana), np.abs(num)), 1e-2)
    assert rel.max() < 1e-6


def test_separable_toy():
    x = np.linspace(-2, 2, 40)
    x = x[x != 0].reshape(-1, 1)
    y = (x[:, 0] > 0).astype(int)
    m = fit_logistic(x, y, alpha=0.1, epochs=30)
    assert m.weights[0] > 0
    assert (models.predict(m, x) == y).all()
    assert m.losses[-1] < m.losses[0]


def test_logistic_is_deterministic():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(50, 4)), rng.integers(0, 2, 50)
    a = fit_logistic(X, y, seed=3, epochs=5)
    b = fit_logistic(X, y, seed=3, epochs=5)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_divergence_detected():
    X = np.array([[np.inf], [1.0]])
    with np.errstate(all="ignore"), pytest.raises(models.DivergenceDetected):
        fit_logistic(X, np.array([1, 0]), alpha=1.0, epochs=2)
