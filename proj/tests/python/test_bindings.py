"""Checks of the Python extension against hand-computed values."""

import math

import numpy as np
import pytest

import logdesign as ld


def two_action():
    env = ld.Environment(np.array([[0.9], [0.1]]))
    return env, ld.Policy(np.array([[0.9], [0.1]]))


def test_neyman_two_actions():
    env, target = two_action()
    report = ld.design("neyman", env, target)
    assert report.regime == "neyman"
    assert report.policy.probs[0, 0] == pytest.approx(0.9 * math.sqrt(0.9) / (0.9 * math.sqrt(0.9) + 0.1 * math.sqrt(0.1)))


def test_minimax_constant():
    env, _ = two_action()
    report = ld.design("minimax-mu", env)
    assert report.normalizing_constants == [pytest.approx(0.39)]
    np.testing.assert_allclose(report.policy.probs[:, 0], [0.75, 0.25])


def test_closed_form_on_policy():
    env, target = two_action()
    mse = ld.closed_form_mse(env, target, target, 10)
    value = 0.9 * 0.9 + 0.1 * 0.1
    assert mse.bias_sq == 0.0
    assert mse.variance == pytest.approx(value * (1 - value) / 10)
    assert ld.policy_value(env, target) == pytest.approx(value)


def test_monte_carlo_tracks_closed_form():
    env = ld.make_geometric_env(2, 30, seed=3)
    target = ld.make_policy(ld.exact_model(env), "top_k", k=5)
    logging = ld.design("neyman", env, target).policy
    mc = ld.monte_carlo_mse(env, target, logging, 200, 4000, seed=1)
    closed = ld.closed_form_mse(env, target, logging, 200).mse
    assert mc.empirical_mse == pytest.approx(closed, rel=0.1)
    assert len(mc.estimates) == 4000


def test_worst_case_counterexample():
    arrivals = np.ones(1)
    assert ld.worst_case_mse(arrivals, ld.uniform_policy(10, 1), 1) == pytest.approx(9.0)


def test_validation_errors_become_value_error():
    with pytest.raises(ValueError):
        ld.Policy(np.array([[0.5], [0.6]]))
    env, _ = two_action()
    with pytest.raises(ValueError, match="requires a target"):
        ld.design("neyman", env)


def test_reproduce_figure_columns():
    rows = ld.reproduce_figure("fig2")
    assert len(rows["mse"]) == 2000
    aligned = [
        (p, m) for label, p, m in zip(rows["label"], rows["parameter"], rows["mse"]) if label == "aligned:propensity"
    ]
    best = min(aligned, key=lambda pm: pm[1])[0]
    assert best == pytest.approx(0.964)
    assert "fig6_small" in ld.builtin_figures()


def test_shrinkage_noiseless_predictor():
    env = ld.make_linear_env(50, 40, 0.8, seed=2)
    fit = ld.simulate_and_fit_shrinkage(env, ld.exact_model(env), 20000, seed=5)
    assert fit.weight < 0.05
