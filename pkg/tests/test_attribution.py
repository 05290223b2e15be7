import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evops.attribution import (
    EmptyBackground,
    TooManyFeaturesForExact,
    shapley_attribution,
    waterfall_data,
)


def linear_model(w, b=0.0):
    w = np.asarray(w, dtype=np.float64)
    return lambda rows: rows @ w + b


def test_linear_model_closed_form():
    # For f(x) = w.x the interventional Shapley value is w_i*(x_i - mean_bg_i)
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = int(rng.integers(1, 8))
        w = rng.normal(size=d)
        x = rng.normal(size=d)
        bg = rng.normal(size=(int(rng.integers(1, 30)), d))
        attr = shapley_attribution(linear_model(w), x, bg,
                                   feature_names=[f"f{i}" for i in range(d)])
        expected = w * (x - bg.mean(axis=0))
        got = np.array([attr.contributions[f"f{i}"] for i in range(d)])
        np.testing.assert_allclose(got, expected, atol=1e-9)


def test_constant_model_all_zero():
    attr = shapley_attribution(lambda rows: np.full(rows.shape[0], 4.2),
                               np.array([1.0, 2.0]), np.zeros((3, 2)))
    assert all(phi == 0.0 for phi in attr.contributions.values())
    assert attr.base_value == attr.prediction == 4.2


def test_two_feature_product_model():
    # f(a,b) = a*b with bg {(0,0)} and x=(1,1): exact enumeration gives 0.5 each
    attr = shapley_attribution(lambda rows: rows[:, 0] * rows[:, 1],
                               np.array([1.0, 1.0]), np.array([[0.0, 0.0]]),
                               feature_names=["a", "b"])
    assert attr.contributions["a"] == pytest.approx(0.5, abs=1e-12)
    assert attr.contributions["b"] == pytest.approx(0.5, abs=1e-12)
    assert attr.base_value == pytest.approx(0.0)
    assert attr.prediction == pytest.approx(1.0)


def test_efficiency_exact_mode():
    rng = np.random.default_rng(3)
    for _ in range(10):
        d = int(rng.integers(1, 7))
        coef = rng.normal(size=(d, d))

        def f(rows, coef=coef):
            return np.einsum("bi,ij,bj->b", rows, coef, rows)

        x = rng.normal(size=d)
        bg = rng.normal(size=(8, d))
        attr = shapley_attribution(f, x, bg)
        total = attr.base_value + sum(attr.contributions.values())
        assert total == pytest.approx(attr.prediction, abs=1e-9)


def test_dummy_feature_is_exactly_zero():
    # feature 1 is ignored by the model
    attr = shapley_attribution(lambda rows: rows[:, 0] ** 2,
                               np.array([2.0, 7.0]),
                               np.random.default_rng(1).normal(size=(5, 2)),
                               feature_names=["used", "ignored"])
    assert attr.contributions["ignored"] == 0.0


def test_symmetry():
    # both features enter the model identically and share input/background values
    def f(rows):
        return rows[:, 0] + rows[:, 1] + rows[:, 0] * rows[:, 1]

    bg = np.array([[0.3, 0.3], [0.7, 0.7], [-1.0, -1.0]])
    attr = shapley_attribution(f, np.array([2.0, 2.0]), bg, feature_names=["a", "b"])
    assert attr.contributions["a"] == pytest.approx(attr.contributions["b"], abs=1e-12)


def test_linearity():
    rng = np.random.default_rng(4)
    d = 4
    x = rng.normal(size=d)
    bg = rng.normal(size=(6, d))
    w1, w2 = rng.normal(size=d), rng.normal(size=d)

    def g(rows):
        return np.sin(rows @ w2)

    f = linear_model(w1)
    both = lambda rows: f(rows) + g(rows)
    attr_f = shapley_attribution(f, x, bg)
    attr_g = shapley_attribution(g, x, bg)
    attr_fg = shapley_attribution(both, x, bg)
    for name in attr_fg.contributions:
        assert attr_fg.contributions[name] == pytest.approx(
            attr_f.contributions[name] + attr_g.contributions[name], abs=1e-9)


def test_exact_mode_feature_limit():
    d = 13
    with pytest.raises(TooManyFeaturesForExact):
        shapley_attribution(lambda rows: rows.sum(axis=1),
                            np.zeros(d), np.zeros((2, d)))


def test_empty_background_rejected():
    with pytest.raises(EmptyBackground):
        shapley_attribution(lambda rows: rows.sum(axis=1),
                            np.zeros(3), np.zeros((0, 3)))


def test_sampled_mode_efficiency_and_error_estimate():
    rng = np.random.default_rng(5)
    d = 6
    w = rng.normal(size=d)
    x = rng.normal(size=d)
    bg = rng.normal(size=(10, d))
    attr = shapley_attribution(linear_model(w), x, bg, mode="sampled",
                               budget=3 * d, seed=42)
    # permutation marginals telescope, so efficiency holds despite sampling
    total = attr.base_value + sum(attr.contributions.values())
    assert total == pytest.approx(attr.prediction, abs=1e-9)
    assert attr.mc_error is not None and len(attr.mc_error) == d
    assert all(e >= 0 for e in attr.mc_error.values())


def test_sampled_mode_budget_floor():
    with pytest.raises(ValueError):
        shapley_attribution(lambda rows: rows.sum(axis=1),
                            np.zeros(4), np.zeros((2, 4)),
                            mode="sampled", budget=7)


def test_sampled_matches_exact_on_linear_model():
    rng = np.random.default_rng(6)
    d = 5
    w = rng.normal(size=d)
    x = rng.normal(size=d)
    bg = rng.normal(size=(5, d))
    exact = shapley_attribution(linear_model(w), x, bg)
    sampled = shapley_attribution(linear_model(w), x, bg, mode="sampled",
                                  budget=400, seed=0)
    for name in exact.contributions:
        err = max(3 * sampled.mc_error[name], 1e-6)
        assert abs(exact.contributions[name] - sampled.contributions[name]) <= err


def test_grouped_attribution_channels():
    # columns 0+1 form one player; a model reading only column 2 makes
    # the group a dummy player
    def f(rows):
        return 2.0 * rows[:, 2]

    x = np.array([1.0, 2.0, 3.0])
    bg = np.random.default_rng(7).normal(size=(4, 3))
    attr = shapley_attribution(f, x, bg, groups=[[0, 1], [2]],
                               group_names=["pair", "solo"])
    assert attr.contributions["pair"] == 0.0
    assert attr.contributions["solo"] == pytest.approx(
        attr.prediction - attr.base_value, abs=1e-12)
    assert attr.feature_values["pair"] == pytest.approx(1.5)


def test_waterfall_hand_ordering():
    from evops.attribution import Attribution

    attr = Attribution(base_value=0.0,
                       contributions={"a": 2.0, "b": -3.0, "c": 0.1},
                       prediction=-0.9,
                       feature_values={"a": 1.0, "b": 2.0, "c": 3.0})
    items, remainder = waterfall_data(attr, top_k=2)
    assert [w.name for w in items] == ["b", "a"]
    assert remainder == pytest.approx(0.1, abs=1e-12)


def test_waterfall_all_features_zero_remainder():
    from evops.attribution import Attribution

    attr = Attribution(base_value=1.0,
                       contributions={"a": 0.5, "b": -0.25, "c": 0.75},
                       prediction=2.0,
                       feature_values={"a": 0.0, "b": 0.0, "c": 0.0})
    items, remainder = waterfall_data(attr, top_k=3)
    assert len(items) == 3
    assert remainder == pytest.approx(0.0, abs=1e-12)
    items, remainder = waterfall_data(attr, top_k=10)
    assert len(items) == 3
    assert remainder == pytest.approx(0.0, abs=1e-12)


def test_waterfall_topk_floor():
    from evops.attribution import Attribution

    attr = Attribution(0.0, {"a": 1.0}, 1.0, {"a": 1.0})
    with pytest.raises(ValueError):
        waterfall_data(attr, top_k=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_efficiency_property_random_models(d, seed):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=d)

    def f(rows):
        return np.tanh(rows @ w)

    x = rng.normal(size=d)
    bg = rng.normal(size=(int(rng.integers(1, 6)), d))
    attr = shapley_attribution(f, x, bg)
    assert attr.base_value + sum(attr.contributions.values()) == pytest.approx(
        attr.prediction, abs=1e-9)
