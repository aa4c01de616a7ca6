from __future__ import annotations

import math

import numpy as np
import pytest

from copstream.learners import (
    KINDS,
    LOGISTIC,
    PASSIVE_AGGRESSIVE,
    PERCEPTRON,
    LinearLearner,
    Prediction,
)


def _separable(n: int, d: int, seed: int, margin: float = 0.5):
    """Margin-separated instances around a fixed unit normal through 0."""
    rng = np.random.default_rng(seed)
    w_star = rng.normal(size=d)
    w_star /= np.linalg.norm(w_star)
    xs, ys = [], []
    while len(xs) < n:
        x = rng.normal(size=d)
        m = float(w_star @ x)
        if abs(m) >= margin:
            xs.append(x)
            ys.append(1 if m > 0 else -1)
    return np.array(xs), np.array(ys), w_star


def test_zero_weights_tie_predicts_positive():
    model = LinearLearner(PERCEPTRON, 3)
    p = model.predict(np.array([1.0, -2.0, 0.5]))
    assert p.margin == 0.0
    assert p.label == 1


def test_margin_and_sign():
    model = LinearLearner(LOGISTIC, 2)
    model.w[:] = [1.0, 0.0, 0.0]
    p = model.predict(np.array([-2.0, 7.0]))
    assert p.margin == -2.0
    assert p.label == -1


def test_prediction_label_rule():
    assert Prediction(0.0).label == 1
    assert Prediction(-1e-300).label == -1


@pytest.mark.parametrize("kind", KINDS)
def test_trained_on_separable_data_generalizes(kind):
    xs, ys, _ = _separable(700, 6, seed=17)
    model = LinearLearner(kind, 6)
    for x, y in zip(xs[:500], ys[:500]):
        model.update(x, int(y), 1.0)
    correct = sum(
        model.predict(x).label == y for x, y in zip(xs[500:], ys[500:])
    )
    assert correct / 200 >= 0.95


def test_perceptron_skips_correct_with_positive_margin():
    model = LinearLearner(PERCEPTRON, 2)
    model.w[:] = [1.0, 0.0, 0.0]
    before = model.w.copy()
    model.update(np.array([2.0, 1.0]), 1, 1.0)
    assert np.array_equal(model.w, before)
    assert model.update_count == 1


def test_perceptron_updates_on_zero_margin():
    model = LinearLearner(PERCEPTRON, 2)
    model.update(np.array([1.0, -1.0]), -1, 1.0)
    assert model.w.tolist() == [-1.0, 1.0, -1.0]


def test_pa_skips_when_hinge_zero():
    model = LinearLearner(PASSIVE_AGGRESSIVE, 2)
    model.w[:] = [2.0, 0.0, 0.0]
    before = model.w.copy()
    model.update(np.array([1.0, 0.0]), 1, 1.0)  # margin 2 => hinge 0
    assert np.array_equal(model.w, before)


def test_pa_closed_form_step():
    model = LinearLearner(PASSIVE_AGGRESSIVE, 2, pa_c=1.0)
    model.update(np.array([1.0, 0.0]), 1, 1.0)
    assert model.w[:2].tolist() == pytest.approx([1.0, 0.0], abs=1e-9)
    assert model.bias == 0.0


def test_pa_post_update_hinge_zero_when_tau_below_c():
    rng = np.random.default_rng(2)
    for _ in range(50):
        model = LinearLearner(PASSIVE_AGGRESSIVE, 4, pa_c=10.0)
        model.w[:4] = rng.normal(size=4)
        x = rng.normal(size=4) * 2.0
        y = -1 if rng.random() < 0.5 else 1
        hinge = max(0.0, 1.0 - y * model.margin(x))
        if hinge == 0.0:
            continue
        tau = hinge / (float(x @ x) + 1e-12)
        assert tau < 10.0
        model.update(x, y, 1.0)
        post_hinge = max(0.0, 1.0 - y * model.margin(x))
        assert post_hinge == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("weight", [0.5, 0.1, 0.01, 1e-6])
def test_update_scales_linearly_with_confidence_weight(kind, weight):
    rng = np.random.default_rng(5)
    x = rng.normal(size=3)
    start = rng.normal(size=4)

    full = LinearLearner(kind, 3)
    full.w[:] = start
    full.update(x, 1, 1.0)
    delta_full = np.linalg.norm(full.w - start)

    partial = LinearLearner(kind, 3)
    partial.w[:] = start
    partial.update(x, 1, weight)
    delta_partial = np.linalg.norm(partial.w - start)
    assert delta_partial <= weight * delta_full + 1e-15


def test_perceptron_converges_within_mistake_bound():
    xs, ys, w_star = _separable(60, 4, seed=23, margin=1.0)
    # margin of the augmented separator (w_star, 0) over the cycle set
    gamma = min(y * (w_star @ x) for x, y in zip(xs, ys))
    radius_sq = max(float(x @ x) + 1.0 for x in xs)
    bound = radius_sq / gamma**2
    model = LinearLearner(PERCEPTRON, 4)
    mistakes = 0
    for _ in range(1000):
        clean = True
        for x, y in zip(xs, ys):
            if model.predict(x).label != y:
                clean = False
            before = model.w.copy()
            model.update(x, int(y), 1.0)
            if not np.array_equal(before, model.w):
                mistakes += 1
        if clean:
            break
    assert clean
    assert mistakes <= bound


def test_logistic_update_matches_finite_difference_gradient():
    rng = np.random.default_rng(31)
    for _ in range(20):
        model = LinearLearner(LOGISTIC, 3, learning_rate=0.1)
        model.w[:] = rng.normal(size=4)
        x = rng.normal(size=3)
        y = -1 if rng.random() < 0.5 else 1
        x_aug = np.append(x, 1.0)

        def loss(w):
            return math.log1p(math.exp(-y * float(w @ x_aug)))

        eps = 1e-6
        grad = np.zeros(4)
        for j in range(4):
            up, down = model.w.copy(), model.w.copy()
            up[j] += eps
            down[j] -= eps
            grad[j] = (loss(up) - loss(down)) / (2 * eps)
        before = model.w.copy()
        model.update(x, y, 1.0)
        step = model.w - before
        expected = -0.1 * grad
        assert np.linalg.norm(step - expected) <= 1e-5 * max(
            np.linalg.norm(expected), 1e-12
        )


def test_update_count_tracks_calls():
    model = LinearLearner(PERCEPTRON, 2)
    model.w[:] = [1.0, 0.0, 0.0]
    model.update(np.array([1.0, 0.0]), 1, 1.0)  # no-op step still counts
    model.update(np.array([1.0, 0.0]), -1, 1.0)
    assert model.update_count == 2
    assert len(model.w) == 3


def test_rejects_bad_inputs():
    model = LinearLearner(LOGISTIC, 2)
    with pytest.raises(ValueError):
        model.predict(np.array([1.0]))
    with pytest.raises(ValueError):
        model.update(np.array([1.0, 2.0]), 0, 1.0)
    with pytest.raises(ValueError):
        model.update(np.array([1.0, 2.0]), 1, 0.0)
    with pytest.raises(ValueError):
        model.update(np.array([1.0, 2.0]), 1, 1.5)
    with pytest.raises(ValueError):
        LinearLearner("nearest_centroid", 2)


def test_clone_is_independent():
    model = LinearLearner(LOGISTIC, 2)
    model.update(np.array([1.0, 0.0]), 1, 1.0)
    twin = model.clone()
    twin.update(np.array([1.0, 0.0]), 1, 1.0)
    assert not np.array_equal(model.w, twin.w)
    assert model.update_count == 1 and twin.update_count == 2
