"""Network forward/backward math, loss, and the two optimizers."""

from __future__ import annotations

import math

import numpy as np
import pytest

import lockedge as lk
from conftest import max_relative_error, numeric_gradients


def tiny_batch(seed=0, n=12, k=5, c=4):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, k))
    y = rng.integers(0, c, size=n)
    return X, y


class TestInit:
    def test_bounds_and_zero_biases(self):
        params = lk.init_model(9, 22, 11, seed=0)
        assert params.w1.shape == (22, 9)
        assert params.w2.shape == (11, 22)
        assert np.all(np.abs(params.w1) <= math.sqrt(6.0 / 9))
        assert np.all(np.abs(params.w2) <= math.sqrt(6.0 / 22))
        np.testing.assert_array_equal(params.b1, np.zeros(22))
        np.testing.assert_array_equal(params.b2, np.zeros(11))

    def test_seed_determinism(self):
        a = lk.init_model(4, 6, 3, seed=9)
        b = lk.init_model(4, 6, 3, seed=9)
        c = lk.init_model(4, 6, 3, seed=10)
        for x, y in zip(a.as_tuple(), b.as_tuple()):
            np.testing.assert_array_equal(x, y)
        assert not np.array_equal(a.w1, c.w1)

    def test_invalid_dims(self):
        with pytest.raises(ValueError):
            lk.init_model(0, 5, 3, seed=0)
        with pytest.raises(ValueError):
            lk.init_model(3, 5, 1, seed=0)


class TestForward:
    def test_probability_rows(self):
        params = lk.init_model(5, 7, 4, seed=1)
        X, _ = tiny_batch(1)
        hidden, probs = lk.forward(params, X)
        assert hidden.shape == (12, 7) and probs.shape == (12, 4)
        assert np.all(hidden >= 0.0)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(probs > 0.0)

    def test_large_logits_stay_finite(self):
        params = lk.init_model(2, 3, 2, seed=0)
        scaled = lk.MlpParams(
            params.w1 * 500.0, params.b1, params.w2 * 500.0, params.b2
        )
        _, probs = lk.forward(scaled, np.array([[1.0, -1.0]]))
        assert np.all(np.isfinite(probs))

    def test_rejects_bad_input(self):
        params = lk.init_model(3, 4, 2, seed=0)
        with pytest.raises(ValueError):
            lk.forward(params, np.array([[1.0, np.nan, 0.0]]))
        with pytest.raises(ValueError):
            lk.forward(params, np.zeros((2, 5)))

    def test_forward_mac_count_exact(self):
        params = lk.init_model(9, 22, 11, seed=0)
        X = np.random.default_rng(0).uniform(size=(100, 9))
        with lk.mac_counter.counting():
            lk.forward(params, X)
        snap = lk.mac_counter.snapshot()
        assert snap["forward"] == 100 * (9 * 22 + 22 * 11)


class TestCrossEntropy:
    def test_uniform_probabilities(self):
        probs = np.full((5, 11), 1.0 / 11.0)
        assert lk.cross_entropy(probs, np.zeros(5, dtype=int)) == pytest.approx(
            math.log(11.0), abs=1e-12
        )

    def test_clipping_floor(self):
        # True-class probability 0 clips to 1e-12: loss is 12*ln(10).
        probs = np.array([[0.0, 1.0]])
        assert lk.cross_entropy(probs, np.array([0])) == pytest.approx(
            12.0 * math.log(10.0), abs=1e-9
        )

    def test_perfect_prediction(self):
        probs = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert lk.cross_entropy(probs, np.array([0, 1])) == 0.0

    def test_label_out_of_range(self):
        probs = np.full((2, 3), 1.0 / 3.0)
        with pytest.raises(ValueError):
            lk.cross_entropy(probs, np.array([0, 3]))

    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            lk.cross_entropy(np.array([[0.4, 0.4]]), np.array([0]))

    def test_batch_order_invariance(self):
        rng = np.random.default_rng(5)
        probs = rng.dirichlet(np.ones(4), size=20)
        y = rng.integers(0, 4, 20)
        perm = rng.permutation(20)
        assert lk.cross_entropy(probs, y) == pytest.approx(
            lk.cross_entropy(probs[perm], y[perm]), rel=1e-15
        )


class TestBackward:
    def test_matches_finite_differences(self):
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            k = int(rng.integers(2, 8))
            h = int(rng.integers(2, 10))
            c = int(rng.integers(2, 6))
            n = int(rng.integers(1, 10))
            params = lk.init_model(k, h, c, seed=seed)
            X = rng.uniform(-1, 1, size=(n, k))
            y = rng.integers(0, c, size=n)
            grads = lk.backward(params, X, y)
            numeric = numeric_gradients(params, X, y)
            assert max_relative_error(grads, numeric) < 1e-4

    def test_relu_dead_at_exact_zero(self):
        # Zero inputs and zero biases put every pre-activation at exactly 0;
        # the strict mask makes all hidden-layer gradients vanish.
        params = lk.init_model(3, 4, 2, seed=0)
        X = np.zeros((5, 3))
        y = np.zeros(5, dtype=int)
        grads = lk.backward(params, X, y)
        np.testing.assert_array_equal(grads.w1, np.zeros((4, 3)))
        np.testing.assert_array_equal(grads.b1, np.zeros(4))

    def test_gradient_shapes_match_params(self):
        params = lk.init_model(5, 7, 3, seed=2)
        X, y = tiny_batch(2, k=5, c=3)
        grads = lk.backward(params, X, y)
        for g, p in zip(grads.as_tuple(), params.as_tuple()):
            assert g.shape == p.shape

    def test_backward_mac_count(self):
        params = lk.init_model(9, 22, 11, seed=0)
        X = np.random.default_rng(1).uniform(size=(50, 9))
        y = np.random.default_rng(2).integers(0, 11, 50)
        with lk.mac_counter.counting():
            lk.backward(params, X, y)
        snap = lk.mac_counter.snapshot()
        fwd = 50 * (9 * 22 + 22 * 11)
        assert snap["forward"] == fwd
        # Three products: delta^T@hidden, delta@w2, delta_h^T@X.
        assert snap["backward"] == 50 * (2 * 11 * 22 + 22 * 9)
        assert fwd <= snap["backward"] <= 3 * fwd


class TestSgd:
    def test_exact_update(self):
        params = lk.init_model(3, 4, 2, seed=1)
        X, y = tiny_batch(1, k=3, c=2)
        grads = lk.backward(params, X, y)
        updated = lk.sgd_step(params, grads, 0.1)
        for p, g, u in zip(params.as_tuple(), grads.as_tuple(), updated.as_tuple()):
            np.testing.assert_array_equal(u, p - 0.1 * g)

    def test_inputs_validated(self):
        params = lk.init_model(3, 4, 2, seed=1)
        grads = lk.backward(params, *tiny_batch(1, k=3, c=2))
        with pytest.raises(ValueError):
            lk.sgd_step(params, grads, 0.0)
        bad = lk.Gradients(
            np.zeros((1, 1)), np.zeros(1), np.zeros((1, 1)), np.zeros(1)
        )
        with pytest.raises(ValueError):
            lk.sgd_step(params, bad, 0.1)

    def test_full_batch_step_decreases_loss(self):
        # Line-search-style property: at eta=1e-3 the full-batch step should
        # descend; if not, halving the rate a few times must find descent.
        rng = np.random.default_rng(17)
        for trial in range(10):
            params = lk.init_model(4, 6, 3, seed=trial)
            X = rng.uniform(-1, 1, size=(30, 4))
            y = rng.integers(0, 3, size=30)
            _, probs = lk.forward(params, X)
            before = lk.cross_entropy(probs, y)
            grads = lk.backward(params, X, y)
            eta = 1e-3
            for _ in range(10):
                stepped = lk.sgd_step(params, grads, eta)
                _, probs = lk.forward(stepped, X)
                after = lk.cross_entropy(probs, y)
                if after < before:
                    break
                eta /= 2.0
            assert after < before


class TestAdam:
    def test_first_step_closed_form(self):
        params = lk.init_model(3, 5, 2, seed=3)
        X, y = tiny_batch(3, k=3, c=2)
        grads = lk.backward(params, X, y)
        state = lk.init_adam(params)
        updated, new_state = lk.adam_step(params, grads, state)
        for p, g, u in zip(params.as_tuple(), grads.as_tuple(), updated.as_tuple()):
            expected = p - state.alpha * g / (np.abs(g) + state.epsilon)
            np.testing.assert_allclose(u, expected, atol=1e-15)
        assert new_state.step == 1

    def test_state_immutable_and_momenta_updated(self):
        params = lk.init_model(3, 5, 2, seed=3)
        grads = lk.backward(params, *tiny_batch(3, k=3, c=2))
        state = lk.init_adam(params)
        m_before = state.m.w1.copy()
        _, new_state = lk.adam_step(params, grads, state)
        np.testing.assert_array_equal(state.m.w1, m_before)
        np.testing.assert_allclose(new_state.m.w1, 0.1 * grads.w1, atol=1e-15)
        np.testing.assert_allclose(
            new_state.v.w1, 0.001 * grads.w1**2, atol=1e-15
        )

    def test_two_steps_against_reference_recurrence(self):
        # Independent scalar recurrence for a fixed gradient sequence.
        params = lk.MlpParams(
            np.array([[1.0]]), np.zeros(1), np.zeros((2, 1)), np.zeros(2)
        )
        g1 = lk.Gradients(
            np.array([[0.3]]), np.zeros(1), np.zeros((2, 1)), np.zeros(2)
        )
        g2 = lk.Gradients(
            np.array([[-0.2]]), np.zeros(1), np.zeros((2, 1)), np.zeros(2)
        )
        state = lk.init_adam(params)
        p1, state = lk.adam_step(params, g1, state)
        p2, state = lk.adam_step(p1, g2, state)

        m = v = 0.0
        p = 1.0
        for t, g in ((1, 0.3), (2, -0.2)):
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            p -= 0.001 * (m / (1 - 0.9**t)) / (math.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert p2.w1[0, 0] == pytest.approx(p, abs=1e-15)
        assert state.step == 2

    def test_hyperparameter_validation(self):
        params = lk.init_model(2, 2, 2, seed=0)
        with pytest.raises(ValueError):
            lk.init_adam(params, alpha=0.0)
        with pytest.raises(ValueError):
            lk.init_adam(params, beta1=1.0)


class TestPredictEvaluate:
    def test_uniform_model_predicts_class_zero(self):
        # All-zero weights give uniform probabilities; argmax tie -> class 0.
        params = lk.MlpParams(
            np.zeros((4, 3)), np.zeros(4), np.zeros((5, 4)), np.zeros(5)
        )
        X = np.random.default_rng(0).uniform(size=(8, 3))
        np.testing.assert_array_equal(lk.predict(params, X), np.zeros(8, dtype=int))

    def test_evaluate_consistency(self):
        params = lk.init_model(3, 6, 3, seed=4)
        X, y = tiny_batch(4, k=3, c=3)
        from lockedge.mlp import evaluate

        loss, acc = evaluate(params, X, y)
        _, probs = lk.forward(params, X)
        assert loss == pytest.approx(lk.cross_entropy(probs, y), abs=1e-15)
        assert acc == pytest.approx((probs.argmax(1) == y).mean(), abs=1e-15)
