"""Estimator fronts: sklearn conventions, label mapping, determinism."""

from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import lockedge as lk


def fast(cls, **kwargs):
    base = dict(hidden_units=8, epochs=8, batch_size=64, seed=2)
    base.update(kwargs)
    return cls(**base)


class TestSklearnConventions:
    @pytest.mark.parametrize("cls", [lk.SoftmaxNetwork, lk.LocKedgeClassifier])
    def test_get_params_round_trip(self, cls):
        est = fast(cls)
        params = est.get_params()
        assert params["hidden_units"] == 8
        rebuilt = cls(**params)
        assert rebuilt.get_params() == params

    @pytest.mark.parametrize("cls", [lk.SoftmaxNetwork, lk.LocKedgeClassifier])
    def test_clone(self, cls):
        est = fast(cls, epochs=3)
        copy = clone(est)
        assert copy.get_params() == est.get_params()
        assert copy is not est

    @pytest.mark.parametrize("cls", [lk.SoftmaxNetwork, lk.LocKedgeClassifier])
    def test_set_params(self, cls):
        est = fast(cls)
        est.set_params(epochs=11)
        assert est.get_params()["epochs"] == 11

    @pytest.mark.parametrize("cls", [lk.SoftmaxNetwork, lk.LocKedgeClassifier])
    def test_unfitted_raises(self, cls):
        with pytest.raises(NotFittedError):
            fast(cls).predict(np.zeros((2, 3)))

    def test_fit_returns_self(self, small_blobs):
        est = fast(lk.LocKedgeClassifier)
        assert est.fit(small_blobs.features, small_blobs.labels) is est


class TestFitPredict:
    def test_pipeline_learns_blobs(self, blobs):
        est = fast(lk.LocKedgeClassifier, epochs=15)
        est.fit(blobs.features, blobs.labels)
        accuracy = float(
            (est.predict(blobs.features) == blobs.labels).mean()
        )
        assert accuracy >= 0.95
        assert est.reducer_.n_components_ <= blobs.n_features

    def test_network_learns_reduced_features(self, small_blobs):
        # The bare network sees raw features and the default Adam rate, so it
        # needs a few hundred steps on this tiny set.
        est = fast(lk.SoftmaxNetwork, epochs=120, batch_size=32)
        est.fit(small_blobs.features, small_blobs.labels)
        accuracy = float(
            (est.predict(small_blobs.features) == small_blobs.labels).mean()
        )
        assert accuracy >= 0.9

    def test_proba_rows_sum_to_one(self, small_blobs):
        est = fast(lk.SoftmaxNetwork, epochs=2)
        est.fit(small_blobs.features, small_blobs.labels)
        probs = est.predict_proba(small_blobs.features)
        assert probs.shape == (small_blobs.n_samples, 3)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_non_dense_labels(self, small_blobs):
        # Labels {3, 7, 9} must map through classes_ and come back untouched.
        relabeled = np.array([3, 7, 9])[small_blobs.labels]
        est = fast(lk.SoftmaxNetwork, epochs=10)
        est.fit(small_blobs.features, relabeled)
        np.testing.assert_array_equal(est.classes_, [3, 7, 9])
        preds = est.predict(small_blobs.features)
        assert set(np.unique(preds)).issubset({3, 7, 9})

    def test_string_labels(self, small_blobs):
        names = np.array(["dos", "normal", "scan"])[small_blobs.labels]
        est = fast(lk.LocKedgeClassifier, epochs=5)
        est.fit(small_blobs.features, names)
        preds = est.predict(small_blobs.features)
        assert set(np.unique(preds)).issubset({"dos", "normal", "scan"})

    def test_determinism(self, small_blobs):
        a = fast(lk.LocKedgeClassifier).fit(small_blobs.features, small_blobs.labels)
        b = fast(lk.LocKedgeClassifier).fit(small_blobs.features, small_blobs.labels)
        np.testing.assert_array_equal(
            a.predict_proba(small_blobs.features),
            b.predict_proba(small_blobs.features),
        )
        assert lk.params_digest(a.network_.net_) == lk.params_digest(b.network_.net_)

    def test_seed_matters(self, small_blobs):
        a = fast(lk.SoftmaxNetwork, seed=1).fit(small_blobs.features, small_blobs.labels)
        b = fast(lk.SoftmaxNetwork, seed=2).fit(small_blobs.features, small_blobs.labels)
        assert lk.params_digest(a.net_) != lk.params_digest(b.net_)

    def test_history_recorded(self, small_blobs):
        est = fast(lk.SoftmaxNetwork, epochs=4)
        est.fit(small_blobs.features, small_blobs.labels)
        assert len(est.history_.series("train")) == 4


class TestValidation:
    def test_single_class_rejected(self, small_blobs):
        with pytest.raises(ValueError, match="2 classes"):
            fast(lk.SoftmaxNetwork).fit(
                small_blobs.features, np.zeros(small_blobs.n_samples, dtype=int)
            )

    def test_length_mismatch(self, small_blobs):
        with pytest.raises(ValueError):
            fast(lk.SoftmaxNetwork).fit(small_blobs.features, np.array([0, 1]))

    def test_non_finite_features(self):
        X = np.array([[0.0, np.inf], [1.0, 2.0]])
        with pytest.raises(ValueError):
            fast(lk.SoftmaxNetwork).fit(X, np.array([0, 1]))

    def test_zero_variance_features(self):
        X = np.full((10, 3), 2.5)
        y = np.array([0, 1] * 5)
        with pytest.raises(ValueError, match="zero variance"):
            fast(lk.LocKedgeClassifier).fit(X, y)

    def test_predict_width_checked(self, small_blobs):
        est = fast(lk.SoftmaxNetwork, epochs=2)
        est.fit(small_blobs.features, small_blobs.labels)
        with pytest.raises(ValueError):
            est.predict(np.zeros((2, 7)))

    def test_bad_hyperparameters_surface_at_fit(self, small_blobs):
        est = lk.SoftmaxNetwork(epochs=0)
        with pytest.raises(ValueError):
            est.fit(small_blobs.features, small_blobs.labels)
