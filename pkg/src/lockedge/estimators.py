"""Scikit-learn-style estimator fronts for the classifier and full pipeline.

These wrap the functional core (init/forward/step functions) in the familiar
fit/predict surface so the models compose with sklearn tooling. Class labels
are mapped through ``classes_`` like any sklearn classifier, so ``y`` need not
be a dense 0..c-1 range.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .mlp import forward
from .pca import PCAReducer
from .training import TrainConfig, fit_network
from .validation import as_matrix, check_fitted


class SoftmaxNetwork(BaseEstimator, ClassifierMixin):
    """One-hidden-layer ReLU/softmax classifier with Adam or SGD training.

    Parameters
    ----------
    hidden_units : int, default=22
        Width of the single hidden layer.
    epochs : int, default=50
        Full passes over the training data.
    batch_size : int, default=256
        Minibatch size; values >= n_samples give full-batch steps.
    optimizer : {"adam", "sgd"}, default="adam"
    learning_rate : float or None, default=None
        None selects 0.001 for adam and 0.01 for sgd.
    output_bias : bool, default=True
        When False the output layer keeps a zero bias.
    seed : int, default=0
        Controls weight init and epoch shuffling; fixed seed, fixed model.

    Attributes
    ----------
    classes_ : ndarray
        Sorted unique labels seen in fit.
    net_ : MlpParams
        Trained weights.
    history_ : TrainHistory
        Per-epoch loss and accuracy.
    """

    def __init__(
        self,
        hidden_units: int = 22,
        epochs: int = 50,
        batch_size: int = 256,
        optimizer: str = "adam",
        learning_rate: float | None = None,
        output_bias: bool = True,
        seed: int = 0,
    ):
        self.hidden_units = hidden_units
        self.epochs = epochs
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.output_bias = output_bias
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            hidden_units=self.hidden_units,
            epochs=self.epochs,
            batch_size=self.batch_size,
            optimizer=self.optimizer,
            learning_rate=self.learning_rate,
            output_bias=self.output_bias,
            seed=self.seed,
        )

    def fit(self, X, y) -> "SoftmaxNetwork":
        X = as_matrix(X, "X")
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one label per row of X")
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("need at least 2 classes to fit")
        self.net_, _, self.history_ = fit_network(
            X, encoded.astype(np.int64), int(self.classes_.size), self._config()
        )
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_fitted(self, "net_")
        X = as_matrix(X, "X", n_cols=self.net_.n_inputs)
        _, probs = forward(self.net_, X)
        return probs

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        return self.classes_[probs.argmax(axis=1)]


class LocKedgeClassifier(BaseEstimator, ClassifierMixin):
    """Full pipeline: variance-targeted PCA reduction, then the softmax net.

    Expects min-max-encoded features (any real features work; the reducer
    centers them). See :class:`SoftmaxNetwork` for the shared training
    parameters.

    Attributes
    ----------
    reducer_ : PCAReducer
        Fitted reduction; ``reducer_.n_components_`` is the retained rank.
    network_ : SoftmaxNetwork
        Classifier trained on the reduced features.
    classes_ : ndarray
        Sorted unique labels seen in fit.
    """

    def __init__(
        self,
        variance_target: float = 0.95,
        hidden_units: int = 22,
        epochs: int = 50,
        batch_size: int = 256,
        optimizer: str = "adam",
        learning_rate: float | None = None,
        output_bias: bool = True,
        seed: int = 0,
    ):
        self.variance_target = variance_target
        self.hidden_units = hidden_units
        self.epochs = epochs
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.output_bias = output_bias
        self.seed = seed

    def fit(self, X, y) -> "LocKedgeClassifier":
        X = as_matrix(X, "X")
        reducer = PCAReducer(variance_target=self.variance_target).fit(X)
        if float(reducer.eigenvalues_.sum()) <= 0.0:
            raise ValueError("features have zero variance; nothing to reduce")
        network = SoftmaxNetwork(
            hidden_units=self.hidden_units,
            epochs=self.epochs,
            batch_size=self.batch_size,
            optimizer=self.optimizer,
            learning_rate=self.learning_rate,
            output_bias=self.output_bias,
            seed=self.seed,
        )
        network.fit(reducer.transform(X), y)
        self.reducer_ = reducer
        self.network_ = network
        self.classes_ = network.classes_
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_fitted(self, "network_")
        return self.network_.predict_proba(self.reducer_.transform(X))

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        return self.classes_[probs.argmax(axis=1)]
