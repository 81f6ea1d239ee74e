"""One-hidden-layer ReLU/softmax classifier: forward, loss, gradients, steps.

All arithmetic is float64. Parameter and optimizer containers are immutable;
update steps return fresh instances, which keeps federated bookkeeping free of
aliasing bugs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complexity import PHASE_BACKWARD, PHASE_FORWARD, counted_matmul
from .validation import as_labels, as_matrix

# Loss clipping floor: log-loss of a fully wrong, fully confident prediction
# saturates at -log(1e-12) instead of overflowing.
PROB_FLOOR = 1e-12

_ROW_SUM_TOL = 1e-6


@dataclass(frozen=True)
class MlpParams:
    """Network weights: hidden layer (w1, b1) and output layer (w2, b2)."""

    w1: np.ndarray  # (hidden, inputs)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (classes, hidden)
    b2: np.ndarray  # (classes,)

    @property
    def n_inputs(self) -> int:
        return int(self.w1.shape[1])

    @property
    def hidden_units(self) -> int:
        return int(self.w1.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.w2.shape[0])

    def as_tuple(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.w1, self.b1, self.w2, self.b2)


@dataclass(frozen=True)
class Gradients:
    """Loss gradients, shaped exactly like :class:`MlpParams`."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def as_tuple(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.w1, self.b1, self.w2, self.b2)


def init_model(
    n_inputs: int, hidden_units: int, n_classes: int, seed: int
) -> MlpParams:
    """Seeded uniform(+-sqrt(6/fan_in)) weight init with zero biases."""
    if n_inputs < 1 or hidden_units < 1 or n_classes < 2:
        raise ValueError(
            "need n_inputs >= 1, hidden_units >= 1 and n_classes >= 2"
        )
    rng = np.random.default_rng(seed)
    lim1 = math.sqrt(6.0 / n_inputs)
    lim2 = math.sqrt(6.0 / hidden_units)
    return MlpParams(
        w1=rng.uniform(-lim1, lim1, size=(hidden_units, n_inputs)),
        b1=np.zeros(hidden_units),
        w2=rng.uniform(-lim2, lim2, size=(n_classes, hidden_units)),
        b2=np.zeros(n_classes),
    )


def forward(params: MlpParams, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward pass; returns ``(hidden, probs)``.

    Softmax subtracts the row maximum before exponentiation, so probabilities
    stay finite for any logit scale.
    """
    X = as_matrix(batch, "batch", n_cols=params.n_inputs)
    pre = counted_matmul(X, params.w1.T, PHASE_FORWARD) + params.b1
    hidden = np.maximum(pre, 0.0)
    logits = counted_matmul(hidden, params.w2.T, PHASE_FORWARD) + params.b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=1, keepdims=True)
    return hidden, probs


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of the true class, clipped below.

    ``probs`` rows must sum to 1 within 1e-6; labels must lie in the class
    range implied by the row width.
    """
    P = as_matrix(probs, "probs")
    y = as_labels(labels, "labels", n_classes=P.shape[1], n_rows=P.shape[0])
    if np.max(np.abs(P.sum(axis=1) - 1.0)) > _ROW_SUM_TOL:
        raise ValueError("probability rows must sum to 1 within 1e-6")
    picked = np.clip(P[np.arange(P.shape[0]), y], PROB_FLOOR, 1.0)
    return float(-np.log(picked).mean())


def forward_backward(
    params: MlpParams, batch: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, float, Gradients]:
    """One combined pass; returns ``(probs, loss, grads)``.

    Gradients are averaged over the batch. The ReLU derivative is taken as 0
    at exactly 0 (strict positive-part mask on the pre-activation).
    """
    X = as_matrix(batch, "batch", n_cols=params.n_inputs)
    y = as_labels(labels, "labels", n_classes=params.n_classes, n_rows=X.shape[0])
    n = X.shape[0]

    pre = counted_matmul(X, params.w1.T, PHASE_FORWARD) + params.b1
    hidden = np.maximum(pre, 0.0)
    logits = counted_matmul(hidden, params.w2.T, PHASE_FORWARD) + params.b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=1, keepdims=True)

    picked = np.clip(probs[np.arange(n), y], PROB_FLOOR, 1.0)
    loss = float(-np.log(picked).mean())

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w2 = counted_matmul(delta.T, hidden, PHASE_BACKWARD)
    grad_b2 = delta.sum(axis=0)
    delta_h = counted_matmul(delta, params.w2, PHASE_BACKWARD) * (pre > 0.0)
    grad_w1 = counted_matmul(delta_h.T, X, PHASE_BACKWARD)
    grad_b1 = delta_h.sum(axis=0)
    return probs, loss, Gradients(w1=grad_w1, b1=grad_b1, w2=grad_w2, b2=grad_b2)


def backward(params: MlpParams, batch: np.ndarray, labels: np.ndarray) -> Gradients:
    """Batch-mean gradients of the cross-entropy loss."""
    _, _, grads = forward_backward(params, batch, labels)
    return grads


def evaluate(
    params: MlpParams, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, float]:
    """Loss and accuracy of ``params`` on a labelled batch."""
    y = as_labels(labels, "labels", n_classes=params.n_classes)
    _, probs = forward(params, batch)
    loss = cross_entropy(probs, y)
    accuracy = float((probs.argmax(axis=1) == y).mean())
    return loss, accuracy


def predict(params: MlpParams, batch: np.ndarray) -> np.ndarray:
    """Hard class decisions; argmax ties resolve to the lowest class index."""
    _, probs = forward(params, batch)
    return probs.argmax(axis=1).astype(np.int64)


# ---------------------------------------------------------------------------
# update steps


def _check_grads(params: MlpParams, grads: Gradients) -> None:
    for p, g in zip(params.as_tuple(), grads.as_tuple()):
        if p.shape != g.shape:
            raise ValueError("gradient shapes do not match parameters")
        if not np.isfinite(g).all():
            raise ValueError("gradients contain non-finite values")


def sgd_step(params: MlpParams, grads: Gradients, learning_rate: float) -> MlpParams:
    """Plain gradient descent: ``p <- p - lr * g``."""
    if learning_rate <= 0.0:
        raise ValueError("learning_rate must be positive")
    _check_grads(params, grads)
    w1, b1, w2, b2 = (
        p - learning_rate * g
        for p, g in zip(params.as_tuple(), grads.as_tuple())
    )
    return MlpParams(w1=w1, b1=b1, w2=w2, b2=b2)


@dataclass(frozen=True)
class AdamState:
    """Adam moment accumulators and hyperparameters; ``step`` counts updates."""

    step: int
    m: MlpParams
    v: MlpParams
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(
    params: MlpParams,
    alpha: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    """Zeroed Adam state shaped after ``params``."""
    if alpha <= 0.0 or epsilon <= 0.0:
        raise ValueError("alpha and epsilon must be positive")
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ValueError("beta1 and beta2 must lie in [0, 1)")
    zeros = MlpParams(*(np.zeros_like(p) for p in params.as_tuple()))
    zeros2 = MlpParams(*(np.zeros_like(p) for p in params.as_tuple()))
    return AdamState(
        step=0, m=zeros, v=zeros2,
        alpha=alpha, beta1=beta1, beta2=beta2, epsilon=epsilon,
    )


def adam_step(
    params: MlpParams, grads: Gradients, state: AdamState
) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam update.

    The denominator is ``sqrt(v_hat) + epsilon`` (epsilon added outside the
    root), so the very first step moves each weight by almost exactly
    ``alpha * sign(gradient)``.
    """
    _check_grads(params, grads)
    t = state.step + 1
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t

    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(
        params.as_tuple(), grads.as_tuple(), state.m.as_tuple(), state.v.as_tuple()
    ):
        m_next = state.beta1 * m + (1.0 - state.beta1) * g
        v_next = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        m_hat = m_next / bc1
        v_hat = v_next / bc2
        new_p.append(p - state.alpha * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m_next)
        new_v.append(v_next)

    return (
        MlpParams(*new_p),
        AdamState(
            step=t,
            m=MlpParams(*new_m),
            v=MlpParams(*new_v),
            alpha=state.alpha,
            beta1=state.beta1,
            beta2=state.beta2,
            epsilon=state.epsilon,
        ),
    )
