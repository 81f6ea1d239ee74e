"""Closed-form training-cost model and runtime multiply-accumulate counters.

Costs are expressed in scalar multiply-accumulate operations (MACs) and are
exact integers for integer arguments. The :class:`MacCounter` instruments the
actual matrix products executed by the pipeline so the closed forms can be
checked against reality instead of trusted.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .validation import positive_int

# Counter phases used by the pipeline. "pca" covers only the covariance
# product so its count can be compared against N*d^2 exactly; the projection
# product is tracked separately.
PHASE_PCA = "pca"
PHASE_PROJECTION = "projection"
PHASE_FORWARD = "forward"
PHASE_BACKWARD = "backward"


# ---------------------------------------------------------------------------
# closed-form costs


def pca_cost(n_samples: int, n_features: int) -> int:
    """MACs to fit PCA: covariance build plus cubic eigendecomposition term.

    ``N*d*min(N, d) + d**3``.
    """
    n = positive_int(n_samples, "n_samples")
    d = positive_int(n_features, "n_features")
    return n * d * min(n, d) + d**3


def nn_train_cost(
    epochs: int,
    n_samples: int,
    n_inputs: int,
    hidden_units: int,
    n_classes: int,
) -> int:
    """Forward-pass MACs over full training: ``e*N*(k*h + h*c)``."""
    e = positive_int(epochs, "epochs")
    n = positive_int(n_samples, "n_samples")
    k = positive_int(n_inputs, "n_inputs")
    h = positive_int(hidden_units, "hidden_units")
    c = positive_int(n_classes, "n_classes")
    return e * n * (k * h + h * c)


def nn_train_cost_multilayer(
    epochs: int,
    n_samples: int,
    n_inputs: int,
    hidden_sizes: Sequence[int],
    n_classes: int,
) -> int:
    """Multi-layer generalization of :func:`nn_train_cost`.

    ``e*N*(k*h1 + sum_i h_i*h_{i+1} + h_last*c)``; with a single hidden layer
    this collapses to the single-layer form.
    """
    e = positive_int(epochs, "epochs")
    n = positive_int(n_samples, "n_samples")
    k = positive_int(n_inputs, "n_inputs")
    c = positive_int(n_classes, "n_classes")
    sizes = [positive_int(h, "hidden size") for h in hidden_sizes]
    if not sizes:
        raise ValueError("at least one hidden layer is required")
    per_sample = k * sizes[0]
    for a, b in zip(sizes, sizes[1:]):
        per_sample += a * b
    per_sample += sizes[-1] * c
    return e * n * per_sample


@dataclass(frozen=True)
class CostEstimate:
    """Cost breakdown for the full pipeline, in MACs."""

    pca: int
    network: int

    @property
    def total(self) -> int:
        return self.pca + self.network


def total_cost(
    epochs: int,
    n_samples: int,
    n_features: int,
    n_components: int,
    hidden_units: int,
    n_classes: int,
) -> CostEstimate:
    """Pipeline cost ``pca_cost + nn_train_cost`` with reduced inputs.

    Raises if ``n_components > n_features``: the reduction cannot widen data.
    """
    d = positive_int(n_features, "n_features")
    k = positive_int(n_components, "n_components")
    if k > d:
        raise ValueError(
            f"n_components={k} exceeds n_features={d}; reduction cannot widen"
        )
    return CostEstimate(
        pca=pca_cost(n_samples, d),
        network=nn_train_cost(epochs, n_samples, k, hidden_units, n_classes),
    )


def k_bound(
    n_samples: int, n_features: int, epochs: int, hidden_units: int
) -> float:
    """Break-even component count: the pipeline is cheaper than training the
    un-reduced network whenever ``k`` is below this bound.

    ``d * (1 - min(N, d)/(e*h) - d**2/(e*N*h))``. May be negative: then the
    reduction can never pay for itself at these sizes.
    """
    n = positive_int(n_samples, "n_samples")
    d = positive_int(n_features, "n_features")
    e = positive_int(epochs, "epochs")
    h = positive_int(hidden_units, "hidden_units")
    return d * (1.0 - min(n, d) / (e * h) - d**2 / (e * n * h))


def cost_table(
    hidden_values: Sequence[int],
    epochs: int,
    n_samples: int,
    n_features: int,
    n_components: int,
    n_classes: int,
) -> list[dict]:
    """Cost comparison rows over a range of hidden-layer widths.

    Each row holds the un-reduced network cost, the pipeline cost with
    ``n_components`` inputs, and their ratio.
    """
    rows = []
    for h in hidden_values:
        nn = nn_train_cost(epochs, n_samples, n_features, h, n_classes)
        reduced = total_cost(
            epochs, n_samples, n_features, n_components, h, n_classes
        ).total
        rows.append(
            {
                "hidden_units": int(h),
                "cost_nn": nn,
                "cost_lockedge": reduced,
                "ratio": nn / reduced,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# runtime instrumentation


@dataclass
class MacCounter:
    """Thread-safe per-phase MAC tally. Disabled (zero overhead) by default.

    Counts only grow; ``reset`` is the only way down. ``counting`` enables the
    tally for a scope, ``paused`` suspends it (used around evaluation passes
    so training-phase counts stay exact).
    """

    enabled: bool = False
    _phases: dict[str, int] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, phase: str, macs: int) -> None:
        if not self.enabled:
            return
        if macs < 0:
            raise ValueError("MAC increments must be non-negative")
        with self._lock:
            self._phases[phase] = self._phases.get(phase, 0) + int(macs)

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(self._phases)

    def total(self) -> int:
        with self._lock:
            return sum(self._phases.values())

    def reset(self) -> None:
        with self._lock:
            self._phases.clear()

    @contextmanager
    def counting(self):
        previous = self.enabled
        self.enabled = True
        try:
            yield self
        finally:
            self.enabled = previous

    @contextmanager
    def paused(self):
        previous = self.enabled
        self.enabled = False
        try:
            yield self
        finally:
            self.enabled = previous


# Process-wide counter used by the pipeline's counted matrix products.
mac_counter = MacCounter()


def counted_matmul(a: np.ndarray, b: np.ndarray, phase: str) -> np.ndarray:
    """``a @ b`` that charges ``a.rows * a.cols * b.cols`` MACs to ``phase``.

    The count is derived from the actual operand shapes, so formula checks
    compare against what really ran, not against the formula being checked.
    """
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("counted_matmul requires 2-D operands")
    mac_counter.add(phase, a.shape[0] * a.shape[1] * b.shape[1])
    return a @ b


@dataclass(frozen=True)
class CountCheck:
    """One measured-vs-predicted comparison from :func:`verify_counts`."""

    name: str
    measured: int
    predicted_low: int
    predicted_high: int

    @property
    def ok(self) -> bool:
        return self.predicted_low <= self.measured <= self.predicted_high


@dataclass(frozen=True)
class CountReport:
    checks: tuple[CountCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            bounds = (
                f"= {c.predicted_low}"
                if c.predicted_low == c.predicted_high
                else f"in [{c.predicted_low}, {c.predicted_high}]"
            )
            status = "ok" if c.ok else "MISMATCH"
            out.append(f"{c.name}: measured {c.measured}, expected {bounds} [{status}]")
        return out


def verify_counts(
    snapshot: dict[str, int],
    *,
    epochs: int,
    n_samples: int,
    n_features: int | None,
    n_components: int,
    hidden_units: int,
    n_classes: int,
) -> CountReport:
    """Compare a counter snapshot from a training run to the closed forms.

    Forward MACs must equal ``e*N*(k*h + h*c)`` exactly; backward MACs must
    land within one to three times the forward count; the PCA covariance
    product, when present, must equal ``N*d**2`` exactly.
    """
    e = positive_int(epochs, "epochs")
    n = positive_int(n_samples, "n_samples")
    k = positive_int(n_components, "n_components")
    h = positive_int(hidden_units, "hidden_units")
    c = positive_int(n_classes, "n_classes")

    forward_expected = e * n * (k * h + h * c)
    checks = [
        CountCheck(
            name="forward",
            measured=snapshot.get(PHASE_FORWARD, 0),
            predicted_low=forward_expected,
            predicted_high=forward_expected,
        ),
        CountCheck(
            name="backward",
            measured=snapshot.get(PHASE_BACKWARD, 0),
            predicted_low=forward_expected,
            predicted_high=3 * forward_expected,
        ),
    ]
    if n_features is not None:
        d = positive_int(n_features, "n_features")
        checks.append(
            CountCheck(
                name="pca_covariance",
                measured=snapshot.get(PHASE_PCA, 0),
                predicted_low=n * d * d,
                predicted_high=n * d * d,
            )
        )
    return CountReport(checks=tuple(checks))
