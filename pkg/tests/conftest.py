"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

import numpy as np
import pytest

import lockedge as lk

# Acceptance-criterion outcomes, printed once in the terminal summary so the
# pass/fail line per criterion survives pytest's output capture.
_ACCEPTANCE_RESULTS: list[tuple[int, str, str]] = []


def record_acceptance(number: int, name: str, status: str) -> None:
    _ACCEPTANCE_RESULTS.append((number, name, status))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for number, name, status in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"ACCEPTANCE {number} {name}: {status}")


@pytest.fixture(autouse=True)
def _counter_clean():
    """Keep the global MAC counter disabled and empty between tests."""
    lk.mac_counter.enabled = False
    lk.mac_counter.reset()
    yield
    lk.mac_counter.enabled = False
    lk.mac_counter.reset()


def blob_specs(scale: int = 1) -> list[lk.ClassSpec]:
    """Four well-separated Gaussian blobs in the 6-d unit cube.

    After a 0.95-variance reduction the class means stay distinct, so a
    shallow net can drive accuracy to ~1.0 quickly.
    """
    return [
        lk.ClassSpec(mean=(0.15, 0.15, 0.15, 0.15, 0.15, 0.15), stddev=0.05, count=500 * scale),
        lk.ClassSpec(mean=(0.85, 0.85, 0.15, 0.15, 0.50, 0.50), stddev=0.05, count=500 * scale),
        lk.ClassSpec(mean=(0.15, 0.85, 0.85, 0.50, 0.15, 0.85), stddev=0.05, count=500 * scale),
        lk.ClassSpec(mean=(0.85, 0.15, 0.50, 0.85, 0.85, 0.15), stddev=0.05, count=500 * scale),
    ]


@pytest.fixture
def blobs() -> lk.Dataset:
    return lk.generate_synthetic(blob_specs(), seed=11)


@pytest.fixture
def small_blobs() -> lk.Dataset:
    specs = [
        lk.ClassSpec(mean=(0.2, 0.2, 0.8), stddev=0.08, count=60),
        lk.ClassSpec(mean=(0.8, 0.8, 0.2), stddev=0.08, count=60),
        lk.ClassSpec(mean=(0.2, 0.8, 0.5), stddev=0.08, count=60),
    ]
    return lk.generate_synthetic(specs, seed=7)


# ---------------------------------------------------------------------------
# independent oracles (never shared with the implementation)


def mann_whitney_auc(scores: np.ndarray, truth: np.ndarray) -> float:
    """Rank-statistic AUC: P(score_pos > score_neg) + 0.5 * P(tie)."""
    pos = scores[truth == 1]
    neg = scores[truth == 0]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need both positives and negatives")
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (pos.size * neg.size)


def numeric_gradients(params: lk.MlpParams, X: np.ndarray, y: np.ndarray, step: float = 1e-6):
    """Central-difference gradients of the batch loss, parameter by parameter."""

    def loss_at(p: lk.MlpParams) -> float:
        _, probs = lk.forward(p, X)
        return lk.cross_entropy(probs, y)

    fields = ("w1", "b1", "w2", "b2")
    out = {}
    for name in fields:
        base = getattr(params, name)
        grad = np.zeros_like(base)
        flat = base.ravel()
        gflat = grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = loss_at(params)
            flat[i] = orig - step
            lo = loss_at(params)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * step)
        out[name] = grad
    return out


def max_relative_error(analytic, numeric, floor: float = 1e-4) -> float:
    """Worst-case relative disagreement; the floor absorbs finite-difference
    noise on near-zero entries (central differences bottom out near 1e-10)."""
    err = 0.0
    for name, num in numeric.items():
        ana = getattr(analytic, name)
        denom = np.maximum(np.abs(ana) + np.abs(num), floor)
        err = max(err, float(np.max(np.abs(ana - num) / denom)))
    return err
