"""Self-contained PCA: covariance, cyclic Jacobi eigensolver, rank selection.

The eigensolver is written out rather than delegated so the whole reduction
step can run on minimal numeric runtimes; tests cross-check it against an
independent LAPACK-based oracle.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .complexity import PHASE_PCA, PHASE_PROJECTION, counted_matmul
from .dataset import Dataset
from .validation import as_matrix, check_fitted

# Jacobi sweep controls: rotate until the largest off-diagonal entry falls
# below this fraction of the input's Frobenius norm, or the sweep cap hits.
_JACOBI_TOL = 1e-12
_MAX_SWEEPS = 100

_SYMMETRY_TOL = 1e-10


class SymEigResult(NamedTuple):
    """Eigenvalues (nonincreasing) and matching eigenvectors (as columns)."""

    values: np.ndarray
    vectors: np.ndarray


def covariance(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Biased sample covariance ``(1/N) * M^T M`` of the centered rows.

    Returns ``(mean, cov)``. The product is symmetrized explicitly so the
    eigensolver's symmetry check cannot trip on accumulated roundoff.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    if n < 2:
        raise ValueError("covariance needs at least 2 samples")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = counted_matmul(centered.T, centered, PHASE_PCA) / n
    cov = (cov + cov.T) / 2.0
    return mean, cov


def eigen_sym(A: np.ndarray) -> SymEigResult:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Eigenvalues come back sorted nonincreasing (stable under ties); each
    eigenvector is signed so its largest-magnitude entry is positive, with
    magnitude ties broken toward the lowest index.

    Raises ``ValueError`` if ``A`` is not symmetric within 1e-10.
    """
    A = as_matrix(A, "A")
    d = A.shape[0]
    if A.shape[1] != d:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if np.max(np.abs(A - A.T)) > _SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric within 1e-10")

    work = ((A + A.T) / 2.0).copy()
    vectors = np.eye(d)
    threshold = _JACOBI_TOL * np.linalg.norm(A, "fro")

    for _ in range(_MAX_SWEEPS):
        off = _max_offdiag(work)
        if off <= threshold:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                _rotate(work, vectors, p, q)

    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    return SymEigResult(values=values, vectors=_fix_signs(vectors))


def _max_offdiag(A: np.ndarray) -> float:
    if A.shape[0] < 2:
        return 0.0
    mask = ~np.eye(A.shape[0], dtype=bool)
    return float(np.max(np.abs(A[mask])))


def _rotate(A: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    """One Givens rotation zeroing A[p, q], applied in place to A and V."""
    apq = A[p, q]
    if apq == 0.0:
        return
    theta = (A[q, q] - A[p, p]) / (2.0 * apq)
    # Smaller-magnitude root of t^2 + 2*t*theta - 1 = 0: keeps rotations small.
    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    if theta == 0.0:
        t = 1.0
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    row_p = A[p, :].copy()
    row_q = A[q, :].copy()
    A[p, :] = c * row_p - s * row_q
    A[q, :] = s * row_p + c * row_q
    col_p = A[:, p].copy()
    col_q = A[:, q].copy()
    A[:, p] = c * col_p - s * col_q
    A[:, q] = s * col_p + c * col_q
    A[p, q] = 0.0
    A[q, p] = 0.0

    vec_p = V[:, p].copy()
    vec_q = V[:, q].copy()
    V[:, p] = c * vec_p - s * vec_q
    V[:, q] = s * vec_p + c * vec_q


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        pivot = np.argmax(np.abs(out[:, j]))  # first max wins ties
        if out[pivot, j] < 0.0:
            out[:, j] = -out[:, j]
    return out


def select_rank(eigenvalues: np.ndarray, variance_target: float) -> tuple[int, float]:
    """Smallest k whose leading eigenvalue mass reaches ``variance_target``.

    Expects a nonincreasing spectrum. Returns ``(k, captured_ratio)``. A zero
    total mass degenerates to ``(1, 1.0)``.
    """
    if not 0.0 < variance_target <= 1.0:
        raise ValueError(
            f"variance_target must be in (0, 1], got {variance_target}"
        )
    values = np.asarray(eigenvalues, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("eigenvalues must be a non-empty 1-D array")
    if np.any(values < 0.0):
        raise ValueError("eigenvalues must be non-negative")
    cums = np.cumsum(values)
    total = cums[-1]
    if total <= 0.0:
        return 1, 1.0
    ratios = cums / total
    k = int(np.searchsorted(ratios, variance_target, side="left")) + 1
    k = min(k, values.size)
    return k, float(ratios[k - 1])


class PCAReducer(BaseEstimator, TransformerMixin):
    """Principal-component reduction keeping a target share of variance.

    Parameters
    ----------
    variance_target : float, default=0.95
        Keep the smallest leading set of components whose eigenvalue mass
        reaches this fraction of the trace.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
        Per-feature training mean subtracted before projection.
    eigenvalues_ : ndarray of shape (n_features,)
        Full covariance spectrum, nonincreasing, negatives clamped to zero.
    components_ : ndarray of shape (n_components_, n_features)
        Orthonormal component rows, leading eigenvectors first.
    n_components_ : int
        Retained component count.
    captured_ratio_ : float
        Eigenvalue mass actually captured by the retained components.
    """

    def __init__(self, variance_target: float = 0.95):
        self.variance_target = variance_target

    def fit(self, X, y=None) -> "PCAReducer":
        X = as_matrix(X, "X")
        mean, cov = covariance(X)
        values, vectors = eigen_sym(cov)
        values = np.maximum(values, 0.0)
        k, captured = select_rank(values, self.variance_target)
        components = vectors[:, :k].T.copy()
        if float(values.sum()) <= 0.0:
            # Degenerate constant dataset: keep a deterministic axis.
            components = np.zeros((1, X.shape[1]))
            components[0, 0] = 1.0
        self.mean_ = mean
        self.eigenvalues_ = values
        self.components_ = components
        self.n_components_ = k
        self.captured_ratio_ = captured
        return self

    def transform(self, X) -> np.ndarray:
        check_fitted(self, "components_")
        X = as_matrix(X, "X", n_cols=self.mean_.shape[0])
        return counted_matmul(X - self.mean_, self.components_.T, PHASE_PROJECTION)

    def to_dict(self, seed: int | None = None) -> dict:
        check_fitted(self, "components_")
        return {
            "version": 1,
            "kind": "pca",
            "seed": seed,
            "variance_target": self.variance_target,
            "n_features": int(self.mean_.shape[0]),
            "n_components": int(self.n_components_),
            "captured_ratio": float(self.captured_ratio_),
            "mean": self.mean_.tolist(),
            "eigenvalues": self.eigenvalues_.tolist(),
            "components": self.components_.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PCAReducer":
        if obj.get("kind") != "pca" or obj.get("version") != 1:
            raise ValueError("not a version-1 PCA artifact")
        reducer = cls(variance_target=float(obj["variance_target"]))
        reducer.mean_ = np.asarray(obj["mean"], dtype=np.float64)
        reducer.eigenvalues_ = np.asarray(obj["eigenvalues"], dtype=np.float64)
        reducer.components_ = np.asarray(obj["components"], dtype=np.float64)
        reducer.n_components_ = int(obj["n_components"])
        reducer.captured_ratio_ = float(obj["captured_ratio"])
        if reducer.components_.shape[0] != reducer.n_components_:
            raise ValueError("PCA artifact is inconsistent")
        return reducer


def transform_dataset(reducer: PCAReducer, data: Dataset) -> Dataset:
    """Project a dataset, carrying labels and group keys through unchanged."""
    from .schema import FeatureSchema, NUMERIC

    projected = reducer.transform(data.features)
    schema = FeatureSchema(
        feature_names=tuple(f"pc{i}" for i in range(projected.shape[1])),
        feature_kinds=(NUMERIC,) * projected.shape[1],
        label_column=data.schema.label_column,
        class_names=data.schema.class_names,
    )
    return Dataset(
        features=projected,
        labels=data.labels.copy(),
        schema=schema,
        group_keys=None if data.group_keys is None else data.group_keys.copy(),
    )
