"""Deterministic eigendecomposition of the sample covariance X X^T / n.

For p > n the decomposition goes through the n x n Gram matrix
X^T X / n, whose nonzero eigenvalues equal those of the covariance;
covariance eigenvectors are recovered as X h / sqrt(n d). Eigenvector
signs are fixed (largest-magnitude entry positive, ties to the lowest
index) so results are reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrix, DimensionError
from .matrix_io import DataMatrix

# Eigenvalues below RANK_TOL * d_1 are treated as numerical zeros: they are
# clamped and their eigenvectors are not materialized.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class SampleEigen:
    """Spectrum of X X^T / n.

    ``d`` holds all min(p, n) eigenvalues in non-increasing order; ``U``
    holds only the retained leading eigenvectors (p x k, k possibly
    smaller than requested if the matrix is rank deficient). ``gamma``
    is the aspect ratio p / n of the source matrix.
    """

    d: np.ndarray
    U: np.ndarray
    gamma: float

    @property
    def k(self) -> int:
        return self.U.shape[1]

    @property
    def p(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class ScoreMatrix:
    """Sample PC scores, one row per retained component (k x n)."""

    scores: np.ndarray
    normalized: bool = False

    @property
    def k(self) -> int:
        return self.scores.shape[0]

    @property
    def n(self) -> int:
        return self.scores.shape[1]


def _fix_signs(U: np.ndarray) -> np.ndarray:
    """Make the largest-|entry| of each column positive (first on ties)."""
    if U.size == 0:
        return U
    idx = np.argmax(np.abs(U), axis=0)
    flip = U[idx, np.arange(U.shape[1])] < 0
    U[:, flip] *= -1.0
    return U


def sample_eigen(X: DataMatrix, k: int) -> SampleEigen:
    """Leading eigenpairs of the sample covariance of X.

    Returns all min(p, n) eigenvalues and the first ``k`` eigenvectors
    (fewer if the numerical rank is smaller). Raises DimensionError for
    k outside [1, min(p, n)] and DegenerateMatrix for an all-zero X.
    """
    p, n = X.p, X.n
    m = min(p, n)
    if not 1 <= k <= m:
        raise DimensionError(f"k must be in [1, {m}], got {k}")
    A = X.values
    if not A.any():
        raise DegenerateMatrix("cannot decompose an all-zero matrix")

    if p <= n:
        S = A @ A.T / n
        w, V = np.linalg.eigh(S)
        order = np.argsort(w, kind="stable")[::-1]
        d = w[order]
        vectors = V[:, order]
    else:
        G = A.T @ A / n
        w, H = np.linalg.eigh(G)
        order = np.argsort(w, kind="stable")[::-1]
        d = w[order]
        vectors = None  # built lazily from the Gram eigenvectors below
        H = H[:, order]

    d = np.where(d < RANK_TOL * max(d[0], 0.0), 0.0, d)
    k_eff = min(k, int(np.count_nonzero(d > 0)))
    if k_eff == 0:
        raise DegenerateMatrix("matrix has no positive eigenvalues")

    if p <= n:
        U = np.array(vectors[:, :k_eff])
    else:
        U = A @ (H[:, :k_eff] / np.sqrt(n * d[:k_eff]))
    U = _fix_signs(np.ascontiguousarray(U))
    return SampleEigen(d=d, U=U, gamma=p / n)


def pc_scores(X: DataMatrix, eig: SampleEigen, normalized: bool = False) -> ScoreMatrix:
    """Project the training matrix onto the retained eigenvectors.

    Row v is u_v^T X; with ``normalized`` each row is divided by
    sqrt(n d_v), giving unit-norm score vectors.
    """
    if eig.p != X.p:
        raise DimensionError(
            f"eigenvectors are for p={eig.p} variables, matrix has p={X.p}"
        )
    scores = eig.U.T @ X.values
    if normalized:
        scores = scores / np.sqrt(X.n * eig.d[: eig.k, None])
    return ScoreMatrix(scores=scores, normalized=normalized)


def project_new(x_new: np.ndarray, eig: SampleEigen) -> np.ndarray:
    """Naive predicted scores u_v^T x for a single preprocessed sample."""
    x = np.asarray(x_new, dtype=np.float64)
    if x.shape != (eig.p,):
        raise DimensionError(f"expected length-{eig.p} vector, got shape {x.shape}")
    return eig.U.T @ x
