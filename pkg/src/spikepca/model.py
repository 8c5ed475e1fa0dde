"""End-to-end fit / predict pipeline with shrinkage-adjusted predictions.

fit() standardizes, decomposes the sample covariance, rescales the
spectrum, classifies spikes, and attaches per-component shrinkage and
fidelity estimates. predict() maps new samples into the trained
coordinates and returns both the naive scores and the bias-adjusted
ones. A leave-one-out jackknife provides an empirical check on the
asymptotic shrinkage factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigen import SampleEigen, pc_scores, sample_eigen
from .errors import (
    DegenerateRegressor,
    DimensionError,
    DomainError,
    NotIdentifiable,
)
from .matrix_io import DataMatrix, Preprocessing, apply_preprocessing, standardize
from .spiked import (
    RescaledSpectrum,
    detection_threshold,
    eigenvector_angle,
    rescale_eigenvalues,
    score_angle,
    shrinkage_factor,
)


@dataclass(frozen=True)
class FittedPcModel:
    """Fitted spiked-model PCA.

    Per retained component v the model carries the shrinkage factor
    s_v, its reciprocal (the score adjustment), the estimated
    |cos|-angle between sample and population eigenvectors, and the
    estimated correlation between sample and population scores. For
    components classified as noise (``identifiable`` False) shrinkage
    and adjustment are NaN and both angle estimates are 0.
    """

    prep: Preprocessing
    eig: SampleEigen
    spectrum: RescaledSpectrum
    shrinkage: np.ndarray
    adjustment: np.ndarray
    score_corr: np.ndarray
    evec_angle: np.ndarray
    identifiable: np.ndarray
    n_samples: int

    @property
    def p(self) -> int:
        return self.eig.p

    @property
    def n(self) -> int:
        return self.n_samples

    @property
    def gamma(self) -> float:
        return self.eig.gamma

    @property
    def k(self) -> int:
        """Number of retained components."""
        return self.eig.k

    @property
    def k_spikes(self) -> int:
        return self.spectrum.k


@dataclass(frozen=True)
class PredictionScores:
    """Naive and bias-adjusted predicted scores, one row per component.

    Rows of ``adjusted`` equal naive * adjustment for identifiable
    (spike) components and mirror the naive row, flagged, otherwise.
    """

    naive: np.ndarray
    adjusted: np.ndarray
    identifiable: np.ndarray

    @property
    def k(self) -> int:
        return self.naive.shape[0]

    @property
    def m(self) -> int:
        return self.naive.shape[1]


def component_estimates(spectrum: RescaledSpectrum, k: int):
    """Shrinkage/adjustment/angle estimates for the first k components.

    Derived from the rescaled spectrum alone; used by fit() and usable
    to re-derive the stored estimates of a persisted model.
    """
    shrink = np.full(k, np.nan)
    adjust = np.full(k, np.nan)
    corr = np.zeros(k)
    angle = np.zeros(k)
    identifiable = np.zeros(k, dtype=bool)
    gamma = spectrum.gamma
    threshold = detection_threshold(gamma)
    for v in range(k):
        lam = spectrum.lambda_hat[v]
        if lam > threshold:
            identifiable[v] = True
            shrink[v] = shrinkage_factor(lam, gamma)
            adjust[v] = 1.0 / shrink[v]
            corr[v] = score_angle(lam, gamma)
            angle[v] = eigenvector_angle(lam, gamma)
    return shrink, adjust, corr, angle, identifiable


def fit(
    X: DataMatrix,
    mode: str = "center",
    k="auto",
    tol: float = 1e-10,
    max_iter: int = 500,
) -> FittedPcModel:
    """Fit the spiked-model PCA pipeline to a training matrix.

    Runs standardize -> eigendecomposition (all min(p, n) eigenvalues;
    eigenvectors only for the retained components) -> eigenvalue
    rescaling with gamma = p / n -> per-component estimates. With
    k="auto" the number of detected spikes is retained (minimum 1).
    """
    if X.n < 3:
        raise DimensionError(f"need at least 3 samples to fit, got {X.n}")
    m = min(X.p, X.n)
    auto = isinstance(k, str)
    if auto:
        if k != "auto":
            raise ValueError(f"k must be an integer or 'auto', got {k!r}")
        k_request = m
    else:
        k_request = int(k)
        if not 1 <= k_request <= m:
            raise DimensionError(f"k must be in [1, {m}], got {k_request}")

    Xs, prep = standardize(X, mode)
    eig_full = sample_eigen(Xs, k_request)
    spectrum = rescale_eigenvalues(eig_full.d, X.p, X.n, tol=tol, max_iter=max_iter)
    k_keep = max(spectrum.k, 1) if auto else k_request
    k_keep = min(k_keep, eig_full.k)  # rank-deficient matrices retain fewer
    eig = SampleEigen(
        d=eig_full.d, U=eig_full.U[:, :k_keep], gamma=eig_full.gamma
    )
    shrink, adjust, corr, angle, identifiable = component_estimates(spectrum, k_keep)
    return FittedPcModel(
        prep=prep,
        eig=eig,
        spectrum=spectrum,
        shrinkage=shrink,
        adjustment=adjust,
        score_corr=corr,
        evec_angle=angle,
        identifiable=identifiable,
        n_samples=X.n,
    )


def predict(model: FittedPcModel, X_new) -> PredictionScores:
    """Naive and bias-adjusted predicted scores for new samples.

    ``X_new`` is a p x m array (or DataMatrix) in the original,
    unstandardized coordinates; the model's preprocessing is applied to
    each column before projection.
    """
    arr = X_new.values if isinstance(X_new, DataMatrix) else np.asarray(
        X_new, dtype=np.float64
    )
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] != model.p:
        raise DimensionError(
            f"expected a {model.p} x m matrix, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise DomainError("new samples contain non-finite values")
    Z = (arr - model.prep.means[:, None]) / model.prep.scales[:, None]
    naive = model.eig.U.T @ Z
    adjusted = naive.copy()
    mask = model.identifiable
    adjusted[mask] = naive[mask] * model.adjustment[mask, None]
    return PredictionScores(
        naive=naive, adjusted=adjusted, identifiable=mask.copy()
    )


@dataclass(frozen=True)
class JackknifeShrinkage:
    """Leave-one-out shrinkage estimate with its replicate accounting."""

    value: float
    used: int
    excluded: int


def jackknife_shrinkage(
    X: DataMatrix, mode: str, component: int
) -> JackknifeShrinkage:
    """Leave-one-out empirical estimate of the shrinkage factor.

    For each sample j the model is refit (including re-standardization)
    on the other n-1 columns and the held-out column's naive score is
    predicted. The estimate is the root of mean squared predicted score
    over mean squared full-data sample score, the same quantity the
    asymptotic shrinkage factor describes. Replicates whose refit does
    not classify the component as a spike are excluded and counted.
    """
    if X.n < 4:
        raise DimensionError(f"jackknife needs at least 4 samples, got {X.n}")
    if component < 1:
        raise DomainError(f"component must be >= 1, got {component}")
    full = fit(X, mode, k=component)
    if component > full.k_spikes:
        raise NotIdentifiable(
            f"component {component} is not a spike in the full-data fit "
            f"(k_spikes={full.k_spikes})"
        )
    Xs, _ = standardize(X, mode)
    sample_row = pc_scores(Xs, full.eig).scores[component - 1]
    mean_sq_sample = float(np.mean(sample_row**2))

    predicted_sq = []
    excluded = 0
    for j in range(X.n):
        sub = DataMatrix(np.delete(X.values, j, axis=1))
        refit = fit(sub, mode, k=component)
        if refit.k_spikes < component or refit.k < component:
            excluded += 1
            continue
        z = apply_preprocessing(X.values[:, j], refit.prep)
        q = float(refit.eig.U[:, component - 1] @ z)
        predicted_sq.append(q * q)
    if not predicted_sq:
        raise NotIdentifiable(
            f"component {component} was a spike in no leave-one-out replicate"
        )
    value = math.sqrt(
        (math.fsum(predicted_sq) / len(predicted_sq)) / mean_sq_sample
    )
    return JackknifeShrinkage(
        value=value, used=len(predicted_sq), excluded=excluded
    )


# ---------------------------------------------------------------------------
# single-covariate PC regression
# ---------------------------------------------------------------------------


def pcr_fit(scores_train: np.ndarray, y_train: np.ndarray) -> tuple[float, float]:
    """Ordinary least squares of y on one score covariate: (intercept, slope)."""
    s = np.asarray(scores_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.float64)
    if s.shape != y.shape or s.ndim != 1:
        raise DimensionError("scores and outcomes must be 1-D of equal length")
    if s.size < 3:
        raise DimensionError(f"need at least 3 observations, got {s.size}")
    if np.ptp(s) == 0:
        raise DegenerateRegressor("scores are constant; slope is undefined")
    s_mean = s.mean()
    y_mean = y.mean()
    ds = s - s_mean
    slope = float(ds @ (y - y_mean) / (ds @ ds))
    return y_mean - slope * s_mean, slope


def pcr_predict(coeffs: tuple[float, float], scores: np.ndarray) -> np.ndarray:
    """Apply fitted regression coefficients to scores."""
    intercept, slope = coeffs
    return intercept + slope * np.asarray(scores, dtype=np.float64)


def pcr_mse(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Mean squared residual."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise DimensionError("prediction and outcome lengths differ")
    return float(np.mean((y - y_hat) ** 2))
