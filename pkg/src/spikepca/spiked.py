"""Closed-form spiked-model quantities and eigenvalue rescaling.

Under the spiked covariance model (all population eigenvalues 1 except
a few large "spikes"), sample eigenvalues, eigenvectors and PC scores
have known asymptotic distortions governed by the aspect ratio
gamma = p / n. This module provides:

* the almost-sure limit of a spiked sample eigenvalue and its inverse
  (the debiasing map),
* the limiting |cosine| between sample and population eigenvectors and
  between sample and population PC scores,
* the limiting shrinkage factor of out-of-sample score predictions and
  its reciprocal (the bias adjustment),
* the iterative rescaling that normalizes sample eigenvalues when the
  noise variance is unknown,
* Marchenko-Pastur edge/density utilities used as verification oracles.

Everything below the detection threshold 1 + sqrt(gamma) is
asymptotically invisible: angles drop to 0 and no adjustment exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateMatrix, DomainError, NotIdentifiable, NumericalError

#: Iterations of strictly sign-alternating updates before the rescaling
#: iteration is declared oscillating and a bisection fallback kicks in.
_OSCILLATION_WINDOW = 10


def mp_edges(gamma: float) -> tuple[float, float]:
    """Support edges ((1-sqrt(gamma))^2, (1+sqrt(gamma))^2) of the noise spectrum."""
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    s = math.sqrt(gamma)
    return ((1 - s) ** 2, (1 + s) ** 2)


def detection_threshold(gamma: float) -> float:
    """Population eigenvalues at or below 1 + sqrt(gamma) are undetectable."""
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    return 1 + math.sqrt(gamma)


def sample_eigenvalue_limit(spike: float, gamma: float) -> float:
    """Almost-sure limit x (1 + gamma / (x - 1)) of a spiked sample eigenvalue."""
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if spike <= 1:
        raise DomainError(f"spike eigenvalue must exceed 1, got {spike}")
    return spike * (1 + gamma / (spike - 1))


def debias_eigenvalue(d: float, gamma: float) -> float:
    """Invert the sample-eigenvalue limit: the consistent population estimate.

    Defined for d at or above the upper noise edge (1 + sqrt(gamma))^2;
    below it the caller should classify the component as noise instead.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    b = (1 + math.sqrt(gamma)) ** 2
    if d < b:
        raise DomainError(
            f"d={d} is below the noise edge {b}; no spike estimate exists"
        )
    disc = (d + 1 - gamma) ** 2 - 4 * d
    return (d + 1 - gamma + math.sqrt(max(disc, 0.0))) / 2


def _debias_many(d: np.ndarray, gamma: float) -> np.ndarray:
    """Vectorized debias_eigenvalue for values already known to be >= edge."""
    disc = np.maximum((d + 1 - gamma) ** 2 - 4 * d, 0.0)
    return (d + 1 - gamma + np.sqrt(disc)) / 2


def eigenvector_angle(spike: float, gamma: float) -> float:
    """Limiting |cos| between the sample and population spike eigenvectors.

    sqrt((1 - gamma/(x-1)^2) / (1 + gamma/(x-1))) above the detection
    threshold, 0 at or below it.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if spike <= 1:
        raise DomainError(f"spike eigenvalue must exceed 1, got {spike}")
    if spike <= detection_threshold(gamma):
        return 0.0
    x1 = spike - 1
    return math.sqrt((1 - gamma / x1**2) / (1 + gamma / x1))


def score_angle(spike: float, gamma: float) -> float:
    """Limiting |cos| between normalized sample and population PC scores.

    sqrt(1 - gamma/(x-1)^2) above the detection threshold, 0 at or
    below it. Always at least as large as the eigenvector angle.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if spike <= 1:
        raise DomainError(f"spike eigenvalue must exceed 1, got {spike}")
    if spike <= detection_threshold(gamma):
        return 0.0
    return math.sqrt(1 - gamma / (spike - 1) ** 2)


def shrinkage_factor(spike: float, gamma: float) -> float:
    """Limiting RMS ratio (x-1)/(x+gamma-1) of predicted to in-sample scores.

    Only defined above the detection threshold; increasing in the spike
    size, decreasing in gamma.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if spike <= detection_threshold(gamma):
        raise DomainError(
            f"shrinkage factor needs a spike above {detection_threshold(gamma)}, "
            f"got {spike}"
        )
    return (spike - 1) / (spike + gamma - 1)


def adjustment_factor(d_hat: float, gamma: float) -> float:
    """Multiplier that removes the prediction shrinkage, from a rescaled d.

    The reciprocal of the shrinkage factor evaluated at the debiased
    eigenvalue. Raises NotIdentifiable when d_hat does not exceed the
    noise edge.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    b = (1 + math.sqrt(gamma)) ** 2
    if d_hat <= b:
        raise NotIdentifiable(
            f"d_hat={d_hat} does not exceed the noise edge {b}; "
            "component is not adjustable"
        )
    lam = debias_eigenvalue(d_hat, gamma)
    return (lam + gamma - 1) / (lam - 1)


# ---------------------------------------------------------------------------
# eigenvalue rescaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RescaledSpectrum:
    """Result of the eigenvalue rescaling iteration.

    ``d_hat`` = tau * r keeps the ordering and ratios of the input;
    ``lambda_hat`` holds the debiased population estimates (1 for
    components at or below the noise edge); ``k`` counts the spikes
    (lambda_hat > 1); ``tau`` is the converged total-eigenvalue
    normalizer.
    """

    d_hat: np.ndarray
    lambda_hat: np.ndarray
    k: int
    tau: float
    gamma: float
    iterations: int
    converged: bool


def trace_gap(x: float, ratios: np.ndarray, p: int, gamma: float) -> float:
    """Fixed-point residual of the rescaling: implied total minus candidate x.

    Zero exactly at the normalizer tau the iteration converges to;
    concave in x, with a unique root on [p, inf) whenever trace_gap(p)
    is positive.
    """
    b = (1 + math.sqrt(gamma)) ** 2
    d = x * np.asarray(ratios, dtype=np.float64)
    mask = d > b
    k = int(mask.sum())
    return float(_debias_many(d[mask], gamma).sum() + p - k - x)


def _bisect_normalizer(ratios, p, gamma, hi_start):
    """Root of trace_gap on [p, hi]; None when no bracket can be found."""
    lo = float(p)
    f_lo = trace_gap(lo, ratios, p, gamma)
    if f_lo <= 0:
        return lo
    hi = max(float(hi_start), lo * 1.5)
    for _ in range(80):
        if trace_gap(hi, ratios, p, gamma) < 0:
            break
        hi *= 2.0
    else:
        return None
    try:
        return float(
            optimize.brentq(trace_gap, lo, hi, args=(ratios, p, gamma), xtol=1e-12)
        )
    except ValueError:
        return None


def rescale_eigenvalues(
    d_star,
    p: int,
    n: int,
    tol: float = 1e-10,
    max_iter: int = 500,
    gamma: float | None = None,
) -> RescaledSpectrum:
    """Normalize sample eigenvalues so the debiasing map applies.

    ``d_star`` must be all min(p, n) sample eigenvalues, non-negative
    and non-increasing. Starting from d_hat = p * r (r the trace
    shares), the iteration alternates debiasing the values above the
    noise edge with re-estimating the total eigenvalue mass
    T = sum(lambda_hat) + p - k, until successive totals differ by at
    most tol * p. A bisection fallback on the fixed-point residual
    engages only if the totals oscillate.

    ``gamma`` overrides p / n for spectra whose aspect ratio is not
    that of the supplied matrix. If max_iter is exhausted the last
    iterate is returned with converged=False.
    """
    d = np.asarray(d_star, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise DomainError("d_star must be a non-empty 1-D array")
    if not np.isfinite(d).all():
        raise DomainError("d_star contains non-finite values")
    if (d < 0).any():
        raise DomainError("d_star contains negative eigenvalues")
    if (np.diff(d) > 0).any():
        raise DomainError("d_star must be sorted in non-increasing order")
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise DomainError(f"max_iter must be >= 1, got {max_iter}")
    total = d.sum()
    if total == 0:
        raise DegenerateMatrix("all sample eigenvalues are zero")
    if gamma is None:
        gamma = p / n
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")

    b = (1 + math.sqrt(gamma)) ** 2
    r = d / total
    T = float(p)
    converged = False
    iterations = 0
    deltas: list[float] = []
    for it in range(1, max_iter + 1):
        iterations = it
        d_hat = T * r
        mask = d_hat > b
        k_l = int(mask.sum())
        T_new = float(_debias_many(d_hat[mask], gamma).sum() + p - k_l)
        delta = T_new - T
        T = T_new
        if abs(delta) <= tol * p:
            converged = True
            break
        deltas.append(delta)
        if len(deltas) >= _OSCILLATION_WINDOW:
            window = deltas[-_OSCILLATION_WINDOW:]
            alternating = all(
                window[i] * window[i + 1] < 0 for i in range(len(window) - 1)
            )
            if alternating:
                root = _bisect_normalizer(r, p, gamma, hi_start=T)
                if root is not None:
                    T = root
                    converged = True
                    break
                deltas.clear()

    tau = T
    d_hat = tau * r
    mask = d_hat > b
    lambda_hat = np.ones_like(d_hat)
    lambda_hat[mask] = _debias_many(d_hat[mask], gamma)
    return RescaledSpectrum(
        d_hat=d_hat,
        lambda_hat=lambda_hat,
        k=int(mask.sum()),
        tau=tau,
        gamma=gamma,
        iterations=iterations,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Marchenko-Pastur utilities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MpLaw:
    """Marchenko-Pastur law with aspect-ratio parameter gamma > 0.

    The continuous part lives on [a, b]; for gamma > 1 a point mass of
    1 - 1/gamma sits at zero.
    """

    gamma: float
    a: float
    b: float
    point_mass_at_zero: float

    @classmethod
    def from_gamma(cls, gamma: float) -> "MpLaw":
        if gamma <= 0:
            raise DomainError(f"gamma must be positive, got {gamma}")
        a, b = mp_edges(gamma)
        return cls(gamma=gamma, a=a, b=b, point_mass_at_zero=max(0.0, 1 - 1 / gamma))

    def density(self, x) -> np.ndarray:
        """Density of the continuous part (0 outside [a, b])."""
        x = np.asarray(x, dtype=np.float64)
        inside = (x > self.a) & (x < self.b) & (x > 0)
        out = np.zeros_like(x)
        xi = x[inside]
        out[inside] = np.sqrt((self.b - xi) * (xi - self.a)) / (
            2 * np.pi * self.gamma * xi
        )
        return out


def mp_integral(f, gamma: float, tol: float = 1e-9) -> float:
    """Integral of f against the Marchenko-Pastur law (f(0) must be 0).

    The point mass at zero (present for gamma > 1) contributes nothing
    because f vanishes there. The endpoint square-root singularities of
    the density are removed with the substitution
    x = a + (b - a) sin^2(theta) before adaptive quadrature.
    """
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    law = MpLaw.from_gamma(gamma)
    a, b = law.a, law.b
    span = b - a
    coeff = span**2 / (4 * np.pi * gamma)

    def transformed(theta):
        x = a + span * math.sin(theta) ** 2
        if x <= 0.0:
            return 0.0
        return coeff * f(x) * math.sin(2 * theta) ** 2 / x

    value, abserr, info, *rest = integrate.quad(
        transformed, 0.0, math.pi / 2, epsabs=tol, epsrel=1e-12,
        limit=200, full_output=True,
    )
    if rest:
        raise NumericalError(f"quadrature did not converge: {rest[0]}")
    if abserr > max(100 * tol, 1e-7):
        raise NumericalError(
            f"quadrature error estimate {abserr:g} exceeds tolerance"
        )
    return float(value)
