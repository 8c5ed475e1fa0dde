"""Seeded simulation harness: data generators, empirical estimators, and
experiment drivers that benchmark the asymptotic estimators.

All randomness flows through counter-based Philox streams keyed by
(seed, design, cell, replicate), and normal variates are produced by
inverse-CDF from 53-bit uniforms, so every run is reproducible byte for
byte and replicates can be evaluated in any order (or in parallel).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .eigen import pc_scores
from .errors import (
    DegenerateInput,
    DimensionError,
    DomainError,
)
from .matrix_io import DataMatrix, _fmt
from .model import fit, pcr_fit, pcr_mse, pcr_predict, predict
from .spiked import eigenvector_angle, score_angle, shrinkage_factor

_DESIGN_IDS = {"intro": 0, "two_spike": 1, "pcr": 2}


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent Philox stream addressed by up to four small integers."""
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    if len(path) > 4:
        raise ValueError("at most 4 path components")
    key = 0
    for part in path:
        if not 0 <= part < 2**16:
            raise ValueError(f"path component {part} out of range [0, 65535]")
        key = (key << 16) | part
    return np.random.Generator(
        np.random.Philox(key=np.array([seed, key], dtype=np.uint64))
    )


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """N(0,1) variates via inverse-CDF of strictly interior 53-bit uniforms."""
    bits = rng.integers(0, 1 << 53, size=shape, dtype=np.int64)
    return ndtri((bits.astype(np.float64) + 0.5) * 2.0**-53)


def _as_rng(seed_or_rng, design: str) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return substream(int(seed_or_rng), _DESIGN_IDS[design], 0, 0)


# ---------------------------------------------------------------------------
# data generators
# ---------------------------------------------------------------------------


def _stratum_means(rng: np.random.Generator, n_strata: int, p: int) -> np.ndarray:
    """Per-stratum mean vectors, elements drawn from {-0.3, 0, 0.3}."""
    return 0.3 * (rng.integers(0, 3, size=(n_strata, p)).astype(np.float64) - 1.0)


def gen_intro(
    n_per_stratum=(50, 30, 20), p: int = 5000, seed=0
) -> tuple[DataMatrix, DataMatrix, np.ndarray]:
    """Stratified train/test pair sharing fixed stratum means.

    Each stratum mean vector is drawn once and reused for both sets;
    samples are the stratum mean plus isotropic noise of standard
    deviation 2. Returns (train, test, labels) with 1-based stratum
    labels describing the columns of either matrix.
    """
    rng = _as_rng(seed, "intro")
    mu = _stratum_means(rng, len(n_per_stratum), p)

    def draw():
        blocks = [
            mu[s][:, None] + 2.0 * standard_normal(rng, (p, nk))
            for s, nk in enumerate(n_per_stratum)
        ]
        return DataMatrix(np.hstack(blocks))

    train = draw()
    test = draw()
    labels = np.repeat(np.arange(1, len(n_per_stratum) + 1), n_per_stratum)
    return train, test, labels


def gen_two_spike(n: int, gamma: float, seed=0) -> DataMatrix:
    """Two-spike test matrix with noise standard deviation 2.

    Rows are sqrt(s1) * z, sqrt(s2) * z, z, ..., all scaled by 2, with
    s1 = 4 (1 + sqrt(gamma)) and s2 = 2 (1 + sqrt(gamma)) and
    p = round(gamma * n). The population covariance is therefore
    4 * diag(s1, s2, 1, ..., 1): after rescaling absorbs the factor 4,
    the spikes sit exactly at s1 and s2 and the leading population
    eigenvectors are the first two coordinate axes.
    """
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    if n < 4:
        raise DimensionError(f"need n >= 4, got {n}")
    p = int(round(gamma * n))
    if p < 3:
        raise DimensionError(f"gamma * n rounds to p={p} < 3")
    rng = _as_rng(seed, "two_spike")
    spike1 = 4 * (1 + math.sqrt(gamma))
    spike2 = 2 * (1 + math.sqrt(gamma))
    X = 2.0 * standard_normal(rng, (p, n))
    X[0] *= math.sqrt(spike1)
    X[1] *= math.sqrt(spike2)
    return DataMatrix(X)


def two_spike_eigenvalues(gamma: float) -> tuple[float, float]:
    """The two population spike eigenvalues of the two-spike design."""
    return 4 * (1 + math.sqrt(gamma)), 2 * (1 + math.sqrt(gamma))


def gen_pcr(n: int, g: int, p: int = 5000, seed=0) -> tuple[DataMatrix, np.ndarray]:
    """Expression-style regression design with g informative variables.

    The first g variables have mean 3 for the first n/2 samples and 4
    for the rest; the remaining variables have mean 3.5; all noise is
    N(0, 2^2). The outcome is twice the mean of the informative block
    plus N(0, 1) noise.
    """
    if n % 2 != 0:
        raise DomainError(f"n must be even, got {n}")
    if n < 2:
        raise DimensionError(f"need n >= 2, got {n}")
    if not 1 <= g < p:
        raise DomainError(f"g must satisfy 1 <= g < p, got g={g}, p={p}")
    rng = _as_rng(seed, "pcr")
    X = np.empty((p, n))
    X[:g, : n // 2] = 3.0
    X[:g, n // 2 :] = 4.0
    X[g:, :] = 3.5
    X += 2.0 * standard_normal(rng, (p, n))
    y = (2.0 / g) * X[:g].sum(axis=0) + standard_normal(rng, n)
    return DataMatrix(X), y


# ---------------------------------------------------------------------------
# empirical estimators
# ---------------------------------------------------------------------------


def empirical_shrinkage(train_scores, test_scores) -> float:
    """Root ratio of summed squared predicted to summed squared sample scores."""
    q = np.asarray(test_scores, dtype=np.float64)
    s = np.asarray(train_scores, dtype=np.float64)
    if q.shape != s.shape or q.ndim != 1:
        raise DimensionError("score vectors must be 1-D of equal length")
    denom = float(s @ s)
    if denom == 0:
        raise DegenerateInput("training scores are all zero")
    return math.sqrt(float(q @ q) / denom)


def empirical_angle(u, e) -> float:
    """|cos| of the angle between two vectors (normalized internally)."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(e, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError("vectors must be 1-D of equal length")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0 or nb == 0:
        raise DegenerateInput("cannot take the angle of a zero vector")
    return abs(float(a @ b)) / (na * nb)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _mean_sd(values) -> tuple[float, float, int]:
    """Exact-sum mean and population SD over the non-NaN entries."""
    finite = [float(v) for v in values if not math.isnan(v)]
    used = len(finite)
    if used == 0:
        return math.nan, math.nan, 0
    mean = math.fsum(finite) / used
    var = math.fsum((v - mean) ** 2 for v in finite) / used
    return mean, math.sqrt(var), used


@dataclass(frozen=True)
class EstimatorCell:
    """Per-replicate values of one estimator in one design cell."""

    design: str
    estimator: str
    component: int | None
    gamma: float | None
    n: int | None
    g: int | None
    analytic: float | None
    values: tuple

    @property
    def stats(self) -> tuple[float, float, int]:
        return _mean_sd(self.values)


@dataclass(frozen=True)
class SimulationReport:
    """Aggregated simulation results; serializes deterministically."""

    design: str
    seed: int
    replicates: int
    cells: tuple = field(default_factory=tuple)

    CSV_HEADER = "design,gamma,n,g,component,estimator,analytic,mean,sd,used,replicates"

    def cell(self, estimator: str, component=None, gamma=None, n=None, g=None):
        for c in self.cells:
            if (
                c.estimator == estimator
                and (component is None or c.component == component)
                and (gamma is None or c.gamma == gamma)
                and (n is None or c.n == n)
                and (g is None or c.g == g)
            ):
                return c
        raise KeyError(f"no cell for estimator={estimator!r}")

    def to_csv(self) -> str:
        rows = [self.CSV_HEADER]
        for c in self.cells:
            mean, sd, used = c.stats
            rows.append(
                ",".join(
                    [
                        c.design,
                        "" if c.gamma is None else _fmt(c.gamma),
                        "" if c.n is None else str(c.n),
                        "" if c.g is None else str(c.g),
                        "" if c.component is None else str(c.component),
                        c.estimator,
                        "" if c.analytic is None else _fmt(c.analytic),
                        _fmt(mean),
                        _fmt(sd),
                        str(used),
                        str(self.replicates),
                    ]
                )
            )
        return "\n".join(rows) + "\n"

    def summary(self) -> str:
        lines = [
            f"{self.design}: {self.replicates} replicate(s), seed {self.seed}"
        ]
        for c in self.cells:
            mean, sd, used = c.stats
            label = []
            if c.gamma is not None:
                label.append(f"gamma={c.gamma:g}")
            if c.n is not None:
                label.append(f"n={c.n}")
            if c.g is not None:
                label.append(f"g={c.g}")
            if c.component is not None:
                label.append(f"pc{c.component}")
            ref = "" if c.analytic is None else f"  [analytic {c.analytic:.4f}]"
            lines.append(
                f"  {' '.join(label)} {c.estimator}: "
                f"{mean:.4f} ({sd:.4f}, {used} used){ref}"
            )
        return "\n".join(lines) + "\n"


def resolve_workers(workers: int | None = None) -> int:
    """Worker thread count; defaults to the SPCA_THREADS env var (or 1)."""
    if workers is None:
        workers = int(os.environ.get("SPCA_THREADS", "1"))
    return max(1, workers)


def _replicate_map(func, replicates: int, workers: int):
    """Evaluate func(rep) for each replicate, order-stable regardless of pool."""
    if workers <= 1:
        return [func(rep) for rep in range(replicates)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, range(replicates)))


# ---------------------------------------------------------------------------
# experiment drivers
# ---------------------------------------------------------------------------

_TABLE12_ESTIMATORS = (
    "evec_angle_empirical",
    "evec_angle_plugin",
    "score_angle_empirical",
    "score_angle_plugin",
    "shrinkage_empirical",
    "shrinkage_plugin",
)


def run_table12(
    gammas=(1.0, 20.0, 100.0),
    ns=(100, 200),
    replicates: int = 200,
    seed: int = 0,
    workers: int | None = None,
) -> SimulationReport:
    """Two-spike benchmark of the angle and shrinkage estimators.

    Per replicate: draw independent train/test sets of n samples, fit
    on the train set (raw second moments, two retained components), and
    record the empirical and plug-in estimators next to their analytic
    values. Replicates where a component is classified as noise
    contribute no plug-in value (the `used` count reflects it).
    """
    workers = resolve_workers(workers)
    cells = []
    cell_index = 0
    for gamma in gammas:
        for n in ns:
            this_cell = cell_index
            cell_index += 1

            def one(rep, gamma=gamma, n=n, this_cell=this_cell):
                rng = substream(seed, _DESIGN_IDS["two_spike"], this_cell, rep)
                train = gen_two_spike(n, gamma, rng)
                test = gen_two_spike(n, gamma, rng)
                model = fit(train, mode="none", k=2)
                train_scores = pc_scores(
                    train, model.eig
                ).scores
                test_scores = predict(model, test).naive
                out = {}
                for v in range(2):
                    axis = np.zeros(train.p)
                    axis[v] = 1.0
                    ident = bool(model.identifiable[v])
                    out[f"evec_angle_empirical:{v}"] = empirical_angle(
                        model.eig.U[:, v], axis
                    )
                    out[f"evec_angle_plugin:{v}"] = (
                        model.evec_angle[v] if ident else math.nan
                    )
                    out[f"score_angle_empirical:{v}"] = empirical_angle(
                        train.values[v], train_scores[v]
                    )
                    out[f"score_angle_plugin:{v}"] = (
                        model.score_corr[v] if ident else math.nan
                    )
                    out[f"shrinkage_empirical:{v}"] = empirical_shrinkage(
                        train_scores[v], test_scores[v]
                    )
                    out[f"shrinkage_plugin:{v}"] = model.shrinkage[v]
                return out

            results = _replicate_map(one, replicates, workers)
            spikes = two_spike_eigenvalues(gamma)
            analytic = {
                "evec_angle": [eigenvector_angle(s, gamma) for s in spikes],
                "score_angle": [score_angle(s, gamma) for s in spikes],
                "shrinkage": [shrinkage_factor(s, gamma) for s in spikes],
            }
            for name in _TABLE12_ESTIMATORS:
                quantity = name.rsplit("_", 1)[0]
                for v in range(2):
                    cells.append(
                        EstimatorCell(
                            design="two_spike",
                            estimator=name,
                            component=v + 1,
                            gamma=float(gamma),
                            n=int(n),
                            g=None,
                            analytic=analytic[quantity][v],
                            values=tuple(r[f"{name}:{v}"] for r in results),
                        )
                    )
    return SimulationReport(
        design="two_spike", seed=seed, replicates=replicates, cells=tuple(cells)
    )


def run_table3(
    cells=((100, 300), (200, 300)),
    replicates: int = 100,
    seed: int = 0,
    p: int = 5000,
    workers: int | None = None,
) -> SimulationReport:
    """PC-regression benchmark: test MSE with and without adjustment.

    Per replicate: draw independent train/test sets from the same
    (n, g) configuration, fit a one-component model on the centered
    train set, regress the outcome on the first PC score, and evaluate
    test MSE using naive and bias-adjusted predicted scores.
    """
    workers = resolve_workers(workers)
    out_cells = []
    for cell_idx, (n, g) in enumerate(cells):

        def one(rep, n=n, g=g, cell_idx=cell_idx):
            rng = substream(seed, _DESIGN_IDS["pcr"], cell_idx, rep)
            X_train, y_train = gen_pcr(n, g, p, rng)
            X_test, y_test = gen_pcr(n, g, p, rng)
            model = fit(X_train, mode="center", k=1)
            s_train = pc_scores(
                standardized_training_matrix(model, X_train), model.eig
            ).scores[0]
            coeffs = pcr_fit(s_train, y_train)
            scores = predict(model, X_test)
            return {
                "mse_train": pcr_mse(y_train, pcr_predict(coeffs, s_train)),
                "mse_test_unadjusted": pcr_mse(
                    y_test, pcr_predict(coeffs, scores.naive[0])
                ),
                "mse_test_adjusted": pcr_mse(
                    y_test, pcr_predict(coeffs, scores.adjusted[0])
                ),
            }

        results = _replicate_map(one, replicates, workers)
        for name in ("mse_test_unadjusted", "mse_test_adjusted", "mse_train"):
            out_cells.append(
                EstimatorCell(
                    design="pcr",
                    estimator=name,
                    component=1,
                    gamma=None,
                    n=int(n),
                    g=int(g),
                    analytic=None,
                    values=tuple(r[name] for r in results),
                )
            )
    return SimulationReport(
        design="pcr", seed=seed, replicates=replicates, cells=tuple(out_cells)
    )


def standardized_training_matrix(model, X: DataMatrix) -> DataMatrix:
    """Re-apply the model's preprocessing to its own training matrix."""
    Z = (X.values - model.prep.means[:, None]) / model.prep.scales[:, None]
    return DataMatrix(Z)


INTRO_SCORES_HEADER = "set,stratum,pc1,pc2,pc1_adj,pc2_adj"


def run_intro(
    seed: int = 1, p: int = 5000, n_per_stratum=(50, 30, 20)
) -> tuple[SimulationReport, str]:
    """Single seeded run of the stratified shrinkage demonstration.

    Fits two components on the raw training matrix, records the plug-in
    shrinkage estimates and the test/train RMS score ratios, and dumps
    all four score sets (train/test x naive/adjusted) as CSV for
    plotting.
    """
    rng = substream(seed, _DESIGN_IDS["intro"], 0, 0)
    train, test, labels = gen_intro(n_per_stratum, p, rng)
    model = fit(train, mode="none", k=2)
    train_pred = predict(model, train)
    test_pred = predict(model, test)

    cells = []
    for v in range(2):
        rms_train = math.sqrt(float(np.mean(train_pred.naive[v] ** 2)))
        rms_test = math.sqrt(float(np.mean(test_pred.naive[v] ** 2)))
        rms_test_adj = math.sqrt(float(np.mean(test_pred.adjusted[v] ** 2)))
        for name, value in (
            ("shrinkage_plugin", model.shrinkage[v]),
            ("rms_ratio_naive", rms_test / rms_train),
            ("rms_ratio_adjusted", rms_test_adj / rms_train),
        ):
            cells.append(
                EstimatorCell(
                    design="intro",
                    estimator=name,
                    component=v + 1,
                    gamma=p / train.n,
                    n=train.n,
                    g=None,
                    analytic=None,
                    values=(float(value),),
                )
            )
    report = SimulationReport(
        design="intro", seed=seed, replicates=1, cells=tuple(cells)
    )

    rows = [INTRO_SCORES_HEADER]
    for name, pred in (("train", train_pred), ("test", test_pred)):
        for j in range(pred.m):
            rows.append(
                ",".join(
                    [
                        name,
                        str(int(labels[j])),
                        _fmt(pred.naive[0, j]),
                        _fmt(pred.naive[1, j]),
                        _fmt(pred.adjusted[0, j]),
                        _fmt(pred.adjusted[1, j]),
                    ]
                )
            )
    return report, "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# config-driven entry point used by the CLI
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Declarative description of one simulation run."""

    design: str
    seed: int
    replicates: int = 1
    gammas: tuple = (1.0, 20.0, 100.0)
    ns: tuple = (100, 200)
    cells: tuple = ((100, 300), (200, 300))
    p: int = 5000
    n_per_stratum: tuple = (50, 30, 20)
    workers: int | None = None

    def __post_init__(self):
        if self.design not in _DESIGN_IDS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")


def run_simulation(config: SimConfig) -> tuple[SimulationReport, str | None]:
    """Run the configured study; returns (report, intro score dump or None)."""
    if config.design == "two_spike":
        report = run_table12(
            gammas=config.gammas,
            ns=config.ns,
            replicates=config.replicates,
            seed=config.seed,
            workers=config.workers,
        )
        return report, None
    if config.design == "pcr":
        report = run_table3(
            cells=config.cells,
            replicates=config.replicates,
            seed=config.seed,
            p=config.p,
            workers=config.workers,
        )
        return report, None
    report, scores = run_intro(
        seed=config.seed, p=config.p, n_per_stratum=config.n_per_stratum
    )
    return report, scores
