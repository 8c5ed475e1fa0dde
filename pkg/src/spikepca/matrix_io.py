"""CSV ingestion, row standardization, and model persistence.

Data matrices are stored rows = variables, columns = samples. All text
formats are decimal with 17 significant digits, which round-trips IEEE
doubles exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateVariable,
    DimensionError,
    EmptyInput,
    FormatError,
    ParseError,
)

MODES = ("none", "center", "center_scale")

ORIENTATIONS = ("rows_are_variables", "rows_are_samples")

MODEL_MAGIC = "spikepca-model"
MODEL_FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    """Decimal encoding used by every text format in the package."""
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class DataMatrix:
    """p x n matrix of finite doubles; rows are variables, columns samples."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"data matrix must be 2-D, got {arr.ndim}-D")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise DimensionError(
                f"need at least 1 variable and 2 samples, got shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise ParseError("data matrix contains non-finite entries")
        object.__setattr__(self, "values", arr)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Preprocessing:
    """Per-variable statistics applied before analysis.

    ``mode`` is one of none / center / center_scale. ``means`` and
    ``scales`` always have length p; for mode "none" they are the
    identity transform (zeros and ones).
    """

    mode: str
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        means = np.asarray(self.means, dtype=np.float64)
        scales = np.asarray(self.scales, dtype=np.float64)
        if means.shape != scales.shape or means.ndim != 1:
            raise DimensionError("means and scales must be 1-D of equal length")
        if not (scales > 0).all():
            raise ValueError("scales must be strictly positive")
        if self.mode == "none" and ((means != 0).any() or (scales != 1).any()):
            raise ValueError("mode 'none' requires zero means and unit scales")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "scales", scales)

    @property
    def p(self) -> int:
        return self.means.shape[0]


def _parse_csv(path) -> np.ndarray:
    """Parse a rectangular numeric CSV (optional single header row).

    Raises ParseError with 1-based file coordinates on the first bad
    cell, and EmptyInput if the file holds no data rows.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EmptyInput(f"{path} contains no data")

    def try_row(cells):
        out = []
        for cell in cells:
            try:
                out.append(float(cell))
            except ValueError:
                return None
        return out

    rows = []
    start = 0
    first = [c.strip() for c in lines[0].split(",")]
    # A header row is one where no cell parses as a number; a row with a
    # mix of numeric and non-numeric cells is an error, not a header.
    if try_row(first) is None and all(try_row([c]) is None for c in first):
        start = 1
        if len(lines) == 1:
            raise EmptyInput(f"{path} contains a header but no data rows")

    width = None
    for idx in range(start, len(lines)):
        cells = [c.strip() for c in lines[idx].split(",")]
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(
                f"ragged row: line {idx + 1} has {len(cells)} cells, expected {width}",
                row=idx + 1,
            )
        parsed = []
        for j, cell in enumerate(cells):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"non-numeric cell {cell!r} at row {idx + 1}, column {j + 1}",
                    row=idx + 1,
                    col=j + 1,
                ) from None
            if not np.isfinite(value):
                raise ParseError(
                    f"non-finite cell {cell!r} at row {idx + 1}, column {j + 1} "
                    "(missing values are not supported)",
                    row=idx + 1,
                    col=j + 1,
                )
            parsed.append(value)
        rows.append(parsed)
    return np.array(rows, dtype=np.float64)


def read_matrix(path, orientation: str = "rows_are_variables") -> DataMatrix:
    """Read a numeric CSV into a DataMatrix (rows = variables).

    ``orientation`` says what the file's rows mean; with
    "rows_are_samples" the parsed array is transposed so the result is
    always variables x samples.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"unknown orientation {orientation!r}")
    arr = _parse_csv(path)
    if orientation == "rows_are_samples":
        arr = arr.T
    return DataMatrix(arr)


def write_matrix(X: DataMatrix, path) -> None:
    """Write a DataMatrix as headerless CSV; read_matrix inverts it exactly."""
    lines = [",".join(_fmt(v) for v in row) for row in X.values]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise ParseError(f"cannot write {path}: {exc}") from exc


def standardize(X: DataMatrix, mode: str) -> tuple[DataMatrix, Preprocessing]:
    """Center and/or scale each variable of X.

    Standard deviations use divisor n (population form), matching the
    covariance definition used downstream. Returns the transformed
    matrix and the Preprocessing record holding the statistics applied.

    Raises DegenerateVariable if a row has zero variance under
    center_scale.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    p = X.p
    if mode == "none":
        prep = Preprocessing("none", np.zeros(p), np.ones(p))
        return X, prep
    means = X.values.mean(axis=1)
    centered = X.values - means[:, None]
    if mode == "center":
        return DataMatrix(centered), Preprocessing("center", means, np.ones(p))
    sds = np.sqrt(np.mean(centered**2, axis=1))
    bad = np.flatnonzero(sds == 0)
    if bad.size:
        raise DegenerateVariable(
            f"variable {bad[0]} has zero variance; cannot center_scale",
            row=int(bad[0]),
        )
    return (
        DataMatrix(centered / sds[:, None]),
        Preprocessing("center_scale", means, sds),
    )


def apply_preprocessing(x_new: np.ndarray, prep: Preprocessing) -> np.ndarray:
    """Map a new length-p observation into the standardized coordinates."""
    x = np.asarray(x_new, dtype=np.float64)
    if x.shape != (prep.p,):
        raise DimensionError(f"expected length-{prep.p} vector, got shape {x.shape}")
    return (x - prep.means) / prep.scales


# ---------------------------------------------------------------------------
# model persistence
# ---------------------------------------------------------------------------


def write_model(model, path) -> None:
    """Write a fitted model as a versioned line-oriented text file.

    Layout: a magic first line, then sections ``[meta]`` (key=value),
    ``[means]``, ``[scales]``, ``[eigenvalues]`` (``d,d_hat,lambda_hat``
    per line), one ``[eigenvector <v>]`` section per retained component
    (p lines each) and ``[adjustment]``
    (``shrinkage,score_corr,evec_angle`` per retained component).
    """
    spectrum = model.spectrum
    lines = [MODEL_MAGIC, "[meta]"]
    lines.append(f"format_version={MODEL_FORMAT_VERSION}")
    lines.append(f"p={model.p}")
    lines.append(f"n={model.n}")
    lines.append(f"gamma={_fmt(model.gamma)}")
    lines.append(f"mode={model.prep.mode}")
    lines.append(f"k={model.k}")
    lines.append(f"k_spikes={model.k_spikes}")
    lines.append(f"tau={_fmt(spectrum.tau)}")
    lines.append(f"iterations={spectrum.iterations}")
    lines.append(f"converged={'true' if spectrum.converged else 'false'}")
    lines.append("[means]")
    lines.extend(_fmt(v) for v in model.prep.means)
    lines.append("[scales]")
    lines.extend(_fmt(v) for v in model.prep.scales)
    lines.append("[eigenvalues]")
    for d, dh, lh in zip(model.eig.d, spectrum.d_hat, spectrum.lambda_hat):
        lines.append(f"{_fmt(d)},{_fmt(dh)},{_fmt(lh)}")
    for v in range(model.k):
        lines.append(f"[eigenvector {v + 1}]")
        lines.extend(_fmt(u) for u in model.eig.U[:, v])
    lines.append("[adjustment]")
    for v in range(model.k):
        lines.append(
            f"{_fmt(model.shrinkage[v])},{_fmt(model.score_corr[v])},"
            f"{_fmt(model.evec_angle[v])}"
        )
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise FormatError(f"cannot write model to {path!r}: {exc}") from exc


def _parse_model_float(token: str, where: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise FormatError(f"bad number {token!r} in {where}") from None


def read_model(path):
    """Read a model written by write_model. Inverse up to exact floats."""
    from .eigen import SampleEigen
    from .model import FittedPcModel
    from .spiked import RescaledSpectrum

    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read model from {path!r}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != MODEL_MAGIC:
        raise FormatError(f"{path} is not a {MODEL_MAGIC} file")

    sections: dict[str, list[str]] = {}
    order: list[str] = []
    current = None
    for ln in lines[1:]:
        ln = ln.strip()
        if not ln:
            continue
        if ln.startswith("[") and ln.endswith("]"):
            current = ln[1:-1]
            if current in sections:
                raise FormatError(f"duplicate section [{current}]")
            sections[current] = []
            order.append(current)
        elif current is None:
            raise FormatError(f"content before first section: {ln!r}")
        else:
            sections[current].append(ln)

    if "meta" not in sections:
        raise FormatError("missing [meta] section")
    meta = {}
    for ln in sections["meta"]:
        if "=" not in ln:
            raise FormatError(f"bad meta line {ln!r}")
        key, _, value = ln.partition("=")
        meta[key.strip()] = value.strip()

    if meta.get("format_version") != str(MODEL_FORMAT_VERSION):
        raise FormatError(
            f"unsupported format_version {meta.get('format_version')!r}"
        )
    try:
        p = int(meta["p"])
        n = int(meta["n"])
        k = int(meta["k"])
        k_spikes = int(meta["k_spikes"])
        iterations = int(meta["iterations"])
        gamma = _parse_model_float(meta["gamma"], "[meta] gamma")
        tau = _parse_model_float(meta["tau"], "[meta] tau")
        mode = meta["mode"]
        converged = meta["converged"] == "true"
    except KeyError as exc:
        raise FormatError(f"missing meta key {exc}") from None
    except ValueError as exc:
        raise FormatError(f"bad meta value: {exc}") from None
    if mode not in MODES:
        raise FormatError(f"unknown mode {mode!r} in model file")

    def vector(name, length):
        if name not in sections:
            raise FormatError(f"missing [{name}] section")
        vals = sections[name]
        if len(vals) != length:
            raise FormatError(
                f"[{name}] has {len(vals)} lines, expected {length} (truncated file?)"
            )
        return np.array([_parse_model_float(v, f"[{name}]") for v in vals])

    means = vector("means", p)
    scales = vector("scales", p)

    m = min(p, n)
    eig_rows = sections.get("eigenvalues")
    if eig_rows is None:
        raise FormatError("missing [eigenvalues] section")
    if len(eig_rows) != m:
        raise FormatError(
            f"[eigenvalues] has {len(eig_rows)} lines, expected {m} (truncated file?)"
        )
    d = np.empty(m)
    d_hat = np.empty(m)
    lambda_hat = np.empty(m)
    for i, ln in enumerate(eig_rows):
        parts = ln.split(",")
        if len(parts) != 3:
            raise FormatError(f"bad [eigenvalues] line {ln!r}")
        d[i] = _parse_model_float(parts[0], "[eigenvalues]")
        d_hat[i] = _parse_model_float(parts[1], "[eigenvalues]")
        lambda_hat[i] = _parse_model_float(parts[2], "[eigenvalues]")

    U = np.empty((p, k))
    for v in range(k):
        U[:, v] = vector(f"eigenvector {v + 1}", p)

    adj_rows = sections.get("adjustment")
    if adj_rows is None:
        raise FormatError("missing [adjustment] section")
    if len(adj_rows) != k:
        raise FormatError(
            f"[adjustment] has {len(adj_rows)} lines, expected {k} (truncated file?)"
        )
    shrinkage = np.empty(k)
    score_corr = np.empty(k)
    evec_angle = np.empty(k)
    for v, ln in enumerate(adj_rows):
        parts = ln.split(",")
        if len(parts) != 3:
            raise FormatError(f"bad [adjustment] line {ln!r}")
        shrinkage[v] = _parse_model_float(parts[0], "[adjustment]")
        score_corr[v] = _parse_model_float(parts[1], "[adjustment]")
        evec_angle[v] = _parse_model_float(parts[2], "[adjustment]")

    prep = Preprocessing(mode, means, scales)
    eig = SampleEigen(d=d, U=U, gamma=gamma)
    spectrum = RescaledSpectrum(
        d_hat=d_hat,
        lambda_hat=lambda_hat,
        k=k_spikes,
        tau=tau,
        gamma=gamma,
        iterations=iterations,
        converged=converged,
    )
    identifiable = np.arange(k) < k_spikes
    with np.errstate(divide="ignore", invalid="ignore"):
        adjustment = np.where(identifiable, 1.0 / shrinkage, np.nan)
    return FittedPcModel(
        prep=prep,
        eig=eig,
        spectrum=spectrum,
        shrinkage=shrinkage,
        adjustment=adjustment,
        score_corr=score_corr,
        evec_angle=evec_angle,
        identifiable=identifiable,
        n_samples=n,
    )
