"""Command-line front end: fit | predict | rescale | jackknife | simulate.

Conventions: stdout carries data (CSV / tables), stderr carries
diagnostics; numeric output uses 17 significant digits; exit code 0 on
success, 2 for input/usage problems, 3 for numerical failures. The
SPCA_THREADS environment variable caps simulation parallelism.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import INPUT_ERRORS, DimensionError, ParseError, SpikePcaError
from .matrix_io import (
    DataMatrix,
    _fmt,
    _parse_csv,
    read_model,
    write_model,
)
from .model import fit, jackknife_shrinkage, predict
from .simulate import SimConfig, resolve_workers, run_simulation
from .spiked import rescale_eigenvalues

_MODE_CHOICES = {"none": "none", "center": "center", "center-scale": "center_scale"}

_ORIENTATION_CHOICES = {
    "rows-are-variables": "rows_are_variables",
    "rows-are-samples": "rows_are_samples",
}


def _load_matrix(path, orientation_flag: str, min_samples: int = 2) -> DataMatrix:
    arr = _parse_csv(path)
    if _ORIENTATION_CHOICES[orientation_flag] == "rows_are_samples":
        arr = arr.T
    if arr.shape[1] < min_samples:
        raise DimensionError(
            f"{path}: need at least {min_samples} samples, got {arr.shape[1]}"
        )
    return DataMatrix(arr)


def _emit(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_k(value: str):
    if value == "auto":
        return "auto"
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k must be 'auto' or an integer, got {value!r}")
    if k < 1:
        raise argparse.ArgumentTypeError(f"--k must be >= 1, got {k}")
    return k


def _cmd_fit(args) -> int:
    X = _load_matrix(args.matrix, args.orientation, min_samples=3)
    model = fit(X, mode=_MODE_CHOICES[args.mode], k=args.k)
    if args.out:
        write_model(model, args.out)
        print(f"model written to {args.out}", file=sys.stderr)
    lines = ["component,d,d_hat,lambda_hat,spike,shrinkage,score_corr,evec_angle"]
    for v in range(model.k):
        lines.append(
            ",".join(
                [
                    str(v + 1),
                    _fmt(model.eig.d[v]),
                    _fmt(model.spectrum.d_hat[v]),
                    _fmt(model.spectrum.lambda_hat[v]),
                    "true" if model.identifiable[v] else "false",
                    _fmt(model.shrinkage[v]),
                    _fmt(model.score_corr[v]),
                    _fmt(model.evec_angle[v]),
                ]
            )
        )
    sys.stdout.write("\n".join(lines) + "\n")
    print(
        f"p={model.p} n={model.n} gamma={model.gamma:g} k_spikes={model.k_spikes} "
        f"tau={model.spectrum.tau:g} converged={model.spectrum.converged}",
        file=sys.stderr,
    )
    return 0


def _cmd_predict(args) -> int:
    model = read_model(args.model)
    arr = _parse_csv(args.matrix)
    if _ORIENTATION_CHOICES[args.orientation] == "rows_are_samples":
        arr = arr.T
    if arr.shape[0] != model.p:
        raise DimensionError(
            f"{args.matrix}: expected {model.p} variables (rows), got {arr.shape[0]}"
        )
    scores = predict(model, arr)
    columns = {
        "off": ("naive",),
        "on": ("adjusted",),
        "both": ("naive", "adjusted"),
    }[args.adjusted]
    lines = ["sample,pc," + ",".join(columns) + ",identifiable"]
    for j in range(scores.m):
        for v in range(scores.k):
            fields = [str(j + 1), str(v + 1)]
            if "naive" in columns:
                fields.append(_fmt(scores.naive[v, j]))
            if "adjusted" in columns:
                fields.append(_fmt(scores.adjusted[v, j]))
            fields.append("true" if scores.identifiable[v] else "false")
            lines.append(",".join(fields))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_rescale(args) -> int:
    arr = _parse_csv(args.eigenvalues)
    if arr.shape[0] != 1 and arr.shape[1] != 1:
        raise ParseError(
            f"{args.eigenvalues}: expected a single row or column of eigenvalues, "
            f"got shape {arr.shape}"
        )
    d = arr.ravel()
    spectrum = rescale_eigenvalues(
        d, args.p, args.n, tol=args.tol, max_iter=args.max_iter, gamma=args.gamma
    )
    ratios = d / d.sum()
    lines = [
        f"# k={spectrum.k} tau={_fmt(spectrum.tau)} gamma={_fmt(spectrum.gamma)} "
        f"iterations={spectrum.iterations} "
        f"converged={'true' if spectrum.converged else 'false'}",
        "component,d,ratio,d_hat,lambda_hat,spike",
    ]
    for v in range(d.size):
        lines.append(
            ",".join(
                [
                    str(v + 1),
                    _fmt(d[v]),
                    _fmt(ratios[v]),
                    _fmt(spectrum.d_hat[v]),
                    _fmt(spectrum.lambda_hat[v]),
                    "true" if v < spectrum.k else "false",
                ]
            )
        )
    _emit("\n".join(lines) + "\n", args.out)
    if not spectrum.converged:
        print("warning: rescaling did not converge", file=sys.stderr)
    return 0


def _cmd_jackknife(args) -> int:
    X = _load_matrix(args.matrix, args.orientation, min_samples=4)
    estimate = jackknife_shrinkage(X, _MODE_CHOICES[args.mode], args.pc)
    model = fit(X, mode=_MODE_CHOICES[args.mode], k=args.pc)
    lines = [
        "pc,jackknife,plugin_shrinkage,used,excluded",
        ",".join(
            [
                str(args.pc),
                _fmt(estimate.value),
                _fmt(model.shrinkage[args.pc - 1]),
                str(estimate.used),
                str(estimate.excluded),
            ]
        ),
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_simulate(args) -> int:
    design = {"intro": "intro", "table12": "two_spike", "table3": "pcr"}[args.study]
    kwargs = dict(
        design=design,
        seed=args.seed,
        workers=resolve_workers(args.workers),
    )
    if design == "two_spike":
        kwargs["replicates"] = 200 if args.replicates is None else args.replicates
        if args.gamma:
            kwargs["gammas"] = tuple(args.gamma)
        if args.n:
            kwargs["ns"] = tuple(args.n)
    elif design == "pcr":
        kwargs["replicates"] = 100 if args.replicates is None else args.replicates
        if args.cell:
            kwargs["cells"] = tuple(args.cell)
        kwargs["p"] = args.p
    else:
        kwargs["replicates"] = 1
        kwargs["p"] = args.p
    config = SimConfig(**kwargs)
    report, scores_csv = run_simulation(config)
    _emit(report.to_csv(), args.out)
    if scores_csv is not None and args.scores_out:
        Path(args.scores_out).write_text(scores_csv)
    sys.stderr.write(report.summary())
    return 0


def _cell_arg(text: str):
    try:
        n, g = text.split(":")
        return int(n), int(g)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected N:G (e.g. 100:300), got {text!r}"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikepca",
        description="Spiked-model PCA with debiased eigenvalues and "
        "bias-adjusted out-of-sample score prediction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_orientation(p):
        p.add_argument(
            "--orientation",
            choices=sorted(_ORIENTATION_CHOICES),
            default="rows-are-variables",
            help="what the CSV rows represent (default: variables)",
        )

    p_fit = sub.add_parser("fit", help="fit a model to a training CSV")
    p_fit.add_argument("matrix", help="training matrix CSV")
    p_fit.add_argument("--mode", choices=sorted(_MODE_CHOICES), default="center")
    p_fit.add_argument("--k", type=_parse_k, default="auto",
                       help="components to retain, or 'auto' (detected spikes)")
    p_fit.add_argument("--out", help="write the fitted model here")
    add_orientation(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="predict scores for new samples")
    p_pred.add_argument("model", help="model file written by fit")
    p_pred.add_argument("matrix", help="new-sample CSV (same variables as training)")
    p_pred.add_argument("--adjusted", choices=("on", "off", "both"), default="both")
    p_pred.add_argument("--out", help="write scores CSV here (default stdout)")
    add_orientation(p_pred)
    p_pred.set_defaults(func=_cmd_predict)

    p_res = sub.add_parser("rescale", help="rescale an externally computed spectrum")
    p_res.add_argument("eigenvalues", help="CSV with one eigenvalue per line")
    p_res.add_argument("--p", type=int, required=True, help="variable count")
    p_res.add_argument("--n", type=int, required=True, help="sample count")
    p_res.add_argument("--gamma", type=float, default=None,
                       help="override the aspect ratio p/n")
    p_res.add_argument("--tol", type=float, default=1e-10)
    p_res.add_argument("--max-iter", type=int, default=500)
    p_res.add_argument("--out")
    p_res.set_defaults(func=_cmd_rescale)

    p_jack = sub.add_parser("jackknife", help="leave-one-out shrinkage estimate")
    p_jack.add_argument("matrix", help="training matrix CSV")
    p_jack.add_argument("--pc", type=int, required=True, help="component index (1-based)")
    p_jack.add_argument("--mode", choices=sorted(_MODE_CHOICES), default="center")
    p_jack.add_argument("--out")
    add_orientation(p_jack)
    p_jack.set_defaults(func=_cmd_jackknife)

    p_sim = sub.add_parser("simulate", help="run a seeded benchmark study")
    p_sim.add_argument("study", choices=("intro", "table12", "table3"))
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--replicates", type=int, default=None)
    p_sim.add_argument("--gamma", type=float, action="append",
                       help="aspect ratio (repeatable; table12)")
    p_sim.add_argument("--n", type=int, action="append",
                       help="sample count (repeatable; table12)")
    p_sim.add_argument("--cell", type=_cell_arg, action="append",
                       help="N:G configuration (repeatable; table3)")
    p_sim.add_argument("--p", type=int, default=5000,
                       help="variable count (intro, table3)")
    p_sim.add_argument("--workers", type=int, default=None,
                       help="worker threads (default: SPCA_THREADS or 1)")
    p_sim.add_argument("--out", help="write report CSV here (default stdout)")
    p_sim.add_argument("--scores-out", help="write the intro score dump here")
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SpikePcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
