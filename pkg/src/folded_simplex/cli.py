"""Command-line front end.

Subcommands: ``fit``, ``sample``, ``contour``, ``outside``, ``test``,
``ci``, ``study``. Every command writes its primary output file plus a
run manifest (``<output>.manifest.json``) recording the command,
resolved parameters, seed, library version and input digest, which is
sufficient to reproduce the output bit for bit. Files are written
atomically (temp file + rename).

Exit codes: 0 success, 2 usage errors, 3 invalid input data,
4 numeric/model failures, 5 I/O errors, 1 anything unexpected.

CSV conventions: comma-delimited UTF-8 with '.' decimals; composition
files carry a header row of component names; covariance files are plain
square numeric tables without a header.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .analysis import (
    StudyConfig,
    contour_grid,
    frechet_mean,
    recovery_study,
)
from .datasets import ARCTIC_LAKE_INFLUENTIAL_ROWS, arctic_lake_path
from .errors import (
    DataValidationError,
    FoldedSimplexError,
    InvalidDimensionError,
    SingularCovarianceError,
    UnsupportedDimensionError,
)
from .estimation import default_alpha_grid, em_fit, fit_alpha, logistic_normal_fit
from .inference import (
    bootstrap_ci_alpha,
    bootstrap_test_alpha,
    curvature_ci_alpha,
    outside_probability,
)
from .model import FoldedNormalParams, sample
from .utils import atomic_write_text, sha256_file

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_IO = 5

_DATA_ERRORS = (
    DataValidationError,
    InvalidDimensionError,
    SingularCovarianceError,
    UnsupportedDimensionError,
)

# Study preset mirroring the desk-scale recovery setup documented in the
# acceptance suite: alpha 0.5 data in five parts, three noise scales.
_PRESET_MU = np.array([-0.566, -0.979, -0.648, -0.651])
_PRESET_SIGMA = np.array(
    [
        [0.149, -0.458, 0.002, -0.005],
        [-0.458, 1.523, 0.000, 0.007],
        [0.002, 0.000, 0.037, -0.047],
        [-0.005, 0.007, -0.047, 0.061],
    ]
)

STUDY_PRESETS = {
    "paper-desk": dict(
        alphas=(0.5,),
        kappas=(0.5, 1.0, 5.0),
        ns=(100, 500, 2000),
        replications=50,
        estimate_alpha=False,
    ),
    "alpha-recovery": dict(
        alphas=(0.1, 0.5, 0.9),
        kappas=(1.0,),
        ns=(5000,),
        replications=30,
        estimate_alpha=True,
    ),
}


@dataclass(frozen=True)
class DatasetFile:
    """A compositions CSV plus its parsing options."""

    path: str
    delimiter: str = ","
    has_header: bool = True
    normalize: bool = False

    def load(self) -> tuple[np.ndarray, list[str]]:
        """Parse into a validated (n, D) matrix plus column names."""
        try:
            with open(self.path, "r", encoding="utf-8", newline="") as fh:
                reader = csv.reader(fh, delimiter=self.delimiter)
                rows = [row for row in reader if row and any(c.strip() for c in row)]
        except OSError as exc:
            raise DataValidationError(f"cannot read {self.path}: {exc}") from exc
        if not rows:
            raise DataValidationError(f"{self.path} is empty")

        names: list[str]
        if self.has_header:
            names = [c.strip() for c in rows[0]]
            body = rows[1:]
        else:
            names = [f"comp_{i + 1}" for i in range(len(rows[0]))]
            body = rows
        if not body:
            raise DataValidationError(f"{self.path} has a header but no data rows")

        data = np.empty((len(body), len(names)))
        for i, row in enumerate(body):
            if len(row) != len(names):
                raise DataValidationError(
                    f"{self.path}: row {i + 1} has {len(row)} fields, "
                    f"expected {len(names)}"
                )
            for j, cell in enumerate(row):
                try:
                    data[i, j] = float(cell)
                except ValueError as exc:
                    raise DataValidationError(
                        f"{self.path}: row {i + 1}, column {j + 1}: "
                        f"not a number: {cell!r}"
                    ) from exc
        if np.any(data <= 0.0):
            i, j = np.argwhere(data <= 0.0)[0]
            raise DataValidationError(
                f"{self.path}: row {int(i) + 1}, column {int(j) + 1} is not "
                "strictly positive; compositions with zero components are "
                "outside the scope of this model"
            )
        sums = data.sum(axis=1)
        if not self.normalize and np.any(np.abs(sums - 1.0) > 1e-6):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise DataValidationError(
                f"{self.path}: row {bad + 1} sums to {sums[bad]:.6g}, not 1; "
                "pass --normalize to rescale rows"
            )
        return data / sums[:, None], names


def _load_dataset(args: argparse.Namespace) -> tuple[np.ndarray, list[str], str]:
    """Load a compositions input: a CSV path or the bundled dataset name.

    The bundled Arctic lake file carries a trailing depth column of row
    metadata, so it loads through its dedicated reader.
    """
    if args.input == "arctic-lake":
        from .datasets import load_arctic_lake

        parts, _, names = load_arctic_lake()
        return parts, names, arctic_lake_path()
    dataset = DatasetFile(
        path=args.input,
        delimiter=getattr(args, "delimiter", ","),
        has_header=not getattr(args, "no_header", False),
        normalize=args.normalize,
    )
    x, names = dataset.load()
    return x, names, args.input


def _read_square_csv(path: str) -> np.ndarray:
    try:
        mat = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise DataValidationError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise DataValidationError(f"{path}: not a numeric CSV: {exc}") from exc
    if mat.shape[0] != mat.shape[1]:
        raise DataValidationError(
            f"{path}: covariance must be square, got {mat.shape}"
        )
    return mat


def _parse_vector(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",") if tok != ""])
    except ValueError as exc:
        raise DataValidationError(f"--{name}: not a comma-separated vector") from exc


def _parse_rows(text: str) -> list[int]:
    try:
        return sorted({int(tok) for tok in text.split(",") if tok != ""})
    except ValueError as exc:
        raise DataValidationError("--drop-rows: expected comma-separated row indices") from exc


def _json_ready(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _write_manifest(out_path: str, command: str, params: dict, seed, digest) -> None:
    manifest = {
        "command": command,
        "parameters": _json_ready(params),
        "seed": seed,
        "library_version": __version__,
        "input_digest": digest,
    }
    atomic_write_text(
        out_path + ".manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(_json_ready(payload), indent=2) + "\n")


def _compositions_csv(x: np.ndarray, names: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in x:
        writer.writerow([format(v, ".17g") for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------
# subcommand implementations
# --------------------------------------------------------------------------

def _cmd_fit(args: argparse.Namespace) -> int:
    x, names, path = _load_dataset(args)
    dropped = []
    if args.drop_rows:
        dropped = _parse_rows(args.drop_rows)
        if dropped and (dropped[0] < 0 or dropped[-1] >= x.shape[0]):
            raise DataValidationError(
                f"--drop-rows indices out of range 0..{x.shape[0] - 1}"
            )
        keep = np.ones(x.shape[0], dtype=bool)
        keep[dropped] = False
        x = x[keep]

    grid = default_alpha_grid(args.grid_step)
    if args.alpha is not None:
        fit = (
            logistic_normal_fit(x)
            if args.alpha == 0.0
            else em_fit(x, args.alpha, tol=args.tol)
        )
        best_alpha = args.alpha
        profile = [[args.alpha, fit.log_likelihood]]
    else:
        search = fit_alpha(x, grid=grid, refine=not args.no_refine, tol=args.tol)
        fit = search.best_fit
        best_alpha = search.best_alpha
        profile = search.profile.tolist()

    report = {
        "alpha_hat": best_alpha,
        "mu_hat": fit.params.mu,
        "sigma_hat": fit.params.sigma,
        "p_hat": fit.params.p,
        "log_likelihood": fit.log_likelihood,
        "frechet_mean": frechet_mean(fit),
        "converged": fit.converged,
        "iterations": fit.iterations,
        "n": int(x.shape[0]),
        "n_parts": int(x.shape[1]),
        "component_names": names,
        "dropped_rows": dropped,
        "profile": profile,
    }
    _write_json(args.out, report)
    _write_manifest(
        args.out,
        "fit",
        {
            "input": path,
            "delimiter": args.delimiter,
            "has_header": not args.no_header,
            "normalize": args.normalize,
            "alpha": args.alpha,
            "grid_step": args.grid_step,
            "tol": args.tol,
            "no_refine": args.no_refine,
            "drop_rows": dropped,
        },
        None,
        sha256_file(path),
    )
    print(f"alpha_hat={best_alpha:.6g} loglik={fit.log_likelihood:.6g} -> {args.out}")
    return EXIT_OK


def _params_from_args(args: argparse.Namespace) -> tuple[FoldedNormalParams, str]:
    mu = _parse_vector(args.mu, "mu")
    sigma = _read_square_csv(args.sigma)
    if sigma.shape[0] != mu.shape[0]:
        raise DataValidationError(
            f"sigma is {sigma.shape} but mu has length {mu.shape[0]}"
        )
    params = FoldedNormalParams(alpha=args.alpha, p=1.0, mu=mu, sigma=sigma)
    return params, sha256_file(args.sigma)


def _cmd_sample(args: argparse.Namespace) -> int:
    params, digest = _params_from_args(args)
    x = sample(params, args.n, seed=args.seed)
    names = [f"comp_{i + 1}" for i in range(params.n_parts)]
    atomic_write_text(args.out, _compositions_csv(x, names))
    _write_manifest(
        args.out,
        "sample",
        {"alpha": args.alpha, "mu": args.mu, "sigma": args.sigma, "n": args.n},
        args.seed,
        digest,
    )
    print(f"wrote {args.n} compositions -> {args.out}")
    return EXIT_OK


def _cmd_contour(args: argparse.Namespace) -> int:
    params, digest = _params_from_args(args)
    grid = contour_grid(params, resolution=args.resolution)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x1", "x2", "x3", "log_density", "interior"])
    interior = grid.interior_mask()
    for pt, ld, keep in zip(grid.points, grid.log_density, interior):
        writer.writerow(
            [format(v, ".17g") for v in pt]
            + [format(ld, ".17g") if keep else "nan", int(keep)]
        )
    atomic_write_text(args.out, buf.getvalue())
    _write_manifest(
        args.out,
        "contour",
        {
            "alpha": args.alpha,
            "mu": args.mu,
            "sigma": args.sigma,
            "resolution": args.resolution,
        },
        None,
        digest,
    )
    print(
        f"grid resolution {args.resolution}, modes={grid.mode_count()} -> {args.out}"
    )
    return EXIT_OK


def _cmd_outside(args: argparse.Namespace) -> int:
    params, digest = _params_from_args(args)
    result = outside_probability(params, draws=args.draws, seed=args.seed)
    _write_json(
        args.out,
        {
            "total": result.total,
            "per_component": result.per_component,
            "draws": result.draws,
        },
    )
    _write_manifest(
        args.out,
        "outside",
        {"alpha": args.alpha, "mu": args.mu, "sigma": args.sigma, "draws": args.draws},
        args.seed,
        digest,
    )
    print(f"outside probability {result.total:.6g} -> {args.out}")
    return EXIT_OK


def _cmd_test(args: argparse.Namespace) -> int:
    x, _, path = _load_dataset(args)
    result = bootstrap_test_alpha(
        x, B=args.B, seed=args.seed, statistic=args.statistic
    )
    _write_json(
        args.out,
        {
            "statistic": result.statistic,
            "observed": result.alpha_obs,
            "bootstrap_values": result.alpha_boot,
            "p_value": result.p_value,
            "B": args.B,
        },
    )
    _write_manifest(
        args.out,
        "test",
        {"input": path, "B": args.B, "statistic": args.statistic,
         "normalize": args.normalize},
        args.seed,
        sha256_file(path),
    )
    print(f"p_value={result.p_value:.6g} -> {args.out}")
    return EXIT_OK


def _cmd_ci(args: argparse.Namespace) -> int:
    x, _, path = _load_dataset(args)
    if args.method == "bootstrap":
        lo, hi = bootstrap_ci_alpha(x, B=args.B, level=args.level, seed=args.seed)
    else:
        lo, hi = curvature_ci_alpha(x, level=args.level, h=args.step)
    _write_json(
        args.out,
        {"method": args.method, "level": args.level, "lower": lo, "upper": hi},
    )
    _write_manifest(
        args.out,
        "ci",
        {"input": path, "method": args.method, "B": args.B, "level": args.level,
         "h": args.step, "normalize": args.normalize},
        args.seed,
        sha256_file(path),
    )
    print(f"{args.level:.0%} CI [{lo:.4f}, {hi:.4f}] -> {args.out}")
    return EXIT_OK


def _cmd_study(args: argparse.Namespace) -> int:
    if args.preset:
        preset = STUDY_PRESETS[args.preset]
        cfg = StudyConfig(
            base_mu=_PRESET_MU,
            base_sigma=_PRESET_SIGMA,
            seed=args.seed if args.seed is not None else 0,
            replications=args.replications or preset["replications"],
            alphas=preset["alphas"],
            kappas=preset["kappas"],
            ns=preset["ns"],
            estimate_alpha=preset["estimate_alpha"],
        )
        digest = None
    else:
        if not (args.alphas and args.kappas and args.ns and args.mu and args.sigma):
            raise DataValidationError(
                "study needs either --preset or all of "
                "--alphas/--kappas/--ns/--mu/--sigma"
            )
        cfg = StudyConfig(
            alphas=tuple(_parse_vector(args.alphas, "alphas")),
            kappas=tuple(_parse_vector(args.kappas, "kappas")),
            ns=tuple(int(v) for v in _parse_vector(args.ns, "ns")),
            replications=args.replications or 50,
            base_mu=_parse_vector(args.mu, "mu"),
            base_sigma=_read_square_csv(args.sigma),
            seed=args.seed if args.seed is not None else 0,
        )
        digest = sha256_file(args.sigma)
    report = recovery_study(cfg, workers=args.workers)
    atomic_write_text(args.out, report.to_csv())
    json_out = os.path.splitext(args.out)[0] + ".json"
    atomic_write_text(json_out, report.to_json() + "\n")
    _write_manifest(
        args.out,
        "study",
        {
            "preset": args.preset,
            "alphas": list(cfg.alphas),
            "kappas": list(cfg.kappas),
            "ns": list(cfg.ns),
            "replications": cfg.replications,
            "base_mu": cfg.base_mu,
            "base_sigma": cfg.base_sigma,
        },
        cfg.seed,
        digest,
    )
    print(f"study: {len(report.rows)} cells -> {args.out}, {json_out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "input",
        help="compositions CSV path, or 'arctic-lake' for the bundled data",
    )
    p.add_argument("--normalize", action="store_true",
                   help="rescale rows to unit sum instead of requiring it")


def _add_param_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, required=True,
                   help="transform parameter in [-1, 1]")
    p.add_argument("--mu", required=True, help="comma-separated mean vector")
    p.add_argument("--sigma", required=True,
                   help="covariance as a square headerless CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="folded-simplex",
        description="Folded multivariate normal models for compositional data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the model, searching over alpha")
    _add_dataset_args(p)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--alpha", type=float, default=None,
                   help="fix alpha instead of maximizing over it (0 = logistic normal)")
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--no-refine", action="store_true",
                   help="skip scalar refinement after the grid sweep")
    p.add_argument("--drop-rows", default="",
                   help="comma-separated 0-based row indices to exclude")
    p.add_argument("--out", required=True, help="JSON report path")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("sample", help="draw compositions from the model")
    _add_param_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("contour", help="log-density over a ternary grid")
    _add_param_args(p)
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=_cmd_contour)

    p = sub.add_parser("outside", help="Monte-Carlo mass outside the simplex image")
    _add_param_args(p)
    p.add_argument("--draws", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="JSON output path")
    p.set_defaults(func=_cmd_outside)

    p = sub.add_parser("test", help="bootstrap test of alpha = 0")
    _add_dataset_args(p)
    p.add_argument("--B", type=int, default=299)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--statistic", choices=("alpha", "lr"), default="alpha")
    p.add_argument("--out", required=True, help="JSON output path")
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("ci", help="confidence interval for alpha")
    _add_dataset_args(p)
    p.add_argument("--method", choices=("bootstrap", "curvature"), default="bootstrap")
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--step", type=float, default=1e-2,
                   help="finite-difference step for the curvature method")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="JSON output path")
    p.set_defaults(func=_cmd_ci)

    p = sub.add_parser("study", help="parameter-recovery simulation study")
    p.add_argument("--preset", choices=sorted(STUDY_PRESETS))
    p.add_argument("--alphas", help="comma-separated non-zero alphas")
    p.add_argument("--kappas", help="comma-separated covariance scales")
    p.add_argument("--ns", help="comma-separated sample sizes")
    p.add_argument("--mu", help="comma-separated base mean vector")
    p.add_argument("--sigma", help="base covariance CSV")
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help="parallel cell workers (capped by FOLDED_SIMPLEX_THREADS)")
    p.add_argument("--out", required=True, help="CSV output path (JSON twin written too)")
    p.set_defaults(func=_cmd_study)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FoldedSimplexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
