"""Command-line front end.

Usage::

    funroot <subcommand> [--config path] [--seed N] [--out dir]
            [--format json,csv,svg] <inputs...>

Subcommands: simulate, spectrum, fredholm, decompose, fpca, adf, johansen,
detect.  Every run writes a UTF-8 JSON report with a top-level
{"version", "command", "inputs_digest"} header into the output directory
(the FUNROOT_OUT environment variable overrides --out).  Exit codes are
stable: 0 success, 1 usage, 2 data, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DataFormatError,
    DefectiveUnitRootError,
    DivergenceError,
    EigenSolverError,
    FunrootError,
    GridMismatchError,
    NoStrongUnitRootError,
    SingularDesignError,
    UnsupportedAdjointError,
)
from .far import load_function_series, model_from_json, save_sample_path, simulate
from .funcspace import FunctionSeries, GridDomain, trapezoid_weights
from .operators import fredholm_determinant, operator_from_json, spectrum
from .stats import adf_test, detect_unit_roots, fpca, johansen_trace
from .unitroot import (
    TOLERANCE_PROFILES,
    classify,
    decompose,
    decomposition_to_json,
    split_path,
)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

_ERROR_EXIT_CODES = [
    (UnsupportedAdjointError, EXIT_USAGE),
    (DivergenceError, EXIT_NUMERICAL),
    (EigenSolverError, EXIT_NUMERICAL),
    (SingularDesignError, EXIT_NUMERICAL),
    (DefectiveUnitRootError, EXIT_NUMERICAL),
    (DataFormatError, EXIT_DATA),
    (GridMismatchError, EXIT_DATA),
    (NoStrongUnitRootError, EXIT_DATA),
    (FunrootError, EXIT_DATA),
    (FileNotFoundError, EXIT_DATA),
    (ValueError, EXIT_USAGE),
]


@dataclass(frozen=True)
class DatasetCSV:
    """Rates table: rows labeled by age/position, columns by year."""

    row_labels: np.ndarray
    column_labels: np.ndarray
    matrix: np.ndarray
    log_applied: bool


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    grid_size: int = 101
    tolerance_profile: str = "exact"
    out: str = "."
    formats: tuple[str, ...] = ("json",)

    def __post_init__(self):
        if self.grid_size < 3:
            raise ValueError("grid_size must be at least 3")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.tolerance_profile not in TOLERANCE_PROFILES:
            raise ValueError(f"unknown tolerance profile {self.tolerance_profile!r}")
        for fmt in self.formats:
            if fmt not in ("json", "csv", "svg"):
                raise ValueError(f"unknown report format {fmt!r}")

    @property
    def tol(self) -> float:
        return TOLERANCE_PROFILES[self.tolerance_profile]


def load_config(args) -> RunConfig:
    """Merge an optional JSON config file with command-line overrides."""
    base = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
    seed = args.seed if getattr(args, "seed", None) is not None else base.get("seed", 0)
    out = getattr(args, "out", None) or base.get("out", ".")
    out = os.environ.get("FUNROOT_OUT", out)
    formats = getattr(args, "format", None) or base.get("formats", "json")
    if isinstance(formats, str):
        formats = tuple(f.strip() for f in formats.split(",") if f.strip())
    profile = getattr(args, "tol_profile", None) or base.get("tolerance_profile", "exact")
    return RunConfig(
        seed=int(seed),
        grid_size=int(base.get("grid_size", 101)),
        tolerance_profile=profile,
        out=str(out),
        formats=tuple(formats),
    )


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def read_dataset_csv(path) -> DatasetCSV:
    """Parse a dataset CSV: first column age labels, first row year labels."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) < 2 or len(rows[0]) < 2:
        raise DataFormatError(f"{path}: need a header row plus data rows")
    try:
        years = np.array([int(float(x)) for x in rows[0][1:]])
    except ValueError as exc:
        raise DataFormatError(f"{path}: line 1: bad year label ({exc})") from exc
    ages = []
    matrix = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(years) + 1:
            raise DataFormatError(
                f"{path}: line {lineno}: expected {len(years) + 1} cells, got {len(row)}"
            )
        try:
            ages.append(float(row[0]))
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: bad row label ({exc})") from exc
        vals = []
        for colno, cell in enumerate(row[1:], start=2):
            try:
                value = float(cell)
            except ValueError as exc:
                raise DataFormatError(
                    f"{path}: line {lineno}, column {colno}: "
                    f"cannot parse cell {cell!r}"
                ) from exc
            if not np.isfinite(value):
                raise DataFormatError(
                    f"{path}: line {lineno}, column {colno}: non-finite cell"
                )
            vals.append(value)
        matrix.append(vals)
    ages = np.array(ages)
    if not np.all(np.diff(ages) > 0):
        raise DataFormatError(f"{path}: row labels must be strictly increasing")
    return DatasetCSV(ages, years, np.array(matrix), False)


def dataset_to_series(
    dataset: DatasetCSV,
    age_min: float,
    age_max: float,
    year_min: int,
    year_max: int,
    log: bool,
) -> FunctionSeries:
    """Slice a dataset and map each selected year to a grid function.

    The selected age range is rescaled affinely onto [0, 1]; the natural
    log is applied first when requested.
    """
    ages, years = dataset.row_labels, dataset.column_labels
    if age_min < ages[0] or age_max > ages[-1] or age_min >= age_max:
        raise DataFormatError(
            f"age range [{age_min}, {age_max}] outside data range "
            f"[{ages[0]}, {ages[-1]}]"
        )
    if year_min < years.min() or year_max > years.max() or year_min > year_max:
        raise DataFormatError(
            f"year range [{year_min}, {year_max}] outside data range "
            f"[{years.min()}, {years.max()}]"
        )
    row_mask = (ages >= age_min) & (ages <= age_max)
    col_mask = (years >= year_min) & (years <= year_max)
    sub = dataset.matrix[np.ix_(row_mask, col_mask)]
    if log:
        if np.any(sub <= 0):
            bad = np.argwhere(sub <= 0)[0]
            raise DataFormatError(
                f"log transform requires positive cells; offending row/col "
                f"{ages[row_mask][bad[0]]}/{years[col_mask][bad[1]]}"
            )
        sub = np.log(sub)
    sel_ages = ages[row_mask]
    nodes = (sel_ages - sel_ages[0]) / (sel_ages[-1] - sel_ages[0])
    domain = GridDomain(nodes, trapezoid_weights(nodes))
    return FunctionSeries(domain, sub.T)


def ingest_csv(
    path,
    age_min: float,
    age_max: float,
    year_min: int,
    year_max: int,
    log: bool = False,
) -> FunctionSeries:
    """Read a dataset CSV and return the selected years as a series."""
    return dataset_to_series(read_dataset_csv(path), age_min, age_max, year_min, year_max, log)


def _load_series(args) -> FunctionSeries:
    if getattr(args, "layout", "series") == "dataset":
        dataset = read_dataset_csv(args.data)
        age_min = args.age_min if args.age_min is not None else float(dataset.row_labels[0])
        age_max = args.age_max if args.age_max is not None else float(dataset.row_labels[-1])
        year_min = args.year_min if args.year_min is not None else int(dataset.column_labels.min())
        year_max = args.year_max if args.year_max is not None else int(dataset.column_labels.max())
        return dataset_to_series(dataset, age_min, age_max, year_min, year_max, args.log)
    return load_function_series(args.data)


def _read_columns_csv(path) -> np.ndarray:
    """Plain numeric CSV, one or more columns, no header."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    data = []
    for lineno, row in enumerate(rows, start=1):
        try:
            data.append([float(x) for x in row])
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
    widths = {len(r) for r in data}
    if len(widths) != 1:
        raise DataFormatError(f"{path}: ragged rows")
    return np.array(data)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _digest(paths, extras: dict) -> str:
    h = hashlib.sha256()
    for p in paths:
        if p is None:
            continue
        h.update(Path(p).read_bytes())
    h.update(json.dumps(extras, sort_keys=True).encode())
    return h.hexdigest()


def _write_report(config: RunConfig, command: str, digest: str, payload: dict) -> Path:
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report = {"version": __version__, "command": command, "inputs_digest": digest}
    report.update(payload)
    path = outdir / f"{command}.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(path)
    return path


def _write_scores_csv(path: Path, scores: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in np.atleast_2d(scores):
            writer.writerow([repr(x) for x in row])


def _write_scores_svg(path: Path, scores: np.ndarray, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    for j in range(scores.shape[1]):
        ax.plot(scores[:, j], lw=1.2, label=f"component {j + 1}")
    ax.set_xlabel("time index")
    ax.set_ylabel("score")
    ax.set_title(title)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = load_config(args)
    with open(args.model, encoding="utf-8") as fh:
        model = model_from_json(json.load(fh))
    if args.seed is not None:
        model = type(model)(model.order, model.rho1, model.rho2,
                            model.noise.with_seed(args.seed))
    path = simulate(model, args.length, burn_in=args.burn_in)
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "path.csv"
    meta_path = save_sample_path(path, csv_path)
    digest = _digest([args.model], {"length": args.length, "seed": model.noise.seed})
    _write_report(config, "simulate", digest, {
        "length": args.length,
        "burn_in": path.burn_in,
        "seed": model.noise.seed,
        "path_csv": csv_path.name,
        "metadata": Path(meta_path).name,
    })
    return 0


def _load_operator(path):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if "rho1" in obj:  # a full model file also identifies its operator
        return operator_from_json(obj["rho1"])
    return operator_from_json(obj)


def cmd_spectrum(args) -> int:
    config = load_config(args)
    rho = _load_operator(args.model)
    report = classify(rho, config.tol)
    digest = _digest([args.model], {"tol": config.tol})
    _write_report(config, "spectrum", digest, {"spectrum": report.to_json()})
    return 0


def cmd_fredholm(args) -> int:
    config = load_config(args)
    rho = _load_operator(args.model)
    if args.z:
        points = [complex(z) for z in args.z]
    else:
        points = [complex(x) for x in np.linspace(-2.0, 2.0, 81)]
    values = [fredholm_determinant(rho, z) for z in points]
    digest = _digest([args.model], {"z": [[z.real, z.imag] for z in points]})
    payload = {
        "points": [
            {"z": [z.real, z.imag], "p": [v.real, v.imag]}
            for z, v in zip(points, values)
        ]
    }
    _write_report(config, "fredholm", digest, payload)
    if "csv" in config.formats:
        out = Path(config.out) / "fredholm.csv"
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["z_re", "z_im", "p_re", "p_im"])
            for z, v in zip(points, values):
                writer.writerow([repr(z.real), repr(z.imag), repr(v.real), repr(v.imag)])
    return 0


def cmd_decompose(args) -> int:
    config = load_config(args)
    rho = _load_operator(args.model)
    report = classify(rho, config.tol)
    dec = decompose(rho, config.tol)
    digest = _digest([args.model, getattr(args, "path", None)], {"tol": config.tol})
    payload = {"decomposition": decomposition_to_json(dec, report)}
    if getattr(args, "path", None):
        series = load_function_series(args.path)
        trend, stationary = split_path(dec, series)
        outdir = Path(config.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, part in (("trend.csv", trend), ("stationary.csv", stationary)):
            with open(outdir / name, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow([repr(x) for x in part.domain.nodes])
                for row in part.values:
                    writer.writerow([repr(x) for x in row])
        payload["trend_csv"] = "trend.csv"
        payload["stationary_csv"] = "stationary.csv"
    _write_report(config, "decompose", digest, payload)
    return 0


def cmd_fpca(args) -> int:
    config = load_config(args)
    series = _load_series(args)
    result = fpca(series, args.components)
    digest = _digest([args.data], {"k": args.components})
    payload = {
        "eigenvalues": result.eigenvalues.tolist(),
        "scores_shape": list(result.scores.shape),
    }
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if "csv" in config.formats:
        _write_scores_csv(outdir / "fpca_scores.csv", result.scores)
        payload["scores_csv"] = "fpca_scores.csv"
    if "svg" in config.formats:
        _write_scores_svg(outdir / "fpca_scores.svg", result.scores,
                          "principal component scores")
        payload["scores_svg"] = "fpca_scores.svg"
    _write_report(config, "fpca", digest, payload)
    return 0


def cmd_adf(args) -> int:
    config = load_config(args)
    data = _read_columns_csv(args.data)
    if data.shape[1] != 1:
        raise DataFormatError("the unit-root test expects a one-column CSV")
    result = adf_test(data[:, 0], lags=args.lags, spec=args.spec)
    digest = _digest([args.data], {"lags": args.lags, "spec": args.spec})
    _write_report(config, "adf", digest, {
        "tau": result.tau,
        "lags": result.lags,
        "spec": result.spec,
        "critical_values": result.critical_values,
        "reject_at": result.reject_at,
    })
    return 0


def cmd_johansen(args) -> int:
    config = load_config(args)
    data = _read_columns_csv(args.data)
    result = johansen_trace(data, lags=args.lags, det_spec=args.det)
    digest = _digest([args.data], {"lags": args.lags, "det": args.det})
    _write_report(config, "johansen", digest, {"johansen": result.to_json()})
    return 0


def cmd_detect(args) -> int:
    config = load_config(args)
    series = _load_series(args)
    report = detect_unit_roots(
        series,
        args.components,
        level=args.level,
        adf_lags=args.lags,
        johansen_lags=args.johansen_lags,
    )
    digest = _digest([args.data], {
        "k": args.components, "level": args.level, "lags": args.lags,
    })
    payload = report.to_json()
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if "csv" in config.formats:
        _write_scores_csv(outdir / "detect_scores.csv", report.fpca_result.scores)
        payload["scores_csv"] = "detect_scores.csv"
    if "svg" in config.formats:
        _write_scores_svg(outdir / "detect_scores.svg", report.fpca_result.scores,
                          "principal component scores")
        payload["scores_svg"] = "detect_scores.svg"
    _write_report(config, "detect", digest, payload)
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run configuration file")
    parser.add_argument("--seed", type=int, default=None, help="override the model seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--format", default=None,
                        help="comma-separated report formats: json,csv,svg")
    parser.add_argument("--tol-profile", choices=sorted(TOLERANCE_PROFILES),
                        default=None, help="eigenvalue tolerance profile")


def _add_series_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("data", help="input CSV")
    parser.add_argument("--layout", choices=["series", "dataset"], default="series",
                        help="series: node-header CSV; dataset: age-by-year table")
    parser.add_argument("--age-min", type=float, default=None)
    parser.add_argument("--age-max", type=float, default=None)
    parser.add_argument("--year-min", type=int, default=None)
    parser.add_argument("--year-max", type=int, default=None)
    parser.add_argument("--log", action="store_true", help="apply a natural log first")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funroot",
        description="Simulation and unit-root analysis of functional time series",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a model file to a path CSV")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="eigenvalues and unit-root classification")
    p.add_argument("model", help="operator or model JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fredholm", help="evaluate the Fredholm determinant")
    p.add_argument("model", help="operator or model JSON file")
    p.add_argument("--z", action="append", default=None,
                   help="complex evaluation point, e.g. '1+0.5j' (repeatable)")
    _add_common(p)
    p.set_defaults(func=cmd_fredholm)

    p = sub.add_parser("decompose", help="random-walk/stationary decomposition")
    p.add_argument("model", help="operator or model JSON file")
    p.add_argument("--path", default=None, help="optional series CSV to split")
    _add_common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("fpca", help="functional principal components of a series")
    _add_series_input(p)
    p.add_argument("-k", "--components", type=int, default=3)
    _add_common(p)
    p.set_defaults(func=cmd_fpca)

    p = sub.add_parser("adf", help="augmented Dickey-Fuller test on one column")
    p.add_argument("data", help="one-column CSV")
    p.add_argument("--lags", type=int, default=0)
    p.add_argument("--spec", choices=["none", "constant", "trend"], default="none")
    _add_common(p)
    p.set_defaults(func=cmd_adf)

    p = sub.add_parser("johansen", help="Johansen trace test on a score matrix")
    p.add_argument("data", help="CSV with 2 to 5 columns")
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--det", choices=["none", "constant"], default="none")
    _add_common(p)
    p.set_defaults(func=cmd_johansen)

    p = sub.add_parser("detect", help="FPCA + ADF (+ Johansen) detection pipeline")
    _add_series_input(p)
    p.add_argument("-k", "--components", type=int, default=3)
    p.add_argument("--level", choices=["1%", "5%", "10%"], default="5%")
    p.add_argument("--lags", type=int, default=0, help="ADF lag order")
    p.add_argument("--johansen-lags", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    return parser


def _exit_code_for(exc: Exception) -> int:
    for cls, code in _ERROR_EXIT_CODES:
        if isinstance(exc, cls):
            return code
    raise exc


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except Exception as exc:  # map to stable exit codes with a JSON trailer
        code = _exit_code_for(exc)
        error = {"error": {"type": type(exc).__name__, "message": str(exc),
                           "exit_code": code}}
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
