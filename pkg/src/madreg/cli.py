"""Command-line entry point: ``madreg {fit,estimate,simulate,report,design}``.

Exit codes: 0 on success, 1 on invalid input or configuration, 2 when a
computation fails.
"""

from __future__ import annotations

import argparse
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from madreg import __version__
from madreg import config as cfgmod
from madreg.design import DesignKind, as_array, gen_anova_design, gen_normal_design, with_intercept
from madreg.errors import (
    ConfigError,
    DimensionMismatchError,
    InvalidDimensionsError,
    MadregError,
    SimulationError,
)
from madreg.estimators import SILVERMAN, estimate
from madreg.l1fit import DEFAULT_TOL, fit_median_regression

log = logging.getLogger("madreg")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_COMPUTE = 2


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(f"{self.prog}: {message}")


def _version_text() -> str:
    return f"madreg {__version__} (python {platform.python_version()}, numpy {np.__version__})"


def _read_matrix(path, what: str) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{what} file not found: {path}")
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except ValueError as exc:
        raise ConfigError(f"{path}: expected a numeric CSV without header: {exc}") from None
    if data.size == 0:
        raise ConfigError(f"{path}: no data")
    return data


def _read_xy(args) -> tuple[np.ndarray, np.ndarray]:
    X = _read_matrix(args.design, "design")
    Y = _read_matrix(args.response, "response")
    if Y.shape[1] != 1:
        if Y.shape[0] == 1:
            Y = Y.T
        else:
            raise ConfigError(f"{args.response}: expected a single column, got {Y.shape[1]}")
    if args.intercept:
        X = with_intercept(X)
    return X, Y[:, 0]


def _term_names(p: int, intercept: bool) -> list[str]:
    if intercept:
        return ["intercept"] + [f"beta_{j}" for j in range(1, p)]
    return [f"beta_{j}" for j in range(1, p + 1)]


def _bandwidth_arg(text: str):
    if text.lower() == SILVERMAN:
        return SILVERMAN
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'silverman' or a positive number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return value


def _int_list_arg(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list_arg(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def cmd_fit(args, out) -> int:
    X, Y = _read_xy(args)
    fit = fit_median_regression(X, Y, tol=args.tol)
    out.write("term,value\n")
    for name, value in zip(_term_names(X.shape[1], args.intercept), fit.beta_hat):
        out.write(f"{name},{float(value)!r}\n")
    out.write(f"objective,{fit.objective!r}\n")
    out.write(f"status,{fit.status.value}\n")
    out.write(f"iterations,{fit.iterations}\n")
    return EXIT_OK


def cmd_estimate(args, out) -> int:
    X, Y = _read_xy(args)
    est = estimate(X, Y, bandwidth=args.bandwidth, tol=args.tol)
    out.write(f"# n={est.n}\n# p={est.p}\n")
    out.write(f"# bandwidth_rule={est.bandwidth_rule}\n# bandwidth={est.bandwidth!r}\n")
    out.write(f"# fit_status={est.fit.status.value}\n")
    out.write("quantity,value\n")
    for name in ("gamma_hat", "f0_hat", "c_hat", "gamma_check"):
        out.write(f"{name},{getattr(est, name)!r}\n")
    return EXIT_OK


def _progress(done: int, total: int) -> None:
    if sys.stderr.isatty():
        sys.stderr.write(f"\r{done}/{total} replicates")
        if done == total:
            sys.stderr.write("\n")
        sys.stderr.flush()


def _write_meta(path: Path, cfg: cfgmod.RunConfig, table) -> None:
    lines = [
        f"# {_version_text()}",
        "# This file is a valid config: `madreg simulate --config meta.txt` reproduces records.csv.",
        f"# records = {len(table)}",
        f"# failed_records = {table.metadata.get('failed_records', 0)}",
        "# bandwidth_rule applies Silverman's 0.9 min(sd, IQR/1.34) n^(-1/5) unless a number is given",
        "",
    ]
    path.write_text("\n".join(lines) + cfgmod.to_toml(cfg))


def cmd_simulate(args, out) -> int:
    from madreg.reporting import summarize, write_summary_csv
    from madreg.simulation import make_grid, run_grid

    base = cfgmod.RunConfig()
    if args.config is not None:
        base = cfgmod.validate(cfgmod.load(args.config))
    cfg = cfgmod.merge(
        base,
        {
            "p": args.p,
            "k": args.k,
            "errors": args.errors,
            "designs": args.designs,
            "replicates": args.replicates,
            "base_seed": args.base_seed,
            "bandwidth": args.bandwidth,
            "tol": args.tol,
            "output_dir": args.out,
            "threads": args.threads,
        },
    )
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    cells = make_grid(cfg.p, cfg.k, cfg.errors, cfg.designs, cfg.replicates, cfg.base_seed)
    log.info("running %d cells x %d replicates with %d worker(s)", len(cells), cfg.replicates, cfg.threads)
    status = EXIT_OK
    try:
        table = run_grid(cells, threads=cfg.threads, bandwidth=cfg.bandwidth, tol=cfg.tol, progress=_progress)
    except SimulationError as exc:
        if exc.table is None:
            raise
        log.error("%s", exc)
        table = exc.table
        status = EXIT_COMPUTE
    table.write_csv(outdir / "records.csv")
    write_summary_csv(summarize(table), outdir / "summary.csv")
    _write_meta(outdir / "meta.txt", cfg, table)
    failed = table.metadata.get("failed_records", 0)
    out.write(f"wrote {len(table)} records ({failed} flagged) to {outdir}\n")
    return status


def cmd_report(args, out) -> int:
    from madreg.reporting import render_qq_grid, summarize, write_summary_csv
    from madreg.simulation import SimulationTable

    path = Path(args.records)
    if not path.is_file():
        raise ConfigError(f"records file not found: {path}")
    try:
        table = SimulationTable.read_csv(path)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: not a records file: {exc}") from None
    if not len(table):
        raise ConfigError(f"{path}: no records")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_summary_csv(summarize(table), outdir / "summary.csv")
    written = [outdir / "summary.csv"]
    if not args.csv_only:
        written += render_qq_grid(table, outdir)
    for p in written:
        out.write(f"{p}\n")
    return EXIT_OK


def cmd_design(args, out) -> int:
    kind = DesignKind.from_token(args.kind)
    if kind is DesignKind.ANOVA:
        if args.n % args.p:
            raise InvalidDimensionsError(f"anova design needs p to divide n (n={args.n}, p={args.p})")
        X = gen_anova_design(args.p, args.n // args.p)
    else:
        X = gen_normal_design(args.n, args.p, args.seed)
    arr = as_array(X)
    if args.intercept:
        arr = with_intercept(arr)
    lines = "".join(",".join(repr(float(v)) for v in row) + "\n" for row in arr)
    if args.out:
        Path(args.out).write_text(lines)
    else:
        out.write(lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="madreg", description="Bias-reduced MAD estimation for median regression.")
    parser.add_argument("--version", action="store_true", help="print version information and exit")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def data_args(p):
        p.add_argument("--design", required=True, help="design matrix CSV (no header)")
        p.add_argument("--response", required=True, help="response CSV, one column")
        p.add_argument("--intercept", action="store_true", help="prepend a column of ones")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)

    p_fit = sub.add_parser("fit", help="median regression fit")
    data_args(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_est = sub.add_parser("estimate", help="MAD estimate with empirical bias correction")
    data_args(p_est)
    p_est.add_argument("--bandwidth", type=_bandwidth_arg, default=SILVERMAN)
    p_est.set_defaults(func=cmd_estimate)

    p_sim = sub.add_parser("simulate", help="Monte Carlo simulation over a (p, k) grid")
    p_sim.add_argument("--config", help="TOML config file; flags override its values")
    p_sim.add_argument("--p", type=_int_list_arg, help="comma-separated p values")
    p_sim.add_argument("--k", type=_int_list_arg, help="comma-separated k = n/p values")
    p_sim.add_argument("--errors", type=_str_list_arg, help="comma-separated: normal,laplace")
    p_sim.add_argument("--designs", type=_str_list_arg, help="comma-separated: normal,anova")
    p_sim.add_argument("--replicates", type=int)
    p_sim.add_argument("--base-seed", type=int)
    p_sim.add_argument("--bandwidth", type=_bandwidth_arg)
    p_sim.add_argument("--tol", type=float)
    p_sim.add_argument("--out", help="output directory")
    p_sim.add_argument("--threads", type=int, help="number of worker processes")
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("report", help="QQ-plot figures and summary from records.csv")
    p_rep.add_argument("--records", required=True)
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--csv-only", action="store_true", help="skip SVG rendering")
    p_rep.set_defaults(func=cmd_report)

    p_des = sub.add_parser("design", help="export a design matrix as CSV")
    p_des.add_argument("--kind", default="normal", help="normal or anova")
    p_des.add_argument("--n", type=int, required=True)
    p_des.add_argument("--p", type=int, required=True)
    p_des.add_argument("--seed", type=int, default=0)
    p_des.add_argument("--intercept", action="store_true")
    p_des.add_argument("--out", help="output file (default: standard output)")
    p_des.set_defaults(func=cmd_design)
    return parser


def parse_and_dispatch(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.version:
        out.write(_version_text() + "\n")
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args, out)
    except (ConfigError, DimensionMismatchError, InvalidDimensionsError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except MadregError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_COMPUTE
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
