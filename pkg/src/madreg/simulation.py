"""Monte Carlo engine over a grid of (p, k = n/p) cells.

Each replicate draws errors (and a fresh normal design when requested),
sets ``Y = gamma * e`` with ``beta = 0`` and ``gamma = 1``, fits the median
regression and records the four estimators and their Z statistics.

Replicate seeds come from a ``SeedSequence`` keyed by the base seed, the
cell identity and the replicate index, so a table does not depend on how
the replicates were scheduled.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from madreg import __version__
from madreg.design import DesignKind, gen_anova_design, gen_normal_design
from madreg.distributions import ErrorDistribution, abs_variance, sample_errors
from madreg.errors import InsufficientDataError, MadregError, SimulationError
from madreg.estimators import SILVERMAN, EstimatorSet, estimate_all
from madreg.l1fit import DEFAULT_TOL, FitStatus, fit_median_regression

GAMMA_TRUE = 1.0
ESTIMATORS = ("bar", "hat", "tilde", "check")
MAX_FAILURE_FRACTION = 0.5

_DESIGN_CODE = {DesignKind.NORMAL: 0, DesignKind.ANOVA: 1}
_ERROR_CODE = {ErrorDistribution.NORMAL: 0, ErrorDistribution.LAPLACE: 1}

RECORD_COLUMNS = (
    "cell_id",
    "errors",
    "design",
    "p",
    "k",
    "n",
    "replicate",
    "seed",
    "status",
    "fit_status",
    "iterations",
    "gamma_bar",
    "gamma_hat",
    "gamma_tilde",
    "gamma_check",
    "c_exact",
    "c_hat",
    "f0_hat",
    "bandwidth",
    "z_bar",
    "z_hat",
    "z_tilde",
    "z_check",
)


@dataclass(frozen=True)
class SimCell:
    p: int
    k: int
    design: DesignKind
    errors: ErrorDistribution
    replicates: int = 1000
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "design", DesignKind(self.design))
        object.__setattr__(self, "errors", ErrorDistribution(self.errors))
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.k < 2:
            raise ValueError(f"k must be >= 2 so that n > p, got {self.k}")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")

    @property
    def n(self) -> int:
        return self.p * self.k

    @property
    def cell_id(self) -> str:
        return f"{self.errors.value}-{self.design.value}-p{self.p}-k{self.k}"

    def replicate_seed(self, replicate_index: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            [
                self.base_seed,
                _ERROR_CODE[self.errors],
                _DESIGN_CODE[self.design],
                self.p,
                self.k,
                replicate_index,
            ]
        )


@dataclass(frozen=True)
class ReplicateRecord:
    cell: SimCell
    replicate_index: int
    seed: int
    estimates: EstimatorSet | None
    z_bar: float
    z_hat: float
    z_tilde: float
    z_check: float
    fit_status: FitStatus
    iterations: int = 0
    failure: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.failure)


@dataclass
class SimulationTable:
    records: list[ReplicateRecord]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def cells(self) -> list[SimCell]:
        seen = {}
        for rec in self.records:
            seen.setdefault(rec.cell.cell_id, rec.cell)
        return list(seen.values())

    def column(self, name: str, cell: SimCell | None = None) -> np.ndarray:
        rows = self.records if cell is None else [r for r in self.records if r.cell.cell_id == cell.cell_id]
        return np.array([record_row(r)[name] for r in rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for rec in self.records:
            row = record_row(rec)
            writer.writerow(_fmt(row[c]) for c in RECORD_COLUMNS)
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read_csv(cls, path) -> "SimulationTable":
        records = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"{path}: missing columns {sorted(missing)}")
            for row in reader:
                records.append(_parse_row(row))
        return cls(records)


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def record_row(rec: ReplicateRecord) -> dict:
    est = rec.estimates
    nan = math.nan
    return {
        "cell_id": rec.cell.cell_id,
        "errors": rec.cell.errors.value,
        "design": rec.cell.design.value,
        "p": rec.cell.p,
        "k": rec.cell.k,
        "n": rec.cell.n,
        "replicate": rec.replicate_index,
        "seed": rec.seed,
        "status": rec.failure or "ok",
        "fit_status": rec.fit_status.value,
        "iterations": rec.iterations,
        "gamma_bar": est.gamma_bar if est else nan,
        "gamma_hat": est.gamma_hat if est else nan,
        "gamma_tilde": est.gamma_tilde if est else nan,
        "gamma_check": est.gamma_check if est else nan,
        "c_exact": est.c_exact if est else nan,
        "c_hat": est.c_hat if est else nan,
        "f0_hat": est.f0_hat if est else nan,
        "bandwidth": est.bandwidth if est else nan,
        "z_bar": rec.z_bar,
        "z_hat": rec.z_hat,
        "z_tilde": rec.z_tilde,
        "z_check": rec.z_check,
    }


def _parse_row(row: dict) -> ReplicateRecord:
    cell = SimCell(
        p=int(row["p"]),
        k=int(row["k"]),
        design=DesignKind(row["design"]),
        errors=ErrorDistribution(row["errors"]),
        replicates=1,
    )
    f = {name: float(row[name]) for name in RECORD_COLUMNS[11:]}
    est = None
    if not math.isnan(f["gamma_hat"]):
        est = EstimatorSet(
            gamma_bar=f["gamma_bar"],
            gamma_hat=f["gamma_hat"],
            gamma_tilde=f["gamma_tilde"],
            gamma_check=f["gamma_check"],
            c_exact=f["c_exact"],
            c_hat=f["c_hat"],
            f0_hat=f["f0_hat"],
            bandwidth=f["bandwidth"],
        )
    status = row["status"]
    return ReplicateRecord(
        cell=cell,
        replicate_index=int(row["replicate"]),
        seed=int(row["seed"]),
        estimates=est,
        z_bar=f["z_bar"],
        z_hat=f["z_hat"],
        z_tilde=f["z_tilde"],
        z_check=f["z_check"],
        fit_status=FitStatus(row["fit_status"]),
        iterations=int(row["iterations"]),
        failure="" if status == "ok" else status,
    )


def z_statistic(G: float, gamma_true: float, v: float, n: int) -> float:
    """Standardized estimator ``(G / gamma - 1) / sqrt(v / n)``."""
    if not gamma_true > 0 or not v > 0 or n < 1:
        raise ValueError("z_statistic needs gamma_true > 0, v > 0 and n >= 1")
    return (G / gamma_true - 1.0) / math.sqrt(v / n)


def run_replicate(
    cell: SimCell,
    replicate_index: int,
    bandwidth=SILVERMAN,
    tol: float = DEFAULT_TOL,
) -> ReplicateRecord:
    """Simulate, fit and estimate one replicate of ``cell``.

    Computational failures are captured in ``failure`` rather than raised.
    """
    seq = cell.replicate_seed(replicate_index)
    design_seed, error_seed = (int(s) for s in seq.generate_state(2, dtype=np.uint64))
    n, p = cell.n, cell.p
    if cell.design is DesignKind.ANOVA:
        X = gen_anova_design(p, cell.k)
    else:
        X = gen_normal_design(n, p, design_seed)
    Y = GAMMA_TRUE * sample_errors(cell.errors, n, error_seed)
    nan = math.nan

    try:
        fit = fit_median_regression(X, Y, tol=tol)
    except MadregError as exc:
        return ReplicateRecord(cell, replicate_index, error_seed, None, nan, nan, nan, nan,
                               FitStatus.FAILED, 0, f"fit-{type(exc).__name__}")
    try:
        est = estimate_all(X, Y, np.zeros(p), cell.errors, bandwidth=bandwidth, fit=fit)
    except MadregError as exc:
        return ReplicateRecord(cell, replicate_index, error_seed, None, nan, nan, nan, nan,
                               fit.status, fit.iterations, f"estimate-{type(exc).__name__}")

    v = abs_variance(cell.errors)
    z = {name: z_statistic(getattr(est, f"gamma_{name}"), GAMMA_TRUE, v, n) for name in ESTIMATORS}
    failure = ""
    if est.gamma_hat > est.gamma_bar:
        failure = "ordering-violation"
    elif math.isnan(est.gamma_tilde):
        failure = "correction-too-large"
    elif math.isnan(est.gamma_check):
        failure = "empirical-correction-too-large"
    return ReplicateRecord(
        cell=cell,
        replicate_index=replicate_index,
        seed=error_seed,
        estimates=est,
        z_bar=z["bar"],
        z_hat=z["hat"],
        z_tilde=z["tilde"],
        z_check=z["check"],
        fit_status=fit.status,
        iterations=fit.iterations,
        failure=failure,
    )


def _run_chunk(args) -> list[ReplicateRecord]:
    cell, start, stop, bandwidth, tol = args
    return [run_replicate(cell, i, bandwidth=bandwidth, tol=tol) for i in range(start, stop)]


def _chunks(cells, bandwidth, tol, size):
    for cell in cells:
        for start in range(0, cell.replicates, size):
            yield cell, start, min(start + size, cell.replicates), bandwidth, tol


def default_grid(replicates: int = 1000, base_seed: int = 0) -> list[SimCell]:
    return make_grid(
        p_values=(4, 8, 16, 32),
        k_values=(2, 4, 8, 16),
        errors=tuple(ErrorDistribution),
        designs=tuple(DesignKind),
        replicates=replicates,
        base_seed=base_seed,
    )


def make_grid(p_values, k_values, errors, designs, replicates, base_seed) -> list[SimCell]:
    return [
        SimCell(p=p, k=k, design=DesignKind(d), errors=ErrorDistribution(e),
                replicates=replicates, base_seed=base_seed)
        for e, d, k, p in itertools.product(errors, designs, k_values, p_values)
    ]


def run_grid(
    cells: list[SimCell],
    threads: int = 1,
    bandwidth=SILVERMAN,
    tol: float = DEFAULT_TOL,
    chunk_size: int = 50,
    progress=None,
) -> SimulationTable:
    """Run every replicate of every cell.

    Work is spread over ``threads`` worker processes; the returned table is
    identical for any worker count.

    Raises:
        SimulationError: some cell had more than half of its replicates fail.
            The complete table is attached to the exception.
    """
    if not cells:
        raise ValueError("run_grid needs at least one cell")
    ids = [c.cell_id for c in cells]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate cells in grid")
    jobs = list(_chunks(cells, bandwidth, tol, chunk_size))
    results: list[list[ReplicateRecord]] = []
    done = 0
    total = sum(c.replicates for c in cells)
    if threads <= 1:
        for job in jobs:
            results.append(_run_chunk(job))
            done += job[2] - job[1]
            if progress:
                progress(done, total)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for job, chunk in zip(jobs, pool.map(_run_chunk, jobs)):
                results.append(chunk)
                done += job[2] - job[1]
                if progress:
                    progress(done, total)

    records = [rec for chunk in results for rec in chunk]
    table = SimulationTable(
        records,
        metadata={
            "software_version": __version__,
            "bandwidth_rule": str(bandwidth),
            "tol": tol,
            "base_seeds": sorted({c.base_seed for c in cells}),
            "cells": len(cells),
            "records": len(records),
            "failed_records": sum(r.failed for r in records),
        },
    )
    bad = []
    for cell in cells:
        failed = sum(r.failed for r in records if r.cell.cell_id == cell.cell_id)
        if failed > MAX_FAILURE_FRACTION * cell.replicates:
            bad.append(f"{cell.cell_id} ({failed}/{cell.replicates} failed)")
    if bad:
        raise SimulationError("too many failed replicates in: " + ", ".join(bad), table=table)
    return table


def qq_data(z_values) -> list[tuple[float, float]]:
    """Normal QQ pairs ``(Phi^-1((i - 0.5) / m), z_(i))`` for i = 1..m."""
    z = np.asarray(z_values, dtype=float).ravel()
    z = z[np.isfinite(z)]
    if z.size < 2:
        raise InsufficientDataError(f"QQ data needs at least two finite values, got {z.size}")
    z = np.sort(z)
    m = z.size
    theo = norm.ppf((np.arange(1, m + 1) - 0.5) / m)
    return list(zip(theo.tolist(), z.tolist()))


def cpu_count() -> int:
    return os.cpu_count() or 1
