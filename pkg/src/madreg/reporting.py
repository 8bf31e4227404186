"""Summary tables and normal QQ-plot figures for simulation tables."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from madreg.simulation import ESTIMATORS, SimCell, SimulationTable, qq_data

AXIS_LIMIT = 4.0

# Line style per estimator; the oracle is the solid reference curve.
_STYLES = {
    "bar": dict(color="black", linestyle="-", linewidth=1.2, label=r"$\bar\gamma$"),
    "hat": dict(color="#d62728", linestyle=":", linewidth=1.2, label=r"$\hat\gamma$"),
    "tilde": dict(color="#1f77b4", linestyle="-.", linewidth=1.2, label=r"$\tilde\gamma$"),
    "check": dict(color="#2ca02c", linestyle=(0, (5, 1, 1, 1, 1, 1)), linewidth=1.2, label=r"$\check\gamma$"),
}


@dataclass(frozen=True)
class SummaryRow:
    cell_id: str
    errors: str
    design: str
    p: int
    k: int
    n: int
    estimator: str
    records: int
    failures: int
    n_used: int
    mean: float
    variance: float
    mean_z: float
    var_z: float
    variance_defined: bool


SUMMARY_COLUMNS = tuple(SummaryRow.__dataclass_fields__)


def _mean_var(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return math.nan, math.nan
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1)) if x.size > 1 else math.nan
    return mean, var


def summarize(table: SimulationTable) -> list[SummaryRow]:
    """Per cell and estimator: mean, variance, mean Z, variance of Z, failure count.

    Flagged records are excluded from every statistic and counted in
    ``failures``. Variances use the n - 1 denominator and are NaN, with
    ``variance_defined`` False, when fewer than two records remain.
    """
    rows = []
    for cell in table.cells():
        recs = [r for r in table.records if r.cell.cell_id == cell.cell_id]
        ok = [r for r in recs if not r.failed]
        for name in ESTIMATORS:
            g = np.array([getattr(r.estimates, f"gamma_{name}") for r in ok], dtype=float)
            z = np.array([getattr(r, f"z_{name}") for r in ok], dtype=float)
            mean, var = _mean_var(g)
            mean_z, var_z = _mean_var(z)
            rows.append(
                SummaryRow(
                    cell_id=cell.cell_id,
                    errors=cell.errors.value,
                    design=cell.design.value,
                    p=cell.p,
                    k=cell.k,
                    n=cell.n,
                    estimator=name,
                    records=len(recs),
                    failures=len(recs) - len(ok),
                    n_used=len(ok),
                    mean=mean,
                    variance=var,
                    mean_z=mean_z,
                    var_z=var_z,
                    variance_defined=len(ok) > 1,
                )
            )
    return rows


def write_summary_csv(rows: list[SummaryRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            d = asdict(row)
            writer.writerow(
                ("nan" if isinstance(v, float) and math.isnan(v) else repr(v) if isinstance(v, float) else v)
                for v in (d[c] for c in SUMMARY_COLUMNS)
            )


def qq_curves(table: SimulationTable, cell: SimCell) -> dict[str, list[tuple[float, float]] | None]:
    """QQ pairs per estimator for one cell; None where fewer than two finite Z values exist."""
    recs = [r for r in table.records if r.cell.cell_id == cell.cell_id]
    curves = {}
    for name in ESTIMATORS:
        z = np.array([getattr(r, f"z_{name}") for r in recs], dtype=float)
        z = z[np.isfinite(z)]
        curves[name] = qq_data(z) if z.size >= 2 else None
    return curves


def _figure_name(errors: str, design: str) -> str:
    return f"qq_{errors}_{design}.svg"


def render_qq_grid(table: SimulationTable, output_path) -> list[Path]:
    """Write one SVG per (error law, design) with a panel per (p, k) cell.

    Columns run over increasing p, rows over increasing k. Output bytes are
    a function of the table only.
    """
    if not len(table):
        raise ValueError("cannot render an empty table")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.lines import Line2D

    out = Path(output_path)
    out.mkdir(parents=True, exist_ok=True)
    groups: dict[tuple[str, str], list[SimCell]] = {}
    for cell in table.cells():
        groups.setdefault((cell.errors.value, cell.design.value), []).append(cell)

    written = []
    with matplotlib.rc_context({"svg.hashsalt": "madreg", "svg.fonttype": "none", "font.size": 7}):
        for (errors, design), cells in sorted(groups.items()):
            ps = sorted({c.p for c in cells})
            ks = sorted({c.k for c in cells})
            fig, axes = plt.subplots(
                len(ks), len(ps), figsize=(1.9 * len(ps) + 0.4, 1.9 * len(ks) + 0.6),
                squeeze=False, sharex=True, sharey=True,
            )
            by_pk = {(c.p, c.k): c for c in cells}
            for row, k in enumerate(ks):
                for col, p in enumerate(ps):
                    ax = axes[row][col]
                    ax.plot([-AXIS_LIMIT, AXIS_LIMIT], [-AXIS_LIMIT, AXIS_LIMIT],
                            color="grey", linestyle="--", linewidth=0.8)
                    ax.set_xlim(-AXIS_LIMIT, AXIS_LIMIT)
                    ax.set_ylim(-AXIS_LIMIT, AXIS_LIMIT)
                    ax.set_title(f"p={p}, k={k}", fontsize=7)
                    cell = by_pk.get((p, k))
                    if cell is None:
                        ax.text(0, 0, "no data", ha="center", va="center")
                        continue
                    missing = []
                    for name, pairs in qq_curves(table, cell).items():
                        if pairs is None:
                            missing.append(name)
                            continue
                        theo, emp = zip(*pairs)
                        ax.plot(theo, emp, gid=f"curve-{name}", **_STYLES[name])
                    if missing:
                        ax.text(-3.8, 3.6, "omitted: " + ", ".join(missing),
                                fontsize=6, va="top", gid="omitted")
            handles = [Line2D([], [], **_STYLES[name]) for name in ESTIMATORS]
            fig.legend(handles=handles, loc="lower center", ncol=4, frameon=False)
            fig.suptitle(f"{errors} errors, {design} design")
            fig.supxlabel("p", y=0.04)
            fig.supylabel("k")
            path = out / _figure_name(errors, design)
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    return written
