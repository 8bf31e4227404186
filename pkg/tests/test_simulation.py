import math

import numpy as np
import pytest
from scipy import stats

from madreg.design import DesignKind
from madreg.distributions import ErrorDistribution, abs_variance
from madreg.errors import InsufficientDataError, SimulationError
from madreg.simulation import (
    SimCell,
    SimulationTable,
    default_grid,
    qq_data,
    run_grid,
    run_replicate,
    z_statistic,
)

LAP, NRM = ErrorDistribution.LAPLACE, ErrorDistribution.NORMAL
ANOVA, NDES = DesignKind.ANOVA, DesignKind.NORMAL


def test_simcell_validation():
    with pytest.raises(ValueError):
        SimCell(p=4, k=1, design=ANOVA, errors=LAP)
    with pytest.raises(ValueError):
        SimCell(p=0, k=4, design=ANOVA, errors=LAP)
    cell = SimCell(p=4, k=8, design="anova", errors="laplace", replicates=3)
    assert cell.n == 32 and cell.design is ANOVA and cell.cell_id == "laplace-anova-p4-k8"


def test_run_replicate_deterministic():
    cell = SimCell(p=4, k=4, design=NDES, errors=NRM, base_seed=9)
    assert run_replicate(cell, 3) == run_replicate(cell, 3)
    assert run_replicate(cell, 3).seed != run_replicate(cell, 4).seed


def test_run_replicate_fields():
    cell = SimCell(p=5, k=6, design=NDES, errors=LAP)
    rec = run_replicate(cell, 0)
    est = rec.estimates
    assert not rec.failed
    assert est.gamma_hat <= est.gamma_bar
    v = abs_variance(LAP)
    assert rec.z_hat == z_statistic(est.gamma_hat, 1.0, v, 30)
    assert rec.z_check == z_statistic(est.gamma_check, 1.0, v, 30)
    assert est.c_exact == pytest.approx(5 / 30 / 2)


def test_seeds_do_not_depend_on_grid_order():
    a = SimCell(p=4, k=2, design=NDES, errors=NRM, replicates=3, base_seed=1)
    b = SimCell(p=8, k=4, design=ANOVA, errors=LAP, replicates=2, base_seed=1)
    both = run_grid([b, a])
    alone = run_grid([a])
    assert [r for r in both.records if r.cell == a] == alone.records


def test_z_statistic():
    assert z_statistic(1.0, 1.0, 0.3, 10) == 0.0
    assert z_statistic(1.1, 1.0, 1.0, 100) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        z_statistic(1.0, 0.0, 1.0, 10)


def test_z_bar_is_standard():
    table = run_grid([SimCell(p=4, k=4, design=NDES, errors=NRM, replicates=1000, base_seed=2)])
    z = table.column("z_bar")
    assert abs(z.mean()) <= 3 / math.sqrt(1000)


def test_gamma_hat_tracks_bias_law():
    cell = SimCell(p=8, k=16, design=ANOVA, errors=LAP, replicates=1000, base_seed=4)
    g = run_grid([cell]).column("gamma_hat")
    c = (1 / 16) / 2
    se = math.sqrt(abs_variance(LAP) / cell.n) / math.sqrt(1000)
    assert c == 0.03125
    assert abs(g.mean() - (1 - c)) <= 3 * se
    assert np.all(run_grid([cell]).column("gamma_hat") == g)


def test_single_record_grid():
    table = run_grid([SimCell(p=2, k=3, design=ANOVA, errors=NRM, replicates=1)])
    assert len(table) == 1


def test_grid_identical_across_worker_counts():
    cells = [
        SimCell(p=p, k=k, design=d, errors=e, replicates=7, base_seed=5)
        for p in (2, 4) for k in (2, 4) for d in DesignKind for e in ErrorDistribution
    ]
    one = run_grid(cells, threads=1, chunk_size=3)
    two = run_grid(cells, threads=2, chunk_size=5)
    assert one.to_csv() == two.to_csv()
    assert len(one) == sum(c.replicates for c in cells)


def test_grid_rejects_empty_and_duplicates():
    with pytest.raises(ValueError):
        run_grid([])
    cell = SimCell(p=2, k=2, design=ANOVA, errors=LAP, replicates=1)
    with pytest.raises(ValueError):
        run_grid([cell, cell])


def test_failures_are_flagged_not_dropped():
    # a huge fixed bandwidth drives f0_hat toward 0 and the empirical factor above 1
    cell = SimCell(p=8, k=2, design=ANOVA, errors=LAP, replicates=6)
    with pytest.raises(SimulationError) as info:
        run_grid([cell], bandwidth=1e6)
    table = info.value.table
    assert len(table) == 6
    assert all(r.failure == "empirical-correction-too-large" for r in table.records)
    assert all(math.isnan(r.z_check) and not math.isnan(r.z_tilde) for r in table.records)
    assert table.metadata["failed_records"] == 6


def test_csv_round_trip(tmp_path):
    cells = [SimCell(p=3, k=3, design=NDES, errors=LAP, replicates=4),
             SimCell(p=2, k=2, design=ANOVA, errors=NRM, replicates=3)]
    table = run_grid(cells)
    path = tmp_path / "records.csv"
    table.write_csv(path)
    again = SimulationTable.read_csv(path)
    assert again.to_csv() == table.to_csv()
    assert again.records[0].estimates == table.records[0].estimates


def test_default_grid_shape():
    grid = default_grid()
    assert len(grid) == 64
    assert {c.p for c in grid} == {4, 8, 16, 32}
    assert {c.k for c in grid} == {2, 4, 8, 16}
    assert all(c.replicates == 1000 for c in grid)


def test_qq_data_two_points():
    pairs = qq_data([1.0, -1.0])
    assert pairs[0] == pytest.approx((stats.norm.ppf(0.25), -1.0))
    assert pairs[1] == pytest.approx((stats.norm.ppf(0.75), 1.0))
    assert pairs[1][0] == pytest.approx(0.6745, abs=1e-4)


def test_qq_data_normal_slope(rng):
    z = rng.standard_normal(10**4)
    theo, emp = np.array(qq_data(z)).T
    slope = np.polyfit(theo, emp, 1)[0]
    assert 0.95 <= slope <= 1.05
    assert np.all(np.diff(theo) > 0)
    assert np.all(np.diff(emp) >= 0)


def test_qq_data_insufficient():
    with pytest.raises(InsufficientDataError):
        qq_data([0.3])
    with pytest.raises(InsufficientDataError):
        qq_data([0.3, float("nan")])
