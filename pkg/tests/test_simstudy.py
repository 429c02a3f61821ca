import csv
import io

import numpy as np
import pytest

from bilateral.model import in_omega
from bilateral.simstudy import (
    CSV_FIELDS,
    METHODS,
    PARAMETERS,
    GridPoint,
    build_grid,
    coverage_report,
    run_cell,
    run_grid,
    to_csv,
)


def test_grid_delta_zero():
    grid = build_grid(0.0, 25)
    assert len(grid) == 81
    assert sorted({round(p.gamma, 12) for p in grid}) == [round(0.1 * j, 12) for j in range(1, 10)]


def test_grid_delta_point_eight():
    gammas = sorted({p.gamma for p in build_grid(0.8, 25)})
    assert gammas == pytest.approx([0.025 * j for j in range(1, 10)])


def test_grid_delta_half():
    assert max(p.gamma for p in build_grid(0.5, 25)) == pytest.approx(0.9)


@pytest.mark.parametrize("delta", [0.0, 0.1, 0.3, 0.5, 0.7, 0.9])
def test_grid_admissible(delta):
    for p in build_grid(delta, 10):
        assert in_omega(p.gamma, p.lambda0, p.lambda1)
        assert p.lambda1 == pytest.approx(p.lambda0 + delta)


def test_grid_validation():
    with pytest.raises(ValueError):
        build_grid(0.95, 10)
    with pytest.raises(ValueError):
        build_grid(0.2, 1)


def test_calibration_reference_delta():
    s = run_cell(GridPoint(0.0, 0.5, 0.3, 0.3, 100), n_rep=2000, level=0.90, methods=("hpd-reference",), seed=1)
    assert abs(s.coverage("hpd-reference", "delta") - 0.90) <= 0.02
    assert abs(s.coverage("hpd-reference", "lambda0") - 0.90) <= 0.03


def test_degenerate_wald_counted():
    s = run_cell(GridPoint(0.0, 0.05, 0.3, 0.3, 10), n_rep=500, methods=("wald",), seed=2)
    assert 0 < s.excluded <= 500
    assert s.tallies["wald"]["gamma"].n == 500 - s.excluded


def test_zero_replicates():
    s = run_cell(GridPoint(0.0, 0.5, 0.3, 0.3, 20), n_rep=0)
    for method in METHODS:
        for p in PARAMETERS:
            t = s.tallies[method][p]
            assert (t.n, t.covered, t.width_sum, t.sq_err_sum) == (0, 0, 0.0, 0.0)
            assert s.coverage(method, p) is None
    assert s.excluded == 0


def test_global_mse_is_sum():
    s = run_cell(GridPoint(0.1, 0.4, 0.3, 0.4, 30), n_rep=200, seed=3)
    for method in METHODS:
        total = sum(s.mse(method, p) for p in ("gamma", "lambda0", "lambda1"))
        assert s.global_mse(method) == pytest.approx(total, abs=1e-12)


def test_outside_omega_rejected():
    with pytest.raises(ValueError):
        run_cell(GridPoint(0.0, 0.5, 0.7, 0.7, 20), n_rep=10)


def test_unknown_method():
    with pytest.raises(ValueError):
        run_cell(GridPoint(0.0, 0.5, 0.3, 0.3, 20), n_rep=10, methods=("bootstrap",))


def test_cell_determinism():
    p = GridPoint(0.2, 0.3, 0.2, 0.4, 20)
    a = run_cell(p, n_rep=300, seed=4, chunk=100)
    b = run_cell(p, n_rep=300, seed=4, chunk=100)
    assert a.rows() == b.rows()


def test_grid_threads_identical():
    a = run_grid(0.3, 8, n_rep=20, methods=("wald", "hpd-reference"), m_bayes=200, seed=5, threads=1)
    b = run_grid(0.3, 8, n_rep=20, methods=("wald", "hpd-reference"), m_bayes=200, seed=5, threads=4)
    assert to_csv(a) == to_csv(b)


def test_csv_rows():
    sums = run_grid(0.0, 25, n_rep=5, methods=("wald", "hpd-uniform"), m_bayes=100, seed=7)
    rows = list(csv.DictReader(io.StringIO(to_csv(sums))))
    assert tuple(rows[0]) == CSV_FIELDS
    assert len(rows) == 81 * 2 * len(PARAMETERS)
    for method in ("wald", "hpd-uniform"):
        for p in PARAMETERS:
            assert sum(r["method"] == method and r["parameter"] == p for r in rows) == 81


def test_coverage_report_rules():
    rep = coverage_report([0.905, 0.885, 0.87], 0.90)
    assert rep.within[("-", "-")] == pytest.approx(1 / 3)
    assert rep.above[("-", "-")] == pytest.approx(2 / 3)
    exact = coverage_report([0.9, 0.9], 0.9)
    assert exact.within[("-", "-")] == 1.0 and exact.above[("-", "-")] == 1.0
    assert "within 0.01" in rep.format()
    with pytest.raises(ValueError):
        coverage_report([], 0.9)


def test_coverage_report_from_summaries():
    s = run_cell(GridPoint(0.0, 0.5, 0.3, 0.3, 50), n_rep=100, methods=("hpd-jeffreys",), seed=8)
    rep = coverage_report([s], 0.9)
    assert set(rep.within) == {("hpd-jeffreys", p) for p in PARAMETERS}
    assert all(0.0 <= v <= 1.0 for v in rep.above.values())
    assert np.isfinite(s.width("hpd-jeffreys", "delta"))
