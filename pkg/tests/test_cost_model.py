import itertools

import numpy as np
import pytest

from recyclecg import CostParams, SolveReport, compare_measured, gamma_sciccg, t_cg, t_iccg, t_sciccg


def test_formula_values():
    p = CostParams(1000, 5000, b_m=1e9)
    assert t_cg(p) == pytest.approx(1.36e-4, rel=1e-15)
    assert t_iccg(p) == pytest.approx(2.2e-4, rel=1e-15)
    assert t_sciccg(CostParams(1000, 5000, 20, 1e9)) == pytest.approx(5.56e-4, rel=1e-15)
    assert t_iccg(CostParams(1, 1, b_m=124)) == 1.0
    assert t_cg(CostParams(10, 0, b_m=1.0)) == 760.0


def test_gamma_values():
    assert gamma_sciccg(20, 30) == 1156 / 820
    assert gamma_sciccg(0, 30) == 836 / 820
    assert gamma_sciccg(0, 1e12) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        gamma_sciccg(1, 0)


def test_empty_w_still_costs_more_than_iccg():
    p = CostParams(500, 3000)
    assert t_sciccg(p) > t_iccg(p) > t_cg(p)


def test_linear_in_m_tilde():
    a, b = CostParams(1000, 5000, 3, 1e9), CostParams(1000, 5000, 4, 1e9)
    assert t_sciccg(b) - t_sciccg(a) == pytest.approx(16 * 1000 / 1e9, rel=1e-12)


def test_homogeneity_and_monotonicity_grid():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 10**6))
        nnz = int(rng.integers(0, 50 * n))
        mt = int(rng.integers(0, 40))
        bm = float(rng.uniform(1e8, 1e11))
        p, p2 = CostParams(n, nnz, mt, bm), CostParams(n, nnz, mt, 2 * bm)
        for f in (t_cg, t_iccg, t_sciccg):
            assert f(p2) == pytest.approx(f(p) / 2, rel=1e-14)
            assert f(CostParams(n + 1, nnz, mt, bm)) > f(p)
            assert f(CostParams(n, nnz + 1, mt, bm)) > f(p)
        assert t_iccg(p) >= t_cg(p)
        assert t_sciccg(CostParams(n, nnz, mt + 1, bm)) > t_sciccg(p)
    for mt, av in itertools.product(range(0, 30, 3), np.linspace(1, 60, 10)):
        assert gamma_sciccg(mt + 1, av) > gamma_sciccg(mt, av)
        assert gamma_sciccg(mt, av + 1) < gamma_sciccg(mt, av)


def test_params_validation():
    for args in ((0, 1), (1, -1), (1, 1, -1), (1, 1, 0, 0.0)):
        with pytest.raises(ValueError):
            CostParams(*args)
    assert CostParams(4, 10).nnz_av == 2.5


def test_compare_measured():
    r = SolveReport(10, True, 0.5)
    out = compare_measured(r, r, 0, 30)
    assert out["gamma_measured"] == 1.0
    assert out["gamma_predicted"] == 836 / 820
    g = gamma_sciccg(5, 7)
    out = compare_measured(SolveReport(100, True, 1.0), SolveReport(50, True, 0.5 * g), 5, 7)
    assert out["rel_error"] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        compare_measured(SolveReport(0, True, 0.0), r, 0, 30)
