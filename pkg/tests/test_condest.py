import numpy as np
import pytest

from recyclecg import CsrMatrix, SolverConfig, pcg_solve, pcg_with_condest


def test_two_by_two_diagonal():
    # CG finishes in two steps, so only iterate 1 is sampled and the basis has one vector
    A = CsrMatrix.from_dense(np.diag([0.1, 1.0]))
    for seed in (0, 1, 42):
        _, rep, est = pcg_with_condest(A, np.ones(2), seed=seed)
        assert rep.converged and rep.iterations == 2
        assert est.ritz_spectrum.size == 1
        assert est.lambda_max == pytest.approx(1.0, rel=1e-2)
        assert 0.1 <= est.lambda_min == pytest.approx(0.1, rel=0.1)
        assert est.kappa == est.lambda_max / est.lambda_min
        assert 9.0 <= est.kappa <= 10.0 * (1 + 1e-6)


def test_laplacian_bounds(lap20, lap20_eig):
    w, _ = lap20_eig
    b = np.random.default_rng(1).uniform(-1, 1, 400)
    _, rep, est = pcg_with_condest(lap20, b)
    assert est.available and est.power_iterations == rep.iterations
    assert abs(est.lambda_max - w[-1]) / w[-1] <= 0.05
    kappa = w[-1] / w[0]
    assert abs(est.kappa - kappa) / kappa <= 0.25
    assert est.lambda_max <= w[-1] + 1e-9
    assert est.lambda_min >= w[0] - 1e-9
    assert est.kappa <= kappa * (1 + 1e-6)


@pytest.mark.parametrize("seed", [0, 1, 42])
def test_one_sided_on_small_eig_fixture(small_eig_fixture, seed):
    A = small_eig_fixture
    w = np.linalg.eigvalsh(A.to_dense())
    b = np.random.default_rng(seed).uniform(-1, 1, A.n)
    _, _, est = pcg_with_condest(A, b, seed=seed)
    assert w[0] - 1e-9 <= est.lambda_min and est.lambda_max <= w[-1] + 1e-9
    assert est.kappa <= w[-1] / w[0] * (1 + 1e-6)


def test_solution_bit_identical_to_pcg(lap20):
    b = np.random.default_rng(3).standard_normal(400)
    x_ref, ref = pcg_solve(lap20, b)
    for seed in (0, 42):
        x, rep, _ = pcg_with_condest(lap20, b, seed=seed)
        np.testing.assert_array_equal(x, x_ref)
        np.testing.assert_array_equal(rep.history, ref.history)


def test_unavailable_without_samples():
    A = CsrMatrix.from_dense(np.eye(3))
    _, rep, est = pcg_with_condest(A, np.ones(3))
    assert rep.iterations == 1
    assert not est.available and np.isnan(est.kappa)
    assert est.to_dict()["available"] is False


def test_power_settles_on_long_runs():
    A = CsrMatrix.from_dense(np.diag(np.linspace(1e-3, 1.0, 60) ** 2))
    _, rep, est = pcg_with_condest(A, np.ones(60), cfg=SolverConfig(eps=1e-14, max_iter=500))
    assert est.lambda_max == pytest.approx(1.0, rel=1e-3)
    assert not est.power_unsettled
