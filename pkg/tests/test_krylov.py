import numpy as np
import pytest

from recyclecg import (CsrMatrix, SolverBreakdown, SolverConfig, build_deflation_operator,
                       deflated_pcg_solve, ic0_factorize, make_sc_operator, pcg_solve)

from conftest import random_spd

EPS = 1e-8


def energy(A, v):
    return np.sqrt(v @ (A @ v))


def test_identity_converges_in_one_iteration():
    A = CsrMatrix.from_dense(np.eye(5))
    b = np.arange(1.0, 6.0)
    x, rep = pcg_solve(A, b)
    assert rep.iterations == 1 and rep.converged
    np.testing.assert_array_equal(x, b)
    assert len(rep.history) == 1 and rep.history[-1] <= EPS


def test_zero_rhs_takes_no_iterations():
    x, rep = pcg_solve(CsrMatrix.from_dense(np.eye(3)), np.zeros(3))
    assert rep.iterations == 0 and rep.converged
    np.testing.assert_array_equal(x, 0.0)


def test_manufactured_solution_with_ic(lap20):
    x_true = np.random.default_rng(1).standard_normal(400)
    b = lap20 @ x_true
    F = ic0_factorize(lap20)
    x, rep = pcg_solve(lap20, b, M=F)
    assert rep.converged
    assert energy(lap20, x - x_true) / energy(lap20, x_true) <= 1e-6
    assert rep.true_relres <= 10 * EPS
    assert len(rep.history) == rep.iterations and rep.history[-1] <= EPS
    _, plain = pcg_solve(lap20, b)
    assert plain.iterations > rep.iterations


def test_energy_error_is_monotone(lap20):
    x_true = np.random.default_rng(2).standard_normal(400)
    b = lap20 @ x_true
    errs = []
    pcg_solve(lap20, b, M=ic0_factorize(lap20),
              callback=lambda i, x: errs.append(energy(lap20, x - x_true)))
    assert np.all(np.diff(errs) <= 1e-12 * errs[0])


def test_max_iter_is_not_an_error(lap20):
    x, rep = pcg_solve(lap20, np.ones(400), cfg=SolverConfig(max_iter=3))
    assert rep.iterations == 3 and not rep.converged


def test_indefinite_matrix_reports_breakdown():
    A = CsrMatrix.from_dense([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(SolverBreakdown, match="matrix not SPD"):
        pcg_solve(A, np.array([1.0, -1.0]))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        pcg_solve(CsrMatrix.from_dense(np.eye(3)), np.ones(4))


def test_solver_config_validation():
    for kw in ({"eps": 0.0}, {"eps": 1.0}, {"max_iter": 0}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)


def test_sampler_sees_only_non_final_iterates(lap20):
    seen = []

    class Recorder:
        def offer(self, i, x, relres, r):
            seen.append(i)

    _, rep = pcg_solve(lap20, np.ones(400), sampler=Recorder())
    assert seen == list(range(1, rep.iterations))


def test_empty_w_deflation_is_plain_pcg_iterate_for_iterate():
    rng = np.random.default_rng(11)
    A = random_spd(50, rng, density=0.2)
    b = rng.standard_normal(50)
    D = build_deflation_operator(A, np.zeros((50, 0)))
    plain, defl = [], []
    xp, rp = pcg_solve(A, b, callback=lambda i, x: plain.append(x.copy()))
    xd, rd = deflated_pcg_solve(A, b, D=D, callback=lambda i, x: defl.append(x.copy()))
    assert rp.iterations == rd.iterations
    for u, v in zip(plain, defl):
        np.testing.assert_array_equal(u, v)
    np.testing.assert_array_equal(xp, xd)


def test_full_eigenbasis_takes_zero_iterations():
    A = CsrMatrix.from_dense(np.diag([1.0, 2.0, 3.0, 4.0]))
    b = np.array([1.0, 1.0, 1.0, 1.0])
    x, rep = deflated_pcg_solve(A, b, D=build_deflation_operator(A, np.eye(4)))
    assert rep.iterations == 0 and rep.converged
    np.testing.assert_allclose(x, [1, 0.5, 1 / 3, 0.25], rtol=1e-15)


def test_deflation_with_lowest_eigenvectors(lap20, lap20_eig):
    _, V = lap20_eig
    b = np.random.default_rng(1).uniform(-1, 1, 400)
    _, plain = pcg_solve(lap20, b)
    x, rep = deflated_pcg_solve(lap20, b, D=build_deflation_operator(lap20, V[:, :5]))
    assert rep.converged and rep.iterations < plain.iterations
    assert np.linalg.norm(b - lap20 @ x) / np.linalg.norm(b) <= EPS


def test_deflation_with_ic_and_nonzero_x0(lap20, lap20_eig):
    _, V = lap20_eig
    rng = np.random.default_rng(4)
    b, x0 = rng.standard_normal(400), rng.standard_normal(400)
    D = build_deflation_operator(lap20, V[:, :3])
    x, rep = deflated_pcg_solve(lap20, b, M=ic0_factorize(lap20), D=D, x0=x0)
    assert rep.converged and rep.true_relres <= 10 * EPS


def test_deflation_needs_operator(lap20):
    with pytest.raises(ValueError):
        deflated_pcg_solve(lap20, np.ones(400))


def test_deflation_algebra_random_instances():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n, k = int(rng.integers(20, 120)), int(rng.integers(1, 8))
        A = random_spd(n, rng, density=0.1)
        D = build_deflation_operator(A, np.linalg.qr(rng.standard_normal((n, k)))[0])
        amax = A.max_abs()
        PtAW = np.column_stack([D.pt(A @ D.W[:, j]) for j in range(k)])
        assert np.max(np.abs(PtAW)) <= 1e-10 * amax
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        lhs, rhs = x @ D.pt(A @ y), D.pt(A @ x) @ y
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y) * amax
        b = rng.standard_normal(n)
        _, rep = deflated_pcg_solve(A, b, D=D)
        assert rep.converged and rep.true_relres <= 10 * EPS


def test_sc_and_deflation_counts_agree(lap20, lap20_eig):
    _, V = lap20_eig
    W = V[:, :6]
    F = ic0_factorize(lap20)
    b = np.random.default_rng(7).standard_normal(400)
    _, sc = pcg_solve(lap20, b, M=make_sc_operator(lap20, W, inner=F))
    _, de = deflated_pcg_solve(lap20, b, M=F, D=build_deflation_operator(lap20, W))
    assert sc.converged and de.converged
    assert abs(sc.iterations - de.iterations) <= 2
