import numpy as np
import pytest

from recyclecg import CsrMatrix, diagonal_scale, gen_laplacian_2d


def spd_with_small_eigs(n=400, small=(1e-4, 3e-4, 1e-3), bulk=(0.5, 1.5), seed=0):
    """Q diag(lam) Q^T with a few isolated small eigenvalues; Q from QR of a seeded Gaussian."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.concatenate([small, rng.uniform(*bulk, n - len(small))])
    a = (Q * lam) @ Q.T
    return CsrMatrix.from_dense(0.5 * (a + a.T))


def random_spd(n, rng, density=0.1, shift=1.0):
    """Sparse-ish random SPD matrix: symmetric pattern plus a dominant diagonal."""
    b = rng.standard_normal((n, n)) * (rng.random((n, n)) < density)
    a = b + b.T
    a += np.diag(np.abs(a).sum(axis=1) + shift)
    return CsrMatrix.from_dense(a)


@pytest.fixture(scope="session")
def lap20():
    return diagonal_scale(gen_laplacian_2d(20))[0]


@pytest.fixture(scope="session")
def lap20_eig(lap20):
    return np.linalg.eigh(lap20.to_dense())


@pytest.fixture(scope="session")
def small_eig_fixture():
    return spd_with_small_eigs()
