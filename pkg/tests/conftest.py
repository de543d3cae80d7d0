import numpy as np
import pytest

from adialab import continue_eigenpath, make_builtin_path


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def pt_ramp_path():
    return make_builtin_path("pt_dimer", gamma0=0.0, gamma1=0.5, coupling=1.0)


@pytest.fixture(scope="session")
def hermitian_path():
    return make_builtin_path("hermitian2", theta0=0.0, theta1=np.pi / 2)


@pytest.fixture(scope="session")
def dressed_path():
    return make_builtin_path("dressed_hermitian")


@pytest.fixture(scope="session")
def pt_ramp_eigenpath(pt_ramp_path):
    return continue_eigenpath(pt_ramp_path, 1024)


@pytest.fixture(scope="session")
def hermitian_eigenpath(hermitian_path):
    return continue_eigenpath(hermitian_path, 1024)


def random_real_spectrum_hamiltonian(rng, n, spread=0.25):
    """Random diagonalizable matrix with real, well-separated eigenvalues."""
    lam = np.sort(rng.uniform(-2.0, 2.0, size=n))
    while np.diff(lam).min() < 0.1:
        lam = np.sort(rng.uniform(-2.0, 2.0, size=n))
    w = np.eye(n) + spread * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return w @ np.diag(lam) @ np.linalg.inv(w), lam
