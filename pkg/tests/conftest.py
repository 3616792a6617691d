import numpy as np
import pytest

from mtebounds import EngineConfig, paper_dgp, population_distribution
from mtebounds.data import CellDistribution


@pytest.fixture(scope="session")
def dgp():
    return paper_dgp()


@pytest.fixture(scope="session")
def pop(dgp):
    return population_distribution(dgp)


def random_distribution(rng, nz=2, nw=1, nx=1, K=3):
    """Population distribution generated by a random degree-K sieve element."""
    from mtebounds.bernstein import prefix_all, suffix_all
    from mtebounds.latent import response_table

    n_maps = 2 ** (2 * nw)
    table = response_table(nw).astype(float)
    theta = rng.dirichlet(np.ones(n_maps), size=(nx, K + 1))  # [x, k, e]
    P = np.sort(rng.uniform(0.1, 0.9, size=(nz, nx)), axis=0)
    cond = np.zeros((2, 2, nz, nw, nx))
    for z in range(nz):
        for x in range(nx):
            pre, suf = prefix_all(K, P[z, x]), suffix_all(K, P[z, x])
            for w in range(nw):
                p11 = pre @ (theta[x] @ table[:, 1, w])
                p10 = suf @ (theta[x] @ table[:, 0, w])
                cond[:, :, z, w, x] = [[1 - P[z, x] - p10, P[z, x] - p11], [p10, p11]]
    mass = rng.dirichlet(np.ones(nz * nw * nx)).reshape(nz, nw, nx)
    return CellDistribution.from_conditionals(cond, mass)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_cfg():
    return EngineConfig(K=6)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
