import numpy as np
import pytest

from logsp.grid import make_field, make_grid, make_log_kernel_table
from logsp.functionals import ModelParams, make_state


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64, 12.0)


@pytest.fixture(scope="session")
def table64(grid64):
    return make_log_kernel_table(grid64)


@pytest.fixture(scope="session")
def grid128():
    return make_grid(128, 8.0)


@pytest.fixture(scope="session")
def table128(grid128):
    return make_log_kernel_table(grid128)


@pytest.fixture(scope="session")
def grid256():
    return make_grid(256, 8.0)


@pytest.fixture(scope="session")
def table256(grid256):
    return make_log_kernel_table(grid256)


def gaussian(grid, center=(0.0, 0.0), width=1.0, amp=1.0):
    X, Y = grid.meshgrid()
    return amp * np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2)
                        / (2.0 * width ** 2))


def random_smooth(grid, rng, bumps=3, max_center=1.5):
    """Sum of a few signed Gaussians, decaying well inside the domain."""
    out = np.zeros((grid.n, grid.n))
    for _ in range(bumps):
        c = rng.uniform(-max_center, max_center, size=2)
        w = rng.uniform(0.6, 1.0)
        a = rng.uniform(0.3, 1.0) * rng.choice([-1.0, 1.0])
        out += gaussian(grid, c, w, a)
    return out


def random_state(grid, params, rng):
    u = make_field(grid, random_smooth(grid, rng))
    v = make_field(grid, random_smooth(grid, rng))
    return make_state(u, v, params)


DEFAULT_PARAMS = ModelParams(p=2.5, mu1=1.0, mu2=0.5, beta=0.7, c1=1.0, c2=2.0)
