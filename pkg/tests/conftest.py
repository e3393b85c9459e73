import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mhdslip.geometry import make_grid

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def smooth_vector(grid, rng, modes=3, wall_normal=True):
    """Random band-limited vector field; normal component need not vanish on the walls."""
    mesh = grid.mesh()
    tang, Z = mesh[:-1], mesh[-1]
    u = np.zeros((grid.dim,) + grid.shape)
    for _ in range(modes * 3):
        k = rng.integers(0, modes + 1, size=grid.dim - 1)
        arg = sum(int(kk) * x for kk, x in zip(k, tang)) + rng.uniform(0, 2 * np.pi)
        m = rng.integers(0, modes + 1)
        comp = rng.integers(0, grid.dim)
        prof = np.cos(m * np.pi * Z + rng.uniform(0, np.pi)) if wall_normal else np.cos(m * np.pi * Z)
        u[comp] += rng.standard_normal() * np.cos(arg) * prof
    return u


@pytest.fixture
def grid2():
    return make_grid(2, 16, 17)


@pytest.fixture
def grid3():
    return make_grid(3, 8, 9)
