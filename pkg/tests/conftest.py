import numpy as np
import pytest

from sbpp.grid import TorusGrid, ScalarField
import sbpp.ground_state as gs


@pytest.fixture(scope="session")
def grid16():
    return TorusGrid(16, 2.0 * np.pi)


@pytest.fixture(scope="session")
def grid32():
    return TorusGrid(32, 2.0 * np.pi)


def smooth_random_field(grid: TorusGrid, rng: np.random.Generator,
                        decay_scale: float = 0.25, amplitude: float = 1.0) -> ScalarField:
    """Band-limited Gaussian random field (resolved on the grid)."""
    import scipy.fft as sfft

    n = grid.n_per_axis
    white = rng.standard_normal((n, n, n))
    what = sfft.fftn(white, norm="forward")
    k0 = decay_scale * np.abs(grid.k_axis).max()
    shaped = what * np.exp(-grid.k_sq / (2.0 * k0**2))
    vals = sfft.ifftn(shaped, norm="forward").real
    scale = np.max(np.abs(vals))
    if scale > 0:
        vals = vals * (amplitude / scale)
    return ScalarField(grid, vals)


@pytest.fixture(scope="session")
def ground_state_p5():
    return gs.find_ground_state(5.0)
