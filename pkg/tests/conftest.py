import numpy as np
import pytest

from artifact.discrete import Grid
from artifact.energy import EnergyModel
from artifact import solver


def minus_one(x):
    return -np.ones_like(x)


def oracle_fixture(p: float, cells: int = 1024, b: float = 1.0):
    """Exact discrete solution of the f = -1 problem on (-1, 1) with facet [-1, 0]."""
    model = EnergyModel(b, p)
    grid = Grid.on_box(-1.0, 1.0, cells)
    return model, solver.oracle_solve_1d(model, grid, minus_one, anchor_flux=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, n: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q @ np.diag(rng.uniform(0.3, 3.0, n)) @ q.T


@pytest.fixture(params=["standard", "generalized"])
def model_2d(request):
    if request.param == "standard":
        return EnergyModel(1.3, 2.5)
    return EnergyModel.generalized(0.7, 1.8, [[2.0, 0.4], [0.4, 1.0]])
