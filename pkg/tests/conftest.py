import numpy as np
import pytest

from qutrit_correlations.qudit import DensityMatrix
from qutrit_correlations.tomography import PLModel, default_pl_model

# Frozen before the build: maximum over 3000 Haar-random bases of a
# standalone implementation; agrees with the closed form to 1e-14.
ORACLE_DISCORD = {
    0.05: 0.00947053610226,
    0.10: 0.0339850002885,
    0.15: 0.0697468322642,
    0.20: 0.114472510503,
    0.25: 1 / 6,
}


def random_density(rng, dim=9, rank=None, dims=(3, 3)) -> DensityMatrix:
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityMatrix.from_matrix(m / np.trace(m).real, dims)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["default", "irregular"])
def pl_model(request) -> PLModel:
    if request.param == "default":
        return default_pl_model()
    # no accidental equalities between composite and level rates
    return PLModel([0.91, 0.83, 0.77, 1.0, 0.71, 0.88, 0.64, 0.69, 0.6])
