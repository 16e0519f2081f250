import numpy as np
import pytest

from latdyn.cell_energy import CellEnergyModel
from latdyn.lattice import Box, LatticeSpec, build_lattice

UNIT_1D = dict(omega=Box([0.0], [1.0]), omega_tilde=Box([-0.5], [1.5]))
UNIT_2D = dict(
    omega=Box([0.0, 0.0], [1.0, 1.0]), omega_tilde=Box([-0.5, -0.5], [1.5, 1.5])
)


def chain_lattice(eps: float):
    return build_lattice(
        LatticeSpec(dim=1, A=np.array([[1.0]]), epsilon=eps, **UNIT_1D)
    )


def square_lattice(eps: float, A=None):
    return build_lattice(
        LatticeSpec(dim=2, A=np.eye(2) if A is None else A, epsilon=eps, **UNIT_2D)
    )


@pytest.fixture(scope="session")
def lat1d():
    return chain_lattice(0.125)


@pytest.fixture(scope="session")
def lat2d():
    return square_lattice(0.125)


class QuarticCellEnergy(CellEnergyModel):
    """Deliberately broken model: |centered F|^4 (gradient grows cubically)."""

    name = "quartic_centered"

    def __init__(self, dim: int):
        self.dim = dim
        self.n_corners = 2**dim

    def eval(self, F):
        Fc = F - F.mean(axis=1, keepdims=True)
        return float((Fc**2).sum() ** 2)

    def grad(self, F):
        Fc = F - F.mean(axis=1, keepdims=True)
        return 4.0 * (Fc**2).sum() * Fc

    def reference_corners(self):
        from latdyn.lattice import corner_labels

        return corner_labels(self.dim, np.eye(self.dim))

    def metadata(self):
        return {"name": self.name, "params": {}, "derivatives": {}}
