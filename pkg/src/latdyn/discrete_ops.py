"""Discrete gradient, its conjugate, and the scaled cell-sum energy.

The discrete gradient of a lattice field is the per-cell matrix of
mean-subtracted corner values over the spacing; its conjugate turns a
per-cell stress into a per-point force, and summation by parts between
the two is exact because admissible fields vanish outside the inner
domain.  The energy sums the cell model over all stored cells at the
linearised configuration ``Z + delta * grad(u)``, scaled by cell volume
over delta^2, and its first variation is materialised as an admissible
lattice field through the conjugate operator.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cell_energy import CellEnergyModel
from .fields import CellField, LatticeField
from .lattice import Lattice


class EnergyOverflowError(ArithmeticError):
    def __init__(self, cell: int, value: float):
        self.cell = cell
        self.value = value
        super().__init__(f"non-finite cell energy {value} at cell {cell}")


@dataclass(frozen=True)
class EnergyParams:
    """Linearisation scale delta plus the cell model on a given lattice."""

    delta: float
    model: CellEnergyModel
    lattice: Lattice

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.model.dim != self.lattice.dim:
            raise ValueError(
                f"model dimension {self.model.dim} does not match "
                f"lattice dimension {self.lattice.dim}"
            )

    @property
    def energy_scale(self) -> float:
        """Prefactor (cell volume) / delta^2 of the energy sum."""
        return self.lattice.cell_volume / self.delta**2


def discrete_gradient(u: LatticeField) -> CellField:
    """Per-cell mean-subtracted corner values over the spacing.

    Columns of every cell matrix sum to zero; cells outside the stored
    union are not represented (the gradient is zero there by convention).
    """
    lat = u.lattice
    vals = _kernels.gather_gradient(
        np.ascontiguousarray(u.values), lat.cell_corners, 1.0 / lat.epsilon
    )
    return CellField(lat, vals)


def discrete_divergence(g: CellField) -> LatticeField:
    """Conjugate of the discrete gradient applied to a cell field.

    For every interior point the 2^d cells touching it contribute their
    columns minus the column mean; absent cells count as zero.  The
    result satisfies the summation-by-parts identity
    ``sum_cells g : grad(v) = - sum_points div(g) . v`` for all
    admissible v.
    """
    lat = g.lattice
    raw = _kernels.conjugate_transport(
        np.ascontiguousarray(g.values), lat.point_cell, 1.0 / lat.epsilon
    )
    raw[~lat.in_omega] = 0.0
    return LatticeField(lat, raw)


def _linearized_configs(u_values: np.ndarray, p: EnergyParams) -> np.ndarray:
    lat = p.lattice
    G = _kernels.gather_gradient(
        np.ascontiguousarray(u_values), lat.cell_corners, 1.0 / lat.epsilon
    )
    return lat.Z[None, :, :] + p.delta * G


def atomistic_energy(u: LatticeField, p: EnergyParams) -> float:
    """Scaled cell-sum energy of an admissible displacement."""
    return energy_of_values(u.values, p)


def energy_of_values(u_values: np.ndarray, p: EnergyParams) -> float:
    F = _linearized_configs(u_values, p)
    w = p.model.eval_cells(F)
    if not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero(~np.isfinite(w))[0])
        raise EnergyOverflowError(bad, float(w[bad]))
    return float(p.energy_scale * w.sum())


def atomistic_force(u: LatticeField, p: EnergyParams) -> LatticeField:
    """First variation of the energy as an admissible lattice field.

    Computed as minus the conjugate operator applied to the per-cell
    stress ``(1/delta) DW(Z + delta grad(u))``; the pairing of the result
    with any admissible v under the atomistic inner product reproduces
    the directional derivative of the energy.
    """
    return LatticeField(u.lattice, force_of_values(u.values, p))


def force_of_values(u_values: np.ndarray, p: EnergyParams) -> np.ndarray:
    lat = p.lattice
    F = _linearized_configs(u_values, p)
    g = p.model.grad_cells(F) / p.delta
    raw = _kernels.conjugate_transport(
        np.ascontiguousarray(g), lat.point_cell, 1.0 / lat.epsilon
    )
    out = -raw
    out[~lat.in_omega] = 0.0
    return out


def cell_stress(u: LatticeField, p: EnergyParams) -> CellField:
    """Per-cell stress (1/delta) DW(Z + delta grad(u))."""
    F = _linearized_configs(u.values, p)
    return CellField(u.lattice, p.model.grad_cells(F) / p.delta)


def atomistic_force_scatter(u: LatticeField, p: EnergyParams) -> LatticeField:
    """Independent assembly of the first variation by per-cell scatter.

    Adds each cell's mean-subtracted stress columns into its corners; the
    conjugate-operator route in :func:`atomistic_force` is checked against
    this in the test suite.
    """
    lat = u.lattice
    F = _linearized_configs(u.values, p)
    g = p.model.grad_cells(F) / p.delta
    contrib = (g - g.mean(axis=2, keepdims=True)) / lat.epsilon  # (nc, d, m)
    out = np.zeros((lat.n_points, lat.dim))
    for i in range(lat.n_corners):
        np.add.at(out, lat.cell_corners[:, i], contrib[:, :, i])
    out[~lat.in_omega] = 0.0
    return LatticeField(lat, out)


def energy_variation(u: LatticeField, v: LatticeField, p: EnergyParams) -> float:
    """Directional derivative of the energy at u in direction v.

    Evaluated from its defining cell sum (stress contracted with the
    discrete gradient of v), independently of the conjugate-operator
    force assembly.
    """
    g = cell_stress(u, p)
    dv = discrete_gradient(v)
    return float(p.lattice.cell_volume * np.sum(g.values * dv.values))
