"""Displacement fields on the lattice and their continuum counterparts.

``LatticeField`` holds one vector per lattice point and is *admissible*:
values at points outside the inner domain are exactly zero.  ``CellField``
holds one d x 2^d matrix per stored cell (discrete gradients, stresses).
``GridField`` samples a continuum field on a uniform auxiliary grid, either
cell-centered (midpoint quadrature) or vertex-based (trapezoid quadrature).

The module also provides the atomistic L2-inner product, the local
cell-mean projection of continuum fields onto lattice points, the
piecewise-constant interpolation of lattice fields, and the distance
``||u - P w||`` used to measure lattice-to-continuum convergence.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lattice import Lattice

_ADMISSIBLE_ATOL = 0.0  # exterior values must be exactly zero


class FieldError(ValueError):
    pass


class LatticeMismatchError(FieldError):
    pass


class AdmissibilityError(FieldError):
    pass


class QuadratureMisalignmentError(FieldError):
    pass


@dataclass
class LatticeField:
    """Vector values on lattice points, zero outside the inner domain."""

    lattice: Lattice
    values: np.ndarray  # (n_points, d)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.lattice.n_points, self.lattice.dim):
            raise FieldError(
                f"values must have shape {(self.lattice.n_points, self.lattice.dim)}, "
                f"got {v.shape}"
            )
        exterior = v[~self.lattice.in_omega]
        if exterior.size and np.any(exterior != _ADMISSIBLE_ATOL):
            raise AdmissibilityError(
                "field has nonzero values at points outside the domain"
            )
        self.values = v

    @classmethod
    def zeros(cls, lattice: Lattice) -> "LatticeField":
        return cls(lattice, np.zeros((lattice.n_points, lattice.dim)))

    @classmethod
    def from_values(cls, lattice: Lattice, raw: np.ndarray) -> "LatticeField":
        """Build an admissible field by zeroing exterior entries of ``raw``."""
        v = np.array(raw, dtype=float, copy=True)
        v[~lattice.in_omega] = 0.0
        return cls(lattice, v)

    def copy(self) -> "LatticeField":
        return LatticeField(self.lattice, self.values.copy())

    def norm(self) -> float:
        return norm(self)

    def __add__(self, other):
        _check_same_lattice(self, other)
        return LatticeField(self.lattice, self.values + other.values)

    def __sub__(self, other):
        _check_same_lattice(self, other)
        return LatticeField(self.lattice, self.values - other.values)

    def __mul__(self, a: float):
        return LatticeField(self.lattice, self.values * float(a))

    __rmul__ = __mul__


@dataclass
class CellField:
    """One d x 2^d matrix per stored cell (gradient- or stress-like)."""

    lattice: Lattice
    values: np.ndarray  # (n_cells, d, 2^d)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        expected = (self.lattice.n_cells, self.lattice.dim, self.lattice.n_corners)
        if v.shape != expected:
            raise FieldError(f"values must have shape {expected}, got {v.shape}")
        self.values = v

    @classmethod
    def zeros(cls, lattice: Lattice) -> "CellField":
        return cls(
            lattice, np.zeros((lattice.n_cells, lattice.dim, lattice.n_corners))
        )


def _check_same_lattice(u, v):
    if u.lattice is not v.lattice:
        raise LatticeMismatchError("fields live on different lattices")


# ---------------------------------------------------------------------------
# atomistic inner product


def inner_product(u: LatticeField, v: LatticeField) -> float:
    """Atomistic L2-inner product: cell volume times the pointwise dot sum."""
    _check_same_lattice(u, v)
    return float(u.lattice.point_weight * np.sum(u.values * v.values))


def norm(u: LatticeField) -> float:
    return float(np.sqrt(u.lattice.point_weight) * np.linalg.norm(u.values))


# ---------------------------------------------------------------------------
# grid fields


@dataclass
class GridField:
    """Uniform-grid samples of a continuum field.

    ``centered=True`` places nodes at cell centers ``lo + (i+1/2) h`` and
    integrates with the midpoint rule; ``centered=False`` places nodes at
    vertices ``lo + i h`` and integrates with the trapezoid rule.
    """

    lo: np.ndarray
    h: float
    values: np.ndarray  # (*shape, n_components)
    centered: bool = True

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != self.lo.size + 1:
            raise FieldError(
                f"values must have {self.lo.size} grid axes plus a component axis"
            )

    @property
    def grid_shape(self):
        return self.values.shape[:-1]

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def n_components(self) -> int:
        return self.values.shape[-1]

    def axis_coords(self, a: int) -> np.ndarray:
        n = self.grid_shape[a]
        offset = 0.5 if self.centered else 0.0
        return self.lo[a] + (np.arange(n) + offset) * self.h

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (*grid_shape, dim)."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def quadrature_weights(self) -> np.ndarray:
        """Per-node quadrature weight, shape (*grid_shape,)."""
        w = np.ones(self.grid_shape)
        if not self.centered:
            for a in range(self.dim):
                edge = np.ones(self.grid_shape[a])
                edge[0] = edge[-1] = 0.5
                shape = [1] * self.dim
                shape[a] = -1
                w = w * edge.reshape(shape)
        return w * self.h**self.dim

    def l2_norm(self) -> float:
        w = self.quadrature_weights()
        return float(np.sqrt(np.sum(w * np.sum(self.values**2, axis=-1))))

    def l2_inner(self, other: "GridField") -> float:
        if (
            self.grid_shape != other.grid_shape
            or self.centered != other.centered
            or not np.allclose(self.lo, other.lo)
            or not np.isclose(self.h, other.h)
        ):
            raise FieldError("grid mismatch in inner product")
        w = self.quadrature_weights()
        return float(np.sum(w * np.sum(self.values * other.values, axis=-1)))


# ---------------------------------------------------------------------------
# quadrature helpers


def _unit_gauss(dim: int, order: int):
    """Tensor Gauss-Legendre nodes/weights on the unit cube; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    nodes_1d = [x] * dim
    weights_1d = [w] * dim
    mesh = np.meshgrid(*nodes_1d, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)  # (order^d, dim)
    wmesh = np.meshgrid(*weights_1d, indexing="ij")
    weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
    return nodes, weights


def _evaluate_masked(fn, pts: np.ndarray, omega) -> np.ndarray:
    """Evaluate ``fn`` and zero the result outside the (open) domain."""
    vals = np.asarray(fn(pts), dtype=float)
    inside = omega.contains_open(pts)
    vals = vals.copy()
    vals[~inside] = 0.0
    return vals


def project(w, lattice: Lattice, order: int = 4) -> LatticeField:
    """Local cell-mean projection of a continuum field onto lattice points.

    Each lattice point receives the mean of the zero-extended field over
    the half-open cell whose lower corner it is; exterior points are then
    zeroed, so the result is an admissible lattice displacement.  ``w`` is
    either a callable mapping (n, d) points to (n, d) values, or an
    aligned cell-centered :class:`GridField` (spacing dividing the cell
    edge, in which case the mean is an exact sub-grid average).
    """
    return LatticeField.from_values(lattice, project_raw_means(w, lattice, order))


def project_raw_means(w, lattice: Lattice, order: int = 4) -> np.ndarray:
    """Cell means at every lattice point, without the admissibility zeroing."""
    if isinstance(w, GridField):
        return _project_from_grid(w, lattice)
    return _project_from_callable(w, lattice, order)


def _project_from_callable(w, lattice: Lattice, order: int) -> np.ndarray:
    d, eps = lattice.dim, lattice.epsilon
    nodes, weights = _unit_gauss(d, order)
    offsets = nodes @ (eps * lattice.spec.A).T  # (q^d, d)
    pts = lattice.points[:, None, :] + offsets[None, :, :]
    flat = pts.reshape(-1, d)
    vals = _evaluate_masked(w, flat, lattice.spec.omega)
    vals = vals.reshape(lattice.n_points, len(weights), d)
    return np.einsum("pqa,q->pa", vals, weights)


def _project_from_grid(gf: GridField, lattice: Lattice) -> np.ndarray:
    if not gf.centered:
        raise QuadratureMisalignmentError("grid projection needs a centered grid")
    A = lattice.spec.A
    if not np.allclose(A, np.diag(np.diag(A))):
        raise QuadratureMisalignmentError(
            "exact grid projection requires a diagonal lattice basis"
        )
    eps, h = lattice.epsilon, gf.h
    q = np.diag(A) * eps / h
    qi = np.rint(q).astype(int)
    if not np.allclose(q, qi, atol=1e-9) or np.any(qi < 1):
        raise QuadratureMisalignmentError(
            f"grid spacing {h} does not divide the cell edges {np.diag(A) * eps}"
        )
    starts = (lattice.points - gf.lo[None, :]) / h
    starts_i = np.rint(starts).astype(int)
    if not np.allclose(starts, starts_i, atol=1e-6):
        raise QuadratureMisalignmentError("grid is not aligned with the lattice cells")

    out = np.zeros((lattice.n_points, lattice.dim))
    shape = gf.grid_shape
    for p in range(lattice.n_points):
        sl = []
        ok = True
        for a in range(lattice.dim):
            s = starts_i[p, a]
            e = s + qi[a]
            if s < 0 or e > shape[a]:
                ok = False
                break
            sl.append(slice(s, e))
        if not ok:
            continue  # cell pokes outside the grid; zero-extended field
        block = gf.values[tuple(sl)]
        out[p] = block.reshape(-1, lattice.dim).mean(axis=0)
    return out


def piecewise_constant_interp(
    u: LatticeField, h: float | None = None
) -> GridField:
    """Piecewise-constant interpolation of an admissible lattice field.

    Constant equal to ``u`` at the owning lattice point on every stored
    cell that meets the inner domain, zero elsewhere, sampled on a
    cell-centered grid over the enlarged box.  With the default spacing
    (a quarter cell edge, for diagonal bases) the grid is cell-aligned and
    the L2 norm of the interpolant reproduces the atomistic norm exactly.
    """
    lattice = u.lattice
    spec = lattice.spec
    if h is None:
        A = spec.A
        edge = spec.epsilon * (np.diag(A).min() if np.allclose(
            A, np.diag(np.diag(A))) else 1.0)
        h = edge / 4.0
    lo = spec.omega_tilde.lo
    extent = spec.omega_tilde.hi - lo
    shape = tuple(int(np.rint(e / h)) for e in extent)
    gf = GridField(lo, h, np.zeros(shape + (lattice.dim,)), centered=True)
    pts = gf.nodes().reshape(-1, lattice.dim)
    cells = lattice.cell_id_of_points(pts)
    meets = lattice.cell_meets_omega()
    owner = lattice.cell_corners[:, 0]  # lower-corner point of each cell
    vals = np.zeros((len(pts), lattice.dim))
    hit = cells >= 0
    use = hit.copy()
    use[hit] = meets[cells[hit]]
    vals[use] = u.values[owner[cells[use]]]
    gf.values = vals.reshape(shape + (lattice.dim,))
    return gf


def interp_l2_norm(u: LatticeField) -> float:
    """Exact L2 norm of the piecewise-constant interpolation.

    Computed cell-by-cell (the interpolant is constant per cell), so it
    needs no auxiliary grid and holds for arbitrary bases.
    """
    lattice = u.lattice
    meets = lattice.cell_meets_omega()
    owner = lattice.cell_corners[:, 0]
    vals = u.values[owner[meets]]
    return float(np.sqrt(lattice.cell_volume * np.sum(vals**2)))


def ac_distance(u: LatticeField, w, order: int = 4) -> float:
    """Distance ``||u - P w||`` in the atomistic norm.

    ``w`` is a continuum field (callable or aligned GridField); ``P`` is
    the admissible cell-mean projection.
    """
    return norm(u - project(w, u.lattice, order=order))


def cell_averages(fn, lattice: Lattice, order: int = 4) -> np.ndarray:
    """Per-cell Gauss means of a callable over the stored (barycenter) cells.

    ``fn`` maps (n, d) points to values with arbitrary trailing shape;
    returns an array of shape (n_cells, *trailing).  Used to compare
    piecewise-constant cell data against cell averages of continuum
    quantities.
    """
    d, eps = lattice.dim, lattice.epsilon
    nodes, weights = _unit_gauss(d, order)
    offsets = (nodes - 0.5) @ (eps * lattice.spec.A).T
    pts = lattice.barycenters[:, None, :] + offsets[None, :, :]
    flat = pts.reshape(-1, d)
    vals = np.asarray(fn(flat), dtype=float)
    vals = vals.reshape((lattice.n_cells, len(weights)) + vals.shape[1:])
    return np.einsum("cq...,q->c...", vals, weights)


# ---------------------------------------------------------------------------
# grid field I/O


def grid_to_csv(gf: GridField, path) -> None:
    """Write node coordinates and components as CSV with a metadata header."""
    path = Path(path)
    nodes = gf.nodes().reshape(-1, gf.dim)
    vals = gf.values.reshape(-1, gf.n_components)
    meta = {
        "lo": gf.lo.tolist(),
        "h": gf.h,
        "shape": list(gf.grid_shape),
        "centered": gf.centered,
    }
    cols = [f"x{a + 1}" for a in range(gf.dim)] + [
        f"u{c + 1}" for c in range(gf.n_components)
    ]
    with path.open("w") as fh:
        fh.write("# gridfield " + json.dumps(meta) + "\n")
        fh.write(",".join(cols) + "\n")
        data = np.hstack([nodes, vals])
        for row in data:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def grid_from_csv(path) -> GridField:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline()
        if not header.startswith("# gridfield "):
            raise FieldError(f"{path} is not a grid field CSV")
        meta = json.loads(header[len("# gridfield "):])
        fh.readline()  # column names
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    dim = len(meta["lo"])
    shape = tuple(meta["shape"])
    ncomp = data.shape[1] - dim
    values = data[:, dim:].reshape(shape + (ncomp,))
    return GridField(
        np.asarray(meta["lo"]), float(meta["h"]), values, centered=meta["centered"]
    )


def grid_to_binary(gf: GridField, path) -> None:
    """Flat row-major little-endian float64 dump plus a JSON sidecar."""
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(gf.values, dtype="<f8").tobytes())
    sidecar = {
        "lo": gf.lo.tolist(),
        "h": gf.h,
        "shape": list(gf.grid_shape),
        "n_components": gf.n_components,
        "centered": gf.centered,
        "dtype": "<f8",
        "order": "C",
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=1))


def grid_from_binary(path) -> GridField:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    shape = tuple(meta["shape"]) + (meta["n_components"],)
    values = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(shape).copy()
    return GridField(
        np.asarray(meta["lo"]), float(meta["h"]), values, centered=meta["centered"]
    )
