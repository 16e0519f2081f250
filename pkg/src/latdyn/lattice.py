"""Scaled Bravais lattice geometry inside a pair of nested boxes.

The lattice is ``eps * A * Z^d`` clipped to an enlarged box; cells are the
half-open parallelepipeds around barycenters, and a cell is stored when all
of its 2^d corners lie in the enlarged box.  Box membership is closed (the
box boundary counts as inside, up to a small tolerance), while membership
in the inner domain is open: points on or outside the inner boundary carry
homogeneous Dirichlet zeros.
"""

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

_MEMBERSHIP_TOL = 1e-9


class LatticeError(ValueError):
    pass


class EmptyLatticeError(LatticeError):
    """No cell fits inside the enlarged box."""


class MarginError(LatticeError):
    """The enlarged box does not leave enough room around the domain."""


class FringePointError(LatticeError):
    """Query point lies outside the union of stored cells."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by per-axis (lo, hi) bounds."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise LatticeError("box bounds must be matching 1-d arrays")
        if np.any(hi <= lo):
            raise LatticeError(f"degenerate box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def contains_closed(self, pts: np.ndarray, tol: float = _MEMBERSHIP_TOL):
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo - tol) & (pts <= self.hi + tol), axis=1)

    def contains_open(self, pts: np.ndarray, tol: float = _MEMBERSHIP_TOL):
        pts = np.atleast_2d(pts)
        return np.all((pts > self.lo + tol) & (pts < self.hi - tol), axis=1)

    def to_dict(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["lo"], float), np.asarray(d["hi"], float))


def corner_labels(dim: int, A: np.ndarray) -> np.ndarray:
    """Corner offsets Z of the centered reference cell ``A * [-1/2, 1/2]^d``.

    Column ``i`` is ``A @ s_i`` with the sign vectors ``s_i`` in
    {-1/2, +1/2}^d enumerated lexicographically (-1/2 before +1/2, last
    coordinate fastest).  Columns sum to zero.
    """
    if dim not in (1, 2, 3):
        raise LatticeError(f"unsupported dimension {dim} (need 1, 2 or 3)")
    A = np.asarray(A, dtype=float)
    if A.shape != (dim, dim):
        raise LatticeError(f"basis matrix must be {dim}x{dim}, got {A.shape}")
    if np.linalg.det(A) <= 0:
        raise LatticeError("lattice basis must have positive determinant")
    signs = np.array(list(itertools.product((-0.5, 0.5), repeat=dim)))  # (2^d, d)
    return A @ signs.T


def corner_offsets_binary(dim: int) -> np.ndarray:
    """Corner offsets as {0,1}^d multi-index shifts, matching corner_labels order."""
    return np.array(list(itertools.product((0, 1), repeat=dim)), dtype=np.int64)


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry input: basis A, spacing eps, inner domain, enlarged box."""

    dim: int
    A: np.ndarray
    epsilon: float
    omega: Box
    omega_tilde: Box

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if self.dim not in (1, 2, 3):
            raise LatticeError(f"unsupported dimension {self.dim}")
        if A.shape != (self.dim, self.dim):
            raise LatticeError(f"basis matrix must be {self.dim}x{self.dim}")
        if np.linalg.det(A) <= 0:
            raise LatticeError("lattice basis must have positive determinant")
        if self.epsilon <= 0:
            raise LatticeError("epsilon must be positive")
        if self.omega.dim != self.dim or self.omega_tilde.dim != self.dim:
            raise LatticeError("box dimensions do not match lattice dimension")
        if np.any(self.omega.lo < self.omega_tilde.lo) or np.any(
            self.omega.hi > self.omega_tilde.hi
        ):
            raise LatticeError("inner domain must sit inside the enlarged box")
        object.__setattr__(self, "A", A)

    @property
    def margin(self) -> float:
        """Smallest gap between the inner domain and the enlarged box."""
        return float(
            min(
                np.min(self.omega.lo - self.omega_tilde.lo),
                np.min(self.omega_tilde.hi - self.omega.hi),
            )
        )

    def margin_deficit(self) -> float:
        """How far the per-axis margins fall short of the necessary reach.

        Corners of cells touching an interior point lie within
        ``eps * sum_b |A[a, b]|`` of it along axis ``a``; a nonpositive
        deficit means every cell referenced by an interior force exists.
        """
        reach = self.epsilon * np.abs(self.A).sum(axis=1)
        gaps = np.minimum(
            self.omega.lo - self.omega_tilde.lo, self.omega_tilde.hi - self.omega.hi
        )
        return float(np.max(reach - gaps))

    @property
    def recommended_margin(self) -> float:
        return 2.0 * self.epsilon * float(np.linalg.norm(self.A, 2))

    def to_dict(self):
        return {
            "dim": self.dim,
            "A": self.A.tolist(),
            "epsilon": self.epsilon,
            "omega": self.omega.to_dict(),
            "omega_tilde": self.omega_tilde.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            dim=int(d["dim"]),
            A=np.asarray(d["A"], float),
            epsilon=float(d["epsilon"]),
            omega=Box.from_dict(d["omega"]),
            omega_tilde=Box.from_dict(d["omega_tilde"]),
        )


@dataclass(frozen=True)
class Lattice:
    """Immutable lattice geometry plus the index tables the kernels need.

    ``points`` are ordered lexicographically by integer multi-index;
    ``cell_corners[c, i]`` is the point index of corner ``i`` of cell ``c``
    and ``point_cell[p, i]`` the cell index of the cell whose corner ``i``
    is point ``p`` (-1 when absent).  Cells are keyed by the multi-index of
    their lower corner point.
    """

    spec: LatticeSpec
    points: np.ndarray  # (n_points, d)
    multi_index: np.ndarray  # (n_points, d) int64
    in_omega: np.ndarray  # (n_points,) bool
    barycenters: np.ndarray  # (n_cells, d)
    cell_index: np.ndarray  # (n_cells, d) int64, lower-corner multi-index
    cell_corners: np.ndarray  # (n_cells, 2^d) int64
    point_cell: np.ndarray  # (n_points, 2^d) int64, -1 for absent
    Z: np.ndarray  # (d, 2^d)
    _cell_lookup: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def epsilon(self) -> float:
        return self.spec.epsilon

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_cells(self) -> int:
        return self.barycenters.shape[0]

    @property
    def n_corners(self) -> int:
        return self.Z.shape[1]

    @property
    def cell_volume(self) -> float:
        return self.epsilon**self.dim * float(np.linalg.det(self.spec.A))

    @property
    def point_weight(self) -> float:
        """Weight eps^d det A of the atomistic inner product."""
        return self.cell_volume

    def cell_of(self, x) -> np.ndarray:
        """Barycenter of the stored half-open cell containing ``x``.

        The cell with barycenter ``xb`` is ``xb + A [-eps/2, eps/2)^d``;
        faces belong to the cell for which they are the included lower
        boundary.  Raises :class:`FringePointError` when ``x`` falls
        outside the stored cell union.
        """
        x = np.asarray(x, dtype=float).reshape(self.dim)
        t = np.linalg.solve(self.spec.A, x) / self.epsilon
        lam = np.floor(t).astype(np.int64)
        c = self._cell_lookup.get(tuple(lam))
        if c is None:
            raise FringePointError(
                f"point {x} lies outside the stored cell union (fringe point)"
            )
        return self.barycenters[c]

    def cell_id_of_points(self, pts: np.ndarray) -> np.ndarray:
        """Vectorised cell lookup; -1 for points outside the cell union."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        t = np.linalg.solve(self.spec.A, pts.T).T / self.epsilon
        lam = np.floor(t).astype(np.int64)
        out = np.empty(len(lam), dtype=np.int64)
        for i, row in enumerate(lam):
            out[i] = self._cell_lookup.get(tuple(row), -1)
        return out

    def cell_meets_omega(self) -> np.ndarray:
        """Per-cell flag: does the cell intersect the inner domain?

        Tested on corners and barycenter, which is exact for everything an
        admissible field can distinguish (a nonzero corner value forces a
        corner inside the domain).
        """
        corner_in = self.in_omega[self.cell_corners].any(axis=1)
        bary_in = self.spec.omega.contains_open(self.barycenters)
        return corner_in | bary_in


def build_lattice(spec: LatticeSpec) -> Lattice:
    """Enumerate lattice points and fully contained cells inside the box.

    Deterministic: points and cells are ordered lexicographically by
    multi-index.  Raises :class:`EmptyLatticeError` when no cell fits and
    :class:`MarginError` when the box margin is below ``2 eps ||A||``.
    """
    d, eps, A = spec.dim, spec.epsilon, spec.A

    # candidate multi-index range from the box corners mapped through (eps A)^-1
    box_corners = np.array(
        list(itertools.product(*zip(spec.omega_tilde.lo, spec.omega_tilde.hi)))
    )
    t_corners = np.linalg.solve(eps * A, box_corners.T).T
    lo_idx = np.floor(t_corners.min(axis=0)).astype(np.int64) - 1
    hi_idx = np.ceil(t_corners.max(axis=0)).astype(np.int64) + 1

    ranges = [np.arange(lo_idx[a], hi_idx[a] + 1) for a in range(d)]
    grids = np.meshgrid(*ranges, indexing="ij")
    lam = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    coords = lam @ (eps * A).T
    keep = spec.omega_tilde.contains_closed(coords)
    lam = lam[keep]
    coords = coords[keep]

    point_lookup = {tuple(row): i for i, row in enumerate(lam)}
    offsets = corner_offsets_binary(d)  # (2^d, d)
    m = offsets.shape[0]

    cell_idx_rows = []
    cell_corner_rows = []
    for i, row in enumerate(lam):
        corners = [point_lookup.get(tuple(row + off)) for off in offsets]
        if all(c is not None for c in corners):
            cell_idx_rows.append(row)
            cell_corner_rows.append(corners)

    if not cell_corner_rows:
        raise EmptyLatticeError(
            "empty lattice: no cell fits inside the enlarged box "
            f"(epsilon={eps}, box={spec.omega_tilde.lo}..{spec.omega_tilde.hi})"
        )
    if spec.margin_deficit() > _MEMBERSHIP_TOL:
        raise MarginError(
            f"box margin too small by {spec.margin_deficit():g}: interior "
            "forces would reference missing cells"
        )
    if spec.margin + _MEMBERSHIP_TOL < spec.recommended_margin:
        warnings.warn(
            f"margin {spec.margin:g} below the recommended 2*eps*||A|| = "
            f"{spec.recommended_margin:g}",
            stacklevel=2,
        )

    cell_index = np.asarray(cell_idx_rows, dtype=np.int64)
    cell_corners = np.asarray(cell_corner_rows, dtype=np.int64)
    barycenters = (cell_index + 0.5) @ (eps * A).T
    cell_lookup = {tuple(row): c for c, row in enumerate(cell_index)}

    point_cell = np.full((len(lam), m), -1, dtype=np.int64)
    for p, row in enumerate(lam):
        for i, off in enumerate(offsets):
            c = cell_lookup.get(tuple(row - off))
            if c is not None:
                point_cell[p, i] = c

    return Lattice(
        spec=spec,
        points=coords,
        multi_index=lam,
        in_omega=spec.omega.contains_open(coords),
        barycenters=barycenters,
        cell_index=cell_index,
        cell_corners=cell_corners,
        point_cell=point_cell,
        Z=corner_labels(d, A),
        _cell_lookup=cell_lookup,
    )
