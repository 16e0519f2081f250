"""The limiting linear elastodynamic problem and its reference solvers.

Solves ``rho w_tt + nu w_t - div(C : sym_grad(w)) = 0`` on a box with
homogeneous Dirichlet data.  Two solvers serve as ground truth for the
lattice-to-continuum studies: an exact 1-d sine-series solution (each
modal amplitude solves a damped scalar oscillator in closed form) and a
d-dimensional second-order finite-difference solver on a structured grid
sharing the time steppers of the lattice dynamics.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ._integrators import (
    rk4_second_order,
    semi_implicit_euler,
    viscous_explicit,
    viscous_rk4,
)
from .cell_energy import ElasticityTensor
from .fields import GridField
from .lattice import Box


class ContinuumError(ValueError):
    pass


class CflError(RuntimeError):
    pass


def as_field_callable(w):
    """Adapt initial data to a point-evaluable field.

    Accepts a callable mapping (n, d) points to (n, d) values, or a
    :class:`GridField` (linearly interpolated, zero off the grid).
    """
    if w is None or callable(w):
        return w
    if isinstance(w, GridField):
        axes = [w.axis_coords(a) for a in range(w.dim)]
        interp = RegularGridInterpolator(
            axes, w.values, bounds_error=False, fill_value=0.0, method="linear"
        )
        return lambda pts: interp(np.atleast_2d(pts))
    raise ContinuumError(f"cannot interpret initial data of type {type(w)!r}")


@dataclass
class ContinuumProblem:
    tensor: ElasticityTensor
    rho: float
    nu: float
    omega: Box
    w0: object  # callable (n, d) -> (n, d), or a GridField
    w1: object | None
    t_end: float

    def __post_init__(self):
        if self.nu < 0 or self.rho < 0 or self.t_end <= 0:
            raise ContinuumError("need nu >= 0, rho >= 0, t_end > 0")
        if self.rho == 0 and self.nu <= 0:
            raise ContinuumError("the gradient flow (rho = 0) needs nu > 0")
        if self.tensor.dim != self.omega.dim:
            raise ContinuumError("tensor and domain dimensions differ")
        self.w0 = as_field_callable(self.w0)
        self.w1 = as_field_callable(self.w1)

    @property
    def dim(self) -> int:
        return self.omega.dim


# ---------------------------------------------------------------------------
# grid differential operators


def _axis_slice(arr, a, s):
    idx = [slice(None)] * arr.ndim
    idx[a] = s
    return arr[tuple(idx)]


def _first_diff(arr: np.ndarray, a: int, h: float) -> np.ndarray:
    """Central first difference along grid axis ``a``, one-sided at the ends."""
    n = arr.shape[a]
    if n < 3:
        raise ContinuumError("grid too coarse: need at least 3 nodes per axis")
    out = np.empty_like(arr)
    ctr = (_axis_slice(arr, a, slice(2, None)) - _axis_slice(arr, a, slice(0, -2))) / (
        2.0 * h
    )
    _axis_slice(out, a, slice(1, -1))[...] = ctr
    lo = (
        -3.0 * _axis_slice(arr, a, slice(0, 1))
        + 4.0 * _axis_slice(arr, a, slice(1, 2))
        - _axis_slice(arr, a, slice(2, 3))
    ) / (2.0 * h)
    hi = (
        3.0 * _axis_slice(arr, a, slice(-1, None))
        - 4.0 * _axis_slice(arr, a, slice(-2, -1))
        + _axis_slice(arr, a, slice(-3, -2))
    ) / (2.0 * h)
    _axis_slice(out, a, slice(0, 1))[...] = lo
    _axis_slice(out, a, slice(-1, None))[...] = hi
    return out


def full_gradient(gf: GridField) -> np.ndarray:
    """Grid of gradients, shape (*grid, d, d) with [..., c, a] = d_a w_c."""
    d = gf.dim
    grads = [_first_diff(gf.values, a, gf.h) for a in range(d)]
    return np.stack(grads, axis=-1)


def symmetrized_gradient(gf: GridField) -> np.ndarray:
    """Symmetric part of the gradient on every grid node."""
    G = full_gradient(gf)
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def continuum_energy(gf: GridField, tensor: ElasticityTensor) -> float:
    """Quadratic elastic energy 1/2 int sym_grad : C : sym_grad."""
    e = symmetrized_gradient(gf)
    dens = np.einsum("...ij,ijkl,...kl->...", e, tensor.C, e)
    return float(0.5 * np.sum(gf.quadrature_weights() * dens))


def continuum_force(gf: GridField, tensor: ElasticityTensor) -> GridField:
    """Strong-form force -div(C : sym_grad w) by nested central differences."""
    e = symmetrized_gradient(gf)
    sigma = np.einsum("ijkl,...kl->...ij", tensor.C, e)  # (*grid, d, d)
    div = np.zeros(gf.values.shape)
    for a in range(gf.dim):
        div += _first_diff(sigma[..., :, a], a, gf.h)
    return GridField(gf.lo, gf.h, -div, centered=gf.centered)


def _dirichlet_operator(tensor: ElasticityTensor, h: float):
    """Compact stencil for -div(C : sym_grad w) with zero boundary data.

    Uses the constant-coefficient identity div(C sym_grad w)_i =
    C[i,j,k,l] d_j d_l w_k with three-point second differences and
    cross-stencil mixed derivatives; valid on interior nodes when the
    boundary nodes hold zeros.  Returns a callable on (*grid, d) arrays
    producing zeros on the boundary rows.
    """
    C = tensor.C
    d = tensor.dim
    inv_h2 = 1.0 / h**2

    def apply(w: np.ndarray) -> np.ndarray:
        pad = np.pad(w, [(1, 1)] * d + [(0, 0)])
        out = np.zeros_like(w)
        for j in range(d):
            for l in range(d):
                if j == l:
                    upper = _shift(pad, j, +1, d)
                    lower = _shift(pad, j, -1, d)
                    dd = (upper - 2.0 * w + lower) * inv_h2
                else:
                    pp = _shift2(pad, j, +1, l, +1, d)
                    pm = _shift2(pad, j, +1, l, -1, d)
                    mp = _shift2(pad, j, -1, l, +1, d)
                    mm = _shift2(pad, j, -1, l, -1, d)
                    dd = (pp - pm - mp + mm) * (0.25 * inv_h2)
                out += np.einsum("ik,...k->...i", C[:, j, :, l], dd)
        _zero_boundary(out, d)
        return -out

    return apply


def _shift(pad, a, s, d):
    idx = []
    for ax in range(d):
        if ax == a:
            idx.append(slice(1 + s, pad.shape[ax] - 1 + s))
        else:
            idx.append(slice(1, -1))
    idx.append(slice(None))
    return pad[tuple(idx)]


def _shift2(pad, a, sa, b, sb, d):
    idx = []
    for ax in range(d):
        s = sa if ax == a else (sb if ax == b else 0)
        idx.append(slice(1 + s, pad.shape[ax] - 1 + s))
    idx.append(slice(None))
    return pad[tuple(idx)]


def _zero_boundary(arr, d):
    for a in range(d):
        _axis_slice(arr, a, slice(0, 1))[...] = 0.0
        _axis_slice(arr, a, slice(-1, None))[...] = 0.0


# ---------------------------------------------------------------------------
# closed-form damped modes


def damped_mode(t, rho, nu, kappa, a0, a1):
    """Closed-form solution of ``rho a'' + nu a' + kappa a = 0``.

    Vectorised over ``kappa, a0, a1``; returns ``(a(t), a'(t))``.  All
    three damping branches are handled; for ``rho = 0`` the amplitude
    decays as ``exp(-kappa t / nu)`` and ``a1`` is ignored.
    """
    kappa = np.asarray(kappa, dtype=float)
    a0 = np.broadcast_to(np.asarray(a0, dtype=float), kappa.shape)
    a1 = np.broadcast_to(np.asarray(a1, dtype=float), kappa.shape)
    if rho == 0:
        rate = kappa / nu
        a = a0 * np.exp(-rate * t)
        return a, -rate * a
    disc = nu**2 - 4.0 * rho * kappa
    scale = nu**2 + 4.0 * rho * np.abs(kappa) + 1e-300
    sigma = -nu / (2.0 * rho)
    a = np.empty_like(kappa)
    adot = np.empty_like(kappa)

    under = disc < -1e-12 * scale
    over = disc > 1e-12 * scale
    crit = ~(under | over)

    if np.any(under):
        om = np.sqrt(-disc[under]) / (2.0 * rho)
        c1 = a0[under]
        c2 = (a1[under] - sigma * c1) / om
        e = np.exp(sigma * t)
        cos, sin = np.cos(om * t), np.sin(om * t)
        a[under] = e * (c1 * cos + c2 * sin)
        adot[under] = sigma * a[under] + e * (-c1 * om * sin + c2 * om * cos)
    if np.any(over):
        s = np.sqrt(disc[over]) / (2.0 * rho)
        r1, r2 = sigma + s, sigma - s
        B = (a1[over] - r1 * a0[over]) / (r2 - r1)
        A = a0[over] - B
        a[over] = A * np.exp(r1 * t) + B * np.exp(r2 * t)
        adot[over] = A * r1 * np.exp(r1 * t) + B * r2 * np.exp(r2 * t)
    if np.any(crit):
        c1 = a0[crit]
        c2 = a1[crit] - sigma * c1
        e = np.exp(sigma * t)
        a[crit] = (c1 + c2 * t) * e
        adot[crit] = c2 * e + sigma * a[crit]
    return a, adot


# ---------------------------------------------------------------------------
# 1-d sine-series solver


@dataclass
class SpectralSolution:
    """Exact-in-space modal solution of the 1-d problem."""

    problem: ContinuumProblem
    n_modes: int
    a0: np.ndarray
    a1: np.ndarray
    stiffness: float  # scalar C
    x0: float
    length: float

    def _freqs(self):
        n = np.arange(1, self.n_modes + 1)
        return n * np.pi / self.length

    def modal_amplitudes(self, t: float):
        kappa = self.stiffness * self._freqs() ** 2
        return damped_mode(t, self.problem.rho, self.problem.nu, kappa, self.a0, self.a1)

    def _eval(self, t, pts, deriv: int, velocity: bool = False):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x = pts[:, 0]
        a, adot = self.modal_amplitudes(t)
        coef = adot if velocity else a
        freqs = self._freqs()
        phase = np.outer(x - self.x0, freqs)
        basis = np.cos(phase) * freqs if deriv else np.sin(phase)
        vals = basis @ coef
        inside = (x > self.x0) & (x < self.x0 + self.length)
        vals = np.where(inside, vals, 0.0)
        return vals

    def displacement(self, t, pts):
        return self._eval(t, pts, deriv=0)[:, None]

    def velocity(self, t, pts):
        return self._eval(t, pts, deriv=0, velocity=True)[:, None]

    def gradient(self, t, pts):
        return self._eval(t, pts, deriv=1)[:, None, None]

    def energy(self, t) -> float:
        a, _ = self.modal_amplitudes(t)
        return float(
            0.5 * self.stiffness * np.sum(a**2 * self._freqs() ** 2) * self.length / 2.0
        )

    def kinetic(self, t) -> float:
        _, adot = self.modal_amplitudes(t)
        return float(0.5 * self.problem.rho * np.sum(adot**2) * self.length / 2.0)


def _sine_coefficients(fn, x0, length, n_modes, panels=256, order=8):
    """Sine-series coefficients by composite Gauss quadrature."""
    gx, gw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, length, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    vals = np.asarray(fn((x0 + nodes)[:, None]), dtype=float)[:, 0]
    n = np.arange(1, n_modes + 1)
    basis = np.sin(np.outer(n, nodes) * np.pi / length)
    return (2.0 / length) * (basis @ (weights * vals))


def solve_1d_spectral(problem: ContinuumProblem, n_modes: int = 128) -> SpectralSolution:
    """Expand the 1-d problem in sine modes; each amplitude is closed form."""
    if problem.dim != 1:
        raise ContinuumError("the sine-series solver is one-dimensional")
    x0 = float(problem.omega.lo[0])
    length = float(problem.omega.hi[0] - problem.omega.lo[0])
    stiffness = float(problem.tensor.C.reshape(()))
    a0 = _sine_coefficients(problem.w0, x0, length, n_modes)
    if problem.w1 is None:
        a1 = np.zeros(n_modes)
    else:
        a1 = _sine_coefficients(problem.w1, x0, length, n_modes)
    return SpectralSolution(
        problem=problem,
        n_modes=n_modes,
        a0=a0,
        a1=a1,
        stiffness=stiffness,
        x0=x0,
        length=length,
    )


# ---------------------------------------------------------------------------
# d-dimensional finite-difference solver


@dataclass
class FdSolution:
    """Finite-difference reference solution sampled at requested times."""

    problem: ContinuumProblem
    h: float
    times: np.ndarray
    grids: list  # GridField displacement snapshots (vertex grids)
    velocity_grids: list
    _interp_cache: dict = field(default_factory=dict, repr=False)

    def _index(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"time {t} not among stored samples")
        return i

    def _interp(self, kind, i):
        key = (kind, i)
        if key not in self._interp_cache:
            gf = self.grids[i]
            axes = [gf.axis_coords(a) for a in range(gf.dim)]
            if kind == "value":
                data = gf.values
            elif kind == "velocity":
                data = self.velocity_grids[i].values
            else:
                data = full_gradient(gf)
            self._interp_cache[key] = RegularGridInterpolator(
                axes, data, bounds_error=False, fill_value=0.0, method="linear"
            )
        return self._interp_cache[key]

    def displacement(self, t, pts):
        return self._interp("value", self._index(t))(np.atleast_2d(pts))

    def velocity(self, t, pts):
        return self._interp("velocity", self._index(t))(np.atleast_2d(pts))

    def gradient(self, t, pts):
        return self._interp("gradient", self._index(t))(np.atleast_2d(pts))

    def energy(self, t) -> float:
        return continuum_energy(self.grids[self._index(t)], self.problem.tensor)

    def kinetic(self, t) -> float:
        v = self.velocity_grids[self._index(t)]
        return 0.5 * self.problem.rho * v.l2_norm() ** 2


def _vertex_grid(omega: Box, h: float) -> tuple[np.ndarray, tuple]:
    extent = omega.hi - omega.lo
    n = np.rint(extent / h).astype(int)
    if not np.allclose(extent / h, n, atol=1e-9) or np.any(n < 2):
        raise ContinuumError(f"spacing {h} does not tile the box extents {extent}")
    return omega.lo.copy(), tuple(int(k) + 1 for k in n)


def grid_operator_stiffness(tensor: ElasticityTensor, omega: Box, h: float,
                            iters: int = 80, seed: int = 0) -> float:
    """Largest eigenvalue of the discrete operator, by power iteration."""
    lo, shape = _vertex_grid(omega, h)
    apply = _dirichlet_operator(tensor, h)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(shape + (tensor.dim,))
    _zero_boundary(w, tensor.dim)
    w /= np.linalg.norm(w)
    lam = 0.0
    for _ in range(iters):
        fw = apply(w)
        lam = float(np.linalg.norm(fw))
        if lam == 0.0:
            return 0.0
        w = fw / lam
    return lam


def stable_dt_fd(problem: ContinuumProblem, h: float) -> float:
    """CFL-type bound for the grid solver (0.5/omega, or the viscous bound)."""
    lam = grid_operator_stiffness(problem.tensor, problem.omega, h)
    if lam <= 0:
        return problem.t_end
    if problem.rho > 0:
        return 0.5 / np.sqrt(lam / problem.rho)
    return 1.8 * problem.nu / lam


def solve_fd(
    problem: ContinuumProblem,
    h: float,
    sample_times,
    dt: float | None = None,
    integrator: str | None = None,
) -> FdSolution:
    """March the grid semi-discretisation and snapshot the requested times.

    Substep sizes are chosen per sampling interval so every requested
    time is hit exactly.  Raises :class:`CflError` when asked to run
    above the stability bound.
    """
    lo, shape = _vertex_grid(problem.omega, h)
    sample_times = np.asarray(sorted(set(float(t) for t in sample_times)))
    if sample_times[0] < 0 or sample_times[-1] > problem.t_end + 1e-12:
        raise ContinuumError("sample times must lie in [0, t_end]")

    bound = stable_dt_fd(problem, h)
    if dt is None:
        dt = 0.8 * bound
    elif dt > bound * 1.0000001:
        raise CflError(f"dt={dt:g} exceeds the stability bound {bound:g}")

    if integrator is None:
        integrator = "rk4" if problem.rho > 0 else "viscous_rk4"

    apply = _dirichlet_operator(problem.tensor, h)

    def force(w):
        return apply(w)

    gf0 = GridField(lo, h, np.zeros(shape + (problem.dim,)), centered=False)
    pts = gf0.nodes().reshape(-1, problem.dim)
    w = np.asarray(problem.w0(pts), dtype=float).reshape(shape + (problem.dim,))
    _zero_boundary(w, problem.dim)
    if problem.rho > 0 and problem.w1 is not None:
        v = np.asarray(problem.w1(pts), dtype=float).reshape(shape + (problem.dim,))
        _zero_boundary(v, problem.dim)
    elif problem.rho == 0:
        v = -force(w) / problem.nu
    else:
        v = np.zeros_like(w)

    grids, vels = [], []
    t = 0.0
    it = iter(sample_times)
    target = next(it, None)
    while target is not None:
        span = target - t
        if span > 1e-14:
            n_sub = max(1, int(np.ceil(span / dt - 1e-12)))
            dt_sub = span / n_sub
            for _ in range(n_sub):
                if problem.rho > 0:
                    if integrator == "rk4":
                        w, v = rk4_second_order(
                            w, v, dt_sub, problem.rho, problem.nu, force
                        )
                    else:
                        w, v = semi_implicit_euler(
                            w, v, dt_sub, problem.rho, problem.nu, force
                        )
                else:
                    if integrator == "viscous_explicit":
                        w = viscous_explicit(w, dt_sub, problem.nu, force)
                    else:
                        w = viscous_rk4(w, dt_sub, problem.nu, force)
                _zero_boundary(w, problem.dim)
            if problem.rho == 0:
                v = -force(w) / problem.nu
        t = target
        grids.append(GridField(lo, h, w.copy(), centered=False))
        vels.append(GridField(lo, h, v.copy(), centered=False))
        target = next(it, None)
    return FdSolution(
        problem=problem, h=h, times=sample_times, grids=grids, velocity_grids=vels
    )
