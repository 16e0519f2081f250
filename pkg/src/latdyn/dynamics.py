"""Time integration of the lattice equation of motion and its energy audit.

The second-order system ``rho u'' + nu u' + gradI(u) = 0`` (gradI the
first variation of the cell-sum energy in the atomistic inner product) is
integrated with classic RK4 or semi-implicit Euler; the purely viscous
case ``rho = 0`` reduces to the gradient flow ``nu u' = -gradI(u)`` with
explicit Euler, implicit Euler (Newton + conjugate gradients), or an RK4
variant for high-accuracy runs.

Every run can be audited against the energy-dissipation-inertia identity:
kinetic plus potential energy plus the two dissipation integrals must
equal the initial kinetic plus potential energy at every time.  The
identity is exact for the continuous dynamics, so its residual isolates
integrator and quadrature error; the a priori bounds derived from it are
exact as well and flag integrator failure when violated.
"""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fields
from ._integrators import (  # ImplicitSolveError re-exported for callers
    ImplicitSolveError,
    rk4_second_order,
    semi_implicit_euler,
    viscous_explicit,
    viscous_implicit,
    viscous_rk4,
)
from .discrete_ops import EnergyParams, energy_of_values, force_of_values
from .fields import LatticeField
from .lattice import LatticeSpec, build_lattice

INTEGRATORS = (
    "rk4",
    "semi_implicit_euler",
    "viscous_explicit",
    "viscous_implicit",
    "viscous_rk4",
)
_VISCOUS = {"viscous_explicit", "viscous_implicit", "viscous_rk4"}

_BLOWUP_FACTOR = 1.0e6


class IntegrationUnstableError(RuntimeError):
    def __init__(self, t: float, measure: float, scale: float):
        self.t = t
        self.measure = measure
        self.scale = scale
        super().__init__(
            f"instability detected at t={t:.6g}: state norm {measure:.3e} "
            f"exceeds {_BLOWUP_FACTOR:.0e} x initial scale {scale:.3e}"
        )


@dataclass(frozen=True)
class SimulationConfig:
    rho: float
    nu: float
    dt: float
    t_end: float
    integrator: str = "rk4"
    sample_every: int = 1

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("friction coefficient nu must be positive")
        if self.rho < 0:
            raise ValueError("mass rho must be nonnegative")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator '{self.integrator}'")
        if self.rho == 0 and self.integrator not in _VISCOUS:
            raise ValueError("rho = 0 requires one of the viscous integrators")
        if self.rho > 0 and self.integrator in _VISCOUS:
            raise ValueError("viscous integrators require rho = 0")

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "nu": self.nu,
            "dt": self.dt,
            "t_end": self.t_end,
            "integrator": self.integrator,
            "sample_every": self.sample_every,
        }


@dataclass
class Trajectory:
    """Sampled states (u, v = u') plus the provenance of the run.

    In the purely viscous case v is stored as the exact flow velocity
    ``-gradI(u)/nu``, so the audit treats both regimes uniformly.
    """

    lattice_spec: LatticeSpec
    config: SimulationConfig
    model_meta: dict
    delta: float
    times: np.ndarray
    us: np.ndarray  # (n_samples, n_points, d)
    vs: np.ndarray  # (n_samples, n_points, d)

    @property
    def n_samples(self) -> int:
        return len(self.times)

    def state(self, i: int, lattice) -> tuple[LatticeField, LatticeField]:
        return LatticeField(lattice, self.us[i]), LatticeField(lattice, self.vs[i])

    def index_of_time(self, t: float, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"time {t} not among trajectory samples")
        return i

    def save(self, path) -> None:
        """Binary snapshot archive plus a JSON provenance sidecar."""
        path = Path(path)
        np.savez_compressed(path, times=self.times, us=self.us, vs=self.vs)
        sidecar = {
            "lattice": self.lattice_spec.to_dict(),
            "config": self.config.to_dict(),
            "model": self.model_meta,
            "delta": self.delta,
        }
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1))

    def save_snapshots(self, path, times) -> None:
        """Binary snapshots of the samples nearest to the selected times."""
        idx = sorted({self.index_of_time(t) for t in times})
        np.savez_compressed(
            Path(path),
            times=self.times[idx],
            us=self.us[idx],
            vs=self.vs[idx],
        )

    @classmethod
    def load(cls, path) -> "Trajectory":
        path = Path(path)
        if path.suffix != ".npz":
            path = path.with_suffix(".npz")
        data = np.load(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        return cls(
            lattice_spec=LatticeSpec.from_dict(meta["lattice"]),
            config=SimulationConfig(**meta["config"]),
            model_meta=meta["model"],
            delta=float(meta["delta"]),
            times=data["times"],
            us=data["us"],
            vs=data["vs"],
        )

    def export_csv(self, path, params: EnergyParams | None = None,
                   ledger: "EdieLedger | None" = None) -> None:
        """Per-sample scalars: t, |u|, |v|, energy, and ledger columns."""
        lattice = params.lattice if params is not None else None
        w = None
        rows = []
        for i, t in enumerate(self.times):
            if params is not None:
                if w is None:
                    w = np.sqrt(lattice.point_weight)
                nu_ = w * np.linalg.norm(self.us[i])
                nv_ = w * np.linalg.norm(self.vs[i])
                en = energy_of_values(self.us[i], params)
            else:
                nu_ = nv_ = en = float("nan")
            row = [t, nu_, nv_, en]
            if ledger is not None:
                row += [
                    ledger.kinetic[i],
                    ledger.potential[i],
                    ledger.diss_visc[i],
                    ledger.diss_force_subst[i],
                    ledger.residual_subst[i],
                ]
            rows.append(row)
        cols = ["t", "u_norm", "v_norm", "energy"]
        if ledger is not None:
            cols += ["kinetic", "potential", "diss_visc", "diss_force", "residual"]
        path = Path(path)
        with path.open("w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")


# ---------------------------------------------------------------------------
# single steps


def step(state: tuple[LatticeField, LatticeField], config: SimulationConfig,
         params: EnergyParams) -> tuple[LatticeField, LatticeField]:
    """One time step of the first-order system (u' = v, rho v' = -nu v - gradI)."""
    u, v = state
    force = lambda vals: force_of_values(vals, params)  # noqa: E731
    if config.integrator in _VISCOUS:
        un = _step_viscous_values(
            u.values, config.integrator, config.dt, config.nu, force
        )
        vn = -force(un) / config.nu
    elif config.integrator == "rk4":
        un, vn = rk4_second_order(
            u.values, v.values, config.dt, config.rho, config.nu, force
        )
    else:
        un, vn = semi_implicit_euler(
            u.values, v.values, config.dt, config.rho, config.nu, force
        )
    lattice = params.lattice
    return LatticeField(lattice, un), LatticeField(lattice, vn)


def _step_viscous_values(u_values, integrator, dt, nu, force):
    if integrator == "viscous_explicit":
        return viscous_explicit(u_values, dt, nu, force)
    if integrator == "viscous_rk4":
        return viscous_rk4(u_values, dt, nu, force)
    return viscous_implicit(u_values, dt, nu, force)


def step_viscous(u: LatticeField, config: SimulationConfig,
                 params: EnergyParams) -> LatticeField:
    """One gradient-flow step (rho = 0)."""
    if config.rho != 0:
        raise ValueError("step_viscous requires rho = 0")
    force = lambda vals: force_of_values(vals, params)  # noqa: E731
    return LatticeField(
        params.lattice,
        _step_viscous_values(u.values, config.integrator, config.dt, config.nu, force),
    )


# ---------------------------------------------------------------------------
# stability estimate


def estimate_force_stiffness(
    u0: LatticeField, params: EnergyParams, iters: int = 60, seed: int = 0
) -> float:
    """Largest eigenvalue of the linearised force at u0, by power iteration.

    The linearisation is self-adjoint in the atomistic inner product, so
    power iteration on the finite-difference directional derivative of the
    force converges to the spectral radius.
    """
    rng = np.random.default_rng(seed)
    lat = params.lattice
    w = rng.standard_normal((lat.n_points, lat.dim))
    w[~lat.in_omega] = 0.0
    nw = np.linalg.norm(w)
    if nw == 0:
        return 0.0
    w /= nw
    base = force_of_values(u0.values, params)
    eta = 1e-6 * (1.0 + np.linalg.norm(u0.values))
    lam = 0.0
    for _ in range(iters):
        fw = (force_of_values(u0.values + eta * w, params) - base) / eta
        lam = float(np.linalg.norm(fw))
        if lam == 0.0:
            return 0.0
        w = fw / lam
    return lam


def stable_dt(u0: LatticeField, config: SimulationConfig, params: EnergyParams) -> float:
    """Step-size bound: 0.5/omega_max for inertial runs, 1.8 nu/lambda_max viscous."""
    lam = estimate_force_stiffness(u0, params)
    if lam <= 0:
        return config.t_end
    if config.rho > 0:
        return 0.5 / np.sqrt(lam / config.rho)
    return 1.8 * config.nu / lam


# ---------------------------------------------------------------------------
# full runs


def simulate(
    u0: LatticeField,
    u1: LatticeField | None,
    config: SimulationConfig,
    params: EnergyParams,
) -> Trajectory:
    """Integrate the initial value problem and sample the trajectory.

    Samples every ``sample_every`` steps, always including t = 0 and the
    final time (dt is snapped so the horizon is an integer number of
    steps).  The run aborts with :class:`IntegrationUnstableError` when
    the state norm exceeds 1e6 times the initial scale.  ``u1`` is
    ignored for the viscous integrators.
    """
    lat = params.lattice
    if u0.lattice is not lat or (u1 is not None and u1.lattice is not lat):
        raise fields.LatticeMismatchError("initial data on a different lattice")
    n_steps = max(1, int(round(config.t_end / config.dt)))
    dt = config.t_end / n_steps
    force = lambda vals: force_of_values(vals, params)  # noqa: E731
    viscous = config.integrator in _VISCOUS

    u = u0.values.copy()
    if viscous:
        v = -force(u) / config.nu
    else:
        v = np.zeros_like(u) if u1 is None else u1.values.copy()

    weight = np.sqrt(lat.point_weight)
    scale0 = max(weight * np.linalg.norm(u), weight * np.linalg.norm(v))
    if scale0 == 0.0:
        scale0 = 1.0

    times = [0.0]
    us = [u.copy()]
    vs = [v.copy()]
    for n in range(1, n_steps + 1):
        if viscous:
            u = _step_viscous_values(u, config.integrator, dt, config.nu, force)
            measure = weight * np.linalg.norm(u)
        elif config.integrator == "rk4":
            u, v = rk4_second_order(u, v, dt, config.rho, config.nu, force)
            measure = weight * np.linalg.norm(v)
        else:
            u, v = semi_implicit_euler(u, v, dt, config.rho, config.nu, force)
            measure = weight * np.linalg.norm(v)
        if not np.isfinite(measure) or measure > _BLOWUP_FACTOR * scale0:
            raise IntegrationUnstableError(n * dt, float(measure), scale0)
        if n % config.sample_every == 0 or n == n_steps:
            if viscous:
                v = -force(u) / config.nu
            times.append(n * dt)
            us.append(u.copy())
            vs.append(v.copy())
    return Trajectory(
        lattice_spec=lat.spec,
        config=config,
        model_meta=params.model.metadata(),
        delta=params.delta,
        times=np.asarray(times),
        us=np.asarray(us),
        vs=np.asarray(vs),
    )


# ---------------------------------------------------------------------------
# energy-dissipation-inertia audit


@dataclass
class EdieLedger:
    """Per-sample bookkeeping of the energy-dissipation-inertia identity.

    ``diss_force_subst`` evaluates the force dissipation through the
    equation of motion (rho u'' + gradI = -nu u', exact along the true
    dynamics); ``diss_force_fd`` reconstructs the acceleration by finite
    differences of sampled velocities and the force by evaluation, which
    exposes integrator error.  ``residual_*`` is ledger-sum minus the
    right-hand side (initial kinetic + potential).
    """

    rho: float
    nu: float
    times: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    diss_visc: np.ndarray
    diss_force_subst: np.ndarray
    diss_force_fd: np.ndarray
    rhs: float
    residual_subst: np.ndarray = field(init=False)
    residual_fd: np.ndarray = field(init=False)

    def __post_init__(self):
        lhs = self.kinetic + self.potential + self.diss_visc
        self.residual_subst = lhs + self.diss_force_subst - self.rhs
        self.residual_fd = lhs + self.diss_force_fd - self.rhs

    @property
    def max_rel_residual(self) -> float:
        return float(np.abs(self.residual_subst).max() / max(abs(self.rhs), 1e-300))

    def to_csv(self, path) -> None:
        cols = [
            "t", "kinetic", "potential", "diss_visc",
            "diss_force_subst", "diss_force_fd", "residual_subst", "residual_fd",
        ]
        arrs = [
            self.times, self.kinetic, self.potential, self.diss_visc,
            self.diss_force_subst, self.diss_force_fd,
            self.residual_subst, self.residual_fd,
        ]
        with Path(path).open("w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in zip(*arrs):
                fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def edie_audit(traj: Trajectory, config: SimulationConfig,
               params: EnergyParams) -> EdieLedger:
    """Evaluate the energy-dissipation-inertia ledger along a trajectory.

    Time integrals use the trapezoid rule on the sample grid, so the
    sampling must be dense enough for the quadrature error to sit below
    the tolerance being asserted.
    """
    lat = params.lattice
    w2 = lat.point_weight
    rho, nu = config.rho, config.nu
    t = traj.times
    n = traj.n_samples

    v_norm2 = w2 * np.einsum("spd,spd->s", traj.vs, traj.vs)
    kinetic = 0.5 * rho * v_norm2
    potential = np.array([energy_of_values(traj.us[i], params) for i in range(n)])
    diss_visc = 0.5 * nu * _cumtrapz(v_norm2, t)
    # substitution: rho u'' + gradI = -nu u' along the exact dynamics
    diss_force_subst = (nu / 2.0) * _cumtrapz(v_norm2, t)

    forces = np.array([force_of_values(traj.us[i], params) for i in range(n)])
    if rho > 0:
        accel = np.gradient(traj.vs, t, axis=0)
        resid = rho * accel + forces
    else:
        resid = forces
    resid_norm2 = w2 * np.einsum("spd,spd->s", resid, resid)
    diss_force_fd = _cumtrapz(resid_norm2, t) / (2.0 * nu)

    rhs = float(kinetic[0] + potential[0])
    return EdieLedger(
        rho=rho,
        nu=nu,
        times=t,
        kinetic=kinetic,
        potential=potential,
        diss_visc=diss_visc,
        diss_force_subst=diss_force_subst,
        diss_force_fd=diss_force_fd,
        rhs=rhs,
    )


@dataclass
class AprioriReport:
    """The four exact trajectory bounds implied by the energy identity."""

    entries: list
    rtol: float

    @property
    def all_ok(self) -> bool:
        return all(e["ok"] for e in self.entries)

    def to_dict(self) -> dict:
        return {"rtol": self.rtol, "all_ok": self.all_ok, "entries": self.entries}


def apriori_bounds(ledger: EdieLedger, rtol: float = 1e-4) -> AprioriReport:
    """Check the suprema/integral bounds derived from the energy identity.

    All four left-hand sides are bounded by the initial kinetic plus
    potential energy; violations beyond ``rtol`` indicate integrator
    failure (the bounds are exact for true solutions).
    """
    c = ledger.rhs
    slack = rtol * max(c, 1e-300)

    def entry(name, observed, bound):
        return {
            "name": name,
            "observed": float(observed),
            "bound": float(bound),
            "ok": bool(observed <= bound + slack),
        }

    entries = [
        entry("sqrt(rho) * max_t |u'|  <= sqrt(2 c)",
              np.sqrt(2.0 * ledger.kinetic.max()), np.sqrt(2.0 * max(c, 0.0))),
        entry("max_t energy <= c", ledger.potential.max(), c),
        entry("int |u'|^2 <= 2 c / nu",
              2.0 * ledger.diss_visc[-1] / ledger.nu, 2.0 * c / ledger.nu),
        entry("int |rho u'' + gradI|^2 <= 2 nu c",
              2.0 * ledger.nu * ledger.diss_force_subst[-1], 2.0 * ledger.nu * c),
    ]
    # the sqrt comparison needs its own slack scale
    entries[0]["ok"] = bool(
        entries[0]["observed"] <= entries[0]["bound"] + np.sqrt(2.0 * slack)
    )
    return AprioriReport(entries=entries, rtol=rtol)


# ---------------------------------------------------------------------------
# convenience driver


def run_and_audit(u0, u1, config, params):
    """Simulate, audit, and time a run; returns (trajectory, ledger, report, seconds)."""
    t0 = time.perf_counter()
    traj = simulate(u0, u1, config, params)
    ledger = edie_audit(traj, config, params)
    report = apriori_bounds(ledger)
    return traj, ledger, report, time.perf_counter() - t0


def rebuild_params(traj: Trajectory) -> EnergyParams:
    """Reconstruct lattice and energy parameters from a saved trajectory."""
    from .cell_energy import make_model

    lattice = build_lattice(traj.lattice_spec)
    meta = traj.model_meta
    params = dict(meta["params"])
    model = make_model(meta["name"], traj.lattice_spec.dim, traj.lattice_spec.A, **params)
    return EnergyParams(delta=traj.delta, model=model, lattice=lattice)
