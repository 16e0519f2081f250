"""Cell energy models, their Hessians, and the induced elasticity tensor.

A cell energy maps a d x 2^d corner configuration to a nonnegative scalar,
vanishes exactly on rigid motions of the reference corners, and grows
quadratically.  Two concrete models ship:

* a 1-d harmonic chain (fully closed form, anchors the hand-checked
  numbers), and
* a d-dimensional "Cauchy-Born split" energy: rotation distance of the
  best affine fit of the corners plus a penalty on the non-affine
  remainder.

``elasticity_tensor`` contracts the reference Hessian with the corner
matrix to produce the fourth-order tensor of the limiting elastic energy;
``check_assumptions`` runs sampled checks of the five structural
assumptions a model must satisfy.
"""

import abc
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .lattice import corner_labels


class ModelError(ValueError):
    pass


class ModelDefectError(ModelError):
    """A structural property of the model failed a validation check."""


class CellEnergyModel(abc.ABC):
    """Energy of a single cell configuration F (d x 2^d corner matrix)."""

    dim: int
    n_corners: int
    name: str

    @abc.abstractmethod
    def eval(self, F: np.ndarray) -> float: ...

    @abc.abstractmethod
    def grad(self, F: np.ndarray) -> np.ndarray: ...

    def hess(self, F: np.ndarray) -> np.ndarray:
        """Second derivative, shape (d, 2^d, d, 2^d).

        Default: central finite differences of ``grad`` with step
        ``1e-5 * (1 + |F|)``.
        """
        F = np.asarray(F, dtype=float)
        h = 1e-5 * (1.0 + np.linalg.norm(F))
        d, m = F.shape
        H = np.empty((d, m, d, m))
        for i in range(d):
            for j in range(m):
                Fp = F.copy()
                Fm = F.copy()
                Fp[i, j] += h
                Fm[i, j] -= h
                H[:, :, i, j] = (self.grad(Fp) - self.grad(Fm)) / (2.0 * h)
        return H

    def hess_at_reference(self) -> np.ndarray | None:
        """Exact Hessian at the reference corners, when the model has one."""
        return None

    def reference_corners(self) -> np.ndarray:
        """The corner matrix the energy is minimised at."""
        raise ModelError(f"model '{self.name}' does not expose reference corners")

    # batched variants; subclasses override the hot ones
    def eval_cells(self, F: np.ndarray) -> np.ndarray:
        return np.array([self.eval(Fc) for Fc in F])

    def grad_cells(self, F: np.ndarray) -> np.ndarray:
        return np.stack([self.grad(Fc) for Fc in F])

    def metadata(self) -> dict:
        return {"name": self.name, "params": {}, "derivatives": {}}


class HarmonicChain(CellEnergyModel):
    """1-d nearest-neighbour spring: energy k/2 (F2 - F1 - rest)^2."""

    dim = 1
    n_corners = 2
    name = "harmonic_chain"

    def __init__(self, k: float, rest_length: float = 1.0):
        if k <= 0:
            raise ModelError("spring constant must be positive")
        self.k = float(k)
        self.rest_length = float(rest_length)

    def _stretch(self, F):
        return F[..., 0, 1] - F[..., 0, 0] - self.rest_length

    def eval(self, F):
        return float(0.5 * self.k * self._stretch(np.asarray(F, float)) ** 2)

    def grad(self, F):
        s = self._stretch(np.asarray(F, float))
        return self.k * s * np.array([[-1.0, 1.0]])

    def hess(self, F):
        e = np.array([[-1.0, 1.0]])
        return self.k * np.einsum("ij,kl->ijkl", e, e)

    def hess_at_reference(self):
        return self.hess(None)

    def reference_corners(self):
        return self.rest_length * np.array([[-0.5, 0.5]])

    def eval_cells(self, F):
        return 0.5 * self.k * self._stretch(np.asarray(F, float)) ** 2

    def grad_cells(self, F):
        s = self._stretch(np.asarray(F, float))
        return self.k * s[:, None, None] * np.array([[-1.0, 1.0]])

    def metadata(self):
        return {
            "name": self.name,
            "params": {"k": self.k, "rest_length": self.rest_length},
            "derivatives": {"grad": "analytic", "hess": "analytic"},
        }


class CauchyBornSplit(CellEnergyModel):
    """Rotation distance of the affine fit plus a non-affine penalty.

    With centered corners ``Fc`` and reference ``Zc``, the best affine map
    is ``M = Fc Zc^T (Zc Zc^T)^-1``; the energy is

        k/2 * dist(M, rotations)^2  +  mu/2 * |Fc - M Zc|^2.

    The rotation distance uses singular values with the usual determinant
    sign correction.  The gradient is analytic (envelope formula through
    the closest rotation); the general Hessian falls back to central
    finite differences, but the reference Hessian is available in closed
    form.
    """

    name = "cauchy_born_split"

    def __init__(self, mu: float, k: float, Z: np.ndarray):
        if mu <= 0 or k <= 0:
            raise ModelError("model parameters mu, k must be positive")
        Z = np.asarray(Z, dtype=float)
        d, m = Z.shape
        if m != 2**d:
            raise ModelError(f"corner matrix must be d x 2^d, got {Z.shape}")
        self.mu = float(mu)
        self.k = float(k)
        self.dim = d
        self.n_corners = m
        self.Zc = Z - Z.mean(axis=1, keepdims=True)
        ZZt = self.Zc @ self.Zc.T
        eigs = np.linalg.eigvalsh(ZZt)
        if eigs[0] <= 1e-12 * max(eigs[-1], 1.0):
            raise ModelError("degenerate corner matrix: Zc Zc^T is singular")
        ZZt_inv = np.linalg.inv(ZZt)
        self.B = self.Zc.T @ ZZt_inv  # (m, d)
        self.Bt = ZZt_inv @ self.Zc  # (d, m)
        # projector onto the non-affine, translation-free component
        P = np.eye(m) - np.full((m, m), 1.0 / m)
        self.K = P - self.Zc.T @ ZZt_inv @ self.Zc

    def eval(self, F):
        F = np.ascontiguousarray(np.asarray(F, float)[None])
        return float(_kernels.cb_energy(F, self.Zc, self.B, self.k, self.mu)[0])

    def grad(self, F):
        F = np.ascontiguousarray(np.asarray(F, float)[None])
        return _kernels.cb_stress(F, self.Zc, self.B, self.Bt, self.k, self.mu)[0]

    def eval_cells(self, F):
        F = np.ascontiguousarray(np.asarray(F, float))
        return _kernels.cb_energy(F, self.Zc, self.B, self.k, self.mu)

    def grad_cells(self, F):
        F = np.ascontiguousarray(np.asarray(F, float))
        return _kernels.cb_stress(F, self.Zc, self.B, self.Bt, self.k, self.mu)

    def reference_corners(self):
        return self.Zc

    def hess_at_reference(self):
        """Exact Hessian at the reference corners.

        The affine part contributes ``k |sym(G B)|^2`` and the non-affine
        part ``mu |G K|^2`` to the quadratic form in the perturbation G.
        """
        d, m = self.dim, self.n_corners
        Tsym = np.zeros((d, d, d, m))
        eye = np.eye(d)
        for a in range(d):
            for b in range(d):
                Tsym[a, b] = 0.5 * (
                    np.einsum("i,j->ij", eye[a], self.B[:, b])
                    + np.einsum("i,j->ij", eye[b], self.B[:, a])
                )
        H1 = np.einsum("abij,abkl->ijkl", Tsym, Tsym)
        H2 = np.einsum("ik,jl->ijkl", np.eye(d), self.K)
        return self.k * H1 + self.mu * H2

    def metadata(self):
        return {
            "name": self.name,
            "params": {"mu": self.mu, "k": self.k},
            "derivatives": {
                "grad": "analytic",
                "hess": "fd-central(1e-5*(1+|F|))",
                "hess_at_reference": "analytic",
            },
        }


def harmonic_chain(k: float, rest_length: float = 1.0) -> HarmonicChain:
    return HarmonicChain(k, rest_length)


def cauchy_born_split(mu: float, k: float, Z: np.ndarray) -> CauchyBornSplit:
    return CauchyBornSplit(mu, k, Z)


def make_model(name: str, dim: int, A: np.ndarray | None = None, **params) -> CellEnergyModel:
    """Build a registered model by name for a given lattice geometry."""
    A = np.eye(dim) if A is None else np.asarray(A, float)
    if name == "harmonic_chain":
        if dim != 1:
            raise ModelError("harmonic_chain is one-dimensional")
        return harmonic_chain(**params)
    if name == "cauchy_born_split":
        return cauchy_born_split(Z=corner_labels(dim, A), **params)
    raise ModelError(f"unknown model '{name}'")


MODEL_NAMES = ("harmonic_chain", "cauchy_born_split")


# ---------------------------------------------------------------------------
# reference Hessian and elasticity tensor


def hessian_at_Z(model: CellEnergyModel, sym_tol: float = 1e-7) -> np.ndarray:
    """Hessian of the cell energy at the reference corner matrix.

    Uses the model's exact reference Hessian when available, otherwise
    finite differences of the gradient.  Rejects Hessians whose major
    asymmetry exceeds ``sym_tol`` (relative), since a genuine second
    derivative must be major symmetric.
    """
    H = model.hess_at_reference()
    if H is None:
        H = model.hess(model.reference_corners())
    d, m = model.dim, model.n_corners
    Hm = H.reshape(d * m, d * m)
    scale = max(np.abs(Hm).max(), 1e-300)
    asym = np.abs(Hm - Hm.T).max() / scale
    if asym > sym_tol:
        raise ModelDefectError(
            f"Hessian at the reference is not major symmetric (rel. asym {asym:.2e})"
        )
    return H


@dataclass(frozen=True)
class ElasticityTensor:
    """Fourth-order tensor of the limiting elastic energy.

    Validated on construction: minor symmetric, major symmetric, and
    annihilates skew matrices.
    """

    C: np.ndarray  # (d, d, d, d)
    tol: float = 1e-10

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        if C.ndim != 4 or len(set(C.shape)) != 1:
            raise ModelError(f"elasticity tensor must be d^4, got shape {C.shape}")
        scale = max(np.abs(C).max(), 1e-300)
        minor = np.abs(C - C.transpose(1, 0, 2, 3)).max() / scale
        major = np.abs(C - C.transpose(2, 3, 0, 1)).max() / scale
        if minor > self.tol or major > self.tol:
            raise ModelDefectError(
                f"tensor symmetry violated (minor {minor:.2e}, major {major:.2e})"
            )
        # store the exactly symmetric representative (kills einsum round-off)
        C = 0.5 * (C + C.transpose(1, 0, 2, 3))
        C = 0.5 * (C + C.transpose(0, 1, 3, 2))
        C = 0.5 * (C + C.transpose(2, 3, 0, 1))
        object.__setattr__(self, "C", C)

    @property
    def dim(self) -> int:
        return self.C.shape[0]

    def apply(self, e: np.ndarray) -> np.ndarray:
        """Double contraction C : e for a (batch of) d x d matrices."""
        return np.einsum("ijkl,...kl->...ij", self.C, e)

    def quadratic(self, e: np.ndarray) -> np.ndarray:
        """e : C : e for a (batch of) d x d matrices."""
        return np.einsum("...ij,ijkl,...kl->...", e, self.C, e)

    def symmetry_report(self) -> dict:
        C = self.C
        scale = max(np.abs(C).max(), 1e-300)
        rng = np.random.default_rng(0)
        d = self.dim
        skew_residual = 0.0
        for _ in range(32):
            S = rng.standard_normal((d, d))
            S = S - S.T
            if d == 1:
                break
            skew_residual = max(
                skew_residual, np.abs(self.apply(S)).max() / max(np.abs(S).max(), 1e-300)
            )
        return {
            "minor_asymmetry": float(
                np.abs(C - C.transpose(1, 0, 2, 3)).max() / scale
            ),
            "major_asymmetry": float(
                np.abs(C - C.transpose(2, 3, 0, 1)).max() / scale
            ),
            "skew_annihilation_residual": float(skew_residual),
        }


def elasticity_tensor(H: np.ndarray, Z: np.ndarray, tol: float = 1e-10) -> ElasticityTensor:
    """Contract the reference Hessian with the corner matrix.

    Componentwise ``C[i,p,k,q] = Z[p,j] H[i,j,k,l] Z[q,l]``; minor and
    major symmetry of the result are validated at ``tol``.
    """
    H = np.asarray(H, dtype=float)
    Z = np.asarray(Z, dtype=float)
    d, m = Z.shape
    if H.shape != (d, m, d, m):
        raise ModelError(f"Hessian shape {H.shape} does not match corners {Z.shape}")
    C = np.einsum("pj,ijkl,ql->ipkq", Z, H, Z)
    return ElasticityTensor(C, tol=tol)


def tensor_for_model(model: CellEnergyModel, Z: np.ndarray | None = None) -> ElasticityTensor:
    """Elasticity tensor of a model (corner matrix defaults to the model's own)."""
    if Z is None:
        Z = model.reference_corners()
    return elasticity_tensor(hessian_at_Z(model), Z)


# ---------------------------------------------------------------------------
# sampled checks of the structural assumptions


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class AssumptionReport:
    model: dict
    trials: int
    seed: int
    checks: list

    @property
    def all_passed(self) -> bool:
        return all(bool(c.passed) for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "trials": self.trials,
            "seed": self.seed,
            "all_passed": self.all_passed,
            "checks": [
                {"name": c.name, "passed": bool(c.passed), "detail": c.detail}
                for c in self.checks
            ],
        }


def _random_rotation(rng, d):
    if d == 1:
        return np.eye(1)
    S = rng.standard_normal((d, d))
    S = S - S.T
    # matrix exponential of a skew matrix is a rotation
    from scipy.linalg import expm

    return expm(S)


def _translation_rotation_basis(Z: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of rigid directions in the flat d*2^d space."""
    d, m = Z.shape
    dirs = []
    for a in range(d):
        T = np.zeros((d, m))
        T[a, :] = 1.0
        dirs.append(T.ravel())
    for a in range(d):
        for b in range(a + 1, d):
            S = np.zeros((d, d))
            S[a, b], S[b, a] = 1.0, -1.0
            dirs.append((S @ Z).ravel())
    Q, _ = np.linalg.qr(np.stack(dirs, axis=1))
    return Q


def check_assumptions(
    model: CellEnergyModel, trials: int = 50, seed: int = 0
) -> AssumptionReport:
    """Sampled verification of the five structural assumptions.

    (1) frame invariance, (2) the zero set is exactly the rigid orbit of
    the reference corners, (3) the reference Hessian is positive definite
    transverse to rigid directions, (4) at-least-quadratic growth on
    mean-free configurations, (5) at-most-quadratic gradient growth.
    Report-only: each check carries a pass flag and witness data.
    """
    if trials < 1:
        raise ModelError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    d, m = model.dim, model.n_corners
    Z = model.reference_corners()
    checks = []

    # (1) invariance under rotations and translations
    worst = 0.0
    witness = None
    for _ in range(trials):
        F = Z + rng.standard_normal((d, m))
        R = _random_rotation(rng, d)
        c = rng.standard_normal(d)
        dev = abs(model.eval(R @ F + c[:, None]) - model.eval(F))
        rel = dev / (1.0 + abs(model.eval(F)))
        if rel > worst:
            worst, witness = rel, F.tolist()
    checks.append(
        CheckResult(
            "frame_invariance",
            worst <= 1e-9,
            {"max_rel_deviation": worst, "witness_F": witness if worst > 1e-9 else None},
        )
    )

    # (2) zero set: vanishes on the orbit, positive off it
    on_orbit = 0.0
    for _ in range(trials):
        R = _random_rotation(rng, d)
        c = rng.standard_normal(d)
        on_orbit = max(on_orbit, model.eval(R @ Z + c[:, None]))
    off_orbit_min = np.inf
    for _ in range(trials):
        G = rng.standard_normal((d, m))
        G = G / np.linalg.norm(G)
        off_orbit_min = min(off_orbit_min, model.eval(Z + 0.5 * G))
    checks.append(
        CheckResult(
            "zero_set_is_rigid_orbit",
            on_orbit < 1e-12 and off_orbit_min > 1e-12,
            {"max_on_orbit": float(on_orbit), "min_off_orbit": float(off_orbit_min)},
        )
    )

    # (3) Hessian positive transverse to rigid directions
    try:
        H = hessian_at_Z(model)
        Hm = H.reshape(d * m, d * m)
        Q = _translation_rotation_basis(Z)
        P = np.eye(d * m) - Q @ Q.T
        eigs = np.sort(np.linalg.eigvalsh(P @ Hm @ P))
        n_rigid = Q.shape[1]
        scale = max(eigs.max(), 1e-300)
        rigid_residual = float(np.abs(Hm @ Q).max() / max(np.abs(Hm).max(), 1e-300))
        min_transverse = float(eigs[n_rigid] / scale)
        ok = min_transverse > 1e-10 and rigid_residual < 1e-6
        detail = {
            "min_transverse_eig_rel": min_transverse,
            "rigid_direction_residual": rigid_residual,
            "n_rigid_directions": int(n_rigid),
        }
    except ModelDefectError as err:
        ok, detail = False, {"error": str(err)}
    checks.append(CheckResult("hessian_positive_transverse", ok, detail))

    # (4) quadratic lower growth on mean-free configurations
    ratios = []
    for _ in range(trials):
        G = rng.standard_normal((d, m))
        G = G - G.mean(axis=1, keepdims=True)
        G = G / np.linalg.norm(G)
        for radius in (10.0, 100.0, 1000.0):
            ratios.append(model.eval(radius * G) / radius**2)
    min_ratio = float(min(ratios))
    checks.append(
        CheckResult(
            "quadratic_lower_growth",
            min_ratio > 1e-10,
            {"min_energy_over_norm2": min_ratio},
        )
    )

    # (5) gradient grows at most quadratically
    worst_growth = 0.0
    witness = None
    fitted_c = 0.0
    for _ in range(trials):
        G = rng.standard_normal((d, m))
        G = G / np.linalg.norm(G)
        ratios = {}
        for radius in (1.0, 10.0, 100.0, 1000.0):
            F = Z + radius * G
            ratios[radius] = np.linalg.norm(model.grad(F)) / (
                1.0 + np.linalg.norm(F) ** 2
            )
        fitted_c = max(fitted_c, max(ratios.values()))
        growth = ratios[1000.0] / max(ratios[10.0], 1e-300)
        if growth > worst_growth:
            worst_growth, witness = growth, G.tolist()
    checks.append(
        CheckResult(
            "gradient_quadratic_upper_growth",
            worst_growth <= 10.0,
            {
                "fitted_c": float(fitted_c),
                "worst_ratio_growth": float(worst_growth),
                "witness_ray": witness if worst_growth > 10.0 else None,
            },
        )
    )

    return AssumptionReport(
        model=model.metadata(), trials=trials, seed=seed, checks=checks
    )
