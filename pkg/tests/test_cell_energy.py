import numpy as np
import pytest
from scipy.linalg import expm

from latdyn.cell_energy import (
    ModelDefectError,
    ModelError,
    cauchy_born_split,
    check_assumptions,
    elasticity_tensor,
    harmonic_chain,
    hessian_at_Z,
    make_model,
    tensor_for_model,
)
from latdyn.lattice import corner_labels

from conftest import QuarticCellEnergy

Z1 = np.array([[-0.5, 0.5]])
Z2 = corner_labels(2, np.eye(2))


def random_rotation(rng, d):
    if d == 1:
        return np.eye(1)
    S = rng.standard_normal((d, d))
    return expm(S - S.T)


class TestHarmonicChain:
    def test_zero_at_reference(self):
        m = harmonic_chain(1.3)
        assert m.eval(Z1) == 0.0

    def test_symmetric_stretch(self):
        # substitute F = Z + (-a, a): stretch is 2a, energy k/2 (2a)^2
        m = harmonic_chain(2.0)
        for a in (0.1, -0.7, 3.0):
            F = Z1 + np.array([[-a, a]])
            assert m.eval(F) == pytest.approx(0.5 * 2.0 * (2 * a) ** 2, rel=1e-14)

    def test_hessian_closed_form(self):
        m = harmonic_chain(1.7)
        expected = 1.7 * np.array([[1.0, -1.0], [-1.0, 1.0]])
        assert np.allclose(m.hess(Z1)[0, :, 0, :], expected)
        assert np.allclose(hessian_at_Z(m)[0, :, 0, :], expected)

    def test_batched_matches_scalar(self):
        m = harmonic_chain(0.9)
        rng = np.random.default_rng(0)
        F = Z1[None] + rng.standard_normal((12, 1, 2))
        assert np.allclose(m.eval_cells(F), [m.eval(f) for f in F])
        assert np.allclose(m.grad_cells(F), [m.grad(f) for f in F])

    def test_requires_positive_stiffness(self):
        with pytest.raises(ModelError):
            harmonic_chain(0.0)


class TestCauchyBornSplit:
    def test_zero_on_rigid_orbit(self):
        m = cauchy_born_split(1.0, 1.0, Z2)
        rng = np.random.default_rng(0)
        for _ in range(20):
            R = random_rotation(rng, 2)
            c = rng.standard_normal(2)
            assert m.eval(R @ Z2 + c[:, None]) < 1e-12

    def test_frame_invariance(self):
        m = cauchy_born_split(0.7, 1.3, Z2)
        rng = np.random.default_rng(1)
        for _ in range(20):
            F = Z2 + rng.standard_normal(Z2.shape)
            R = random_rotation(rng, 2)
            c = rng.standard_normal(2)
            assert m.eval(R @ F + c[:, None]) == pytest.approx(m.eval(F), rel=1e-10)

    def test_rotation_direction_is_quartically_flat(self):
        # F = Z + t S Z for skew S: the energy must vanish to fourth order
        m = cauchy_born_split(1.0, 1.0, Z2)
        S = np.array([[0.0, 1.0], [-1.0, 0.0]])
        ts = np.array([1e-2, 1e-3, 1e-4])
        vals = np.array([m.eval(Z2 + t * (S @ Z2)) for t in ts])
        slope = np.polyfit(np.log(ts), np.log(vals), 1)[0]
        assert 3.7 <= slope <= 4.3

    def test_positive_off_orbit(self):
        m = cauchy_born_split(1.0, 1.0, Z2)
        rng = np.random.default_rng(2)
        for _ in range(20):
            G = rng.standard_normal(Z2.shape)
            assert m.eval(Z2 + 0.5 * G / np.linalg.norm(G)) > 1e-10

    def test_rejects_degenerate_corners(self):
        with pytest.raises(ModelError):
            cauchy_born_split(1.0, 1.0, np.zeros((2, 4)))
        with pytest.raises(ModelError):
            cauchy_born_split(-1.0, 1.0, Z2)

    def test_reference_hessian_matches_finite_differences(self):
        m = cauchy_born_split(0.8, 1.4, Z2)
        H_exact = m.hess_at_reference()
        H_fd = m.hess(Z2)
        assert np.abs(H_exact - H_fd).max() < 1e-5 * np.abs(H_exact).max()

    def test_metadata_records_derivative_choices(self):
        meta = cauchy_born_split(1.0, 1.0, Z2).metadata()
        assert meta["derivatives"]["grad"] == "analytic"
        assert "fd" in meta["derivatives"]["hess"]


@pytest.mark.parametrize(
    "model",
    [harmonic_chain(1.2), cauchy_born_split(0.9, 1.1, Z2),
     cauchy_born_split(1.0, 2.0, Z1)],
    ids=["chain", "cb2d", "cb1d"],
)
def test_gradient_consistency(model):
    # central differences of the energy vs the analytic gradient
    rng = np.random.default_rng(42)
    Z = Z1 if model.dim == 1 else Z2
    worst = 0.0
    for _ in range(100):
        G = rng.standard_normal(Z.shape)
        F = Z + G / max(np.linalg.norm(G), 1.0)  # |F - Z| <= 1
        D = rng.standard_normal(Z.shape)
        D /= np.linalg.norm(D)
        h = 1e-6
        fd = (model.eval(F + h * D) - model.eval(F - h * D)) / (2 * h)
        an = float(np.sum(model.grad(F) * D))
        worst = max(worst, abs(fd - an) / max(abs(fd), 1e-8))
    assert worst < 1e-6


@pytest.mark.parametrize(
    "model",
    [harmonic_chain(1.2), cauchy_born_split(0.9, 1.1, Z2)],
    ids=["chain", "cb2d"],
)
def test_hessian_consistency_near_reference(model):
    # finite differences of the gradient vs the hess() output
    rng = np.random.default_rng(3)
    Z = Z1 if model.dim == 1 else Z2
    F = Z + 0.05 * rng.standard_normal(Z.shape)
    H = model.hess(F)
    h = 1e-4
    worst = 0.0
    for _ in range(10):
        D = rng.standard_normal(Z.shape)
        D /= np.linalg.norm(D)
        fd = (model.grad(F + h * D) - model.grad(F - h * D)) / (2 * h)
        hd = np.einsum("ijkl,kl->ij", H, D)
        worst = max(worst, np.abs(fd - hd).max() / max(np.abs(hd).max(), 1e-8))
    assert worst < 1e-5


class TestHessianAtZ:
    def test_translation_direction_in_kernel(self):
        for model in (harmonic_chain(1.0), cauchy_born_split(1.0, 1.0, Z2)):
            H = hessian_at_Z(model)
            d, m = model.dim, model.n_corners
            T = np.ones((d, m))
            assert np.abs(np.einsum("ijkl,kl->ij", H, T)).max() < 1e-8

    def test_rotation_direction_in_kernel(self):
        m = cauchy_born_split(1.0, 1.0, Z2)
        H = hessian_at_Z(m)
        S = np.array([[0.0, 1.0], [-1.0, 0.0]])
        assert np.abs(np.einsum("ijkl,kl->ij", H, S @ Z2)).max() < 1e-10

    def test_positive_definite_transverse(self):
        # dense eigensolve of the Hessian projected off rigid directions
        m = cauchy_born_split(1.0, 1.0, Z2)
        H = hessian_at_Z(m).reshape(8, 8)
        dirs = [np.outer([1, 0], np.ones(4)).ravel(),
                np.outer([0, 1], np.ones(4)).ravel(),
                (np.array([[0.0, 1.0], [-1.0, 0.0]]) @ Z2).ravel()]
        Q, _ = np.linalg.qr(np.stack(dirs, axis=1))
        P = np.eye(8) - Q @ Q.T
        eigs = np.sort(np.linalg.eigvalsh(P @ H @ P))
        assert eigs[3] > 1e-8  # 8 - 3 rigid directions stay positive

    def test_rejects_major_asymmetric_hessian(self):
        class Bad(QuarticCellEnergy):
            def hess_at_reference(self):
                H = np.zeros((self.dim, self.n_corners) * 2)
                H[0, 0, 0, 1] = 1.0  # no (0,1,0,0) partner
                return H

        with pytest.raises(ModelDefectError):
            hessian_at_Z(Bad(1))


class TestElasticityTensor:
    def test_chain_scalar_stiffness(self):
        # hand contraction: Z H Z^T with Z = (-1/2, 1/2), H = k [[1,-1],[-1,1]]
        k = 1.9
        H = hessian_at_Z(harmonic_chain(k))
        manual = 0.0
        for j in range(2):
            for l in range(2):
                manual += Z1[0, j] * H[0, j, 0, l] * Z1[0, l]
        tensor = elasticity_tensor(H, Z1)
        assert manual == pytest.approx(k, rel=1e-14)
        assert float(tensor.C.reshape(())) == pytest.approx(k, rel=1e-14)

    def test_symmetries_and_skew_annihilation(self):
        tensor = tensor_for_model(cauchy_born_split(0.8, 1.7, Z2), Z2)
        C = tensor.C
        assert np.array_equal(C, C.transpose(2, 3, 0, 1))  # major, exactly
        assert np.abs(C - C.transpose(1, 0, 2, 3)).max() < 1e-10  # minor
        rng = np.random.default_rng(5)
        for _ in range(100):
            S = rng.standard_normal((2, 2))
            S = S - S.T
            assert np.abs(tensor.apply(S)).max() < 1e-10

    def test_cb_tensor_is_scaled_symmetrizer(self):
        k = 1.7
        tensor = tensor_for_model(cauchy_born_split(0.8, k, Z2), Z2)
        eye = np.eye(2)
        sym4 = 0.5 * (
            np.einsum("ik,jl->ijkl", eye, eye) + np.einsum("il,jk->ijkl", eye, eye)
        )
        assert np.abs(tensor.C - k * sym4).max() < 1e-12

    def test_depends_only_on_mean_free_part_of_hessian(self):
        # perturbing H along translation directions must not change C
        m = cauchy_born_split(1.0, 1.0, Z2)
        H = hessian_at_Z(m)
        rng = np.random.default_rng(6)
        T = np.zeros((2, 4))
        T[0, :] = 1.0  # constant-column direction
        E = rng.standard_normal((2, 4))
        dH = np.einsum("ij,kl->ijkl", T, E) + np.einsum("ij,kl->ijkl", E, T)
        C0 = elasticity_tensor(H, Z2).C
        C1 = elasticity_tensor(H + dH, Z2, tol=1e-6).C
        assert np.abs(C0 - C1).max() < 1e-10

    def test_positive_semidefinite_on_symmetric(self):
        tensor = tensor_for_model(cauchy_born_split(1.0, 1.0, Z2), Z2)
        rng = np.random.default_rng(7)
        for _ in range(50):
            e = rng.standard_normal((2, 2))
            e = 0.5 * (e + e.T)
            assert tensor.quadratic(e) >= -1e-12

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ModelError):
            elasticity_tensor(np.zeros((1, 2, 1, 3)), Z1)


class TestAssumptionChecks:
    def test_harmonic_chain_passes_all_five(self):
        report = check_assumptions(harmonic_chain(1.0), trials=40, seed=0)
        assert report.all_passed
        assert len(report.checks) == 5

    def test_cauchy_born_passes_all_five(self):
        report = check_assumptions(cauchy_born_split(1.0, 1.0, Z2), trials=40, seed=1)
        assert report.all_passed

    def test_quartic_model_fails_gradient_growth(self):
        report = check_assumptions(QuarticCellEnergy(1), trials=20, seed=2)
        by_name = {c.name: c for c in report.checks}
        growth = by_name["gradient_quadratic_upper_growth"]
        assert not growth.passed
        assert growth.detail["witness_ray"] is not None
        assert not report.all_passed

    def test_report_serialises(self):
        report = check_assumptions(harmonic_chain(1.0), trials=5, seed=0)
        d = report.to_dict()
        assert d["all_passed"] is True
        import json

        json.dumps(d)

    def test_rejects_zero_trials(self):
        with pytest.raises(ModelError):
            check_assumptions(harmonic_chain(1.0), trials=0)


def test_make_model_registry():
    m = make_model("harmonic_chain", 1, k=2.0)
    assert m.k == 2.0
    m2 = make_model("cauchy_born_split", 2, np.eye(2), mu=1.0, k=1.0)
    assert m2.dim == 2
    with pytest.raises(ModelError):
        make_model("nope", 1)
    with pytest.raises(ModelError):
        make_model("harmonic_chain", 2, k=1.0)
