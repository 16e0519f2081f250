from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latdyn.cell_energy import cauchy_born_split, harmonic_chain
from latdyn.discrete_ops import (
    EnergyOverflowError,
    EnergyParams,
    atomistic_energy,
    atomistic_force,
    atomistic_force_scatter,
    cell_stress,
    discrete_divergence,
    discrete_gradient,
    energy_variation,
)
from latdyn.fields import CellField, LatticeField, inner_product

from conftest import chain_lattice, square_lattice


def _random_admissible(lattice, seed=0):
    rng = np.random.default_rng(seed)
    return LatticeField.from_values(
        lattice, rng.standard_normal((lattice.n_points, lattice.dim))
    )


def _chain_params(lat, k=1.0, delta=0.5):
    return EnergyParams(delta=delta, model=harmonic_chain(k), lattice=lat)


def _square_params(lat, delta=0.5, mu=1.0, k=1.0):
    return EnergyParams(
        delta=delta, model=cauchy_born_split(mu, k, lat.Z), lattice=lat
    )


class TestDiscreteGradient:
    def test_constant_field_has_zero_gradient(self, lat2d):
        c = np.array([0.4, -1.1])
        vals = np.tile(c, (lat2d.n_points, 1))
        vals[~lat2d.in_omega] = 0.0
        g = discrete_gradient(LatticeField(lat2d, vals))
        interior = lat2d.in_omega[lat2d.cell_corners].all(axis=1)
        assert np.abs(g.values[interior]).max() < 1e-14

    def test_linear_field_gives_matrix_times_corners(self, lat2d):
        M = np.array([[1.0, 2.0], [-0.5, 0.25]])
        vals = lat2d.points @ M.T
        vals[~lat2d.in_omega] = 0.0
        g = discrete_gradient(LatticeField(lat2d, vals))
        interior = lat2d.in_omega[lat2d.cell_corners].all(axis=1)
        expected = M @ lat2d.Z
        assert np.abs(g.values[interior] - expected[None]).max() < 1e-12

    def test_hand_example_rational_arithmetic(self):
        # evaluate the defining formula in exact arithmetic and compare
        eps = Fraction(1, 4)
        lat = chain_lattice(float(eps))
        idx = np.flatnonzero(lat.in_omega)  # points 0.25, 0.5, 0.75
        vals = np.zeros((lat.n_points, 1))
        samples = [Fraction(0), Fraction(1, 10), Fraction(3, 10)]
        for p, s in zip(idx, samples[1:]):
            vals[p, 0] = float(s)
        u = LatticeField(lat, vals)
        g = discrete_gradient(u).values
        exact = {float(p): s for p, s in zip([0.25, 0.5], samples[1:])}

        def u_exact(x):
            return exact.get(float(x), Fraction(0))

        for c in range(lat.n_cells):
            lo = Fraction(lat.multi_index[lat.cell_corners[c, 0], 0], 4)
            u1, u2 = u_exact(lo), u_exact(lo + eps)
            mean = (u1 + u2) / 2
            expected = [(u1 - mean) / eps, (u2 - mean) / eps]
            assert np.allclose(g[c, 0], [float(e) for e in expected], atol=1e-14)

    def test_columns_sum_to_zero(self, lat2d):
        g = discrete_gradient(_random_admissible(lat2d, 3))
        assert np.abs(g.values.sum(axis=2)).max() < 1e-12


class TestDiscreteDivergence:
    def test_zero(self, lat1d):
        out = discrete_divergence(CellField.zeros(lat1d))
        assert np.all(out.values == 0.0)

    @pytest.mark.parametrize("make", [chain_lattice, square_lattice])
    def test_constant_cell_field_vanishes_inside(self, make):
        lat = make(0.125)
        const = np.ones((lat.n_cells, lat.dim, lat.n_corners))
        out = discrete_divergence(CellField(lat, const))
        # the bracket telescopes wherever all adjacent cells are present
        full = (lat.point_cell >= 0).all(axis=1) & lat.in_omega
        assert full.any()
        assert np.abs(out.values[full]).max() < 1e-12

    @pytest.mark.parametrize("make", [chain_lattice, square_lattice])
    def test_summation_by_parts(self, make):
        lat = make(0.125)
        rng = np.random.default_rng(9)
        for trial in range(20):
            g = CellField(
                lat, rng.standard_normal((lat.n_cells, lat.dim, lat.n_corners))
            )
            v = _random_admissible(lat, 100 + trial)
            lhs = float(np.sum(g.values * discrete_gradient(v).values))
            rhs = -float(np.sum(discrete_divergence(g).values * v.values))
            scale = np.linalg.norm(g.values) * np.linalg.norm(
                discrete_gradient(v).values
            )
            assert abs(lhs - rhs) <= 1e-12 * max(scale, 1.0)


class TestAtomisticEnergy:
    def test_zero_displacement(self, lat1d):
        p = _chain_params(lat1d)
        assert atomistic_energy(LatticeField.zeros(lat1d), p) == 0.0

    def test_harmonic_chain_is_discrete_dirichlet_energy(self):
        # independent oracle: k/2 sum eps ((u_{i+1} - u_i)/eps)^2 over bonds
        lat = chain_lattice(0.125)
        u = _random_admissible(lat, 4)
        order = np.argsort(lat.points[:, 0])
        vals = u.values[order, 0]
        eps, k = 0.125, 1.3
        bond_sum = 0.5 * k * np.sum(eps * ((vals[1:] - vals[:-1]) / eps) ** 2)
        for delta in (1.0, 0.37, 1e-3):
            p = _chain_params(lat, k=k, delta=delta)
            assert atomistic_energy(u, p) == pytest.approx(bond_sum, rel=1e-12)

    def test_quadratic_scaling(self, lat1d):
        p = _chain_params(lat1d)
        u = _random_admissible(lat1d, 5)
        e1 = atomistic_energy(u, p)
        e2 = atomistic_energy(LatticeField(lat1d, 3.0 * u.values), p)
        assert e2 == pytest.approx(9.0 * e1, rel=1e-12)

    def test_nonnegative(self, lat2d):
        p = _square_params(lat2d)
        for seed in range(5):
            assert atomistic_energy(_random_admissible(lat2d, seed), p) >= 0.0

    def test_overflow_reports_offending_cell(self, lat1d):
        p = _chain_params(lat1d)
        vals = np.zeros((lat1d.n_points, 1))
        vals[np.flatnonzero(lat1d.in_omega)[0]] = 1e200
        with pytest.raises(EnergyOverflowError) as err:
            atomistic_energy(LatticeField(lat1d, vals), p)
        assert err.value.cell >= 0

    def test_translation_covariance_on_nested_supports(self):
        # shifting a compactly supported pattern by one lattice vector
        # leaves the energy unchanged (interior cells only relabel)
        lat = chain_lattice(0.0625)
        idx = np.flatnonzero(lat.in_omega)
        pattern = np.array([0.3, -0.2, 0.5, 0.1])
        p = _chain_params(lat)
        energies = []
        for start in (3, 4):
            vals = np.zeros((lat.n_points, 1))
            vals[idx[start:start + 4], 0] = pattern
            energies.append(atomistic_energy(LatticeField(lat, vals), p))
        assert energies[0] == pytest.approx(energies[1], rel=1e-13)


class TestAtomisticForce:
    def test_zero_at_equilibrium(self, lat2d):
        p = _square_params(lat2d)
        f = atomistic_force(LatticeField.zeros(lat2d), p)
        assert np.abs(f.values).max() < 1e-14

    def test_harmonic_chain_gives_discrete_laplacian(self):
        lat = chain_lattice(0.125)
        k, eps = 2.0, 0.125
        p = _chain_params(lat, k=k)
        u = _random_admissible(lat, 6)
        f = atomistic_force(u, p)
        order = np.argsort(lat.points[:, 0])
        vals = u.values[order, 0]
        for j in range(1, len(order) - 1):
            expected = -k * (vals[j + 1] - 2 * vals[j] + vals[j - 1]) / eps**2
            pidx = order[j]
            if lat.in_omega[pidx]:
                assert f.values[pidx, 0] == pytest.approx(expected, rel=1e-11, abs=1e-12)

    @pytest.mark.parametrize("case", ["chain", "cb1d", "cb2d"])
    def test_force_matches_energy_finite_differences(self, case):
        if case == "chain":
            lat = chain_lattice(0.125)
            p = _chain_params(lat, k=1.4, delta=0.7)
        elif case == "cb1d":
            lat = chain_lattice(0.125)
            p = EnergyParams(
                delta=0.5, model=cauchy_born_split(1.0, 2.0, lat.Z), lattice=lat
            )
        else:
            lat = square_lattice(0.125)
            p = _square_params(lat, delta=0.25)
        rng = np.random.default_rng(13)
        h = 1e-6
        for trial in range(50):
            u = _random_admissible(lat, 500 + trial)
            v = _random_admissible(lat, 900 + trial)
            pairing = inner_product(atomistic_force(u, p), v)
            up = LatticeField(lat, u.values + h * v.values)
            um = LatticeField(lat, u.values - h * v.values)
            fd = (atomistic_energy(up, p) - atomistic_energy(um, p)) / (2 * h)
            scale = max(abs(fd), 1.0)
            assert abs(pairing - fd) <= 1e-6 * scale

    def test_scatter_assembly_agrees(self, lat2d):
        p = _square_params(lat2d)
        u = _random_admissible(lat2d, 8)
        f1 = atomistic_force(u, p)
        f2 = atomistic_force_scatter(u, p)
        scale = max(np.abs(f1.values).max(), 1.0)
        assert np.abs(f1.values - f2.values).max() < 1e-12 * scale

    def test_variation_matches_force_pairing(self, lat2d):
        # Riesz identification: defining cell sum == inner product pairing
        p = _square_params(lat2d)
        u = _random_admissible(lat2d, 20)
        v = _random_admissible(lat2d, 21)
        lhs = energy_variation(u, v, p)
        rhs = inner_product(atomistic_force(u, p), v)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_force_is_admissible(self, lat2d):
        p = _square_params(lat2d)
        f = atomistic_force(_random_admissible(lat2d, 30), p)
        assert np.all(f.values[~lat2d.in_omega] == 0.0)

    def test_cell_stress_shape(self, lat1d):
        p = _chain_params(lat1d)
        g = cell_stress(_random_admissible(lat1d, 2), p)
        assert g.values.shape == (lat1d.n_cells, 1, 2)


def test_energy_params_validation(lat1d, lat2d):
    with pytest.raises(ValueError):
        EnergyParams(delta=0.0, model=harmonic_chain(1.0), lattice=lat1d)
    with pytest.raises(ValueError):
        EnergyParams(delta=1.0, model=harmonic_chain(1.0), lattice=lat2d)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_property_summation_by_parts_random(seed):
    lat = chain_lattice(0.25)
    rng = np.random.default_rng(seed)
    g = CellField(lat, rng.standard_normal((lat.n_cells, 1, 2)))
    v = LatticeField.from_values(lat, rng.standard_normal((lat.n_points, 1)))
    lhs = float(np.sum(g.values * discrete_gradient(v).values))
    rhs = -float(np.sum(discrete_divergence(g).values * v.values))
    scale = np.linalg.norm(g.values) * np.linalg.norm(discrete_gradient(v).values)
    assert abs(lhs - rhs) <= 1e-12 * max(scale, 1.0)
