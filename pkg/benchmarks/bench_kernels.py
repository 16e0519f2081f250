#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Builds a 2-d lattice, then times the three hot kernels (discrete
gradient gather, conjugate transport, Cauchy-Born cell stress) and a
full force evaluation through each backend.

Run:  python benchmarks/bench_kernels.py [--eps 1/48] [--reps 200]
"""

import argparse
import time
from fractions import Fraction

import numpy as np

from latdyn import _kernels, accel
from latdyn.cell_energy import cauchy_born_split
from latdyn.lattice import Box, LatticeSpec, build_lattice


def timeit(fn, reps):
    fn()  # warm up (includes JIT compilation for the numba variants)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--eps", default="1/48", help="lattice spacing (fraction ok)")
    parser.add_argument("--reps", type=int, default=200)
    args = parser.parse_args()
    eps = float(Fraction(args.eps))

    spec = LatticeSpec(
        dim=2,
        A=np.eye(2),
        epsilon=eps,
        omega=Box([0.0, 0.0], [1.0, 1.0]),
        omega_tilde=Box([-0.5, -0.5], [1.5, 1.5]),
    )
    lat = build_lattice(spec)
    print(f"lattice: eps={eps:g}, {lat.n_points} points, {lat.n_cells} cells")
    print(f"import-time backend: {accel.backend_name()}")

    rng = np.random.default_rng(0)
    vals = rng.standard_normal((lat.n_points, 2))
    vals[~lat.in_omega] = 0.0
    model = cauchy_born_split(1.0, 1.0, lat.Z)
    inv_eps = 1.0 / eps
    G = _kernels.gather_gradient_numpy(vals, lat.cell_corners, inv_eps)
    F = np.ascontiguousarray(lat.Z[None] + eps * G)

    variants = {"numpy": _kernels.NUMPY_VARIANTS}
    if accel.HAVE_NUMBA:
        variants["numba"] = _kernels.numba_variants()
    else:
        print("numba unavailable; timing the numpy fallback only")

    cases = {
        "gather_gradient": lambda k: k["gather_gradient"](
            vals, lat.cell_corners, inv_eps
        ),
        "conjugate_transport": lambda k: k["conjugate_transport"](
            G, lat.point_cell, inv_eps
        ),
        "cb_energy": lambda k: k["cb_energy"](F, model.Zc, model.B, model.k, model.mu),
        "cb_stress": lambda k: k["cb_stress"](
            F, model.Zc, model.B, model.Bt, model.k, model.mu
        ),
    }

    def full_force(kset):
        g = kset["gather_gradient"](vals, lat.cell_corners, inv_eps)
        Fl = np.ascontiguousarray(lat.Z[None] + eps * g)
        stress = kset["cb_stress"](Fl, model.Zc, model.B, model.Bt, model.k, model.mu)
        return kset["conjugate_transport"](
            np.ascontiguousarray(stress / eps), lat.point_cell, inv_eps
        )

    cases["full_force"] = full_force

    header = f"{'kernel':22s}" + "".join(f"{name:>12s}" for name in variants)
    if len(variants) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for case, runner in cases.items():
        times = {name: timeit(lambda k=kset: runner(k), args.reps)
                 for name, kset in variants.items()}
        row = f"{case:22s}" + "".join(
            f"{times[name] * 1e6:10.1f}us" for name in variants
        )
        if len(times) == 2:
            row += f"{times['numpy'] / times['numba']:9.1f}x"
        print(row)

    if len(variants) == 2:
        for case, runner in cases.items():
            a = np.asarray(runner(variants["numpy"]))
            b = np.asarray(runner(variants["numba"]))
            err = np.abs(a - b).max()
            print(f"agreement {case}: max |numpy - numba| = {err:.2e}")


if __name__ == "__main__":
    main()
