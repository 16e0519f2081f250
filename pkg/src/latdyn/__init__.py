"""Damped Bravais-lattice dynamics and their linear elastodynamic limit.

The package builds scaled lattices inside nested boxes, evaluates
cell-based energies and their variations with numba-accelerated kernels,
integrates the damped equation of motion (inertial or purely viscous),
solves the limiting linear elastodynamic problem, and ships a harness
that verifies the lattice-to-continuum convergence of solutions,
energies, and gradients on desk-scale problems.
"""

from .accel import USE_NUMBA, backend_name
from .cell_energy import (
    CauchyBornSplit,
    CellEnergyModel,
    ElasticityTensor,
    HarmonicChain,
    cauchy_born_split,
    check_assumptions,
    elasticity_tensor,
    harmonic_chain,
    hessian_at_Z,
    make_model,
    tensor_for_model,
)
from .continuum import (
    ContinuumProblem,
    continuum_energy,
    continuum_force,
    damped_mode,
    solve_1d_spectral,
    solve_fd,
    symmetrized_gradient,
)
from .convergence import (
    ConvergenceReport,
    DeltaRule,
    SweepSpec,
    evaluate_sweep,
    gateaux_consistency_check,
    recovery_check,
    report_emit,
    run_sweep,
)
from .discrete_ops import (
    EnergyParams,
    atomistic_energy,
    atomistic_force,
    discrete_divergence,
    discrete_gradient,
)
from .dynamics import (
    EdieLedger,
    SimulationConfig,
    Trajectory,
    apriori_bounds,
    edie_audit,
    simulate,
    step,
    step_viscous,
)
from .fields import (
    CellField,
    GridField,
    LatticeField,
    ac_distance,
    inner_product,
    norm,
    piecewise_constant_interp,
    project,
)
from .initial_data import initial_field
from .lattice import Box, Lattice, LatticeSpec, build_lattice, corner_labels

__version__ = "0.1.0"
