"""Geometric-phase cluster-state generation in 2D coupled-cavity arrays.

Analytic mode sums for the pairwise phase shift, dense qubit-register
evolution and cluster verification, a brute-force truncated-Fock validator
of the driven interaction Hamiltonian, and measurement patterns for
one-way computation on the generated states.
"""

__version__ = "0.1.0"

from .lattice import LatticeConfig, Mode, enumerate_modes, min_abs_frequency, mode_frequency
from .geomphase import (
    HardwarePreset,
    PhaseShiftTable,
    beta,
    build_phase_table,
    gamma_mode,
    gamma_total,
    pairwise_phase,
    solve_gate_time,
)
from .effective import QubitRegister, product_state, reference_cluster, cluster_fidelity

__all__ = [
    "LatticeConfig",
    "Mode",
    "mode_frequency",
    "enumerate_modes",
    "min_abs_frequency",
    "beta",
    "gamma_mode",
    "gamma_total",
    "pairwise_phase",
    "build_phase_table",
    "solve_gate_time",
    "PhaseShiftTable",
    "HardwarePreset",
    "QubitRegister",
    "product_state",
    "reference_cluster",
    "cluster_fidelity",
]
