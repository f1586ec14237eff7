"""Time-dependent Froehlich transformation for two atoms crossing a cavity."""

from __future__ import annotations

from .cavity import (CavityParams, ReducedState, ThetaMethod, ThetaResult, contour_velocity,
                     coupling, effective_coupling, effective_detuning, entanglement_final,
                     entanglement_of_theta, evolve_reduced, solve_x, theta, theta_infinity)
from .engine import (GeneratorTrajectory, PerturbationCoefficients, TdftProblem,
                     effective_hamiltonian, generator_residual, perturbation_order0, perturbation_order1,
                     perturbation_order2, solve_generator, tdft_order1, tdft_order2)
from .exact import (ExcitationBlock, OracleReport, build_block_hamiltonian, compare_tdft_exact,
                    integrate_exact)
from .quantum import (commutator, partial_trace_first, tensor_product, von_neumann_entropy)

__version__ = "0.1.0"

__all__ = [
    "CavityParams", "ReducedState", "ThetaMethod", "ThetaResult", "contour_velocity", "coupling",
    "effective_coupling", "effective_detuning", "entanglement_final", "entanglement_of_theta",
    "evolve_reduced", "solve_x", "theta", "theta_infinity",
    "GeneratorTrajectory", "PerturbationCoefficients", "TdftProblem", "effective_hamiltonian",
    "generator_residual", "perturbation_order0", "perturbation_order1", "perturbation_order2", "solve_generator",
    "tdft_order1", "tdft_order2",
    "ExcitationBlock", "OracleReport", "build_block_hamiltonian", "compare_tdft_exact",
    "integrate_exact",
    "commutator", "partial_trace_first", "tensor_product", "von_neumann_entropy",
]
