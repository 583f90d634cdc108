"""Dispersive estimates for the fourth-difference operator on the integer lattice.

The package computes resolvent boundary values, threshold expansions and
time-decay rates for H = Delta^2 + V acting on square-summable sequences,
where Delta is the second difference and V a finitely supported real
potential. Submodules:

``lattice``
    finite windows, difference operators, weighted norms, potentials
``resolvent``
    closed boundary kernels of the free resolvent on and off the band
``expansion``
    edge expansions of the boundary kernel and remainder norm probes
``spectral``
    sandwich (Birman-Schwinger) systems, threshold regularity, eigenvalues
``quadrature``
    oscillatory integrals and stationary points of the kernel phase
``propagator``
    time kernels by dense diagonalisation, FFT and band quadrature
``decay``
    sup-norm decay series, exponent fits, space-time norms
"""

from .decay import (
    DecayFit,
    DecaySeries,
    fit_decay_exponent,
    free_decay_series,
    knapp_experiment,
    log_time_grid,
    perturbed_decay_series,
    strichartz_norm,
)
from .expansion import coeff_numeric, coeff_sixteen, coeff_zero, remainder_norms
from .lattice import (
    SPEED_BOUND,
    LatticeVector,
    PotentialSpec,
    TruncatedOperator,
    WeightedNormSpec,
    apply_bilaplacian,
    apply_neg_laplacian,
    build_hamiltonian,
    fourier_symbol,
    weighted_norm,
    weighted_operator_norm,
)
from .propagator import (
    KernelSlice,
    PropagatorRequest,
    auto_window_radius,
    evolve_spectral,
    free_kernel_fft,
    kernel_spectral,
    pac_split,
    stone_kernel_schrodinger,
    stone_kernel_slice,
    sup_norm_kernel,
)
from .quadrature import (
    PhaseSpec,
    StationaryPoint,
    decay_order_prediction,
    oscillatory_integral,
    phase_derivatives,
    stationary_points,
)
from .resolvent import (
    SpectralParam,
    ThetaValues,
    free_biresolvent_boundary,
    free_biresolvent_complex,
    resolvent_neg_laplacian_kernel,
    theta_values,
    windowed_boundary_resolvent,
)
from .spectral import (
    BirmanSchwingerSystem,
    decompose_potential,
    discrete_eigs,
    embedded_eig_scan,
    minv_expansion_probe,
    perturbed_resolvent_boundary,
    regular_point_check,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SPEED_BOUND",
    "LatticeVector",
    "PotentialSpec",
    "TruncatedOperator",
    "WeightedNormSpec",
    "apply_bilaplacian",
    "apply_neg_laplacian",
    "build_hamiltonian",
    "fourier_symbol",
    "weighted_norm",
    "weighted_operator_norm",
    "SpectralParam",
    "ThetaValues",
    "theta_values",
    "resolvent_neg_laplacian_kernel",
    "free_biresolvent_boundary",
    "free_biresolvent_complex",
    "windowed_boundary_resolvent",
    "coeff_zero",
    "coeff_sixteen",
    "coeff_numeric",
    "remainder_norms",
    "BirmanSchwingerSystem",
    "decompose_potential",
    "regular_point_check",
    "perturbed_resolvent_boundary",
    "minv_expansion_probe",
    "discrete_eigs",
    "embedded_eig_scan",
    "PhaseSpec",
    "StationaryPoint",
    "phase_derivatives",
    "stationary_points",
    "decay_order_prediction",
    "oscillatory_integral",
    "PropagatorRequest",
    "KernelSlice",
    "auto_window_radius",
    "evolve_spectral",
    "kernel_spectral",
    "pac_split",
    "free_kernel_fft",
    "stone_kernel_slice",
    "stone_kernel_schrodinger",
    "sup_norm_kernel",
    "DecaySeries",
    "DecayFit",
    "log_time_grid",
    "fit_decay_exponent",
    "free_decay_series",
    "perturbed_decay_series",
    "strichartz_norm",
    "knapp_experiment",
]
