"""Quantized time-of-arrival operators: kernels, coarse-grained spectra and
arrival dynamics of their eigenfunctions."""
from .core import (
    Free,
    Harmonic,
    PhaseSpacePoint,
    PhysicalParams,
    Polynomial,
    Sinusoidal,
    classical_toa_harmonic,
    ltoa_series,
)
from .kernels import (
    Deformation,
    Deformed,
    GeneralPolynomial,
    KernelFactor,
    Ordering,
    assemble_kernel,
    kernel_factor,
    kernel_factor_harmonic_closed,
    quadratic_deformation,
    quantizing_polynomial,
)
from .spectral import (
    build_grid,
    build_operator_matrix,
    classify_eigenfunction,
    parity_overlap,
    select_eigenpairs,
    solve_spectrum,
)
from .propagator import EvolutionConfig, WavefunctionState, evolve_and_record, evolve_to, gaussian_state, split_step
from .analysis import (
    arrival_report,
    deformation_sweep,
    density_profile,
    parity_kernel_residual,
    reflected_potential_eigen_check,
    run_arrival,
    tke_residual,
)

__version__ = "0.1.0"
