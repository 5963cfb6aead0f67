"""Finite-space laboratory for Schatten properties of singular-integral commutators.

Construct finite quasi-metric measure spaces, dyadic cube systems and Haar
bases on them, assemble singular-integral and dyadic-shift operators, and
measure the Schatten-Lorentz / Besov / oscillation / Hajlasz norms that
govern commutator compactness.
"""

from .space import (
    FiniteSpace,
    Weight,
    DimensionEstimate,
    ValidationError,
    ParameterDomainError,
    build_space,
    euclidean_grid,
    bessel_grid,
    cantor_space,
    four_squares,
    ball_volume,
    ball_volume_matrix,
    estimate_dimensions,
    a2_constant,
    make_weight,
    power_weight,
    weak_L1_V_inverse,
)
from .dyadic import (
    DyadicSystem,
    ConstructionError,
    build_dyadic_system,
    random_dyadic_system,
    ancestor_probability,
    calibrate_m0,
    carleson_transform,
    carleson_operator_norm_probe,
)
from .haar import (
    HaarBasis,
    ParaproductTriple,
    build_haar,
    martingale_project,
    product_decomposition,
    paraproduct_operator,
    weighted_square_function,
    haar_coefficients,
    export_haar_coefficients,
)
from .operators import (
    OperatorMatrix,
    KernelSpec,
    ShiftCoefficients,
    assemble_kernel,
    commutator,
    conjugate_to_weighted,
    build_shift,
    random_shift_coefficients,
    shift_commutator_decomposition,
    measure_cz_constants,
    measure_nondegeneracy,
)
from .norms import (
    SingularValues,
    NormReport,
    HajlaszResult,
    svd,
    jacobi_svd,
    schatten_lorentz,
    schatten_norm,
    lorentz_sequence_norm,
    besov_norm,
    osc_norm,
    mean_oscillation_field,
    weak_nu_norm,
    hajlasz_norm,
    hajlasz_norm_bruteforce,
)
from .representation import (
    Decomposition,
    ShiftExtraction,
    telescoping_decomposition,
    paraproduct_symbols,
    haar_decay_audit,
    extract_shifts,
    monte_carlo_theta,
)

_SUBMODULES = {"space", "dyadic", "haar", "operators", "norms",
               "representation", "io", "config", "sweeps", "cli"}
__all__ = [name for name in dir()
           if not name.startswith("_") and name not in _SUBMODULES]
