"""Quantum Fisher information of parameterized density matrices.

Three independent routes to the same number: the symmetric logarithmic
derivative, the support-restricted eigen-derivative formula, and the matrix
trace representation. Plus the classical/quantum split and the convex-roof
ensemble construction for unitary families.
"""

from .engine import (
    QfiReport,
    SldMatrix,
    build_sld,
    qfi_pure,
    qfi_sld,
    qfi_support,
    qfi_unitary,
    sld_trace_qfi,
)
from .ensemble import (
    PureEnsemble,
    YObservable,
    eigen_ensemble,
    eigen_ensemble_is_optimal,
    ensemble_average_variance,
    optimal_ensemble,
    random_ensembles,
    y_observable,
)
from .family import (
    AnalyticFamily,
    DerivativeBundle,
    DerivativeSpec,
    GridFamily,
    SampledFamily,
    SpectralFamily,
    UnitaryFamily,
    bundle_from_derivative,
    eigen_derivatives,
    evaluate_derivative,
    overlaps_from_perturbation,
)
from .hermitian import (
    DEFAULT_THRESHOLD,
    SpectralDecomposition,
    spectral_decompose,
    validate_density,
)
from .matrix_repr import (
    BlockedState,
    CoefficientMatrices,
    TransferMatrix,
    block_qfi,
    coefficient_matrices,
    qfi_matrix,
    qfi_matrix_form,
    qubit_closed_form,
    transfer_matrix,
    transfer_matrix_unitary,
)

__version__ = "0.1.0"
