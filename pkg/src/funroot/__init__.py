"""Functional AR(1)/AR(2) simulation and unit-root analysis on [0, 1].

The package simulates autoregressive processes whose states are functions
on the unit interval, classifies strong and weak unit roots from the
spectrum of the (compact, finite-rank) autoregression operator, builds the
commuting random-walk/stationary decomposition, and detects unit roots
empirically through functional PCA, Dickey-Fuller and Johansen tests.
"""

__version__ = "0.1.0"

from .errors import (
    DataFormatError,
    DefectiveUnitRootError,
    DivergenceError,
    EigenSolverError,
    FunrootError,
    GridMismatchError,
    NoStrongUnitRootError,
    SingularDesignError,
    UnsupportedAdjointError,
)
from .funcspace import (
    FunctionSeries,
    GridDomain,
    GridFunction,
    center_series,
    inner_product,
    linear_combination,
    norm,
    orthonormalize,
)
from .operators import (
    MatrixReduction,
    OperatorSpec,
    PointEvalExpOp,
    SeparableKernelOp,
    SpectralOp,
    adjoint_apply,
    apply,
    eigenspace,
    fredholm_determinant,
    matrix_reduction,
    spectral_radius,
    spectrum,
)
from .far import (
    FARModel,
    NoiseSpec,
    SamplePath,
    draw_noise,
    is_stationary,
    ma_truncation,
    simulate,
)
from .unitroot import (
    AR2UnitRootReport,
    Decomposition,
    SpectrumReport,
    ar2_unit_root_check,
    classify,
    decompose,
    split_path,
    weak_unit_root_space,
)
from .stats import (
    ADFResult,
    DetectionReport,
    FPCAResult,
    JohansenResult,
    adf_test,
    detect_unit_roots,
    fpca,
    johansen_trace,
    score_series,
)
