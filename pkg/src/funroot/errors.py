"""Exception types shared across the package."""


class FunrootError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatchError(FunrootError):
    """Two grid functions or series live on incompatible grids."""


class DataFormatError(FunrootError):
    """A data file could not be parsed or contains invalid cells."""


class UnsupportedAdjointError(FunrootError):
    """The adjoint of the operator is not representable as a grid function."""


class EigenSolverError(FunrootError):
    """The eigenvalue solver failed to converge or produced invalid output."""


class DivergenceError(FunrootError):
    """A simulated path overflowed to non-finite values."""

    def __init__(self, step: int):
        super().__init__(
            f"simulation diverged to non-finite values at step {step}"
        )
        self.step = step


class SingularDesignError(FunrootError):
    """A regression design matrix or residual covariance is singular."""


class NoStrongUnitRootError(FunrootError):
    """A decomposition was requested for an operator without a strong unit root."""


class DefectiveUnitRootError(FunrootError):
    """Eigenvalue 1 has fewer eigenvectors than its algebraic multiplicity."""

    def __init__(self, geometric: int, algebraic: int):
        super().__init__(
            f"eigenvalue 1 is defective: geometric multiplicity {geometric} "
            f"< algebraic multiplicity {algebraic}"
        )
        self.geometric = geometric
        self.algebraic = algebraic
        self.multiplicity_flag = True
