"""Unit-root classification and the random-walk/stationary decomposition.

A strong unit root means 1 is an eigenvalue of the autoregression operator
and every other spectral point has modulus below one.  In that case the
space splits into a finite-dimensional common-trends subspace, on which the
process is a pure random walk, and a complementary invariant subspace on
which it is a stationary AR(1).  The splitting projection is the spectral
(Riesz) projection built from right and left eigenvectors of the matrix
reduction; it commutes with the operator, which the orthogonal projection
onto the eigenspace does not once the operator is non-normal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DefectiveUnitRootError,
    EigenSolverError,
    GridMismatchError,
    NoStrongUnitRootError,
    UnsupportedAdjointError,
)
from .far import FARModel, SamplePath
from .funcspace import (
    FunctionSeries,
    GridFunction,
    linear_combination,
    orthonormalize,
)
from .operators import (
    OperatorSpec,
    PointEvalExpOp,
    adjoint_range_basis,
    matrix_reduction,
    matrix_spectrum,
    nullspace_basis,
    operator_domain,
)

__all__ = [
    "TOL_EXACT",
    "TOL_ESTIMATED",
    "TOLERANCE_PROFILES",
    "SpectrumReport",
    "Decomposition",
    "AR2UnitRootReport",
    "classify",
    "decompose",
    "split_path",
    "weak_unit_root_space",
    "ar2_unit_root_check",
]

# Tolerance profiles: machine-precision operator specs vs operators
# estimated from data.
TOL_EXACT = 1e-8
TOL_ESTIMATED = 0.05
TOLERANCE_PROFILES = {"exact": TOL_EXACT, "estimated": TOL_ESTIMATED}

INTERSECTION_COS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Spectrum partitioned into unit, stable and boundary eigenvalues.

    Indices refer to the sorted spectrum stored in `eigenvalues`.  The
    multiplicity flag marks a defective eigenvalue 1 (geometric below
    algebraic multiplicity).
    """

    eigenvalues: np.ndarray
    unit_set: tuple[int, ...]
    stable_set: tuple[int, ...]
    boundary_set: tuple[int, ...]
    tol_unit: float
    multiplicity_flag: bool

    @property
    def has_strong_unit_root(self) -> bool:
        return bool(self.unit_set) and not self.boundary_set

    @property
    def num_trends(self) -> int:
        return len(self.unit_set)

    def to_json(self) -> dict:
        return {
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "unit_set": list(self.unit_set),
            "stable_set": list(self.stable_set),
            "boundary_set": list(self.boundary_set),
            "tol_unit": self.tol_unit,
            "multiplicity_flag": self.multiplicity_flag,
            "strong_unit_root": self.has_strong_unit_root,
        }


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Commuting split into common trends and the stationary complement.

    `pi_u` is the spectral projection on the coordinates of the operator's
    range basis.  `right_basis` and `left_basis` hold biorthogonal function
    pairs (u_k, w_k) such that the trend projection acts on any grid
    function as sum_k u_k <w_k, f>; for the point-evaluation family the
    projection is exp(theta) * rho instead and the pair is absent.
    """

    trend_basis: tuple[GridFunction, ...]
    pi_u: np.ndarray
    dim_u: int
    residual_commutation: float
    residual_idempotency: float
    operator: OperatorSpec
    right_basis: tuple[GridFunction, ...] | None
    left_basis: tuple[GridFunction, ...] | None
    point_eval_scale: float | None

    def project_trend_values(self, values: np.ndarray) -> np.ndarray:
        """Apply the trend projection to raw (frames x nodes) values."""
        domain = operator_domain(self.operator)
        values = np.atleast_2d(values)
        if self.left_basis is None:
            rho = self.operator
            out = np.outer(values[:, -1], np.exp(-rho.theta * domain.nodes))
            return self.point_eval_scale * out
        w = domain.weights
        wmat = np.vstack([f.values for f in self.left_basis])
        umat = np.vstack([f.values for f in self.right_basis])
        scores = values @ (wmat * w).T
        return scores @ umat

    def project_trend(self, f: GridFunction) -> GridFunction:
        domain = operator_domain(self.operator)
        if f.domain != domain:
            raise GridMismatchError("function lives on a different grid")
        return GridFunction(domain, self.project_trend_values(f.values)[0])


@dataclass(frozen=True, eq=False)
class AR2UnitRootReport:
    """Unit-root structure of an order-2 model.

    `eligible_pairs` lists (lambda1, lambda2, intersection dimension) for
    every real eigenvalue pair summing to one within tolerance;
    `conditions_met` reports (both operators compact, such a pair exists,
    some pair has a nontrivial kernel intersection).
    """

    eligible_pairs: tuple[tuple[float, float, int], ...]
    total_trends: int
    conditions_met: tuple[bool, bool, bool]

    def to_json(self) -> dict:
        return {
            "eligible_pairs": [
                {"lambda1": l1, "lambda2": l2, "intersection_dim": d}
                for (l1, l2, d) in self.eligible_pairs
            ],
            "total_trends": self.total_trends,
            "conditions_met": list(self.conditions_met),
        }


def _partition(eigenvalues: np.ndarray, tol: float):
    unit, stable, boundary = [], [], []
    for i, z in enumerate(eigenvalues):
        if abs(z - 1.0) <= tol and abs(z.imag) <= tol:
            unit.append(i)
        elif abs(z) < 1.0 - tol:
            stable.append(i)
        else:
            boundary.append(i)
    return tuple(unit), tuple(stable), tuple(boundary)


def classify(rho: OperatorSpec, tol_unit: float = TOL_EXACT) -> SpectrumReport:
    """Partition the spectrum and test for a strong unit root.

    Eigenvalues within tol_unit of 1 (and essentially real) form the unit
    set; moduli below 1 - tol_unit are stable; everything else, including
    complex values of near-unit modulus, lands in the boundary set, which
    blocks the strong-unit-root property.
    """
    if tol_unit <= 0:
        raise ValueError("tol_unit must be positive")
    red = matrix_reduction(rho)
    eig = matrix_spectrum(red.matrix)
    unit, stable, boundary = _partition(eig, tol_unit)
    flag = False
    if unit:
        n = red.matrix.shape[0]
        geometric = nullspace_basis(red.matrix - np.eye(n), tol_unit).shape[1]
        flag = geometric < len(unit)
    return SpectrumReport(eig, unit, stable, boundary, tol_unit, flag)


def _real_invariant_columns(vals: np.ndarray, vecs: np.ndarray, selected) -> np.ndarray:
    """Real basis of the invariant subspace spanned by selected eigenvectors.

    Complex-conjugate pairs contribute the real and imaginary parts of one
    member, which span the same real invariant plane.
    """
    cols = []
    used: set[int] = set()
    selected = list(selected)
    for i in selected:
        if i in used:
            continue
        used.add(i)
        lam, v = vals[i], vecs[:, i]
        if abs(lam.imag) < 1e-12:
            cols.append(v.real)
        else:
            partner = next(
                (j for j in selected if j not in used
                 and abs(vals[j] - lam.conjugate()) < 1e-10),
                None,
            )
            if partner is not None:
                used.add(partner)
            cols.append(v.real)
            cols.append(v.imag)
    return np.column_stack(cols)


def decompose(rho: OperatorSpec, tol_unit: float = TOL_EXACT) -> Decomposition:
    """Build the commuting projection onto the common-trends subspace.

    Requires a strong unit root.  A defective eigenvalue 1 (geometric
    multiplicity below algebraic) is an error rather than a silent
    fallback: the decomposition presumes the unit eigenspace is the full
    invariant subspace.
    """
    report = classify(rho, tol_unit)
    if not report.unit_set:
        raise NoStrongUnitRootError("no eigenvalue within tolerance of 1")
    if report.boundary_set:
        raise NoStrongUnitRootError(
            "eigenvalues of near-unit modulus other than 1 are present"
        )
    if report.multiplicity_flag:
        red = matrix_reduction(rho)
        n = red.matrix.shape[0]
        geometric = nullspace_basis(red.matrix - np.eye(n), tol_unit).shape[1]
        raise DefectiveUnitRootError(geometric, len(report.unit_set))

    if isinstance(rho, PointEvalExpOp):
        # rho itself spans the one-dimensional trend space; the commuting
        # projection is exp(theta) * rho, exactly idempotent.
        profile = rho.profile()
        trend = orthonormalize([profile])
        return Decomposition(
            trend_basis=tuple(trend),
            pi_u=np.array([[1.0]]),
            dim_u=1,
            residual_commutation=0.0,
            residual_idempotency=0.0,
            operator=rho,
            right_basis=None,
            left_basis=None,
            point_eval_scale=float(np.exp(rho.theta)),
        )

    red = matrix_reduction(rho)
    a = red.matrix
    try:
        vals_r, vecs_r = np.linalg.eig(a)
        vals_l, vecs_l = np.linalg.eig(a.T)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigendecomposition failed: {exc}") from exc

    def _unit_indices(vals):
        return [
            i for i, z in enumerate(vals)
            if abs(z - 1.0) <= tol_unit and abs(z.imag) <= tol_unit
        ]

    right = _real_invariant_columns(vals_r, vecs_r, _unit_indices(vals_r))
    left = _real_invariant_columns(vals_l, vecs_l, _unit_indices(vals_l))
    m = len(report.unit_set)
    if right.shape[1] != m or left.shape[1] != m:
        raise EigenSolverError("left/right unit eigenvector counts disagree")

    cross = left.T @ right
    if abs(np.linalg.det(cross)) < 1e-12:
        raise DefectiveUnitRootError(np.linalg.matrix_rank(cross), m)
    proj = right @ np.linalg.solve(cross, left.T)
    residual_idem = float(np.linalg.norm(proj @ proj - proj, 2))
    residual_comm = float(np.linalg.norm(proj @ a - a @ proj, 2))

    # Function-space form: u_k from right eigenvectors on the range basis,
    # w_k from left eigenvectors on the adjoint's range basis, normalized
    # through the numerically computed cross Gram so that <w_j, u_k> = delta.
    range_funcs = red.range_basis
    left_funcs_basis = adjoint_range_basis(rho)
    w = operator_domain(rho).weights
    range_mat = np.vstack([f.values for f in range_funcs])
    left_mat = np.vstack([f.values for f in left_funcs_basis])
    cross_gram = left.T @ ((left_mat * w) @ range_mat.T) @ right
    if abs(np.linalg.det(cross_gram)) < 1e-12:
        raise EigenSolverError("trend projection Gram matrix is singular")
    u_coeff = right @ np.linalg.inv(cross_gram)
    u_funcs = [linear_combination(u_coeff[:, k], range_funcs) for k in range(m)]
    w_funcs = [linear_combination(left[:, k], left_funcs_basis) for k in range(m)]
    trend = orthonormalize(u_funcs)
    if len(trend) != m:
        raise EigenSolverError("trend basis lost rank during orthonormalization")

    return Decomposition(
        trend_basis=tuple(trend),
        pi_u=proj,
        dim_u=m,
        residual_commutation=residual_comm,
        residual_idempotency=residual_idem,
        operator=rho,
        right_basis=tuple(u_funcs),
        left_basis=tuple(w_funcs),
        point_eval_scale=None,
    )


def split_path(
    dec: Decomposition, path: SamplePath | FunctionSeries
) -> tuple[FunctionSeries, FunctionSeries]:
    """Split a trajectory framewise into (trend part, stationary part).

    The trend part follows the pure random-walk recursion and the
    stationary part the contracted autoregression; the two parts sum back
    to the input exactly.
    """
    series = path.series if isinstance(path, SamplePath) else path
    if series.domain != operator_domain(dec.operator):
        raise GridMismatchError("path and decomposition grids differ")
    trend_values = dec.project_trend_values(series.values)
    trend = FunctionSeries(series.domain, trend_values)
    stationary = FunctionSeries(series.domain, series.values - trend_values)
    return trend, stationary


def weak_unit_root_space(rho: OperatorSpec, tol: float = TOL_EXACT) -> list[GridFunction]:
    """Orthonormal basis of Ker(rho* - I) via the transposed reduction.

    Under the assumption that the process has dense range, this kernel is
    exactly the set of directions whose score process is integrated of
    order one.  Point-evaluation operators have no grid-representable
    adjoint and raise.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    left_funcs = adjoint_range_basis(rho)
    a = matrix_reduction(rho).matrix
    null = nullspace_basis(a.T - np.eye(a.shape[0]), tol)
    if null.shape[1] == 0:
        return []
    funcs = [linear_combination(null[:, k], left_funcs) for k in range(null.shape[1])]
    return orthonormalize(funcs)


# ---------------------------------------------------------------------------
# Order-2 models
# ---------------------------------------------------------------------------

def _real_eigen_candidates(rho: OperatorSpec, tol: float) -> list[float]:
    """Distinct real eigenvalues of the reduction, always including 0.

    Zero belongs to the spectrum of every finite-rank operator on an
    infinite-dimensional space, whether or not the reduction matrix happens
    to carry it.
    """
    red = matrix_reduction(rho)
    vals = [z.real for z in matrix_spectrum(red.matrix) if abs(z.imag) <= tol]
    vals.append(0.0)
    vals.sort()
    out: list[float] = []
    for v in vals:
        if not out or abs(v - out[-1]) > tol:
            out.append(v)
    return out


def _adjoint_eigen_basis(rho: OperatorSpec, lam: float, tol: float) -> list[GridFunction]:
    """Orthonormal basis of Ker(rho* - lam) for lam != 0."""
    left_funcs = adjoint_range_basis(rho)
    a = matrix_reduction(rho).matrix
    null = nullspace_basis(a.T - lam * np.eye(a.shape[0]), tol)
    if null.shape[1] == 0:
        return []
    funcs = [linear_combination(null[:, k], left_funcs) for k in range(null.shape[1])]
    return orthonormalize(funcs)


def _adjoint_kernel_constraints(rho: OperatorSpec) -> list[GridFunction]:
    """Functions g_i with Ker(rho*) = {v : <g_i, v> = 0 for all i}."""
    from .operators import SeparableKernelOp, SpectralOp

    if isinstance(rho, SeparableKernelOp):
        return list(rho.a)
    if isinstance(rho, SpectralOp):
        return [
            f for lam, f in zip(rho.eigenvalues, rho.eigenfunctions) if lam != 0.0
        ]
    raise UnsupportedAdjointError(
        "point-evaluation operators have no grid-representable adjoint"
    )


def _intersection_dim(
    rho1: OperatorSpec, lam1: float, rho2: OperatorSpec, lam2: float, tol: float
) -> int:
    """Dimension of Ker(rho1* - lam1) cap Ker(rho2* - lam2).

    Nonzero eigenvalue pairs use principal angles between the orthonormal
    kernel bases (cosines above 1 - 1e-8 count as shared directions).  When
    one eigenvalue is 0, its kernel is the orthogonal complement of finitely
    many constraint functions and the intersection reduces to a null-space
    dimension inside the other kernel.
    """
    if lam1 == 0.0 and lam2 == 0.0:
        return 0
    if lam1 == 0.0 or lam2 == 0.0:
        if lam1 == 0.0:
            constraints = _adjoint_kernel_constraints(rho1)
            basis = _adjoint_eigen_basis(rho2, lam2, tol)
        else:
            constraints = _adjoint_kernel_constraints(rho2)
            basis = _adjoint_eigen_basis(rho1, lam1, tol)
        if not basis:
            return 0
        if not constraints:
            return len(basis)
        w = basis[0].domain.weights
        gmat = np.vstack([g.values for g in constraints])
        bmat = np.vstack([f.values for f in basis])
        system = (gmat * w) @ bmat.T
        s = np.linalg.svd(system, compute_uv=False)
        scale = max(1.0, float(s[0]) if s.size else 0.0)
        rank = int(np.sum(s > INTERSECTION_COS_TOL * scale))
        return len(basis) - rank
    basis1 = _adjoint_eigen_basis(rho1, lam1, tol)
    basis2 = _adjoint_eigen_basis(rho2, lam2, tol)
    if not basis1 or not basis2:
        return 0
    w = basis1[0].domain.weights
    m1 = np.vstack([f.values for f in basis1])
    m2 = np.vstack([f.values for f in basis2])
    cosines = np.linalg.svd((m1 * w) @ m2.T, compute_uv=False)
    return int(np.sum(cosines >= 1.0 - INTERSECTION_COS_TOL))


def ar2_unit_root_check(model: FARModel, tol: float = TOL_EXACT) -> AR2UnitRootReport:
    """Count common trends of an order-2 model.

    Enumerates real eigenvalue pairs (lambda1, lambda2) of the two operators
    with lambda1 + lambda2 = 1 within tolerance and sums the dimensions of
    the adjoint-kernel intersections over those pairs.
    """
    if model.order != 2:
        raise ValueError("the check applies to order-2 models")
    cands1 = _real_eigen_candidates(model.rho1, tol)
    cands2 = _real_eigen_candidates(model.rho2, tol)
    pairs: list[tuple[float, float, int]] = []
    total = 0
    for l1 in cands1:
        for l2 in cands2:
            if abs(l1 + l2 - 1.0) <= tol:
                dim = _intersection_dim(model.rho1, l1, model.rho2, l2, tol)
                pairs.append((l1, l2, dim))
                total += dim
    conditions = (True, bool(pairs), total > 0)
    return AR2UnitRootReport(tuple(pairs), total, conditions)


def decomposition_to_json(dec: Decomposition, report: SpectrumReport) -> dict:
    """Exportable summary: spectrum sets, dimensions, residuals, trend basis."""
    from .operators import gridfunction_to_json

    out = report.to_json()
    out.update(
        {
            "dim_u": dec.dim_u,
            "residual_commutation": dec.residual_commutation,
            "residual_idempotency": dec.residual_idempotency,
            "trend_basis": [gridfunction_to_json(f) for f in dec.trend_basis],
        }
    )
    return out
