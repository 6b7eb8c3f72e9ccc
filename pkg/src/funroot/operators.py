"""Compact operators on the grid space: reductions, spectra, determinants.

Three finite-rank families are supported:

* ``SeparableKernelOp`` -- integral operator with kernel
  ``K(s, t) = sum_i a_i(s) b_i(t)``, acting as ``v -> sum_i <b_i, v> a_i``.
* ``SpectralOp`` -- ``v -> sum_i lambda_i <phi_i, v> phi_i`` with an
  orthonormal system ``phi_i``.
* ``PointEvalExpOp`` -- ``v -> exp(-theta t) v(1)`` where ``v(1)`` is the
  value at the last grid node (the grid must end at 1).

Each family reduces losslessly to a small matrix acting on the coordinates
of its range basis, so the nonzero spectrum is computed exactly through a
dense eigensolve.  The zero eigenvalue of infinite multiplicity that every
finite-rank operator carries on an infinite-dimensional space is not
enumerated beyond whatever zeros the reduction matrix happens to have.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EigenSolverError, GridMismatchError, UnsupportedAdjointError
from .funcspace import (
    GridDomain,
    GridFunction,
    linear_combination,
    orthonormalize,
    trapezoid_weights,
)

__all__ = [
    "SeparableKernelOp",
    "SpectralOp",
    "PointEvalExpOp",
    "OperatorSpec",
    "MatrixReduction",
    "operator_domain",
    "apply",
    "adjoint_apply",
    "adjoint_range_basis",
    "matrix_reduction",
    "matrix_spectrum",
    "spectrum",
    "spectral_radius",
    "fredholm_determinant",
    "eigenspace",
    "nullspace_basis",
    "operator_to_json",
    "operator_from_json",
    "gridfunction_to_json",
    "gridfunction_from_json",
]

ORTHONORMALITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SeparableKernelOp:
    """Finite-rank integral operator with separable kernel factors (a_i, b_i)."""

    a: tuple[GridFunction, ...]
    b: tuple[GridFunction, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", tuple(self.b))
        if len(self.a) < 1 or len(self.a) != len(self.b):
            raise ValueError("need equally many range and integration factors")
        domain = self.a[0].domain
        for f in (*self.a, *self.b):
            if f.domain != domain:
                raise GridMismatchError("all kernel factors must share one grid")

    @property
    def rank(self) -> int:
        return len(self.a)


@dataclass(frozen=True, eq=False)
class SpectralOp:
    """Diagonal operator sum_i lambda_i <phi_i, .> phi_i, phi_i orthonormal."""

    eigenvalues: np.ndarray
    eigenfunctions: tuple[GridFunction, ...]

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float)
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenfunctions", tuple(self.eigenfunctions))
        if lam.ndim != 1 or lam.size != len(self.eigenfunctions) or lam.size < 1:
            raise ValueError("need one eigenvalue per eigenfunction")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        domain = self.eigenfunctions[0].domain
        for f in self.eigenfunctions:
            if f.domain != domain:
                raise GridMismatchError("all eigenfunctions must share one grid")
        phi = np.vstack([f.values for f in self.eigenfunctions])
        gram = (phi * domain.weights) @ phi.T
        if np.max(np.abs(gram - np.eye(len(self.eigenfunctions)))) > ORTHONORMALITY_TOL:
            raise ValueError("eigenfunctions must be orthonormal under the grid inner product")


@dataclass(frozen=True, eq=False)
class PointEvalExpOp:
    """Operator v -> exp(-theta t) v(1); the grid must include node 1."""

    theta: float
    domain: GridDomain

    def __post_init__(self):
        theta = float(self.theta)
        object.__setattr__(self, "theta", theta)
        if not np.isfinite(theta) or theta < 0:
            raise ValueError("theta must be finite and nonnegative")
        if self.domain.nodes[-1] != 1.0:
            raise ValueError("the grid must end at node 1 for point evaluation")

    def profile(self) -> GridFunction:
        """The range direction exp(-theta t) on the grid."""
        return GridFunction(self.domain, np.exp(-self.theta * self.domain.nodes))


OperatorSpec = Union[SeparableKernelOp, SpectralOp, PointEvalExpOp]


@dataclass(frozen=True, eq=False)
class MatrixReduction:
    """Finite matrix acting on the coordinates of the operator's range basis."""

    matrix: np.ndarray
    range_basis: tuple[GridFunction, ...]
    kind: str  # "companion" | "diagonal" | "scalar"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "range_basis", tuple(self.range_basis))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("reduction matrix must be square")
        if m.shape[0] != len(self.range_basis):
            raise ValueError("matrix dimension must match the range basis length")


def operator_domain(rho: OperatorSpec) -> GridDomain:
    """The grid every input and output of the operator lives on."""
    if isinstance(rho, SeparableKernelOp):
        return rho.a[0].domain
    if isinstance(rho, SpectralOp):
        return rho.eigenfunctions[0].domain
    if isinstance(rho, PointEvalExpOp):
        return rho.domain
    raise TypeError(f"not an operator spec: {type(rho).__name__}")


def _factor_matrix(fs) -> np.ndarray:
    return np.vstack([f.values for f in fs])


def _apply_values(rho: OperatorSpec, values: np.ndarray) -> np.ndarray:
    """Apply the operator to raw node values (no domain checks)."""
    domain = operator_domain(rho)
    w = domain.weights
    if isinstance(rho, SeparableKernelOp):
        scores = _factor_matrix(rho.b) @ (w * values)
        return scores @ _factor_matrix(rho.a)
    if isinstance(rho, SpectralOp):
        phi = _factor_matrix(rho.eigenfunctions)
        scores = rho.eigenvalues * (phi @ (w * values))
        return scores @ phi
    if isinstance(rho, PointEvalExpOp):
        return values[-1] * np.exp(-rho.theta * domain.nodes)
    raise TypeError(f"not an operator spec: {type(rho).__name__}")


def apply(rho: OperatorSpec, v: GridFunction) -> GridFunction:
    """Apply the operator to a grid function."""
    domain = operator_domain(rho)
    if v.domain != domain:
        raise GridMismatchError("input lives on a different grid than the operator")
    return GridFunction(domain, _apply_values(rho, v.values))


def adjoint_apply(rho: OperatorSpec, v: GridFunction) -> GridFunction:
    """Apply the adjoint operator.

    For the point-evaluation family the adjoint sends v to a point mass at
    node 1 scaled by <exp(-theta .), v>, which is not a grid function; this
    raises UnsupportedAdjointError.
    """
    domain = operator_domain(rho)
    if v.domain != domain:
        raise GridMismatchError("input lives on a different grid than the operator")
    w = domain.weights
    if isinstance(rho, SeparableKernelOp):
        scores = _factor_matrix(rho.a) @ (w * v.values)
        return GridFunction(domain, scores @ _factor_matrix(rho.b))
    if isinstance(rho, SpectralOp):
        return apply(rho, v)  # self-adjoint
    raise UnsupportedAdjointError(
        "the adjoint of a point-evaluation operator is a point mass, "
        "not representable on the grid"
    )


def adjoint_range_basis(rho: OperatorSpec) -> tuple[GridFunction, ...]:
    """Spanning set of the adjoint's range (b factors, or the phi system)."""
    if isinstance(rho, SeparableKernelOp):
        return rho.b
    if isinstance(rho, SpectralOp):
        return rho.eigenfunctions
    raise UnsupportedAdjointError(
        "the adjoint of a point-evaluation operator is not grid-representable"
    )


def matrix_reduction(rho: OperatorSpec) -> MatrixReduction:
    """Reduce the operator to a matrix on its range-basis coordinates.

    SeparableKernelOp maps to the companion matrix gamma[i, j] = <b_i, a_j>
    on the basis {a_i}; SpectralOp to diag(lambda) on {phi_i}; the
    point-evaluation operator to the 1x1 matrix [exp(-theta)] on its
    exponential profile.
    """
    if isinstance(rho, SeparableKernelOp):
        w = operator_domain(rho).weights
        amat = _factor_matrix(rho.a)
        bmat = _factor_matrix(rho.b)
        gamma = (bmat * w) @ amat.T
        return MatrixReduction(gamma, rho.a, "companion")
    if isinstance(rho, SpectralOp):
        return MatrixReduction(np.diag(rho.eigenvalues), rho.eigenfunctions, "diagonal")
    if isinstance(rho, PointEvalExpOp):
        lam = float(np.exp(-rho.theta))
        return MatrixReduction(np.array([[lam]]), (rho.profile(),), "scalar")
    raise TypeError(f"not an operator spec: {type(rho).__name__}")


def matrix_spectrum(matrix: np.ndarray) -> np.ndarray:
    """Eigenvalues of a square matrix sorted by descending modulus, then
    descending real part, then descending imaginary part."""
    try:
        eig = np.linalg.eigvals(np.asarray(matrix, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigenvalue computation failed: {exc}") from exc
    eig = np.asarray(eig, dtype=complex)
    order = np.lexsort((-eig.imag, -eig.real, -np.abs(eig)))
    return eig[order]


def spectrum(rho: OperatorSpec) -> np.ndarray:
    """Nonzero-part spectrum of the operator via its matrix reduction."""
    return matrix_spectrum(matrix_reduction(rho).matrix)


def spectral_radius(rho: OperatorSpec) -> float:
    """Largest eigenvalue modulus; 0 for an empty spectrum."""
    eig = spectrum(rho)
    return float(np.max(np.abs(eig))) if eig.size else 0.0


def fredholm_determinant(rho: OperatorSpec, z: complex) -> complex:
    """Entire function prod_n (1 - lambda_n z) over the operator spectrum."""
    eig = spectrum(rho)
    return complex(np.prod(1.0 - eig * complex(z)))


def nullspace_basis(matrix: np.ndarray, tol: float) -> np.ndarray:
    """Columns spanning the numerical null space of a real matrix.

    Singular directions with sigma <= tol * max(1, ||matrix||_2) count as
    null.  Returns an (n x d) array, possibly with d = 0.
    """
    matrix = np.asarray(matrix, dtype=float)
    try:
        _, s, vh = np.linalg.svd(matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"SVD failed: {exc}") from exc
    scale = max(1.0, float(s[0]) if s.size else 0.0)
    mask = s <= tol * scale
    # rows of vh whose singular value vanished, plus fully missing rows
    null = [vh[i] for i in range(s.size) if mask[i]]
    null.extend(vh[i] for i in range(s.size, vh.shape[0]))
    if not null:
        return np.empty((matrix.shape[1], 0))
    return np.vstack(null).T


def eigenspace(rho: OperatorSpec, lam: complex, tol: float = 1e-8) -> list[GridFunction]:
    """Orthonormal basis of the eigenspace at a (real) eigenvalue.

    Solves (A - lam I)V = 0 on the matrix reduction within tol and maps
    coefficient vectors to functions through the range basis.  Returns an
    empty list when lam is not an eigenvalue within tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam = complex(lam)
    if abs(lam.imag) > tol:
        raise ValueError("only real eigenvalues have grid-representable eigenspaces")
    red = matrix_reduction(rho)
    shifted = red.matrix - lam.real * np.eye(red.matrix.shape[0])
    null = nullspace_basis(shifted, tol)
    if null.shape[1] == 0:
        return []
    funcs = [linear_combination(null[:, k], red.range_basis) for k in range(null.shape[1])]
    return orthonormalize(funcs)


# ---------------------------------------------------------------------------
# JSON serialization.  Grid functions serialize as {"nodes", "values"}; on
# load the quadrature weights are rebuilt as trapezoid weights, the package
# default.  Finite values round-trip exactly (repr-level floats).
# ---------------------------------------------------------------------------

def gridfunction_to_json(f: GridFunction) -> dict:
    return {"nodes": f.domain.nodes.tolist(), "values": f.values.tolist()}


def gridfunction_from_json(obj: dict, domain: GridDomain | None = None) -> GridFunction:
    nodes = np.asarray(obj["nodes"], dtype=float)
    if domain is None or not np.array_equal(domain.nodes, nodes):
        domain = GridDomain(nodes, trapezoid_weights(nodes))
    return GridFunction(domain, np.asarray(obj["values"], dtype=float))


def operator_to_json(rho: OperatorSpec) -> dict:
    if isinstance(rho, SeparableKernelOp):
        return {
            "kind": "separable",
            "a": [gridfunction_to_json(f) for f in rho.a],
            "b": [gridfunction_to_json(f) for f in rho.b],
        }
    if isinstance(rho, SpectralOp):
        return {
            "kind": "spectral",
            "eigenvalues": rho.eigenvalues.tolist(),
            "eigenfunctions": [gridfunction_to_json(f) for f in rho.eigenfunctions],
        }
    if isinstance(rho, PointEvalExpOp):
        return {
            "kind": "pointexp",
            "theta": rho.theta,
            "nodes": rho.domain.nodes.tolist(),
        }
    raise TypeError(f"not an operator spec: {type(rho).__name__}")


def operator_from_json(obj: dict) -> OperatorSpec:
    kind = obj.get("kind")
    if kind == "separable":
        domain = None
        a = []
        for item in obj["a"]:
            f = gridfunction_from_json(item, domain)
            domain = f.domain
            a.append(f)
        b = [gridfunction_from_json(item, domain) for item in obj["b"]]
        return SeparableKernelOp(tuple(a), tuple(b))
    if kind == "spectral":
        domain = None
        funcs = []
        for item in obj["eigenfunctions"]:
            f = gridfunction_from_json(item, domain)
            domain = f.domain
            funcs.append(f)
        return SpectralOp(np.asarray(obj["eigenvalues"], dtype=float), tuple(funcs))
    if kind == "pointexp":
        nodes = np.asarray(obj["nodes"], dtype=float)
        domain = GridDomain(nodes, trapezoid_weights(nodes))
        return PointEvalExpOp(float(obj["theta"]), domain)
    raise ValueError(f"unknown operator kind: {kind!r}")


def operator_dumps(rho: OperatorSpec) -> str:
    return json.dumps(operator_to_json(rho), sort_keys=True)


def operator_loads(text: str) -> OperatorSpec:
    return operator_from_json(json.loads(text))
