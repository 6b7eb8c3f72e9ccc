"""Discretized L2([0, 1]) substrate: grids, grid functions and series of them.

Functions are stored by their values at quadrature nodes and all inner
products are composite-trapezoid sums over the stored grid.  Grids are
compared by exact node equality; there is no interpolation between grids.
All values are immutable once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError

__all__ = [
    "GridDomain",
    "GridFunction",
    "FunctionSeries",
    "trapezoid_weights",
    "inner_product",
    "norm",
    "linear_combination",
    "center_series",
    "orthonormalize",
]


def _readonly(values) -> np.ndarray:
    out = np.array(values, dtype=float)
    out.setflags(write=False)
    return out


def trapezoid_weights(nodes) -> np.ndarray:
    """Composite trapezoid weights for a strictly increasing node vector."""
    nodes = np.asarray(nodes, dtype=float)
    w = np.zeros_like(nodes)
    gaps = np.diff(nodes)
    w[:-1] += gaps / 2.0
    w[1:] += gaps / 2.0
    return w


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Quadrature grid on [0, 1]: increasing nodes plus positive weights."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", _readonly(self.nodes))
        object.__setattr__(self, "weights", _readonly(self.weights))
        nodes, weights = self.nodes, self.weights
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("nodes must be finite")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if nodes[0] < 0.0 or nodes[-1] > 1.0:
            raise ValueError("nodes must lie in [0, 1]")
        if weights.shape != nodes.shape:
            raise ValueError("weights must have the same length as nodes")
        if not np.all(weights > 0):
            raise ValueError("weights must be positive")

    @classmethod
    def uniform(cls, size: int = 101) -> "GridDomain":
        """Uniform grid spanning [0, 1] with trapezoid weights."""
        nodes = np.linspace(0.0, 1.0, size)
        return cls(nodes, trapezoid_weights(nodes))

    @classmethod
    def from_nodes(cls, nodes) -> "GridDomain":
        """Grid on the given nodes with trapezoid weights."""
        return cls(nodes, trapezoid_weights(nodes))

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def __eq__(self, other) -> bool:
        # exact match only; silent regridding would hide numerical error
        return (
            isinstance(other, GridDomain)
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash(self.nodes.tobytes())


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A function on [0, 1] known by its values at the grid nodes."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.shape != self.domain.nodes.shape:
            raise ValueError("values must have one entry per grid node")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @classmethod
    def from_callable(cls, domain: GridDomain, fn) -> "GridFunction":
        """Sample a vectorized callable at the grid nodes."""
        return cls(domain, np.asarray(fn(domain.nodes), dtype=float))

    @classmethod
    def constant(cls, domain: GridDomain, value: float) -> "GridFunction":
        return cls(domain, np.full(domain.size, float(value)))

    @classmethod
    def zero(cls, domain: GridDomain) -> "GridFunction":
        return cls.constant(domain, 0.0)


@dataclass(frozen=True, eq=False)
class FunctionSeries:
    """Time-indexed frames on a shared grid, stored as a (time x node) matrix."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.domain.size:
            raise ValueError("values must be a (time x nodes) matrix on the domain")
        if values.shape[0] < 1:
            raise ValueError("a series holds at least one frame")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_functions(cls, frames) -> "FunctionSeries":
        frames = list(frames)
        if not frames:
            raise ValueError("a series holds at least one frame")
        domain = frames[0].domain
        for f in frames[1:]:
            if f.domain != domain:
                raise GridMismatchError("all frames must share one grid")
        return cls(domain, np.vstack([f.values for f in frames]))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def frame(self, n: int) -> GridFunction:
        return GridFunction(self.domain, self.values[n])

    def __iter__(self):
        for n in range(len(self)):
            yield self.frame(n)


def _require_same_domain(f: GridFunction, g: GridFunction) -> None:
    if f.domain != g.domain:
        raise GridMismatchError("grid functions live on different grids")


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Quadrature inner product sum_k w_k f_k g_k."""
    _require_same_domain(f, g)
    return float(np.sum(f.domain.weights * f.values * g.values))


def norm(f: GridFunction) -> float:
    """Quadrature norm sqrt(<f, f>)."""
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def linear_combination(coeffs, fs) -> GridFunction:
    """Pointwise sum of c_i * f_i over functions sharing one grid."""
    fs = list(fs)
    coeffs = np.asarray(coeffs, dtype=float)
    if len(fs) < 1 or coeffs.shape != (len(fs),):
        raise ValueError("need one coefficient per function, at least one")
    domain = fs[0].domain
    for f in fs[1:]:
        if f.domain != domain:
            raise GridMismatchError("all functions must share one grid")
    values = coeffs @ np.vstack([f.values for f in fs])
    return GridFunction(domain, values)


def center_series(series: FunctionSeries) -> tuple[FunctionSeries, GridFunction]:
    """Subtract the pointwise sample mean; returns (centered series, mean)."""
    if len(series) < 2:
        raise ValueError("centering needs a series of length at least 2")
    mean = series.values.mean(axis=0)
    centered = FunctionSeries(series.domain, series.values - mean)
    return centered, GridFunction(series.domain, mean)


def orthonormalize(fs, drop_tol: float = 1e-10) -> list[GridFunction]:
    """Orthonormal basis of span(fs) under the quadrature inner product.

    Modified Gram-Schmidt with one re-orthogonalization pass; directions
    whose residual norm falls below drop_tol relative to the largest input
    norm are dropped.
    """
    fs = list(fs)
    if not fs:
        return []
    domain = fs[0].domain
    for f in fs[1:]:
        if f.domain != domain:
            raise GridMismatchError("all functions must share one grid")
    w = domain.weights
    rows = np.vstack([f.values for f in fs]).astype(float)
    scale = max(float(np.sqrt(np.max(np.sum(w * rows * rows, axis=1)))), 1.0)
    kept: list[np.ndarray] = []
    for row in rows:
        v = row.copy()
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            for q in kept:
                v -= np.sum(w * q * v) * q
        nrm = float(np.sqrt(np.sum(w * v * v)))
        if nrm > drop_tol * scale:
            kept.append(v / nrm)
    return [GridFunction(domain, v) for v in kept]
