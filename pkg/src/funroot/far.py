"""Noise generation and simulation of functional AR(1)/AR(2) sample paths.

Innovations are Gaussian in a finite orthonormal basis, drawn from a
counter-based Philox generator with normal variates produced by the inverse
CDF, so runs are reproducible from the stored seed.  Order-2 models use the
direct two-term recursion; no product-space embedding is needed for
simulation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DivergenceError, GridMismatchError
from .funcspace import (
    FunctionSeries,
    GridDomain,
    GridFunction,
    orthonormalize,
    trapezoid_weights,
)
from .operators import (
    OperatorSpec,
    _apply_values,
    gridfunction_from_json,
    gridfunction_to_json,
    matrix_reduction,
    operator_domain,
    operator_from_json,
    operator_to_json,
    spectral_radius,
)

__all__ = [
    "GENERATOR_NAME",
    "NoiseSpec",
    "FARModel",
    "SamplePath",
    "StationarityReport",
    "draw_noise",
    "simulate",
    "ma_truncation",
    "is_stationary",
    "save_sample_path",
    "load_function_series",
    "noise_to_json",
    "noise_from_json",
    "model_to_json",
    "model_from_json",
]

GENERATOR_NAME = "philox4x64 + inverse-cdf normals"

ORTHONORMALITY_TOL = 1e-8
STATIONARITY_TOL = 1e-8
DEFAULT_BURN_IN = 200


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """White-noise law: orthonormal directions, per-direction sigmas, seed."""

    basis: tuple[GridFunction, ...]
    std_devs: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        sig = np.array(self.std_devs, dtype=float)
        sig.setflags(write=False)
        object.__setattr__(self, "std_devs", sig)
        object.__setattr__(self, "seed", int(self.seed))
        if len(self.basis) < 1 or sig.shape != (len(self.basis),):
            raise ValueError("need one standard deviation per basis direction")
        if not np.all(np.isfinite(sig)) or np.any(sig < 0):
            raise ValueError("standard deviations must be finite and nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        domain = self.basis[0].domain
        for f in self.basis:
            if f.domain != domain:
                raise GridMismatchError("all noise directions must share one grid")
        phi = np.vstack([f.values for f in self.basis])
        gram = (phi * domain.weights) @ phi.T
        if np.max(np.abs(gram - np.eye(len(self.basis)))) > ORTHONORMALITY_TOL:
            raise ValueError("noise directions must be orthonormal")

    @property
    def domain(self) -> GridDomain:
        return self.basis[0].domain

    def with_seed(self, seed: int) -> "NoiseSpec":
        return NoiseSpec(self.basis, self.std_devs, seed)


@dataclass(frozen=True, eq=False)
class FARModel:
    """Functional AR model of order 1 or 2 with its innovation law."""

    order: int
    rho1: OperatorSpec
    rho2: OperatorSpec | None
    noise: NoiseSpec

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if (self.rho2 is not None) != (self.order == 2):
            raise ValueError("rho2 must be present exactly when order is 2")
        domain = operator_domain(self.rho1)
        if self.noise.domain != domain:
            raise GridMismatchError("noise and operator grids differ")
        if self.rho2 is not None and operator_domain(self.rho2) != domain:
            raise GridMismatchError("rho1 and rho2 grids differ")

    @property
    def domain(self) -> GridDomain:
        return operator_domain(self.rho1)


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A simulated trajectory plus the model and burn-in that produced it."""

    series: FunctionSeries
    model: FARModel
    burn_in: int


@dataclass(frozen=True)
class StationarityReport:
    stationary: bool
    spectral_radius: float
    order: int
    tol: float

    def __bool__(self) -> bool:
        return self.stationary


def _standard_normals(rng: np.random.Generator, shape) -> np.ndarray:
    # inverse-CDF transform of open-interval uniforms (u in (0, 1) exactly)
    u = (rng.integers(0, 1 << 53, size=shape, dtype=np.int64) + 0.5) * 2.0**-53
    return ndtri(u)


def draw_noise(noise: NoiseSpec, count: int) -> FunctionSeries:
    """Draw i.i.d. Gaussian frames sum_i sigma_i zeta_i phi_i.

    Identical seeds give identical output; a prefix of a longer draw equals
    a shorter draw with the same seed.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.Generator(np.random.Philox(key=noise.seed))
    coeffs = _standard_normals(rng, (count, len(noise.basis))) * noise.std_devs
    values = coeffs @ np.vstack([f.values for f in noise.basis])
    return FunctionSeries(noise.domain, values)


def _model_radius(model: FARModel) -> float:
    if model.order == 1:
        return spectral_radius(model.rho1)
    return _companion_radius(model.rho1, model.rho2)


def _companion_radius(rho1: OperatorSpec, rho2: OperatorSpec) -> float:
    """Spectral radius of the order-2 recursion via a block companion matrix.

    Both operators map the joint range span V into itself, so the nonzero
    eigenvalues of the quadratic pencil z^2 - z rho1 - rho2 coincide with
    those of the 2m x 2m companion matrix of the compressed operators.
    """
    basis1 = matrix_reduction(rho1).range_basis
    basis2 = matrix_reduction(rho2).range_basis
    joint = orthonormalize(list(basis1) + list(basis2))
    if not joint:
        return 0.0
    m = len(joint)
    w = joint[0].domain.weights
    g = np.vstack([f.values for f in joint])
    b1 = (g * w) @ np.vstack([_apply_values(rho1, f.values) for f in joint]).T
    b2 = (g * w) @ np.vstack([_apply_values(rho2, f.values) for f in joint]).T
    companion = np.zeros((2 * m, 2 * m))
    companion[:m, :m] = b1.T
    companion[:m, m:] = b2.T
    companion[m:, :m] = np.eye(m)
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def is_stationary(model: FARModel, tol: float = STATIONARITY_TOL) -> StationarityReport:
    """Stationarity check: spectral radius below 1 - tol.

    Order 1 uses the operator spectrum; order 2 the block companion matrix
    of the reduced operators on their joint range basis.
    """
    radius = _model_radius(model)
    return StationarityReport(radius < 1.0 - tol, radius, model.order, tol)


def simulate(
    model: FARModel,
    length: int,
    initial: GridFunction | None = None,
    burn_in: int | None = None,
) -> SamplePath:
    """Run the autoregressive recursion for `length` retained frames.

    The order-2 recursion starts from X_{-1} = X_0 = initial (zero when
    omitted).  Burn-in defaults to 200 for stationary models and 0 when a
    unit-modulus eigenvalue is present, so stochastic trends are never
    discarded; burn-in frames are dropped from the returned series but
    recorded on the sample path.
    """
    if length < 1:
        raise ValueError("length must be positive")
    domain = model.domain
    if initial is None:
        initial = GridFunction.zero(domain)
    if initial.domain != domain:
        raise GridMismatchError("initial condition lives on a different grid")
    if burn_in is None:
        burn_in = DEFAULT_BURN_IN if is_stationary(model).stationary else 0
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")

    total = burn_in + length
    eps = draw_noise(model.noise, total).values
    frames = np.empty((total, domain.size))
    x_prev = initial.values.copy()
    x_prev2 = initial.values.copy()
    for t in range(total):
        x = _apply_values(model.rho1, x_prev) + eps[t]
        if model.order == 2:
            x = x + _apply_values(model.rho2, x_prev2)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(t + 1)
        frames[t] = x
        x_prev2 = x_prev
        x_prev = x
    series = FunctionSeries(domain, frames[burn_in:])
    return SamplePath(series, model, burn_in)


def ma_truncation(model: FARModel, noise_frames: FunctionSeries, depth: int) -> GridFunction:
    """Truncated moving-average value sum_{j<depth} rho^j(eps_{n-j}).

    `n` is the last index of the noise series.  Each term applies the
    operator j times to the corresponding innovation, so this is an
    independent route to the value the simulation recursion produces.
    Only order-1 models admit the representation.
    """
    if model.order != 1:
        raise ValueError("the moving-average representation is only available for order 1")
    if not 1 <= depth <= len(noise_frames):
        raise ValueError("depth must be between 1 and the number of noise frames")
    if noise_frames.domain != model.domain:
        raise GridMismatchError("noise frames live on a different grid")
    last = len(noise_frames) - 1
    acc = np.zeros(model.domain.size)
    for j in range(depth):
        term = noise_frames.values[last - j].copy()
        for _ in range(j):
            term = _apply_values(model.rho1, term)
        acc += term
    return GridFunction(model.domain, acc)


# ---------------------------------------------------------------------------
# Serialization and export
# ---------------------------------------------------------------------------

def noise_to_json(noise: NoiseSpec) -> dict:
    return {
        "basis": [gridfunction_to_json(f) for f in noise.basis],
        "std_devs": noise.std_devs.tolist(),
        "seed": noise.seed,
    }


def noise_from_json(obj: dict) -> NoiseSpec:
    domain = None
    basis = []
    for item in obj["basis"]:
        f = gridfunction_from_json(item, domain)
        domain = f.domain
        basis.append(f)
    return NoiseSpec(tuple(basis), np.asarray(obj["std_devs"], dtype=float), int(obj["seed"]))


def model_to_json(model: FARModel) -> dict:
    return {
        "order": model.order,
        "rho1": operator_to_json(model.rho1),
        "rho2": None if model.rho2 is None else operator_to_json(model.rho2),
        "noise": noise_to_json(model.noise),
    }


def model_from_json(obj: dict) -> FARModel:
    rho2 = obj.get("rho2")
    return FARModel(
        int(obj["order"]),
        operator_from_json(obj["rho1"]),
        None if rho2 is None else operator_from_json(rho2),
        noise_from_json(obj["noise"]),
    )


def save_sample_path(path: SamplePath, csv_path) -> str:
    """Write the trajectory as CSV (header = node positions, one row per
    frame) with a JSON metadata sidecar next to it."""
    csv_path = str(csv_path)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([repr(x) for x in path.series.domain.nodes])
        for row in path.series.values:
            writer.writerow([repr(x) for x in row])
    meta = {
        "model": model_to_json(path.model),
        "seed": path.model.noise.seed,
        "burn_in": path.burn_in,
        "generator": GENERATOR_NAME,
    }
    meta_path = csv_path + ".meta.json"
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
    return meta_path


def load_function_series(csv_path) -> FunctionSeries:
    """Read a series CSV written by save_sample_path (values round-trip exactly)."""
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise ValueError("series CSV needs a node header and at least one frame")
    nodes = np.array([float(x) for x in rows[0]])
    domain = GridDomain(nodes, trapezoid_weights(nodes))
    values = np.array([[float(x) for x in row] for row in rows[1:]])
    return FunctionSeries(domain, values)
