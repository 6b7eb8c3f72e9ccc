"""Empirical unit-root detection for functional time series.

The pipeline mirrors the standard multivariate route: functional principal
component analysis extracts the directions carrying most variance (the
nonstationary ones first, when present), an augmented Dickey-Fuller test is
run on each score process, and a Johansen trace test checks whether two or
more nonstationary scores share common trends.

Critical values are embedded static tables of published asymptotic values.
The no-deterministic-term Dickey-Fuller row is {-2.6, -1.95, -1.61} at the
1%/5%/10% levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EigenSolverError, GridMismatchError, SingularDesignError
from .funcspace import FunctionSeries, GridFunction, center_series

__all__ = [
    "ADF_CRITICAL_VALUES",
    "JOHANSEN_TRACE_CRITICAL_VALUES",
    "LEVELS",
    "FPCAResult",
    "ADFResult",
    "JohansenResult",
    "ComponentDetection",
    "DetectionReport",
    "fpca",
    "adf_test",
    "johansen_trace",
    "score_series",
    "detect_unit_roots",
]

LEVELS = ("1%", "5%", "10%")

# Asymptotic Dickey-Fuller critical values for the t-ratio on the lagged
# level, by deterministic specification.
ADF_CRITICAL_VALUES = {
    "none": {"1%": -2.6, "5%": -1.95, "10%": -1.61},
    "constant": {"1%": -3.43, "5%": -2.86, "10%": -2.57},
    "trend": {"1%": -3.96, "5%": -3.41, "10%": -3.12},
}

# Asymptotic Johansen trace critical values by number of common trends
# m = p - r (rows m = 1..5, columns 10% / 5% / 1%), for the
# no-deterministic-term and unrestricted-constant cases.
JOHANSEN_TRACE_CRITICAL_VALUES = {
    "none": np.array(
        [
            [2.9762, 4.1296, 6.9406],
            [10.4741, 12.3212, 16.3640],
            [21.7781, 24.2761, 29.5147],
            [37.0339, 40.1749, 46.5716],
            [56.2839, 60.0627, 67.6367],
        ]
    ),
    "constant": np.array(
        [
            [2.7055, 3.8415, 6.6349],
            [13.4294, 15.4943, 19.9349],
            [27.0669, 29.7961, 35.4628],
            [44.4929, 47.8545, 54.6815],
            [65.8202, 69.8189, 76.1631],
        ]
    ),
}
_LEVEL_COLUMN = {"10%": 0, "5%": 1, "1%": 2}


@dataclass(frozen=True, eq=False)
class FPCAResult:
    """Principal components of a functional time series.

    Attributes
    ----------
    mean : GridFunction
        Pointwise sample mean.
    eigenfunctions : tuple of GridFunction
        Top components, orthonormal under the quadrature inner product,
        each flipped so its largest-magnitude value is positive.
    eigenvalues : ndarray
        Nonincreasing component variances.
    scores : ndarray, shape (time, components)
        Inner products of the centered frames with each component.
    """

    mean: GridFunction
    eigenfunctions: tuple[GridFunction, ...]
    eigenvalues: np.ndarray
    scores: np.ndarray


@dataclass(frozen=True, eq=False)
class ADFResult:
    """Augmented Dickey-Fuller outcome: t-ratio, setup and decisions."""

    tau: float
    lags: int
    spec: str
    critical_values: dict[str, float]
    reject_at: dict[str, bool]


@dataclass(frozen=True, eq=False)
class JohansenResult:
    """Johansen trace test outcome over hypothesized ranks r = 0..p-1."""

    eigenvalues: np.ndarray
    trace_stats: np.ndarray
    critical_values: dict[str, np.ndarray]
    selected_rank: dict[str, int]
    lags: int
    det_spec: str

    def rank_at(self, level: str) -> int:
        return self.selected_rank[level]

    def to_json(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "trace_stats": self.trace_stats.tolist(),
            "critical_values": {k: v.tolist() for k, v in self.critical_values.items()},
            "selected_rank": dict(self.selected_rank),
            "lags": self.lags,
            "det_spec": self.det_spec,
        }


def fpca(series: FunctionSeries, k: int) -> FPCAResult:
    """Functional PCA of the sample covariance operator.

    The covariance is symmetrized through the quadrature weights (eigenvalue
    problem for W^(1/2) C W^(1/2)) so the recovered eigenfunctions are
    orthonormal in the function-space inner product rather than in plain
    node coordinates.

    Parameters
    ----------
    series : FunctionSeries
        At least k + 1 frames.
    k : int
        Number of components to return, at most the grid size.

    Returns
    -------
    FPCAResult
    """
    n = series.domain.size
    if not 1 <= k <= n:
        raise ValueError("k must be between 1 and the grid size")
    if len(series) < k + 1:
        raise ValueError("series must be longer than the number of components")
    centered, mean = center_series(series)
    xc = centered.values
    t = len(series)
    w = series.domain.weights
    sw = np.sqrt(w)
    cov = (xc.T @ xc) / (t - 1)
    sym = sw[:, None] * cov * sw[None, :]
    sym = (sym + sym.T) / 2.0
    try:
        evals, evecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"covariance eigendecomposition failed: {exc}") from exc
    order = np.argsort(evals)[::-1][:k]
    eigenvalues = evals[order]
    phi = evecs[:, order] / sw[:, None]
    for j in range(k):
        # deterministic sign: largest-magnitude node value is positive
        peak = np.argmax(np.abs(phi[:, j]))
        if phi[peak, j] < 0:
            phi[:, j] = -phi[:, j]
    scores = xc @ (w[:, None] * phi)
    eigenfunctions = tuple(GridFunction(series.domain, phi[:, j]) for j in range(k))
    return FPCAResult(mean, eigenfunctions, eigenvalues, scores)


def _adf_design(y: np.ndarray, lags: int, spec: str):
    dy = np.diff(y)
    lhs = dy[lags:]
    cols = [y[lags:-1]]
    for i in range(1, lags + 1):
        cols.append(dy[lags - i : len(dy) - i])
    if spec in ("constant", "trend"):
        cols.append(np.ones_like(lhs))
    if spec == "trend":
        cols.append(np.arange(1, len(lhs) + 1, dtype=float))
    return np.column_stack(cols), lhs


def adf_test(y, lags: int = 0, spec: str = "none") -> ADFResult:
    """Augmented Dickey-Fuller test of the unit-root null.

    Regresses the first difference on the lagged level, `lags` lagged
    differences and the chosen deterministic terms; tau is the t-ratio on
    the lagged level.  The lag order is fixed by the caller, never selected
    automatically.

    Parameters
    ----------
    y : array_like, 1d
        Series of length at least lags + 10.
    lags : int
        Number of lagged differences in the regression.
    spec : {"none", "constant", "trend"}
        Deterministic terms to include.

    Returns
    -------
    ADFResult
        reject_at[level] is True when tau falls below the stored critical
        value at that level.
    """
    y = np.asarray(y, dtype=float).squeeze()
    if y.ndim != 1:
        raise ValueError("y must be one-dimensional")
    if lags < 0:
        raise ValueError("lags must be nonnegative")
    if spec not in ADF_CRITICAL_VALUES:
        raise ValueError(f"unknown spec {spec!r}")
    if len(y) < lags + 10:
        raise ValueError("series too short for the requested lag order")
    design, lhs = _adf_design(y, lags, spec)
    ncols = design.shape[1]
    if np.linalg.matrix_rank(design) < ncols:
        raise SingularDesignError("perfectly collinear regressors in the test equation")
    beta, _, _, _ = np.linalg.lstsq(design, lhs, rcond=None)
    resid = lhs - design @ beta
    dof = len(lhs) - ncols
    if dof <= 0:
        raise ValueError("not enough observations for the requested regression")
    sigma2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.inv(design.T @ design)
    tau = float(beta[0] / np.sqrt(sigma2 * xtx_inv[0, 0]))
    critical = dict(ADF_CRITICAL_VALUES[spec])
    reject = {level: bool(tau < critical[level]) for level in critical}
    return ADFResult(tau, lags, spec, critical, reject)


def _partial_out(target: np.ndarray, regressors: np.ndarray | None) -> np.ndarray:
    if regressors is None or regressors.shape[1] == 0:
        return target
    beta, _, _, _ = np.linalg.lstsq(regressors, target, rcond=None)
    return target - regressors @ beta


def johansen_trace(Y, lags: int = 1, det_spec: str = "none") -> JohansenResult:
    """Johansen trace test for the cointegrating rank of a small system.

    Fits the error-correction form of a VAR(`lags`) by reduced-rank
    regression: after partialling lagged differences (and a constant, when
    requested) out of both the differences and the lagged levels, the
    squared canonical correlations lambda_i give the trace statistic
    -T * sum_{i>r} log(1 - lambda_i) for each hypothesized rank r.

    Parameters
    ----------
    Y : array_like, shape (time, p)
        Between 2 and 5 columns; time length at least 20 + p * lags.
    lags : int
        VAR order in levels (lags - 1 lagged differences enter the
        regression).
    det_spec : {"none", "constant"}
        Deterministic specification.

    Returns
    -------
    JohansenResult
        selected_rank[level] is the smallest r whose trace statistic falls
        below its critical value, or p when none does.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("Y must be a (time x p) matrix")
    t_len, p = Y.shape
    if not 2 <= p <= 5:
        raise ValueError("the trace test supports 2 to 5 series")
    if lags < 1:
        raise ValueError("lags must be positive")
    if det_spec not in JOHANSEN_TRACE_CRITICAL_VALUES:
        raise ValueError(f"unknown det_spec {det_spec!r}")
    if t_len < 20 + p * lags:
        raise ValueError("series too short for the requested lag order")

    dy = np.diff(Y, axis=0)
    k = lags - 1
    r0 = dy[k:]
    r1 = Y[k : t_len - 1]
    teff = r0.shape[0]
    blocks = [dy[k - i : len(dy) - i] for i in range(1, k + 1)]
    if det_spec == "constant":
        blocks.append(np.ones((teff, 1)))
    z = np.hstack(blocks) if blocks else None
    r0 = _partial_out(r0, z)
    r1 = _partial_out(r1, z)

    s00 = r0.T @ r0 / teff
    s01 = r0.T @ r1 / teff
    s11 = r1.T @ r1 / teff
    try:
        l11 = np.linalg.cholesky(s11)
        s00_inv = np.linalg.inv(s00)
    except np.linalg.LinAlgError as exc:
        raise SingularDesignError(f"singular residual covariance: {exc}") from exc
    if abs(np.linalg.det(s00)) < 1e-300:
        raise SingularDesignError("singular residual covariance")
    inner = np.linalg.solve(l11, s01.T) @ s00_inv @ np.linalg.solve(l11, s01.T).T
    inner = (inner + inner.T) / 2.0
    evals = np.linalg.eigvalsh(inner)[::-1]
    evals = np.clip(evals, 0.0, 1.0 - 1e-12)
    trace = np.array([
        -teff * float(np.sum(np.log1p(-evals[r:]))) for r in range(p)
    ])

    table = JOHANSEN_TRACE_CRITICAL_VALUES[det_spec]
    critical = {
        level: np.array([table[p - r - 1, _LEVEL_COLUMN[level]] for r in range(p)])
        for level in LEVELS
    }
    selected = {}
    for level in LEVELS:
        rank = p
        for r in range(p):
            if trace[r] < critical[level][r]:
                rank = r
                break
        selected[level] = rank
    return JohansenResult(evals, trace, critical, selected, lags, det_spec)


def score_series(series: FunctionSeries, v: GridFunction) -> np.ndarray:
    """Score process <X_n, v> over the series, as a plain vector."""
    if series.domain != v.domain:
        raise GridMismatchError("series and direction live on different grids")
    return series.values @ (series.domain.weights * v.values)


@dataclass(frozen=True, eq=False)
class ComponentDetection:
    index: int
    eigenvalue: float
    tau: float
    reject: dict[str, bool]


@dataclass(frozen=True, eq=False)
class DetectionReport:
    """Outcome of the FPCA + unit-root-test pipeline."""

    components: tuple[ComponentDetection, ...]
    trend_dim: int
    level: str
    johansen: JohansenResult | None
    fpca_result: FPCAResult

    def to_json(self) -> dict:
        return {
            "components": [
                {
                    "index": c.index,
                    "eigenvalue": c.eigenvalue,
                    "tau": c.tau,
                    "reject": dict(c.reject),
                }
                for c in self.components
            ],
            "trend_dim": self.trend_dim,
            "level": self.level,
            "johansen": None if self.johansen is None else self.johansen.to_json(),
        }


def detect_unit_roots(
    series: FunctionSeries,
    k: int,
    level: str = "5%",
    adf_lags: int = 0,
    adf_spec: str = "none",
    johansen_lags: int = 1,
    johansen_det: str = "none",
) -> DetectionReport:
    """Estimate the number of stochastic trends in a functional series.

    Runs FPCA, then a Dickey-Fuller test on each score column; components
    whose unit-root null is not rejected at `level` count as trends.  When
    two or more (up to five) components are non-rejecting, a Johansen trace
    test on those scores checks that they carry no cointegrating relation,
    i.e. that they really span a common-trends space.
    """
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    result = fpca(series, k)
    components = []
    trend_indices = []
    for j in range(k):
        adf = adf_test(result.scores[:, j], lags=adf_lags, spec=adf_spec)
        components.append(
            ComponentDetection(j, float(result.eigenvalues[j]), adf.tau, adf.reject_at)
        )
        if not adf.reject_at[level]:
            trend_indices.append(j)
    johansen = None
    if 2 <= len(trend_indices) <= 5:
        johansen = johansen_trace(
            result.scores[:, trend_indices], lags=johansen_lags, det_spec=johansen_det
        )
    return DetectionReport(
        tuple(components), len(trend_indices), level, johansen, result
    )
