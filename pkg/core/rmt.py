# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Random matrix analysis of return and polarity panels.

Standard deviations use the population convention (divide by T) throughout,
so that C = X X^T / T of a normalized panel has an exact unit diagonal.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import optimize, stats

from core import constants
from core.exceptions import (
    ConvergenceFailure,
    DegenerateSeries,
    FitDiverged,
    InvalidInput,
    InvalidRatio,
    NonPositivePrice,
    NotNormalized,
    ShapeMismatch,
    WindowTooLong,
    ZeroVariance,
)
from core.models import AlignedPanel, PanelKind

logger = logging.getLogger(__name__)


# --- Types ---

@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray
    labels: tuple

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=list(self.labels), columns=list(self.labels))


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: tuple

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def top_vector(self) -> np.ndarray:
        return self.eigenvectors[:, -1]

    @property
    def bottom_vector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    def iprs(self) -> np.ndarray:
        return np.sum(np.abs(self.eigenvectors) ** 4, axis=0)

    def to_frame(self) -> pd.DataFrame:
        """Eigenvector matrix, one row per label; column v_i belongs to the i-th smallest eigenvalue."""
        columns = [f"v_{i + 1}" for i in range(self.eigenvectors.shape[1])]
        return pd.DataFrame(self.eigenvectors, index=list(self.labels), columns=columns)


@dataclass(frozen=True)
class MPParams:
    """Marcenko-Pastur parameters for a ratio Q = T/N and variance scale sigma2."""

    Q: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.Q >= 1:
            raise InvalidRatio(f"Q = T/N must be >= 1, got {self.Q}")
        if not self.sigma2 > 0:
            raise InvalidInput(f"sigma2 must be positive, got {self.sigma2}")

    @classmethod
    def from_shape(cls, t: int, n: int, sigma2: float = 1.0) -> "MPParams":
        return cls(Q=t / n, sigma2=sigma2)

    @property
    def bounds(self) -> Tuple[float, float]:
        return mp_bounds(self.Q, self.sigma2)

    @property
    def lambda_minus(self) -> float:
        return self.bounds[0]

    @property
    def lambda_plus(self) -> float:
        return self.bounds[1]


@dataclass(frozen=True)
class WindowSpectrum:
    start: int
    date: pd.Timestamp
    spectrum: Spectrum
    mean_corr: float

    @property
    def lambda_max(self) -> float:
        return self.spectrum.lambda_max

    @property
    def ipr_top(self) -> float:
        return ipr(self.spectrum.top_vector)

    @property
    def ipr_bottom(self) -> float:
        return ipr(self.spectrum.bottom_vector)


# --- Returns and normalization ---

def compute_returns(prices: AlignedPanel, label: str = "start") -> AlignedPanel:
    """
    One-day relative returns R_k(t) = (S_k(t+1) - S_k(t)) / S_k(t).

    With label='start' the return of the move t -> t+1 is dated t, so a
    polarity of day t pairs with the close-to-close move that follows it.
    With label='end' it is dated t+1.
    """
    if prices.t < 2:
        raise DegenerateSeries(f"need at least 2 prices per series, got {prices.t}")
    values = prices.values
    if (values <= 0).any():
        raise NonPositivePrice("returns need strictly positive prices")
    returns = np.diff(values, axis=1) / values[:, :-1]
    calendar = prices.calendar[:-1] if label == "start" else prices.calendar[1:]
    return AlignedPanel(prices.labels, calendar, returns, PanelKind.RETURN)


def normalize_panel(panel: AlignedPanel) -> AlignedPanel:
    """Row-wise (x - mean) / sigma with the population sigma."""
    values = panel.values
    constant = np.ptp(values, axis=1) == 0
    if constant.any():
        raise ZeroVariance(panel.labels[int(np.argmax(constant))])
    mean = values.mean(axis=1, keepdims=True)
    sigma = values.std(axis=1, keepdims=True)
    return panel.replace((values - mean) / sigma, kind=PanelKind.NORMALIZED)


def _check_normalized(panel: AlignedPanel) -> None:
    values = panel.values
    means = np.abs(values.mean(axis=1))
    sigmas = np.abs(values.std(axis=1) - 1.0)
    if means.max(initial=0) > constants.NORM_TOL or sigmas.max(initial=0) > constants.NORM_TOL:
        raise NotNormalized("panel rows must have mean 0 and population std 1; call normalize_panel first")


# --- Correlation ---

def correlation_matrix(panel: AlignedPanel) -> CorrelationMatrix:
    """C = X X^T / T for a normalized panel X."""
    _check_normalized(panel)
    x = panel.values
    c = x @ x.T / panel.t
    c = (c + c.T) / 2.0
    np.fill_diagonal(c, 1.0)
    np.clip(c, -1.0, 1.0, out=c)
    return CorrelationMatrix(c, panel.labels)


def mean_correlation(c: CorrelationMatrix) -> float:
    """Mean of the off-diagonal entries."""
    n = c.n
    if n < 2:
        raise InvalidInput("mean correlation needs at least 2 series")
    values = c.values
    return float((values.sum() - np.trace(values)) / (n * (n - 1)))


# --- Marcenko-Pastur ---

def mp_bounds(Q: float, sigma2: float = 1.0) -> Tuple[float, float]:
    """Edges of the noise band: sigma2 (1 + 1/Q -/+ 2 sqrt(1/Q))."""
    if not Q >= 1:
        raise InvalidRatio(f"Q = T/N must be >= 1, got {Q}")
    if not sigma2 > 0:
        raise InvalidInput(f"sigma2 must be positive, got {sigma2}")
    inv = 1.0 / Q
    root = 2.0 * math.sqrt(inv)
    return sigma2 * (1.0 + inv - root), sigma2 * (1.0 + inv + root)


def mp_density(lam: Union[float, np.ndarray], params: MPParams) -> Union[float, np.ndarray]:
    """Marcenko-Pastur density; zero outside (lambda_minus, lambda_plus)."""
    scalar = np.ndim(lam) == 0
    grid = np.atleast_1d(np.asarray(lam, dtype=float))
    lo, hi = params.bounds
    inside = (grid > lo) & (grid < hi)
    out = np.zeros_like(grid)
    x = grid[inside]
    out[inside] = params.Q / (2.0 * math.pi * params.sigma2) * np.sqrt((hi - x) * (x - lo)) / x
    return float(out[0]) if scalar else out


def mp_overlay(params: MPParams, points: int = 400, margin: float = 0.25) -> pd.DataFrame:
    """A `lambda,density` grid spanning the noise band plus a margin on both sides."""
    lo, hi = params.bounds
    grid = np.linspace(max(lo - margin, 0.0), hi + margin, points)
    return pd.DataFrame({"lambda": grid, "density": mp_density(grid, params)})


def count_above(spectrum: Spectrum, params: MPParams) -> int:
    return int(np.sum(spectrum.eigenvalues > params.lambda_plus))


# --- Spectra ---

def eigendecompose(c: Union[CorrelationMatrix, np.ndarray], labels: Optional[Sequence[str]] = None) -> Spectrum:
    """
    Eigenvalues ascending; each eigenvector is signed so its largest-magnitude
    component is positive.
    """
    if isinstance(c, CorrelationMatrix):
        matrix, labels = c.values, c.labels
    else:
        matrix = np.asarray(c, dtype=float)
        labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(matrix.shape[0]))
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"eigendecomposition did not converge: {e}") from e

    columns = np.arange(eigenvectors.shape[1])
    pivots = np.argmax(np.abs(eigenvectors), axis=0)
    signs = np.sign(eigenvectors[pivots, columns])
    signs[signs == 0] = 1.0
    return Spectrum(eigenvalues, eigenvectors * signs, tuple(labels))


def ipr(v: np.ndarray) -> float:
    """Inverse participation ratio sum_j |v_j|^4, in [1/N, 1]."""
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > constants.NORM_TOL:
        raise NotNormalized(f"eigenvector norm is {np.linalg.norm(v):.6g}, expected 1")
    return float(np.sum(np.abs(v) ** 4))


def dominant_components(v: np.ndarray, labels: Sequence[str], top: int = 3) -> List[Tuple[str, float]]:
    """Labels with the largest |component| in an eigenvector, largest first."""
    order = np.argsort(-np.abs(v), kind="stable")[:top]
    return [(labels[i], float(v[i])) for i in order]


def _window_spectrum(panel: AlignedPanel, start: int, window: int) -> WindowSpectrum:
    sub = normalize_panel(panel.window(start, window))
    c = correlation_matrix(sub)
    return WindowSpectrum(start, panel.calendar[start], eigendecompose(c), mean_correlation(c))


def sliding_spectra(panel: AlignedPanel, window: int, step: int = constants.DEFAULT_STEP,
                    n_jobs: int = 1) -> List[WindowSpectrum]:
    """
    Spectrum of the sample correlation matrix of every window of `window` days,
    advanced by `step` days. Each window is re-normalized before correlating.
    """
    if window < 2 or step < 1:
        raise InvalidInput(f"window must be >= 2 and step >= 1 (got {window}, {step})")
    if window > panel.t:
        raise WindowTooLong(f"window of {window} days exceeds the {panel.t} available")
    starts = range(0, panel.t - window + 1, step)
    records = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_window_spectrum)(panel, start, window) for start in starts
    )
    logger.info(f"Computed {len(records)} window spectra (T_s={window}, step={step}).")
    return list(records)


def windows_frame(records: Sequence[WindowSpectrum]) -> pd.DataFrame:
    """`window_start,lambda_1..lambda_N` rows."""
    n = len(records[0].spectrum.eigenvalues) if records else 0
    rows = {f"lambda_{i + 1}": [r.spectrum.eigenvalues[i] for r in records] for i in range(n)}
    frame = pd.DataFrame(rows)
    frame.insert(0, "window_start", [r.date.strftime("%Y-%m-%d") for r in records])
    return frame


def dynamics_frame(records: Sequence[WindowSpectrum]) -> pd.DataFrame:
    return pd.DataFrame({
        "window_start": [r.date.strftime("%Y-%m-%d") for r in records],
        "lambda_max": [r.lambda_max for r in records],
        "mean_corr": [r.mean_corr for r in records],
        "ipr_1": [r.ipr_bottom for r in records],
        "ipr_N": [r.ipr_top for r in records],
    })


# --- Rank and linear correlation ---

def _paired(x: Sequence[float], y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeMismatch(f"series must be 1-D and of equal length ({x.shape} vs {y.shape})")
    if len(x) < 2:
        raise InvalidInput("need at least 2 observations")
    return x, y


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = _paired(x, y)
    for label, values in (("x", x), ("y", y)):
        if np.ptp(values) == 0:
            raise ZeroVariance(label)
    dx = x - x.mean()
    dy = y - y.mean()
    r = np.sum(dx * dy) / math.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    return float(np.clip(r, -1.0, 1.0))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson of average ranks."""
    x, y = _paired(x, y)
    return pearson(stats.rankdata(x, method="average"), stats.rankdata(y, method="average"))


def comovement(a: Sequence[float], b: Sequence[float]) -> Dict[str, float]:
    return {"pearson": pearson(a, b), "spearman": spearman(a, b)}


# --- Return distribution ---

def _t_scale(x2: np.ndarray, df: float, tol: float = 1e-12, max_iter: int = 500) -> float:
    """Scale MLE of a zero-location Student-t by the EM fixed point."""
    s2 = float(np.mean(x2))
    for _ in range(max_iter):
        weights = (df + 1.0) / (df + x2 / s2)
        updated = float(np.mean(weights * x2))
        if abs(updated - s2) <= tol * s2:
            return math.sqrt(updated)
        s2 = updated
    return math.sqrt(s2)


def fit_student_t(samples: Sequence[float], bounds: Tuple[float, float] = constants.STUDENT_T_BOUNDS) -> float:
    """
    Maximum-likelihood degrees of freedom of a zero-location Student-t, the
    scale being profiled out. Raises FitDiverged (carrying the estimate) when
    the optimum sits on a search bound.
    """
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) < 100:
        raise InvalidInput(f"need at least 100 samples to fit a Student-t, got {len(x)}")
    x2 = x * x

    def negative_profile(log_df: float) -> float:
        df = math.exp(log_df)
        scale = _t_scale(x2, df)
        return -float(np.sum(stats.t.logpdf(x, df, loc=0.0, scale=scale)))

    lo, hi = bounds
    result = optimize.minimize_scalar(
        negative_profile, bounds=(math.log(lo), math.log(hi)), method="bounded", options={"xatol": 1e-6}
    )
    if not result.success:
        raise FitDiverged(value=float("nan"), bound=hi)
    estimate = math.exp(result.x)
    for bound in bounds:
        if abs(math.log(estimate) - math.log(bound)) < 1e-3:
            logger.warning(f"Student-t fit hit the search bound {bound} (estimate {estimate:.3f}).")
            raise FitDiverged(value=estimate, bound=bound)
    return estimate


def distribution_summary(samples: Sequence[float], fit_t: bool = False) -> Dict[str, Optional[float]]:
    """Moments of pooled samples, plus the Student-t fit when requested."""
    x = np.asarray(samples, dtype=float).ravel()
    summary: Dict[str, Optional[float]] = {
        "count": int(len(x)),
        "mean": float(np.mean(x)),
        "std": float(np.std(x)),
        "skewness": float(stats.skew(x)),
        "excess_kurtosis": float(stats.kurtosis(x)),
    }
    if fit_t:
        try:
            summary["student_t_df"] = fit_student_t(x)
            summary["student_t_at_bound"] = False
        except FitDiverged as e:
            summary["student_t_df"] = e.value
            summary["student_t_at_bound"] = True
    return summary


def distribution_curves(samples: Sequence[float], bins: int = constants.DISTRIBUTION_BINS,
                        df: Optional[float] = None) -> pd.DataFrame:
    """
    Histogram density of pooled samples next to the moment-matched normal
    density and, when `df` is given, the zero-location Student-t with that
    many degrees of freedom and its profiled scale. One row per bin centre.
    """
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x)]
    if len(x) < 2 or np.ptp(x) == 0:
        raise DegenerateSeries("need at least two distinct finite samples for a density")
    if bins < 1:
        raise InvalidInput(f"bins must be >= 1, got {bins}")

    empirical, edges = np.histogram(x, bins=bins, density=True)
    centres = 0.5 * (edges[:-1] + edges[1:])
    normal = stats.norm.pdf(centres, loc=np.mean(x), scale=np.std(x))
    if df is None:
        student_t = np.full(len(centres), np.nan)
    else:
        student_t = stats.t.pdf(centres, df, loc=0.0, scale=_t_scale(x * x, df))
    return pd.DataFrame({"x": centres, "empirical": empirical, "normal": normal, "student_t": student_t})
