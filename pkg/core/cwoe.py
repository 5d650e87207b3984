# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Partitioned return/polarity correlation and its correlated-Wishart noise
counterpart C' = (1/T) W W^T, with W = [sqrt(C_r) W1 ; sqrt(C_p) W2].
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core import constants
from core.exceptions import CalendarMismatch, DegenerateBaseline, InvalidInput, NotPSD, ShapeMismatch
from core.models import AlignedPanel
from core.rmt import CorrelationMatrix, _check_normalized

logger = logging.getLogger(__name__)

Variant = Literal["neighboring", "corresponding"]
VARIANTS: Tuple[str, ...] = ("neighboring", "corresponding")

Seed = Union[int, Sequence[int]]


@dataclass(frozen=True)
class PartitionedCorrelation:
    """2N x 2N correlation of stacked [returns; polarities]."""

    full: np.ndarray
    n: int
    labels: tuple

    @property
    def rr(self) -> np.ndarray:
        return self.full[: self.n, : self.n]

    @property
    def rp(self) -> np.ndarray:
        return self.full[: self.n, self.n:]

    @property
    def pr(self) -> np.ndarray:
        return self.full[self.n:, : self.n]

    @property
    def pp(self) -> np.ndarray:
        return self.full[self.n:, self.n:]

    def block(self, name: str) -> CorrelationMatrix:
        """Diagonal block 'r' or 'p' as a CorrelationMatrix."""
        if name == "r":
            return CorrelationMatrix(self.rr.copy(), self.labels[: self.n])
        if name == "p":
            return CorrelationMatrix(self.pp.copy(), self.labels[self.n:])
        raise InvalidInput(f"unknown block {name!r}, expected 'r' or 'p'")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.full, index=list(self.labels), columns=list(self.labels))


@dataclass(frozen=True)
class NoisySurrogate:
    c_prime: np.ndarray
    seed: Seed
    T: int


def partition_correlation(d_r: AlignedPanel, d_p: AlignedPanel) -> PartitionedCorrelation:
    """C = (1/T) D D^T for D = [D_r ; D_p], both normalized on one calendar."""
    if d_r.n != d_p.n or d_r.t != d_p.t:
        raise ShapeMismatch(f"panels differ in shape: {d_r.values.shape} vs {d_p.values.shape}")
    if not d_r.calendar.equals(d_p.calendar):
        raise CalendarMismatch("return and polarity panels must share a calendar")
    _check_normalized(d_r)
    _check_normalized(d_p)

    d = np.vstack([d_r.values, d_p.values])
    c = d @ d.T / d_r.t
    c = (c + c.T) / 2.0
    np.fill_diagonal(c, 1.0)
    np.clip(c, -1.0, 1.0, out=c)
    labels = tuple(f"R:{label}" for label in d_r.labels) + tuple(f"P:{label}" for label in d_p.labels)
    return PartitionedCorrelation(c, d_r.n, labels)


def matrix_sqrt_psd(c: np.ndarray) -> np.ndarray:
    """Symmetric square root; eigenvalues below the clamp threshold are zeroed."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got {c.shape}")
    if np.max(np.abs(c - c.T), initial=0.0) > constants.SYMMETRY_TOL * max(1.0, np.max(np.abs(c))):
        raise InvalidInput("matrix is not symmetric")
    eigenvalues, eigenvectors = np.linalg.eigh((c + c.T) / 2.0)
    if eigenvalues[0] < -constants.PSD_TOL:
        raise NotPSD(f"smallest eigenvalue {eigenvalues[0]:.3g} is below -{constants.PSD_TOL}")
    roots = np.sqrt(np.where(eigenvalues < constants.EIGEN_CLAMP, 0.0, eigenvalues))
    s = (eigenvectors * roots) @ eigenvectors.T
    return (s + s.T) / 2.0


def synth_noisy(c_r: Union[CorrelationMatrix, np.ndarray], c_p: Union[CorrelationMatrix, np.ndarray],
                T: int, seed: Seed) -> NoisySurrogate:
    """
    White noise coloured by the empirical blocks. W1 takes the first N*T
    standard normal draws of the seeded stream, W2 the next N*T.
    """
    c_r = c_r.values if isinstance(c_r, CorrelationMatrix) else np.asarray(c_r, dtype=float)
    c_p = c_p.values if isinstance(c_p, CorrelationMatrix) else np.asarray(c_p, dtype=float)
    if c_r.shape != c_p.shape:
        raise ShapeMismatch(f"blocks differ in shape: {c_r.shape} vs {c_p.shape}")
    n = c_r.shape[0]
    if T < n:
        raise InvalidInput(f"T ({T}) must be at least N ({n})")

    rng = np.random.default_rng(seed)
    w1 = rng.standard_normal((n, T))
    w2 = rng.standard_normal((n, T))
    stacked = np.vstack([matrix_sqrt_psd(c_r) @ w1, matrix_sqrt_psd(c_p) @ w2])
    c_prime = stacked @ stacked.T / T
    return NoisySurrogate((c_prime + c_prime.T) / 2.0, seed, T)


def _off_diagonal_mask(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def _neighbor_mean(c: np.ndarray) -> float:
    """Mean |c_ij - c_i,j+1| over row-adjacent pairs that avoid the diagonal."""
    n = c.shape[0]
    diffs = np.abs(np.diff(c, axis=1))
    rows = np.arange(n)[:, None]
    cols = np.arange(n - 1)[None, :]
    valid = (cols != rows) & (cols + 1 != rows)
    return float(diffs[valid].mean())


def structure_metric(c: np.ndarray, c_prime: np.ndarray, variant: Variant = "neighboring") -> float:
    """
    Relative change of correlation structure between C and C'.

    neighboring:   |mu(C') - mu(C)| / mu(C), mu the mean absolute difference of
                   row-adjacent off-diagonal coefficients.
                   It depends on the row order, so a simultaneous row/column
                   permutation of C and C' can change it.
    corresponding: mean |C'_ij - C_ij| / mean |C_ij| over off-diagonal entries.
                   Invariant under simultaneous row/column permutation.
    """
    c = np.asarray(c, dtype=float)
    c_prime = np.asarray(c_prime, dtype=float)
    if c.shape != c_prime.shape or c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ShapeMismatch(f"matrices must be square and equal in shape ({c.shape} vs {c_prime.shape})")
    if c.shape[0] < 3:
        raise InvalidInput("structure comparison needs at least 3 rows")

    if variant == "neighboring":
        baseline = _neighbor_mean(c)
        if baseline == 0:
            raise DegenerateBaseline("neighbouring differences of C are all zero")
        return abs(_neighbor_mean(c_prime) - baseline) / baseline
    if variant == "corresponding":
        mask = _off_diagonal_mask(c.shape[0])
        baseline = float(np.abs(c[mask]).mean())
        if baseline == 0:
            raise DegenerateBaseline("off-diagonal entries of C are all zero")
        return float(np.abs(c_prime[mask] - c[mask]).mean()) / baseline
    raise InvalidInput(f"unknown variant {variant!r}, expected one of {VARIANTS}")


def structure_metric_ensemble(
    partitioned: PartitionedCorrelation,
    T: int,
    realizations: int = constants.DEFAULT_REALIZATIONS,
    seed: int = 0,
    variants: Sequence[str] = VARIANTS,
) -> Dict[str, Dict[str, Union[float, int, List[float]]]]:
    """Metric per variant over seeded noise realizations; realization i uses seed (seed, i)."""
    if realizations < 1:
        raise InvalidInput("need at least one realization")
    values: Dict[str, List[float]] = {variant: [] for variant in variants}
    for i in range(realizations):
        surrogate = synth_noisy(partitioned.rr, partitioned.pp, T, seed=(seed, i))
        for variant in variants:
            values[variant].append(structure_metric(partitioned.full, surrogate.c_prime, variant))

    summary = {}
    for variant, metrics in values.items():
        arr = np.asarray(metrics)
        summary[variant] = {
            "mean": float(arr.mean()),
            "std": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
            "realizations": realizations,
            "values": metrics,
        }
        logger.info(f"Structure metric ({variant}) over {realizations} realizations: "
                    f"{arr.mean():.4f} ± {summary[variant]['std']:.4f}")
    return summary
