# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Box-kernel transfer entropy between time series and its shuffled-surrogate
correction, the effective transfer entropy (ETE).

TE from Y to X with histories of length k (X) and l (Y) is estimated as the
sample mean of

    log[ c(x_{n+1}, X_n, Y_n) * c(X_n) / ( c(X_n, Y_n) * c(x_{n+1}, X_n) ) ]

where c(.) counts the embedded samples lying inside a max-norm box around the
query sample in the given coordinates. Counts include the query sample itself,
so on symbol-valued data the estimator is the plug-in estimator of the joint
frequency tables.
"""

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.spatial import cKDTree

from core.exceptions import AllSamplesSkipped, InvalidInput, PolarityFlowError, SeriesTooShort, ShapeMismatch
from core.models import AlignedPanel, TEConfig

logger = logging.getLogger(__name__)

MAX_ORACLE_ALPHABET = 8


# --- Bandwidth and embedding ---

def silverman_bandwidth(sigma: float, n: int) -> float:
    """h = (4 sigma^5 / (3 n))^(1/5)."""
    if not sigma > 0 or not math.isfinite(sigma):
        raise InvalidInput(f"sigma must be positive and finite, got {sigma}")
    if n < 2:
        raise InvalidInput(f"need at least 2 samples for a bandwidth, got {n}")
    return (4.0 * sigma ** 5 / (3.0 * n)) ** 0.2


def resolve_bandwidth(x: Sequence[float], cfg: TEConfig) -> float:
    """The configured h, or Silverman's rule on the destination series."""
    if cfg.bandwidth_mode == "fixed":
        return cfg.h
    x = np.asarray(x, dtype=float)
    return silverman_bandwidth(float(np.std(x)), len(x))


def _history(series: np.ndarray, length: int, start: int) -> np.ndarray:
    """Rows (s_n, s_{n-1}, ..., s_{n-length+1}) for n = start .. len(series) - 2."""
    stop = len(series) - 1
    return np.column_stack([series[start - lag: stop - lag] for lag in range(length)])


def embed(x: Sequence[float], k: int, start: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    k-histories of x and the value that follows each one.

    Sample n runs from `start` (default k - 1) to len(x) - 2; pass
    start = max(k, l) - 1 to align with an l-history of a second series.
    """
    x = np.asarray(x, dtype=float)
    if k < 1:
        raise InvalidInput(f"history length must be >= 1, got {k}")
    start = k - 1 if start is None else start
    if start < k - 1:
        raise InvalidInput(f"start {start} leaves no room for a {k}-history")
    if len(x) - 1 - start < 1:
        raise SeriesTooShort(f"series of length {len(x)} holds no {k}-history starting at {start}")
    return _history(x, k, start), x[start + 1:]


def _radius(h: float, box: str) -> float:
    # cKDTree counts distances <= r; stepping down one ulp makes the box open
    half_width = h if box == "half" else h / 2.0
    return float(np.nextafter(half_width, 0.0))


def _box_counts(points: np.ndarray, radius: float, theiler: int) -> np.ndarray:
    """Per-sample count of samples within `radius` in the max norm, the sample included."""
    tree = cKDTree(points)
    counts = np.asarray(tree.query_ball_point(points, radius, p=np.inf, return_length=True), dtype=np.int64)
    if theiler:
        n = len(points)
        for offset in range(-theiler, theiler + 1):
            idx = np.arange(max(0, -offset), min(n, n - offset))
            near = np.all(np.abs(points[idx] - points[idx + offset]) <= radius, axis=1)
            counts[idx] -= near
    return counts


@dataclass(frozen=True)
class TEEstimate:
    value: float
    n_samples: int
    skipped: int

    @property
    def skip_rate(self) -> float:
        return self.skipped / self.n_samples if self.n_samples else 0.0


class _DestinationCounts:
    """Embedding and X-only box counts of one destination series, shared across sources."""

    def __init__(self, x: np.ndarray, cfg: TEConfig, h: float):
        self.cfg = cfg
        self.length = len(x)
        self.start = max(cfg.k, cfg.l) - 1
        if self.length <= max(cfg.k, cfg.l) + 1:
            raise SeriesTooShort(
                f"series of length {self.length} is too short for k={cfg.k}, l={cfg.l}"
            )
        self.x_hist, self.successor = embed(x, cfg.k, start=self.start)
        self.radius = _radius(h, cfg.box)
        self.c_x = _box_counts(self.x_hist, self.radius, cfg.theiler)
        self.c_nx = _box_counts(np.column_stack([self.successor, self.x_hist]), self.radius, cfg.theiler)

    def estimate(self, y: np.ndarray) -> TEEstimate:
        if len(y) != self.length:
            raise ShapeMismatch(f"source has {len(y)} values, destination {self.length}")
        y_hist = _history(y, self.cfg.l, self.start)
        xy = np.column_stack([self.x_hist, y_hist])
        c_xy = _box_counts(xy, self.radius, self.cfg.theiler)
        c_full = _box_counts(np.column_stack([self.successor, xy]), self.radius, self.cfg.theiler)

        valid = (c_full > 0) & (self.c_x > 0) & (c_xy > 0) & (self.c_nx > 0)
        n_samples = len(valid)
        skipped = int(n_samples - valid.sum())
        if skipped == n_samples:
            raise AllSamplesSkipped(f"all {n_samples} samples have an empty box (radius {self.radius:.4g})")
        # integer products, so balanced counts give a ratio of exactly 1
        ratio = (c_full[valid] * self.c_x[valid]) / (c_xy[valid] * self.c_nx[valid])
        logs = np.log2(ratio) if self.cfg.log_base == "2" else np.log(ratio)
        if skipped:
            logger.debug(f"Skipped {skipped}/{n_samples} samples with an empty box.")
        return TEEstimate(float(np.mean(logs)), n_samples, skipped)


def _as_pair(x: Sequence[float], y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ShapeMismatch(f"series must be 1-D and of equal length ({x.shape} vs {y.shape})")
    return x, y


# --- Estimators ---

def te_estimate(x: Sequence[float], y: Sequence[float], cfg: TEConfig, h: Optional[float] = None) -> TEEstimate:
    """TE from y (source) to x (destination) with its sample and skip counts."""
    x, y = _as_pair(x, y)
    h = resolve_bandwidth(x, cfg) if h is None else h
    return _DestinationCounts(x, cfg, h).estimate(y)


def transfer_entropy(x: Sequence[float], y: Sequence[float], cfg: TEConfig, h: Optional[float] = None) -> float:
    """TE_{Y->X} in bits (log_base '2') or nats (log_base 'e')."""
    return te_estimate(x, y, cfg, h).value


def discrete_te_oracle(x: Sequence, y: Sequence, k: int, l: int, log_base: str = "2") -> float:
    """Plug-in TE_{Y->X} from exact joint frequency tables of symbol series."""
    if len(x) != len(y):
        raise ShapeMismatch(f"series differ in length ({len(x)} vs {len(y)})")
    m = max(k, l)
    if len(x) <= m + 1:
        raise SeriesTooShort(f"series of length {len(x)} is too short for k={k}, l={l}")
    if len(set(x)) > MAX_ORACLE_ALPHABET or len(set(y)) > MAX_ORACLE_ALPHABET:
        raise InvalidInput(f"oracle alphabets are limited to {MAX_ORACLE_ALPHABET} symbols")

    joint, xy, nx, xs = Counter(), Counter(), Counter(), Counter()
    for n in range(m - 1, len(x) - 1):
        past_x = tuple(x[n - i] for i in range(k))
        past_y = tuple(y[n - i] for i in range(l))
        nxt = x[n + 1]
        joint[(nxt, past_x, past_y)] += 1
        xy[(past_x, past_y)] += 1
        nx[(nxt, past_x)] += 1
        xs[past_x] += 1

    n_samples = sum(joint.values())
    log = math.log2 if str(log_base) == "2" else math.log
    total = 0.0
    for (nxt, past_x, past_y), count in joint.items():
        ratio = (count * xs[past_x]) / (xy[(past_x, past_y)] * nx[(nxt, past_x)])
        total += count / n_samples * log(ratio)
    return total


def shuffle_surrogate(y: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """A uniform random permutation of y."""
    return rng.permutation(np.asarray(y))


def pair_rng(seed: int, source: int, destination: int) -> np.random.Generator:
    """Surrogate stream of one ordered pair; independent of evaluation order."""
    return np.random.default_rng([seed, source, destination])


@dataclass(frozen=True)
class ETEResult:
    ete: float
    te: float
    surrogate_mean: float
    surrogate_std: float
    skip_rate: float


def _effective(counts: _DestinationCounts, y: np.ndarray, cfg: TEConfig, pair: Tuple[int, int]) -> ETEResult:
    original = counts.estimate(y)
    rng = pair_rng(cfg.seed, *pair)
    surrogates = np.array([counts.estimate(shuffle_surrogate(y, rng)).value for _ in range(cfg.M)])
    mean = float(surrogates.mean()) if cfg.M else 0.0
    std = float(surrogates.std()) if cfg.M else 0.0
    return ETEResult(original.value - mean, original.value, mean, std, original.skip_rate)


def effective_te(x: Sequence[float], y: Sequence[float], cfg: TEConfig, pair: Tuple[int, int] = (0, 0),
                 h: Optional[float] = None) -> ETEResult:
    """
    TE_{Y->X} minus its mean over cfg.M shuffled copies of y. `pair` is the
    (source, destination) index pair that seeds the surrogate stream.
    """
    if cfg.M < 1:
        raise InvalidInput("effective transfer entropy needs at least one surrogate (M >= 1)")
    x, y = _as_pair(x, y)
    h = resolve_bandwidth(x, cfg) if h is None else h
    return _effective(_DestinationCounts(x, cfg, h), y, cfg, pair)


# --- Matrix ---

@dataclass(frozen=True)
class ETEMatrix:
    """Entry (i, j) is the ETE from series j to series i; the diagonal is 0."""

    values: np.ndarray
    labels: tuple
    cfg: TEConfig
    h: np.ndarray
    skip_rates: np.ndarray
    failures: Dict[str, str] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=list(self.labels), columns=list(self.labels))

    def sidecar(self) -> dict:
        h = self.h
        if np.isfinite(h).all() and np.ptp(h) <= 1e-12 * h[0]:
            bandwidth = float(h[0])
        else:
            # destinations that failed before a bandwidth was fixed are null
            bandwidth = [float(v) if math.isfinite(v) else None for v in h]
        return {
            "k": self.cfg.k,
            "l": self.cfg.l,
            "h": bandwidth,
            "bandwidth_mode": self.cfg.bandwidth_mode,
            "box": self.cfg.box,
            "log_base": self.cfg.log_base,
            "M": self.cfg.M,
            "seed": self.cfg.seed,
            "theiler": self.cfg.theiler,
            "labels": list(self.labels),
            "skip_rates": [[float(v) for v in row] for row in self.skip_rates],
            "failures": dict(sorted(self.failures.items())),
        }

    def write(self, csv_path: Union[str, Path], sidecar_path: Union[str, Path]) -> None:
        self.to_frame().to_csv(csv_path, index_label="label")
        with open(sidecar_path, "w", encoding="utf-8") as f:
            json.dump(self.sidecar(), f, indent=2, sort_keys=True)
            f.write("\n")


def _destination_row(values: np.ndarray, i: int, cfg: TEConfig):
    """ETE into destination i from every other row; failures become NaN with a reason."""
    dim = values.shape[0]
    row = np.zeros(dim)
    skips = np.zeros(dim)
    failures: Dict[str, str] = {}
    h = float("nan")
    try:
        h = resolve_bandwidth(values[i], cfg)
        counts = _DestinationCounts(values[i], cfg, h)
    except PolarityFlowError as e:
        row[:] = np.nan
        row[i] = 0.0
        failures.update({f"{j}->{i}": str(e) for j in range(dim) if j != i})
        return row, skips, h, failures

    for j in range(dim):
        if j == i:
            continue
        try:
            result = _effective(counts, values[j], cfg, (j, i))
        except PolarityFlowError as e:
            row[j] = np.nan
            failures[f"{j}->{i}"] = str(e)
            continue
        row[j] = result.ete
        skips[j] = result.skip_rate
    return row, skips, h, failures


def ete_matrix(panel: AlignedPanel, cfg: TEConfig, n_jobs: int = 1) -> ETEMatrix:
    """
    ETE for every ordered pair of panel rows. Destinations are evaluated in
    parallel; the surrogate stream of a pair depends only on (seed, j, i), so
    the result does not depend on `n_jobs`.
    """
    if cfg.M < 1:
        raise InvalidInput("effective transfer entropy needs at least one surrogate (M >= 1)")
    if panel.n < 2:
        raise InvalidInput("an ETE matrix needs at least 2 series")
    values = np.ascontiguousarray(panel.values)
    rows = Parallel(n_jobs=n_jobs)(delayed(_destination_row)(values, i, cfg) for i in range(panel.n))

    matrix = np.vstack([r[0] for r in rows])
    skip_rates = np.vstack([r[1] for r in rows])
    h = np.array([r[2] for r in rows])
    failures: Dict[str, str] = {}
    for _, _, _, row_failures in rows:
        for key, reason in row_failures.items():
            src, dst = (int(part) for part in key.split("->"))
            failures[f"{panel.labels[src]}->{panel.labels[dst]}"] = reason
    if failures:
        logger.warning(f"{len(failures)} of {panel.n * (panel.n - 1)} pairs failed and are left missing.")
    worst = float(skip_rates.max())
    if worst > 0:
        logger.warning(f"Up to {worst:.1%} of samples were skipped for empty boxes (k={cfg.k}, l={cfg.l}).")
    logger.info(f"ETE matrix {panel.n}x{panel.n} done (k={cfg.k}, l={cfg.l}, M={cfg.M}).")
    return ETEMatrix(matrix, panel.labels, cfg, h, skip_rates, failures)
