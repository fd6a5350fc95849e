"""One-pass moment accumulation and log-log slope fitting.

EstimateSummary is an immutable value; update and merge are pure functions
returning new summaries. The update recurrences and the merge formulas are
the standard numerically stable ones (Welford's update extended to third
and fourth central moments, and the pairwise combination rule), so folding
samples one at a time, merging partial summaries, or calling the compiled
fold in from_samples all agree: the first two to float rounding, the last
bit-for-bit with the sequential fold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import InsufficientDataError

_Z_BY_LEVEL = {
    0.9: 1.6448536269514722,
    0.95: 1.959963984540054,
    0.99: 2.5758293035489004,
}


@dataclass(frozen=True)
class EstimateSummary:
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    @classmethod
    def empty(cls) -> "EstimateSummary":
        return cls()

    @property
    def variance(self) -> float | None:
        """Unbiased sample variance, None until two samples exist."""
        if self.count < 2:
            return None
        return self.m2 / (self.count - 1)

    @property
    def stderr(self) -> float | None:
        if self.count < 2:
            return None
        return math.sqrt(self.m2 / (self.count - 1) / self.count)

    def to_json_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "m2": self.m2,
            "m3": self.m3,
            "m4": self.m4,
            "variance": self.variance,
            "stderr": self.stderr,
        }


def update(summary: EstimateSummary, sample: float) -> EstimateSummary:
    """Fold one sample into the summary. Rejects non-finite samples so a
    NaN can never silently poison a long accumulation."""
    x = float(sample)
    if not math.isfinite(x):
        raise ValueError(f"sample must be finite, got {x}")
    n1 = float(summary.count)
    count = summary.count + 1
    n = float(count)
    delta = x - summary.mean
    delta_n = delta / n
    delta_n2 = delta_n * delta_n
    term1 = delta * delta_n * n1
    mean = summary.mean + delta_n
    m4 = (
        summary.m4
        + term1 * delta_n2 * (n * n - 3.0 * n + 3.0)
        + 6.0 * delta_n2 * summary.m2
        - 4.0 * delta_n * summary.m3
    )
    m3 = summary.m3 + term1 * delta_n * (n - 2.0) - 3.0 * delta_n * summary.m2
    m2 = summary.m2 + term1
    return EstimateSummary(count=count, mean=mean, m2=m2, m3=m3, m4=m4)


def merge(a: EstimateSummary, b: EstimateSummary) -> EstimateSummary:
    """Combine two summaries as if their sample sets were concatenated."""
    if a.count == 0:
        return b
    if b.count == 0:
        return a
    na = float(a.count)
    nb = float(b.count)
    n = na + nb
    delta = b.mean - a.mean
    mean = a.mean + delta * nb / n
    m2 = a.m2 + b.m2 + delta * delta * na * nb / n
    m3 = (
        a.m3
        + b.m3
        + delta ** 3 * na * nb * (na - nb) / (n * n)
        + 3.0 * delta * (na * b.m2 - nb * a.m2) / n
    )
    m4 = (
        a.m4
        + b.m4
        + delta ** 4 * na * nb * (na * na - na * nb + nb * nb) / (n ** 3)
        + 6.0 * delta * delta * (na * na * b.m2 + nb * nb * a.m2) / (n * n)
        + 4.0 * delta * (na * b.m3 - nb * a.m3) / n
    )
    return EstimateSummary(count=a.count + b.count, mean=mean, m2=m2, m3=m3, m4=m4)


def from_samples(values: Iterable[float]) -> EstimateSummary:
    """Summarise a whole batch through the compiled fold. Produces bits
    identical to folding the values through update() in order."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                     dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"values must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        return EstimateSummary.empty()
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must all be finite")
    count, mean, m2, m3, m4 = _kernels.welford_fold(arr)
    return EstimateSummary(count=int(count), mean=mean, m2=m2, m3=m3, m4=m4)


def variance_ci(summary: EstimateSummary, level: float) -> tuple[float, float]:
    """Normal-approximation confidence interval for the population variance,
    using the estimated fourth central moment for the sampling variance of
    the sample variance. Needs at least 30 samples to be meaningful."""
    if level not in _Z_BY_LEVEL:
        raise ValueError(f"level must be one of {sorted(_Z_BY_LEVEL)}, got {level}")
    if summary.count < 30:
        raise InsufficientDataError(
            f"variance_ci needs at least 30 samples, got {summary.count}"
        )
    z = _Z_BY_LEVEL[level]
    r = summary.count
    s2 = summary.m2 / (r - 1)
    m4_hat = summary.m4 / r
    var_of_s2 = (m4_hat - s2 * s2 * (r - 3.0) / (r - 1.0)) / r
    if var_of_s2 < 0.0:
        var_of_s2 = 0.0
    half = z * math.sqrt(var_of_s2)
    return (max(s2 - half, 0.0), s2 + half)


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through (log n, log y) pairs."""

    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    points: tuple[tuple[float, float], ...]

    def to_json_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
            "r_squared": self.r_squared,
            "points": [list(p) for p in self.points],
        }


def loglog_slope(
    points: Sequence[tuple[float, float]],
    weights: Sequence[float] | None = None,
) -> SlopeFit:
    """Fit log y = intercept + slope * log n by (optionally weighted) least
    squares. Each point is (n, y) on the raw scale with n >= 2 and y > 0;
    at least three points are required so the residual variance has a
    degree of freedom."""
    pts = [(float(n), float(y)) for n, y in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points for a slope fit, got {len(pts)}")
    for n, y in pts:
        if n < 2:
            raise ValueError(f"abscissae must be at least 2, got {n}")
        if not y > 0:
            raise ValueError(f"ordinates must be positive for a log-log fit, got {y}")
    if weights is None:
        w = [1.0] * len(pts)
    else:
        w = [float(v) for v in weights]
        if len(w) != len(pts):
            raise ValueError(f"got {len(pts)} points but {len(w)} weights")
        for v in w:
            if not v > 0:
                raise ValueError(f"weights must be positive, got {v}")
    xs = [math.log(n) for n, _ in pts]
    ys = [math.log(y) for _, y in pts]
    w_total = sum(w)
    x_bar = sum(wi * xi for wi, xi in zip(w, xs)) / w_total
    y_bar = sum(wi * yi for wi, yi in zip(w, ys)) / w_total
    sxx = sum(wi * (xi - x_bar) ** 2 for wi, xi in zip(w, xs))
    if sxx == 0.0:
        raise ValueError("abscissae are all equal; the slope is undefined")
    sxy = sum(wi * (xi - x_bar) * (yi - y_bar) for wi, xi, yi in zip(w, xs, ys))
    slope = sxy / sxx
    intercept = y_bar - slope * x_bar
    ss_res = sum(
        wi * (yi - (intercept + slope * xi)) ** 2 for wi, xi, yi in zip(w, xs, ys)
    )
    ss_tot = sum(wi * (yi - y_bar) ** 2 for wi, yi in zip(w, ys))
    dof = len(pts) - 2
    slope_stderr = math.sqrt((ss_res / dof) / sxx)
    if ss_tot > 0.0:
        r_squared = 1.0 - ss_res / ss_tot
    else:
        r_squared = 1.0
    r_squared = min(max(r_squared, 0.0), 1.0)
    return SlopeFit(
        slope=slope,
        intercept=intercept,
        slope_stderr=slope_stderr,
        r_squared=r_squared,
        points=tuple(zip(xs, ys)),
    )
