"""Re-sampling diagnostics for the total weight functional.

When arrival i of an n-point sequence is replaced by an independent copy,
the change in total weight splits into six non-negative components:

  1: weight of the edge out of the original point in the original graph,
  2: weight of the edge out of the replacement in the re-sampled graph,
  3: total weight of edges into the original point from later arrivals,
  4: same as 3 for the replacement in the re-sampled graph,
  5: total weight, in the graph built with arrival i deleted, of the edges
     from exactly those later arrivals counted in 4,
  6: same as 5 for the later arrivals counted in 3.

The change equals (2) + (4) + (6) - (1) - (3) - (5) pathwise on every
instance, tie-broken or not, because deleting arrival i only re-routes the
arrivals that attached to it. resample_breakdown computes the components
by direct edge scans over three full builds and the total independently
from the original and re-sampled builds, so the identity is a genuine
cross-check rather than a tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, stats
from .errors import DimensionMismatchError
from .geom import Point, PointSequence, RandomStream, uniform_open, sample_binomial_process

RESAMPLE_CSV_HEADER = ("n", "i", "component", "estimate", "stderr", "reps")


@dataclass(frozen=True)
class ResampleBreakdown:
    """Six-component split of the total-weight change at one re-sampling.

    delta holds the components in order 1..6; component(l) takes the
    1-based label. total is the actual change, computed from two
    independent full builds rather than from the components.
    """

    n: int
    i: int
    alpha: float
    delta: tuple[float, float, float, float, float, float]
    total: float

    def component(self, l: int) -> float:
        if not 1 <= l <= 6:
            raise ValueError(f"component label must be 1..6, got {l}")
        return self.delta[l - 1]

    def combined(self) -> float:
        """The signed combination the identity says must equal total."""
        d = self.delta
        return d[1] + d[3] + d[5] - d[0] - d[2] - d[4]

    def identity_gap(self) -> float:
        return abs(self.total - self.combined())

    def identity_scale(self) -> float:
        return max(1.0e-12, max(abs(v) for v in self.delta), abs(self.total))

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "i": self.i,
            "alpha": self.alpha,
            "delta": list(self.delta),
            "total": self.total,
        }


@dataclass(frozen=True)
class ConditionedSecondMoment:
    """Nested Monte Carlo estimate of the second moment of the conditional
    mean change E[change | first i arrivals]."""

    n: int
    i: int
    alpha: float
    value: float
    stderr: float
    outer_reps: int
    inner_reps: int
    estimator: str = "split-half-product"

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "i": self.i,
            "alpha": self.alpha,
            "value": self.value,
            "stderr": self.stderr,
            "outer_reps": self.outer_reps,
            "inner_reps": self.inner_reps,
            "estimator": self.estimator,
        }


@dataclass(frozen=True)
class TailIncrement:
    """Centred second moment of the total-weight increment between coupled
    prefixes of lengths m < n."""

    m: int
    n: int
    alpha: float
    second_moment: float
    stderr: float
    reps: int

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "alpha": self.alpha,
            "second_moment": self.second_moment,
            "stderr": self.stderr,
            "reps": self.reps,
        }


def resample_breakdown(
    seq: PointSequence, i: int, x_new: Point, alpha: float
) -> ResampleBreakdown:
    """Split the total-weight change at a re-sampling of arrival i into the
    six components, by direct edge scans over full builds.

    Three graphs are built from scratch: the original, the re-sampled one,
    and the one with arrival i deleted. No incremental shortcut is taken;
    the component definitions are subtle enough that correctness comes
    first and this path stays the reference for any optimised variant.
    """
    n = len(seq)
    if not 1 <= i <= n:
        raise ValueError(f"arrival index {i} outside 1..{n}")
    if x_new.dim != seq.dim:
        raise DimensionMismatchError(
            f"replacement point has dimension {x_new.dim}, sequence has {seq.dim}"
        )
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")

    base = seq.coords
    resampled = base.copy()
    resampled[i - 1] = x_new.as_array()
    deleted = np.delete(base, i - 1, axis=0)

    t_base, s_base = _kernels.build_ong(base)
    t_res, s_res = _kernels.build_ong(resampled)
    _, s_del = _kernels.build_ong(deleted)

    half_alpha = alpha * 0.5
    d1 = s_base[i - 1] ** half_alpha if i >= 2 else 0.0
    d2 = s_res[i - 1] ** half_alpha if i >= 2 else 0.0

    # Later arrivals that attach to position i in each graph; in the
    # deleted graph arrival j > i sits at row j - 2 (0-based).
    d3 = 0.0
    d4 = 0.0
    d5 = 0.0
    d6 = 0.0
    for j in range(i + 1, n + 1):
        if t_base[j - 1] == i - 1:
            d3 += s_base[j - 1] ** half_alpha
            d6 += s_del[j - 2] ** half_alpha
        if t_res[j - 1] == i - 1:
            d4 += s_res[j - 1] ** half_alpha
            d5 += s_del[j - 2] ** half_alpha

    total = _kernels.total_weight_from_sqd(s_res, alpha) - _kernels.total_weight_from_sqd(
        s_base, alpha
    )
    return ResampleBreakdown(
        n=n, i=i, alpha=float(alpha), delta=(d1, d2, d3, d4, d5, d6), total=total
    )


def estimate_conditioned_second_moment(
    n: int,
    i: int,
    d: int,
    alpha: float,
    outer_reps: int,
    inner_reps: int,
    s: RandomStream,
) -> ConditionedSecondMoment:
    """Estimate E[(E[change | first i arrivals])^2] by nested Monte Carlo.

    Each outer replicate fixes the first i arrivals, then the inner loop
    re-draws the replacement point and the suffix and averages the change.
    Squaring one inner mean would be biased upward by (inner variance) /
    inner_reps, so the estimator is instead the product of the means of
    two disjoint halves of the inner replicates: the halves are
    conditionally independent given the prefix, which makes the product an
    unbiased estimate of the squared conditional mean. The outer average of
    those products is returned, with its standard error across outer
    replicates. The per-sample draw order inside an outer replicate is
    prefix, then replacements, then suffixes, all from that replicate's
    child stream.
    """
    if not 1 <= i <= n:
        raise ValueError(f"conditioning index {i} outside 1..{n}")
    if d < 1:
        raise ValueError("d must be at least 1")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if outer_reps < 2 or inner_reps < 2:
        raise ValueError(
            f"outer_reps and inner_reps must both be at least 2, "
            f"got {outer_reps} and {inner_reps}"
        )
    half = inner_reps // 2
    products = np.empty(outer_reps, dtype=np.float64)
    for o in range(outer_reps):
        g = s.child(o).generator()
        prefix = uniform_open(g, (i, d))
        xprimes = uniform_open(g, (inner_reps, d))
        suffixes = uniform_open(g, (inner_reps, n - i, d))
        deltas = _kernels.resample_deltas(prefix, xprimes, suffixes, alpha)
        products[o] = float(np.mean(deltas[:half])) * float(np.mean(deltas[half:]))
    summary = stats.from_samples(products)
    return ConditionedSecondMoment(
        n=n,
        i=i,
        alpha=float(alpha),
        value=summary.mean,
        stderr=summary.stderr if summary.stderr is not None else 0.0,
        outer_reps=outer_reps,
        inner_reps=inner_reps,
    )


def _variance_stderr(summary: stats.EstimateSummary) -> float:
    """Normal-approximation standard error of the sample variance, from the
    estimated fourth central moment."""
    r = summary.count
    if r < 2:
        return 0.0
    s2 = summary.m2 / (r - 1)
    m4_hat = summary.m4 / r
    var_of_s2 = (m4_hat - s2 * s2 * (r - 3.0) / (r - 1.0)) / r
    if var_of_s2 < 0.0:
        var_of_s2 = 0.0
    return float(np.sqrt(var_of_s2))


def tail_increment_l2(
    m: int, n: int, d: int, alpha: float, reps: int, s: RandomStream
) -> TailIncrement:
    """Centred second moment of O(first n) - O(first m) over replicates.

    Both functionals come from one build per replicate (the length-m
    sequence is a prefix of the length-n one), so the increment is the
    coupled tail sum, and the centred second moment is the unbiased sample
    variance across replicates.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    if d < 1:
        raise ValueError("d must be at least 1")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if reps < 2:
        raise ValueError(f"reps must be at least 2, got {reps}")
    checkpoints = np.array([m, n], dtype=np.int64)
    increments = np.empty(reps, dtype=np.float64)
    for r in range(reps):
        seq = sample_binomial_process(n, d, s.child(r))
        _, sqd = _kernels.build_ong(seq.coords)
        totals = _kernels.prefix_totals(sqd, alpha, checkpoints)
        increments[r] = totals[1] - totals[0]
    summary = stats.from_samples(increments)
    variance = summary.variance
    assert variance is not None
    return TailIncrement(
        m=m,
        n=n,
        alpha=float(alpha),
        second_moment=variance,
        stderr=_variance_stderr(summary),
        reps=reps,
    )


def breakdown_csv_rows(b: ResampleBreakdown) -> list[tuple]:
    """One row per component plus the total; exact pathwise values carry an
    empty stderr and a rep count of 1."""
    rows: list[tuple] = [
        (b.n, b.i, str(l), b.delta[l - 1], "", 1) for l in range(1, 7)
    ]
    rows.append((b.n, b.i, "total", b.total, "", 1))
    return rows


def conditioned_csv_row(c: ConditionedSecondMoment) -> tuple:
    """reps is the outer-replicate count, the one the stderr refers to."""
    return (c.n, c.i, "total", c.value, c.stderr, c.outer_reps)


def tail_csv_row(t: TailIncrement) -> tuple:
    """The pair (m, n) fills the (i, n) columns; the component label is
    "tail" to keep one header across the module's emissions."""
    return (t.n, t.m, "tail", t.second_moment, t.stderr, t.reps)
