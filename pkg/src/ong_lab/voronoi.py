"""Voronoi-cell diameter probes and the one-dimensional cone radius.

The cell of a probe point x with respect to a prefix is the set of cube
points at least as close to x as to every prefix point. In one dimension
that cell is an interval between midpoints and the diameter is exact. In
higher dimensions the diameter is estimated from uniform samples kept by
the membership test; the estimate is a guaranteed lower bound (a max over
a subset), which keeps upper-bound scaling checks sound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatchError, UnsupportedDimensionError
from .geom import Point, PointSequence, RandomStream, uniform_open

METHOD_EXACT = "exact"
METHOD_SAMPLED = "sampled"

VORONOI_CSV_HEADER = ("d", "n", "x", "method", "estimate")


@dataclass(frozen=True)
class VoronoiDiameterEstimate:
    """Diameter of the cell of x: exact in one dimension, a sampled lower
    bound otherwise (sample_count is 0 for the exact method)."""

    x: Point
    n: int
    value: float
    method: str
    sample_count: int

    def to_json_dict(self) -> dict:
        return {
            "x": list(self.x.coords),
            "n": self.n,
            "value": self.value,
            "method": self.method,
            "sample_count": self.sample_count,
        }


@dataclass(frozen=True)
class ConeRadius1D:
    """Smallest r whose one-sided reach argument succeeds on both sides of
    x in one dimension; twice this radius bounds the cell diameter."""

    x: Point
    n: int
    value: float

    def to_json_dict(self) -> dict:
        return {"x": list(self.x.coords), "n": self.n, "value": self.value}


def _exact_diameter_1d(x: float, coords: np.ndarray) -> float:
    """The 1-d cell is the interval between the midpoints toward the
    nearest prefix points on each side, clipped to the cube. A prefix
    point exactly at x imposes no constraint (every cube point is as close
    to x as to it), so it is skipped."""
    left = None
    right = None
    for u in coords[:, 0]:
        if u < x and (left is None or u > left):
            left = float(u)
        elif u > x and (right is None or u < right):
            right = float(u)
    lo = 0.0 if left is None else (x + left) / 2.0
    hi = 1.0 if right is None else (x + right) / 2.0
    return hi - lo


def voronoi_diameter(
    x: Point,
    seq_prefix: PointSequence,
    sample_count: int,
    s: RandomStream | None = None,
) -> VoronoiDiameterEstimate:
    """Diameter of the cell of x with respect to the prefix.

    In one dimension the answer is exact and needs no randomness. For
    d >= 2, sample_count uniform cube points are tested for membership
    (at least as close to x as to every prefix point, compared on squared
    distances so no square roots enter the decision) and the value is the
    largest pairwise distance among the kept points and x itself. That max
    over a finite sample can only under-shoot the true diameter, and it
    climbs toward it as sample_count grows; the caller supplies the stream
    the samples are drawn from.
    """
    n = len(seq_prefix)
    if n < 1:
        raise ValueError("prefix must contain at least one point")
    if x.dim != seq_prefix.dim:
        raise DimensionMismatchError(
            f"probe point has dimension {x.dim}, prefix has {seq_prefix.dim}"
        )
    d = seq_prefix.dim
    if d == 1:
        value = _exact_diameter_1d(x.coords[0], seq_prefix.coords)
        return VoronoiDiameterEstimate(
            x=x, n=n, value=value, method=METHOD_EXACT, sample_count=0
        )
    if sample_count < 1:
        raise ValueError(
            f"sampled estimation needs sample_count >= 1, got {sample_count}"
        )
    if s is None:
        raise ValueError("sampled estimation needs a random stream")
    g = s.generator()
    candidates = uniform_open(g, (sample_count, d))
    xa = x.as_array()
    m, head, nxt = _kernels.static_grid(seq_prefix.coords)
    nearest_sq = _kernels.batch_nearest_sqd(seq_prefix.coords, m, head, nxt, candidates)
    to_x_sq = np.sum((candidates - xa[None, :]) ** 2, axis=1)
    kept = candidates[to_x_sq <= nearest_sq]
    cloud = np.concatenate([xa[None, :], kept], axis=0)
    value = math.sqrt(_kernels.max_pairwise_sqd(cloud))
    return VoronoiDiameterEstimate(
        x=x, n=n, value=value, method=METHOD_SAMPLED, sample_count=sample_count
    )


def cone_radius_1d(x: Point, seq_prefix: PointSequence) -> ConeRadius1D:
    """Smallest radius at which each of the two half-lines out of x has
    either a prefix point or the cube boundary within reach.

    Per side, the threshold is the smaller of the distance to the nearest
    prefix point on that closed side and the distance to that side's cube
    boundary; the radius is the larger of the two side thresholds. Twice
    the radius always dominates the exact cell diameter.
    """
    if seq_prefix.dim != 1:
        raise UnsupportedDimensionError(
            f"cone radius is defined here only for d=1, got d={seq_prefix.dim}"
        )
    if x.dim != 1:
        raise UnsupportedDimensionError(
            f"probe point must be one-dimensional, got d={x.dim}"
        )
    n = len(seq_prefix)
    if n < 1:
        raise ValueError("prefix must contain at least one point")
    xv = x.coords[0]
    nearest_left = None
    nearest_right = None
    for u in seq_prefix.coords[:, 0]:
        if u <= xv:
            dist = xv - float(u)
            if nearest_left is None or dist < nearest_left:
                nearest_left = dist
        if u >= xv:
            dist = float(u) - xv
            if nearest_right is None or dist < nearest_right:
                nearest_right = dist
    t_left = xv if nearest_left is None else min(nearest_left, xv)
    t_right = (1.0 - xv) if nearest_right is None else min(nearest_right, 1.0 - xv)
    return ConeRadius1D(x=x, n=n, value=max(t_left, t_right))


def voronoi_csv_row(e: VoronoiDiameterEstimate) -> tuple:
    """The probe location is one column: the bare coordinate in d=1 and the
    coordinates joined by ';' otherwise, so the CSV stays comma-clean."""
    if e.x.dim == 1:
        xs = repr(e.x.coords[0])
    else:
        xs = ";".join(repr(c) for c in e.x.coords)
    return (e.x.dim, e.n, xs, e.method, e.value)
