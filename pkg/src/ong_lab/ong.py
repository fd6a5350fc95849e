"""The on-line nearest-neighbour graph and its power-weighted functionals.

Each arrival after the first is joined to its nearest predecessor (ties
broken lexicographically, then by arrival index), giving a directed tree
rooted at arrival 1. Edges store squared lengths only; every exponent is
applied as (squared_length)^(alpha/2) at aggregation time so one build
serves any number of alpha values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DimensionMismatchError
from .geom import (
    Point,
    PointSequence,
    RandomStream,
    label_from_text,
    sample_binomial_process,
    sample_poisson_count,
)

# Sub-stream label for the Poisson count draw. The point draws use the
# caller's stream directly, so a Poissonized run and a plain binomial run
# on the same stream share their point prefix element for element.
POISSON_COUNT_LABEL = label_from_text("ong.poisson.count")


@dataclass(frozen=True)
class OngEdge:
    """Directed edge source -> target with 1-based arrival indices."""

    source: int
    target: int
    squared_length: float

    @property
    def length(self) -> float:
        return math.sqrt(self.squared_length)


@dataclass(frozen=True, eq=False)
class OngGraph:
    """The built graph: one edge per arrival 2..n, spanning tree to root 1.

    targets/squared_lengths are 0-based row arrays (targets[0] == -1); the
    edges property presents the 1-based contract view.
    """

    sequence: PointSequence
    targets: np.ndarray
    squared_lengths: np.ndarray

    def __post_init__(self):
        for name in ("targets", "squared_lengths"):
            arr = getattr(self, name)
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.sequence)

    @property
    def edge_count(self) -> int:
        return max(len(self) - 1, 0)

    @property
    def edges(self) -> tuple[OngEdge, ...]:
        return tuple(
            OngEdge(
                source=i + 1,
                target=int(self.targets[i]) + 1,
                squared_length=float(self.squared_lengths[i]),
            )
            for i in range(1, len(self))
        )

    def edge_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sources, targets, lengths) arrays, 1-based, for bulk export."""
        n = len(self)
        sources = np.arange(2, n + 1, dtype=np.int64)
        targets = self.targets[1:] + 1
        lengths = np.sqrt(self.squared_lengths[1:])
        return sources, targets, lengths


@dataclass(frozen=True, eq=False)
class GainVector:
    """Per-arrival gains Z_1..Z_n (Z_1 := 0); Z_i is arrival i's edge length."""

    gains: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.gains, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "gains", arr)

    def power_sum(self, alpha: float) -> float:
        """Sum of Z_i^alpha; reproduces total_weight to float association."""
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        total = 0.0
        comp = 0.0
        for z in self.gains:
            y = z**alpha - comp
            t = total + y
            comp = (t - total) - y
            total = t
        return total


@dataclass(frozen=True, eq=False)
class RootedWeights:
    """Running rooted functionals for a fixed root x.

    incident[m-1]: total alpha-weight of edges attaching to x among the
    first m points of the x-prefixed graph. alternative[m-1]: for the same
    attaching points (arrivals i >= 2 only), the alpha-weight of their
    nearest-predecessor distance with x excluded.
    """

    incident: np.ndarray
    alternative: np.ndarray

    def __post_init__(self):
        for name in ("incident", "alternative"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


class PoissonizedTotal(NamedTuple):
    count: int
    total: float


def build_ong(seq: PointSequence) -> OngGraph:
    """Build the graph; deterministic in the sequence, n = 0 and 1 allowed."""
    targets, sqd = _kernels.build_ong(seq.coords)
    return OngGraph(sequence=seq, targets=targets, squared_lengths=sqd)


def total_weight(g: OngGraph, alpha: float) -> float:
    """Total power-weighted edge length with compensated summation."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return float(_kernels.total_weight_from_sqd(g.squared_lengths, float(alpha)))


def gains(g: OngGraph) -> GainVector:
    if len(g) == 0:
        return GainVector(np.zeros(0))
    z = np.sqrt(g.squared_lengths)
    z[0] = 0.0
    return GainVector(z)


def rooted_weights(x: Point, seq: PointSequence, alpha: float) -> RootedWeights:
    """Running incident and alternative weights for root x over the sequence."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if x.dim != seq.dim:
        raise DimensionMismatchError(f"root is {x.dim}-D, sequence is {seq.dim}-D")
    if len(seq) == 0:
        return RootedWeights(np.zeros(0), np.zeros(0))
    incident, alternative = _kernels.rooted_weights_kernel(
        x.as_array(), seq.coords, float(alpha)
    )
    return RootedWeights(incident, alternative)


def poissonized_total(
    lam: float,
    d: int,
    alpha: float,
    s: RandomStream,
    force_count: int | None = None,
) -> PoissonizedTotal:
    """Total weight over the first N(lambda) points of the binomial stream.

    The count is drawn from the child stream POISSON_COUNT_LABEL; the points
    come from s itself, so conditioning on N = m (force_count) reproduces the
    binomial total at m bit for bit.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if d < 1:
        raise ValueError("d must be positive")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if force_count is None:
        count = sample_poisson_count(lam, s.child(POISSON_COUNT_LABEL)).count
    else:
        count = int(force_count)
        if count < 0:
            raise ValueError("force_count must be non-negative")
    if count == 0:
        return PoissonizedTotal(count=0, total=0.0)
    seq = sample_binomial_process(count, d, s)
    g = build_ong(seq)
    return PoissonizedTotal(count=count, total=total_weight(g, alpha))
