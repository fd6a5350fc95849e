"""Incremental nearest-predecessor index with an exact brute-force oracle.

The GridIndex here is the reference implementation: a dict-of-cells grid
with expanding-ring queries, exact over float ties because the comparator
(squared distance, lexicographic point, arrival index) is a total order.
The compiled bulk builds in _kernels run the same algorithm on flat arrays;
oracle-equivalence tests pin all three paths (grid, kernels, brute force)
to identical answers, index for index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ContractViolationError, DimensionMismatchError, EmptyIndexError
from .geom import Point, PointSequence

_GROWTH_FACTOR = 2  # rebuild when count > 2 * (cells per side)^d


@dataclass(frozen=True)
class NnAnswer:
    """index is the 1-based arrival index of the nearest predecessor."""

    index: int
    squared_distance: float


@dataclass(frozen=True)
class SearchStats:
    """Ring bookkeeping of the last query, for completeness assertions."""

    rings_explored: int
    stop_lower_bound: float
    exhausted: bool


def _sqdist(q: tuple[float, ...], p: tuple[float, ...]) -> float:
    d2 = 0.0
    for j in range(len(q)):
        t = q[j] - p[j]
        d2 += t * t
    return d2


class GridIndex:
    """Uniform grid over (0,1)^d holding points by arrival index.

    Starts as a single cell; when count exceeds 2 * (cells per side)^d the
    grid is rebuilt with cells per side doubled, keeping expected occupancy
    Theta(1) without knowing n in advance.
    """

    def __init__(self, d: int | None = None):
        self._d = int(d) if d is not None else None
        self._m = 1
        self.cells: dict[tuple[int, ...], list[tuple[int, Point]]] = {}
        self.count = 0
        self.last_search: SearchStats | None = None

    @property
    def cell_side(self) -> float:
        return 1.0 / self._m

    def _cell_key(self, coords: tuple[float, ...]) -> tuple[int, ...]:
        key = []
        for c in coords:
            v = int(c * self._m)
            if v >= self._m:
                v = self._m - 1
            if v < 0:
                v = 0
            key.append(v)
        return tuple(key)

    def insert(self, idx: int, p: Point) -> None:
        if self._d is None:
            self._d = p.dim
        elif p.dim != self._d:
            raise DimensionMismatchError(f"index holds {self._d}-D points, got {p.dim}-D")
        if idx != self.count + 1:
            raise ContractViolationError(
                f"insert index {idx} out of order (expected {self.count + 1})"
            )
        if self.count + 1 > _GROWTH_FACTOR * self._m ** self._d:
            self._m *= 2
            old = self.cells
            self.cells = {}
            for bucket in old.values():
                for stored in bucket:
                    self.cells.setdefault(self._cell_key(stored[1].coords), []).append(stored)
        self.cells.setdefault(self._cell_key(p.coords), []).append((idx, p))
        self.count += 1

    def nearest(self, q: Point, exclude: int | None = None) -> NnAnswer:
        """Nearest stored point to q under the documented comparator.

        exclude skips one arrival index, used by the rooted-weight
        "alternative" query to mask the virtual root.
        """
        if self.count == 0:
            raise EmptyIndexError("no points available to answer the query")
        if q.dim != self._d:
            raise DimensionMismatchError(f"index holds {self._d}-D points, got {q.dim}-D")
        m = self._m
        side = self.cell_side
        qc = self._cell_key(q.coords)
        best: tuple[float, tuple[float, ...], int] | None = None
        k = 0
        stop_bound = 0.0
        exhausted = True
        while k <= m:
            if k > 0 and best is not None:
                lo = (k - 1) * side
                if lo * lo > best[0]:
                    stop_bound = lo
                    exhausted = False
                    break
            for off in itertools.product(range(-k, k + 1), repeat=self._d):
                if max(abs(o) for o in off) != k:
                    continue
                cell = tuple(qc[j] + off[j] for j in range(self._d))
                if any(c < 0 or c >= m for c in cell):
                    continue
                for idx, p in self.cells.get(cell, ()):
                    if idx == exclude:
                        continue
                    cand = (_sqdist(q.coords, p.coords), p.coords, idx)
                    if best is None or cand < best:
                        best = cand
            k += 1
        if best is None:
            raise EmptyIndexError("no points available to answer the query")
        self.last_search = SearchStats(
            rings_explored=k, stop_lower_bound=stop_bound, exhausted=exhausted
        )
        return NnAnswer(index=best[2], squared_distance=best[0])


def brute_force_nearest(q: Point, seq_prefix: PointSequence) -> NnAnswer:
    """Reference linear scan with the identical tie-break comparator."""
    if len(seq_prefix) == 0:
        raise EmptyIndexError("empty prefix")
    if q.dim != seq_prefix.dim:
        raise DimensionMismatchError(f"{q.dim}-D query against {seq_prefix.dim}-D prefix")
    best: tuple[float, tuple[float, ...], int] | None = None
    for i in range(1, len(seq_prefix) + 1):
        p = tuple(seq_prefix.coords[i - 1])
        cand = (_sqdist(q.coords, p), p, i)
        if best is None or cand < best:
            best = cand
    return NnAnswer(index=best[2], squared_distance=best[0])
