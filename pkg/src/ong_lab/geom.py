"""Points in the open unit cube, exact ordering and distance primitives,
reproducible random streams, and the binomial/Poisson process samplers.

Arrival indices are 1-based throughout the public API: the i-th point of a
sequence is the one drawn i-th.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError

_U64 = 1 << 64


def label_from_text(text: str) -> int:
    """Stable 64-bit stream label derived from a short name."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class Point:
    """A point of the open unit cube (0,1)^d."""

    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) < 1:
            raise ValueError("a point needs at least one coordinate")
        for c in coords:
            if not 0.0 < c < 1.0:
                raise ValueError(f"coordinate {c!r} outside the open interval (0,1)")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=np.float64)


def _check_same_dim(a: Point, b: Point) -> None:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def lex_compare(a: Point, b: Point) -> int:
    """Dictionary order on coordinate lists: -1 (less), 0 (equal), +1 (greater).

    This is the tie-break order used by nearest-neighbour queries.
    """
    _check_same_dim(a, b)
    for x, y in zip(a.coords, b.coords):
        if x < y:
            return -1
        if x > y:
            return 1
    return 0


def squared_distance(a: Point, b: Point) -> float:
    """Sum of squared coordinate differences; exactly zero iff a == b.

    The accumulation order matches the compiled kernels bit for bit.
    """
    _check_same_dim(a, b)
    d2 = 0.0
    for x, y in zip(a.coords, b.coords):
        t = x - y
        d2 += t * t
    return d2


@dataclass(frozen=True, eq=False)
class PointSequence:
    """An immutable, ordered sequence of points sharing one dimension.

    Stored as an (n, d) float64 array; `point(i)` uses 1-based arrival
    indices. Empty sequences must be built with `PointSequence.empty`.
    """

    coords: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.coords, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("coords must be an (n, d) array")
        if arr.shape[1] < 1:
            raise ValueError("dimension must be at least 1")
        if arr.size and not ((arr > 0.0).all() and (arr < 1.0).all()):
            raise ValueError("all coordinates must lie in the open interval (0,1)")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    @classmethod
    def empty(cls, d: int) -> PointSequence:
        """The explicit empty-sequence constructor (n = 0)."""
        return cls(np.empty((0, int(d)), dtype=np.float64))

    @classmethod
    def from_points(cls, points: list[Point]) -> PointSequence:
        if not points:
            raise ValueError("use PointSequence.empty(d) for an empty sequence")
        d = points[0].dim
        for p in points:
            if p.dim != d:
                raise DimensionMismatchError("points of mixed dimension")
        return cls(np.array([p.coords for p in points], dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.coords.shape[0]

    def point(self, i: int) -> Point:
        """The i-th arrival (1-based)."""
        if not 1 <= i <= len(self):
            raise IndexError(f"arrival index {i} outside 1..{len(self)}")
        return Point(tuple(self.coords[i - 1]))

    def prefix(self, m: int) -> PointSequence:
        """The first m arrivals as a sequence."""
        if not 0 <= m <= len(self):
            raise ValueError(f"prefix length {m} outside 0..{len(self)}")
        if m == 0:
            return PointSequence.empty(self.dim)
        return PointSequence(self.coords[:m])


@dataclass(frozen=True)
class RandomStream:
    """A reproducible random stream addressed by (master_seed, path).

    Identical (master_seed, path) pairs replay bit-identical output on any
    machine and thread count; distinct paths behave as independent streams.
    Parallel work derives children, it never shares a stream.
    """

    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < _U64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        path = tuple(int(v) for v in self.path)
        for v in path:
            if not 0 <= v < _U64:
                raise ValueError("path labels must be 64-bit unsigned integers")
        object.__setattr__(self, "master_seed", int(self.master_seed))
        object.__setattr__(self, "path", path)

    def child(self, *labels: int) -> RandomStream:
        return RandomStream(self.master_seed, self.path + tuple(labels))

    def generator(self) -> np.random.Generator:
        """The stream's bit generator.

        The derivation (seed-sequence entropy = master_seed, spawn key =
        path, PCG64) is fixed here and pinned by golden tests; changing it
        silently would invalidate every recorded manifest.
        """
        ss = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))


def uniform_open(generator: np.random.Generator, shape) -> np.ndarray:
    """Uniform draws on the open interval (0,1).

    numpy's half-open [0,1) leaves exact zero reachable; zero entries are
    redrawn so the Point invariant holds exactly.
    """
    out = generator.random(shape)
    flat = out.reshape(-1)
    zero = flat == 0.0
    while zero.any():
        flat[zero] = generator.random(int(zero.sum()))
        zero = flat == 0.0
    return out


@dataclass(frozen=True)
class PoissonDraw:
    """A Poisson count N(lambda) together with its intensity."""

    count: int
    intensity: float

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if not self.intensity > 0:
            raise ValueError("intensity must be positive")


def sample_binomial_process(n: int, d: int, s: RandomStream) -> PointSequence:
    """n independent uniform points in (0,1)^d, arrival order = draw order.

    Drawing is row-major, so for m < n the first m points equal the length-m
    sample from the same stream; Poissonization relies on this prefix
    coupling.
    """
    if n == 0:
        raise ValueError("n == 0 is only available via PointSequence.empty(d)")
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    return PointSequence(uniform_open(s.generator(), (n, d)))


def sample_poisson_count(lam: float, s: RandomStream) -> PoissonDraw:
    """Draw N(lambda) from the stream."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    count = int(s.generator().poisson(lam))
    return PoissonDraw(count=count, intensity=float(lam))
