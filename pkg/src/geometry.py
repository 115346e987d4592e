"""
Geometry Helpers
Finite unions of open intervals (1D) and axis-aligned boxes (2D), with ε-boundaries
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

Interval = Tuple[float, float]

IN_SPACE = 'in-X'
AMBIENT = 'ambient'
BOUNDARY_MODES = (IN_SPACE, AMBIENT)

_EDGE_TOL = 1e-13


def length(piece: Interval) -> float:
    return max(0.0, piece[1] - piece[0])


def total_length(pieces: Iterable[Interval]) -> float:
    return float(sum(length(p) for p in pieces))


def diameter(pieces: Sequence[Interval]) -> float:
    if not pieces:
        return 0.0
    return max(p[1] for p in pieces) - min(p[0] for p in pieces)


def normalize(pieces: Iterable[Interval]) -> List[Interval]:
    """Sort, drop empty pieces and merge overlapping ones (touching pieces stay apart)"""
    ordered = sorted((float(a), float(b)) for a, b in pieces if b > a)
    merged: List[Interval] = []
    for a, b in ordered:
        if merged and a < merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def merge_touching(pieces: Iterable[Interval], tol: float = _EDGE_TOL) -> List[Interval]:
    """Merge pieces that overlap or touch within tol (coverage up to finitely many points)"""
    ordered = sorted((float(a), float(b)) for a, b in pieces if b > a)
    merged: List[Interval] = []
    for a, b in ordered:
        if merged and a <= merged[-1][1] + tol * max(1.0, abs(a)):
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def intersect_piece(a: Interval, b: Interval) -> Optional[Interval]:
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if hi > lo else None


def intersect(pieces_a: Sequence[Interval], pieces_b: Sequence[Interval]) -> List[Interval]:
    """Intersection of two finite unions of open intervals"""
    out = []
    for a in pieces_a:
        for b in pieces_b:
            piece = intersect_piece(a, b)
            if piece is not None:
                out.append(piece)
    return normalize(out)


def subtract_closed(pieces: Sequence[Interval], cut: Interval) -> List[Interval]:
    """Remove the closed interval [cut] from a union of open intervals"""
    out = []
    for a, b in pieces:
        if cut[1] <= a or cut[0] >= b:
            out.append((a, b))
            continue
        if cut[0] > a:
            out.append((a, cut[0]))
        if cut[1] < b:
            out.append((cut[1], b))
    return normalize(out)


def subtract_many(pieces: Sequence[Interval], cuts: Sequence[Interval]) -> List[Interval]:
    """Remove the closures of all cuts (equal to the open difference up to finitely many points)"""
    out = normalize(pieces)
    for cut in cuts:
        out = subtract_closed(out, cut)
    return out


def covers(pieces: Sequence[Interval], target: Interval, tol: float = _EDGE_TOL) -> bool:
    """True when the union covers the target interval up to finitely many points"""
    for a, b in merge_touching(pieces, tol):
        if a <= target[0] + tol * max(1.0, abs(target[0])) and b >= target[1] - tol * max(1.0, abs(target[1])):
            return True
    return False


def is_space_end(point: float, space: Interval) -> bool:
    for end in space:
        if math.isinf(end):
            continue
        if abs(point - end) <= _EDGE_TOL * max(1.0, abs(end)):
            return True
    return False


def boundary_points(pieces: Sequence[Interval], space: Interval, mode: str = IN_SPACE) -> List[float]:
    """
    Topological boundary of a union of open intervals

    Args:
        pieces: The set A
        space: The space X (used by the in-X mode)
        mode: IN_SPACE drops points lying on the boundary of X, AMBIENT keeps them

    Returns:
        Sorted finite boundary points
    """
    points = set()
    for a, b in pieces:
        for p in (a, b):
            if math.isinf(p):
                continue
            if mode == IN_SPACE and is_space_end(p, space):
                continue
            points.add(p)
    return sorted(points)


def eps_boundary(pieces: Sequence[Interval], eps: float, space: Interval,
                 mode: str = IN_SPACE) -> List[Interval]:
    """Points of A within eps of the boundary of A, as a union of open intervals"""
    pieces = normalize(pieces)
    nbhd = normalize((p - eps, p + eps) for p in boundary_points(pieces, space, mode))
    return intersect(pieces, nbhd)


def eps_boundary_length(pieces: Sequence[Interval], eps: float, space: Interval,
                        mode: str = IN_SPACE) -> float:
    return total_length(eps_boundary(pieces, eps, space, mode))


def within(piece: Interval, pieces: Sequence[Interval], tol: float = _EDGE_TOL) -> bool:
    """True when piece lies inside one element of pieces"""
    return any(a - tol <= piece[0] and piece[1] <= b + tol for a, b in pieces)


def geometric_grid(lo: float, hi: float, count: int) -> np.ndarray:
    return np.geomspace(lo, hi, count)


# --- 2D ---

@dataclass(frozen=True)
class Box:
    """Open axis-aligned rectangle (x0, x1) × (y0, y1)"""

    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def width(self) -> float:
        return max(0.0, self.x1 - self.x0)

    @property
    def height(self) -> float:
        return max(0.0, self.y1 - self.y0)

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def is_empty(self) -> bool:
        return self.width <= 0 or self.height <= 0

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return ((points[:, 0] > self.x0) & (points[:, 0] < self.x1)
                & (points[:, 1] > self.y0) & (points[:, 1] < self.y1))

    def contains_box(self, other: 'Box') -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def intersect(self, other: 'Box') -> 'Box':
        return Box(max(self.x0, other.x0), min(self.x1, other.x1),
                   max(self.y0, other.y0), min(self.y1, other.y1))

    def shrink(self, eps: float) -> 'Box':
        """Points at distance ≥ eps from the boundary (possibly empty)"""
        return Box(self.x0 + eps, self.x1 - eps, self.y0 + eps, self.y1 - eps)

    def eps_boundary_area(self, eps: float) -> float:
        """Measure of ∂_ε of the rectangle as a subset of the plane"""
        inner = self.shrink(eps)
        return self.area - (0.0 if inner.is_empty() else inner.area)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x0, self.x1, self.y0, self.y1)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return np.column_stack([rng.uniform(self.x0, self.x1, count),
                                rng.uniform(self.y0, self.y1, count)])


@dataclass(frozen=True)
class ShearedBox:
    """Open region {y0 < y < y1, x0 < x < intercept + slope·y}"""

    x0: float
    y0: float
    y1: float
    intercept: float
    slope: float = 0.0

    def right_edge(self, y):
        return self.intercept + self.slope * y

    @property
    def area(self) -> float:
        mean_right = self.intercept + self.slope * 0.5 * (self.y0 + self.y1)
        return max(0.0, mean_right - self.x0) * max(0.0, self.y1 - self.y0)

    @property
    def bounding_box(self) -> Box:
        right = max(self.right_edge(self.y0), self.right_edge(self.y1))
        return Box(self.x0, right, self.y0, self.y1)

    @property
    def diameter(self) -> float:
        return self.bounding_box.diameter

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        x, y = points[:, 0], points[:, 1]
        return (y > self.y0) & (y < self.y1) & (x > self.x0) & (x < self.right_edge(y))

    def contains_box(self, other: Box) -> bool:
        return (other.y0 >= self.y0 and other.y1 <= self.y1 and other.x0 >= self.x0
                and other.x1 <= min(self.right_edge(other.y0), self.right_edge(other.y1)))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        box = self.bounding_box
        out = np.empty((0, 2))
        while len(out) < count:
            points = box.sample(rng, 2 * count)
            out = np.vstack([out, points[self.contains(points)]])
        return out[:count]
