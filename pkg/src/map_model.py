"""
Map Model for expmix
Metric measure space, piecewise invertible map, inverse branches and cylinders
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import mpmath as mp
import numpy as np

import geometry as geo
from errors import BoundaryPoint, EmptyImage, OutsideSpace, TruncationInsufficient
from settings import BOUNDARY_TOL, DEFAULT_SEED

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction, mp.mpf]
Interval = geo.Interval


def to_mp(value: Number) -> mp.mpf:
    """Convert a declared number (Fraction, int, float, mpf) to mpmath"""
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / value.denominator
    return mp.mpf(value)


def product(values: Sequence[Number]) -> Number:
    """Exact product when every factor is rational, mpmath product otherwise"""
    if all(isinstance(v, (int, Fraction)) for v in values):
        out = Fraction(1)
        for v in values:
            out *= v
        return out
    out = mp.mpf(1)
    for v in values:
        out *= to_mp(v)
    return out


@dataclass(frozen=True)
class MetricMeasureConfig:
    """The space X with its metric, reference measure and ball-measure bound"""

    dimension: int
    space: Any
    ball_measure_bound: Callable[[Number], mp.mpf]
    eps1: Number = math.inf
    ambient_boundary_mode: str = geo.IN_SPACE

    @classmethod
    def lebesgue_1d(cls, space: Interval, eps1: Number = math.inf,
                    mode: str = geo.IN_SPACE) -> 'MetricMeasureConfig':
        return cls(dimension=1, space=space, ball_measure_bound=lambda eps: to_mp(eps),
                   eps1=eps1, ambient_boundary_mode=mode)

    @classmethod
    def lebesgue_2d(cls, space: Any, eps1: Number = math.inf,
                    mode: str = geo.AMBIENT) -> 'MetricMeasureConfig':
        return cls(dimension=2, space=space, ball_measure_bound=lambda eps: mp.pi * to_mp(eps) ** 2 / 4,
                   eps1=eps1, ambient_boundary_mode=mode)

    def C_B(self, eps: Number) -> mp.mpf:
        return self.ball_measure_bound(eps)

    @property
    def bounded(self) -> bool:
        if self.dimension == 1:
            return not any(math.isinf(float(end)) for end in self.space)
        return True


@dataclass(frozen=True)
class Branch:
    """One restriction T: O_h → T(O_h) with its inverse branch h and Jacobian Jh"""

    id: str
    domain: Any
    image: Any
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    contraction_bound: Optional[Number] = None
    distortion_bound: Optional[Number] = None
    jacobian_floor: Optional[Number] = None
    increasing: bool = True
    singular_end: Optional[str] = None
    extends_to_closure: bool = True
    index: Optional[int] = None
    mp_inverse: Optional[Callable[[mp.mpf], mp.mpf]] = None

    def contains(self, x: float) -> bool:
        if isinstance(self.domain, tuple):
            return self.domain[0] < x < self.domain[1]
        return bool(self.domain.contains(np.asarray(x, dtype=float))[0])

    def push(self, piece: Interval) -> Interval:
        """Image of a sub-interval of the domain (1D)"""
        lo, hi = piece
        ends = []
        for p, domain_end, image_end in ((lo, self.domain[0], self.image[0 if self.increasing else 1]),
                                         (hi, self.domain[1], self.image[1 if self.increasing else 0])):
            if abs(p - domain_end) <= BOUNDARY_TOL * max(1.0, abs(domain_end)):
                ends.append(image_end)
            else:
                ends.append(float(self.forward(np.array([p]))[0]))
        return (min(ends), max(ends))

    def pull(self, piece: Interval) -> Interval:
        """Preimage under T of a sub-interval of the image (1D)"""
        a, b = (float(v) for v in self.inverse(np.array(piece, dtype=float)))
        return (min(a, b), max(a, b))


@dataclass
class BranchGenerator:
    """Closed-form countable branch family k ↦ branches, materialized up to a truncation level"""

    make: Callable[[int], List[Branch]]
    start: int = 1
    truncation: int = 40
    tail_bound: Callable[[int, Sequence[Interval]], float] = lambda K, region: 0.0
    locate_index: Optional[Callable[[float], int]] = None
    description: str = ''

    def materialize(self, truncation: Optional[int] = None) -> List[Branch]:
        K = self.truncation if truncation is None else truncation
        out: List[Branch] = []
        for k in range(self.start, K + 1):
            out.extend(self.make(k))
        return out


@dataclass
class MapSpec:
    """Full description of (X, d, m, T, 𝓟)"""

    metric: MetricMeasureConfig
    branches: List[Branch] = field(default_factory=list)
    generator: Optional[BranchGenerator] = None
    name: str = ''
    declared: Dict[str, Any] = field(default_factory=dict)
    locator: Optional[Callable[[np.ndarray], Branch]] = None
    forward_many_override: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self._all: Optional[List[Branch]] = None
        self._lows: Optional[List[float]] = None

    @property
    def dimension(self) -> int:
        return self.metric.dimension

    @property
    def space(self):
        return self.metric.space

    @property
    def boundary_mode(self) -> str:
        return self.metric.ambient_boundary_mode

    def all_branches(self) -> List[Branch]:
        """Fixed branches plus the materialized generator family, sorted by domain (1D)"""
        if self._all is None:
            branches = list(self.branches)
            if self.generator is not None:
                branches.extend(self.generator.materialize())
            if self.dimension == 1:
                branches.sort(key=lambda b: b.domain[0])
                self._lows = [b.domain[0] for b in branches]
            self._all = branches
        return self._all

    def branch(self, branch_id: str) -> Branch:
        for b in self.all_branches():
            if b.id == branch_id:
                return b
        raise KeyError(branch_id)

    def coverage(self) -> List[Interval]:
        """Union of the materialized branch domains (1D)"""
        return geo.merge_touching(b.domain for b in self.all_branches())

    def branches_over(self, piece: Interval) -> List[Branch]:
        """Branches whose domain meets the open interval piece (1D)"""
        branches = self.all_branches()
        start = max(0, bisect.bisect_right(self._lows, piece[0]) - 1)
        out = []
        for b in branches[start:]:
            if b.domain[0] >= piece[1]:
                break
            if b.domain[1] > piece[0]:
                out.append(b)
        return out

    def truncation_tail(self, region: Sequence[Interval]) -> float:
        if self.generator is None:
            return 0.0
        return float(self.generator.tail_bound(self.generator.truncation, region))

    def forward_many(self, x: np.ndarray) -> np.ndarray:
        """Vectorized T on points away from partition boundaries (1D)"""
        if self.forward_many_override is not None:
            return self.forward_many_override(x)
        x = np.asarray(x, dtype=float)
        branches = self.all_branches()
        lows = np.array(self._lows)
        idx = np.clip(np.searchsorted(lows, x, side='right') - 1, 0, len(branches) - 1)
        out = np.full_like(x, np.nan)
        for i in np.unique(idx):
            mask = idx == i
            b = branches[i]
            inside = mask & (x > b.domain[0]) & (x < b.domain[1])
            if inside.any():
                out[inside] = b.forward(x[inside])
        return out


@dataclass(frozen=True)
class Cylinder:
    """Depth-n inverse branch h = h_1 ∘ … ∘ h_n of Tⁿ and its domain"""

    word: Tuple[str, ...]
    branches: Tuple[Branch, ...]
    domain: Interval
    image: Interval
    tail_bound: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.word)

    def composite_forward(self, x: np.ndarray) -> np.ndarray:
        for b in self.branches:
            x = b.forward(x)
        return x

    def composite_inverse(self, y: np.ndarray) -> np.ndarray:
        for b in reversed(self.branches):
            y = b.inverse(y)
        return y

    def composite_jacobian(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        jac = np.ones_like(y)
        for b in reversed(self.branches):
            jac = jac * b.jacobian(y)
            y = b.inverse(y)
        return jac

    def pull(self, piece: Interval) -> Interval:
        a, b = (float(v) for v in self.composite_inverse(np.array(piece, dtype=float)))
        return (min(a, b), max(a, b))

    def extend(self, branch: Branch, overlap: Interval) -> 'Cylinder':
        """Refine by one more step through branch on overlap ⊂ image ∩ O_branch"""
        return Cylinder(word=self.word + (branch.id,), branches=self.branches + (branch,),
                        domain=self.pull(overlap), image=branch.push(overlap),
                        tail_bound=self.tail_bound)


@dataclass(frozen=True)
class ContractionEstimate:
    value: Number
    evidence: str
    sampled: Optional[float] = None


def evaluate_forward(spec: MapSpec, x) -> Tuple[Any, str]:
    """
    Evaluate T at one point

    Args:
        spec: The map
        x: Point of X (float in 1D, pair in 2D)

    Returns:
        (T(x), id of the branch containing x)
    """
    if spec.dimension == 2:
        point = np.asarray(x, dtype=float).reshape(1, 2)
        branch = spec.locator(point)
        return tuple(float(v) for v in branch.forward(point)[0]), branch.id

    x = float(x)
    lo, hi = (float(v) for v in spec.space)
    if not (lo < x < hi):
        raise OutsideSpace(f"{x} is not in X = ({lo}, {hi})")
    candidates = spec.branches_over((x, x))
    if not candidates and spec.generator is not None and spec.generator.locate_index is not None:
        candidates = spec.generator.make(spec.generator.locate_index(x))
    for b in candidates:
        a, c = b.domain
        if min(abs(x - a), abs(x - c)) <= BOUNDARY_TOL * max(1.0, abs(x)):
            raise BoundaryPoint(f"{x} lies on the boundary of {b.id}")
        if a < x < c:
            return float(b.forward(np.array([x]))[0]), b.id
    raise BoundaryPoint(f"{x} is not inside any branch domain")


def cylinders_over(spec: MapSpec, n: int, region: Sequence[Interval],
                   budget: Optional[float] = None, max_count: int = 250_000) -> List[Cylinder]:
    """
    Enumerate the depth-n cylinders meeting a region

    Args:
        spec: The map (1D)
        n: Depth ≥ 1
        region: Finite union of open intervals with positive length
        budget: Largest admissible declared tail bound of the truncated family
        max_count: Guard on the number of cylinders

    Returns:
        Cylinders C with m(region ∩ C.domain) > 0, in word order
    """
    if n < 1:
        raise ValueError("cylinder depth must be at least 1")
    region = geo.normalize(region)
    if geo.total_length(region) <= 0:
        raise ValueError("region must have positive measure")
    tail = n * spec.truncation_tail(region)
    if budget is not None and tail > budget:
        raise TruncationInsufficient(f"declared tail bound {tail:.3e} exceeds budget {budget:.3e}")

    frontier = []
    for b in spec.branches_over((region[0][0], region[-1][1])):
        if geo.intersect([b.domain], region):
            frontier.append(Cylinder((b.id,), (b,), b.domain, b.image, tail))
    for _ in range(n - 1):
        refined = []
        for cyl in frontier:
            for b in spec.branches_over(cyl.image):
                overlap = geo.intersect_piece(cyl.image, b.domain)
                if overlap is None:
                    continue
                child = cyl.extend(b, overlap)
                if geo.intersect([child.domain], region):
                    refined.append(child)
        frontier = refined
        if len(frontier) > max_count:
            raise TruncationInsufficient(f"more than {max_count} cylinders at depth {n}")
    return frontier


def composite_contraction(cyl: Cylinder, eps2: Number, samples: int = 2001,
                          seed: Optional[int] = None) -> ContractionEstimate:
    """
    Lipschitz ratio of the composite inverse branch at scale eps2

    Args:
        cyl: The cylinder
        eps2: Largest pair distance considered
        samples: Grid size of the pair sampling

    Returns:
        Analytic product of declared factors when all are declared, else the sampled sup
    """
    if float(eps2) <= 0:
        raise ValueError("eps2 must be positive")
    lo, hi = cyl.image
    if not (hi > lo) or math.isnan(lo) or math.isnan(hi):
        raise EmptyImage(f"cylinder {cyl.word} has a degenerate image")

    top = min(hi, lo + 1e3)
    grid = np.linspace(lo, top, samples)[1:-1]
    sampled = 0.0
    for d in np.geomspace(min(float(eps2), top - lo) * 1e-6, min(float(eps2), top - lo) * 0.999, 12):
        left = grid[grid + d < top]
        if left.size == 0:
            continue
        ratio = np.abs(cyl.composite_inverse(left + d) - cyl.composite_inverse(left)) / d
        sampled = max(sampled, float(np.nanmax(ratio)))

    bounds = [b.contraction_bound for b in cyl.branches]
    if all(v is not None for v in bounds):
        return ContractionEstimate(product(bounds), 'analytic', sampled)
    return ContractionEstimate(sampled, 'sampled', sampled)


def round_trip_error(branch: Branch, count: int = 200, seed: Optional[int] = None) -> float:
    """Largest |h(T(x)) − x| over sampled x in a 1D branch domain"""
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    lo, hi = branch.domain
    hi = min(hi, lo + 1e3)
    x = rng.uniform(lo, hi, count)
    x = x[(x > lo) & (x < hi)]
    return float(np.max(np.abs(branch.inverse(branch.forward(x)) - x)))
