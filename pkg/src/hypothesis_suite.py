"""
Hypothesis Suite for expmix
Checks expansion, distortion, complexity, divisibility, positive linking and inducing partitions
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath as mp
import numpy as np

import geometry as geo
import skew_map
from errors import (ComplexityTooLarge, HypothesisError, InsufficientTrials, NoZFound,
                    NotExpanding, SearchDiverged, UnboundedDistortion, VStarTooLarge)
from map_model import (ContractionEstimate, Cylinder, MapSpec, Number, composite_contraction,
                       cylinders_over, to_mp)
from settings import CROSS_CHECK_TOL, DEFAULT_SEED, TRIALS_1D, TRIALS_2D

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

Interval = geo.Interval

MIN_TRIALS = 50
DEFAULT_SHAVE = Fraction(3, 5)
SEARCH_CAP = 200
EPS_GRID_POINTS = 20


def eps_grid(top: float, points: int = EPS_GRID_POINTS) -> np.ndarray:
    """Geometric ε grid from top/1000 to 0.99·top"""
    return geo.geometric_grid(float(top) / 1000.0, 0.99 * float(top), points)


def _as_float(value: Number) -> float:
    return float(value)


def _max_exact(values: Sequence[Number]) -> Number:
    return max(values, key=_as_float)


def _divide(a: Number, b: Number) -> Number:
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return Fraction(a) / Fraction(b)
    return to_mp(a) / to_mp(b)


def _power(base: Number, exponent: Number) -> Number:
    if isinstance(base, (int, Fraction)) and isinstance(exponent, int):
        return Fraction(base) ** exponent
    if isinstance(base, (int, Fraction)) and isinstance(exponent, Fraction) and exponent.denominator == 1:
        return Fraction(base) ** int(exponent)
    return to_mp(base) ** to_mp(exponent)


def _sampling_window(spec: MapSpec) -> Interval:
    lo, hi = (float(v) for v in spec.space)
    if math.isinf(hi):
        return (lo, min(20.0, float(spec.generator.truncation) if spec.generator else 20.0))
    return (lo, hi)


# --- Certificate ---

@dataclass
class HypothesisCertificate:
    """Verified parameters of the expansion, distortion, complexity, divisibility and linking hypotheses"""

    name: str
    dimension: int
    eps2: Number
    lam: Number
    alpha: Number
    Dtilde: Number
    eps3: Number
    D: Number
    n0: int
    eps4: Number
    sigma: Number
    Cbar: Optional[Number]
    eta: Number
    C_eps0: Optional[Number] = None
    C_X: Optional[Number] = None
    N_delta: Optional[int] = None
    Delta: Optional[Number] = None
    Gamma: Optional[Number] = None
    Q: List[Interval] = field(default_factory=list)
    omega: Optional[Interval] = None
    evidence: Dict[str, str] = field(default_factory=dict)
    sigma_sampled: Optional[float] = None
    declared: Dict[str, Any] = field(default_factory=dict)
    link: Optional['LinkResult'] = None
    linker: Optional[Callable[..., 'LinkResult']] = None

    @property
    def sigma_threshold(self) -> Number:
        return _power(self.lam, -self.n0) - 1

    @property
    def h5_complete(self) -> bool:
        return self.N_delta is not None and self.Gamma is not None and self.Delta is not None

    def attach_link(self, link: 'LinkResult') -> None:
        self.link = link
        self.C_X = link.C_X
        self.N_delta = link.N_delta
        self.Delta = link.Delta
        self.Gamma = link.Gamma
        self.Q = list(link.Q)
        self.omega = link.omega
        self.evidence.update({'C_X': 'analytic', 'N_delta': link.strategy, 'Gamma': 'analytic'})

    def to_dict(self) -> Dict[str, Any]:
        def show(v):
            if isinstance(v, Fraction):
                return f"{v.numerator}/{v.denominator}"
            if isinstance(v, mp.mpf):
                return mp.nstr(v, 20)
            return v
        keys = ('name', 'dimension', 'eps2', 'lam', 'alpha', 'Dtilde', 'eps3', 'D', 'n0', 'eps4',
                'sigma', 'Cbar', 'eta', 'C_eps0', 'C_X', 'N_delta', 'Delta', 'Gamma', 'omega',
                'sigma_sampled')
        out = {k: show(getattr(self, k)) for k in keys}
        out['evidence'] = dict(self.evidence)
        out['Q_count'] = len(self.Q)
        return out


# --- H1: expansion ---

@dataclass(frozen=True)
class ExpansionResult:
    per_branch: Dict[str, ContractionEstimate]
    lam: Number
    evidence: str


def _sampled_contraction_2d(branch, rng: np.random.Generator, count: int = 400) -> float:
    image = branch.image
    points = image.sample(rng, count)
    offsets = rng.normal(size=(count, 2))
    offsets *= (1e-3 * rng.uniform(0.1, 1.0, count) / np.linalg.norm(offsets, axis=1))[:, None]
    partners = points + offsets
    keep = image.contains(partners)
    p, q = points[keep], partners[keep]
    ratio = np.linalg.norm(branch.inverse(p) - branch.inverse(q), axis=1) / np.linalg.norm(p - q, axis=1)
    return float(ratio.max()) if ratio.size else 0.0


def check_expansion(spec: MapSpec, eps2: Optional[Number] = None, seed: Optional[int] = None) -> ExpansionResult:
    """
    Uniform contraction of the inverse branches

    Args:
        spec: The map
        eps2: Pair-distance scale; defaults to the declared ε₂

    Returns:
        Per-branch estimates and the global λ
    """
    eps2 = spec.declared.get('eps2', spec.metric.eps1) if eps2 is None else eps2
    if float(eps2) > float(spec.metric.eps1):
        raise HypothesisError(f"eps2 = {eps2} exceeds eps1 = {spec.metric.eps1}")

    if spec.dimension == 2:
        rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
        per_branch = {}
        for i in range(1, 7):
            for j in (1, 2 if i == 1 else 5 ** i // 2):
                branch = skew_map.cell_branch(i, j)
                sampled = _sampled_contraction_2d(branch, rng)
                declared = branch.contraction_bound
                if sampled > declared * (1 + CROSS_CHECK_TOL) + CROSS_CHECK_TOL:
                    raise HypothesisError(f"{branch.id}: sampled contraction {sampled:.6g} exceeds declared {declared:.6g}")
                per_branch[branch.id] = ContractionEstimate(declared, 'analytic', sampled)
        lam = spec.declared['lambda']
        worst = max(skew_map.column_contraction(i) for i in range(1, skew_map.EXPLICIT_COLUMNS + 1))
        if worst > float(lam):
            raise HypothesisError(f"column contraction {worst:.9f} exceeds declared λ = {mp.nstr(lam, 12)}")
        if lam >= 1:
            raise NotExpanding(f"λ = {mp.nstr(lam, 12)} ≥ 1")
        logger.info(f"✓ H1 (2D): λ = {mp.nstr(lam, 12)}")
        return ExpansionResult(per_branch, lam, 'analytic')

    per_branch: Dict[str, ContractionEstimate] = {}
    for b in spec.all_branches():
        cyl = Cylinder((b.id,), (b,), b.domain, b.image)
        estimate = composite_contraction(cyl, eps2)
        if estimate.evidence == 'analytic' and estimate.sampled is not None:
            bound = _as_float(estimate.value)
            if estimate.sampled > bound * (1 + CROSS_CHECK_TOL) + CROSS_CHECK_TOL:
                logger.error(f"Declared contraction of {b.id} contradicted by sampling")
                raise HypothesisError(f"{b.id}: sampled contraction {estimate.sampled:.12g} exceeds declared {bound:.12g}")
        per_branch[b.id] = estimate
    lam = _max_exact([e.value for e in per_branch.values()])
    evidence = 'analytic' if all(e.evidence == 'analytic' for e in per_branch.values()) else 'sampled'
    if _as_float(lam) >= 1:
        logger.error(f"Map is not expanding: λ = {lam}")
        raise NotExpanding(f"λ = {lam} ≥ 1")
    logger.info(f"✓ H1: λ = {lam} ({evidence})")
    return ExpansionResult(per_branch, lam, evidence)


# --- H2: distortion ---

@dataclass(frozen=True)
class DistortionResult:
    alpha: Number
    Dtilde: Number
    D: Number
    per_branch: Dict[str, Tuple[Optional[Number], float]]
    evidence: str


def _sampled_distortion_1d(branch, alpha: float, eps3: float) -> float:
    lo, hi = branch.image
    hi = min(hi, lo + 1e3)
    levels = []
    for count in (513, 2049, 8193):
        y = np.linspace(lo, hi, count)[1:-1]
        step = y[1] - y[0]
        if step > eps3:
            y = np.linspace(lo, min(hi, lo + eps3 * (count - 1)), count)[1:-1]
            step = y[1] - y[0]
        log_jac = np.log(branch.jacobian(y))
        levels.append(float(np.max(np.abs(np.diff(log_jac))) / step ** alpha))
    if levels[-1] > 4.0 * levels[0] + 1e-12 and levels[-1] > 1e6:
        raise UnboundedDistortion(f"{branch.id}: log-Jacobian ratio keeps growing ({levels})")
    return levels[-1]


def check_distortion(spec: MapSpec, lam: Number, eps3: Optional[Number] = None,
                     alpha: Optional[Number] = None, seed: Optional[int] = None) -> DistortionResult:
    """
    Log-Hölder bound on the Jacobians

    Args:
        spec: The map
        lam: Global λ from check_expansion
        eps3: Pair-distance scale; defaults to the declared ε₃
        alpha: Hölder exponent; defaults to the declared α (1)

    Returns:
        (α, D̃, D = D̃/(1−λ^α)) with evidence
    """
    alpha = spec.declared.get('alpha', Fraction(1)) if alpha is None else alpha
    eps3 = spec.declared.get('eps3', math.inf) if eps3 is None else eps3
    per_branch: Dict[str, Tuple[Optional[Number], float]] = {}

    if spec.dimension == 2:
        rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
        Dtilde = spec.declared['Dtilde']
        for i in range(1, 7):
            branch = skew_map.cell_branch(i, 1)
            points = branch.image.sample(rng, 400)
            partners = points + rng.uniform(-1e-3, 1e-3, points.shape)
            keep = branch.image.contains(partners)
            p, q = points[keep], partners[keep]
            gap = np.linalg.norm(p - q, axis=1) ** float(alpha)
            ratio = np.abs(np.log(branch.jacobian(p)) - np.log(branch.jacobian(q))) / gap
            sampled = float(ratio.max()) if ratio.size else 0.0
            if sampled > float(Dtilde) * (1 + CROSS_CHECK_TOL):
                raise HypothesisError(f"{branch.id}: sampled distortion {sampled:.6g} exceeds D̃ = {Dtilde}")
            per_branch[branch.id] = (Dtilde, sampled)
        evidence = 'analytic'
    else:
        for b in spec.all_branches():
            sampled = _sampled_distortion_1d(b, float(alpha), float(eps3))
            declared = b.distortion_bound
            if declared is not None and sampled > float(declared) * (1 + CROSS_CHECK_TOL) + CROSS_CHECK_TOL:
                logger.error(f"Declared distortion of {b.id} contradicted by sampling")
                raise HypothesisError(f"{b.id}: sampled distortion {sampled:.12g} exceeds declared {declared}")
            per_branch[b.id] = (declared, sampled)
        if all(v[0] is not None for v in per_branch.values()):
            Dtilde = _max_exact([v[0] for v in per_branch.values()])
            evidence = 'analytic'
        else:
            Dtilde = max(v[0] if v[0] is not None else v[1] for v in per_branch.values())
            evidence = 'sampled'

    lam_alpha = _power(lam, alpha) if alpha != 1 else lam
    D = _divide(Dtilde, 1 - lam_alpha) if not isinstance(lam_alpha, mp.mpf) else to_mp(Dtilde) / (1 - lam_alpha)
    logger.info(f"✓ H2: D̃ = {Dtilde}, D = {D} ({evidence})")
    return DistortionResult(alpha, Dtilde, D, per_branch, evidence)


# --- H3: complexity ---

@dataclass(frozen=True)
class ComplexityResult:
    sigma: Number
    sampled: float
    Cbar: Optional[float]
    threshold: Number
    trials: int
    worst: Tuple[Any, float]
    evidence: str


def _push_path(cyl: Cylinder, piece: Interval) -> Optional[Interval]:
    for b in cyl.branches:
        piece = geo.intersect_piece(piece, b.domain)
        if piece is None:
            return None
        piece = b.push(piece)
    return piece


def _is_boundary(point: float, space: Interval, mode: str) -> bool:
    if math.isinf(point):
        return False
    return mode == geo.AMBIENT or not geo.is_space_end(point, space)


def _overlap(u: np.ndarray, v: np.ndarray, a, b) -> np.ndarray:
    return np.clip(np.minimum(v, b) - np.maximum(u, a), 0.0, None)


def complexity_expression(spec: MapSpec, interval: Interval, eps: np.ndarray, depth: int,
                          lam: float, mode: Optional[str] = None) -> np.ndarray:
    """
    Left side of the complexity inequality for one interval over an ε grid (1D)

    Args:
        spec: The map
        interval: Open interval I
        eps: Array of scales
        depth: Iterate n of Tⁿ
        lam: Global λ (as float)
        mode: Boundary mode; defaults to the map's

    Returns:
        Array of ratios (0 where ∂_{λⁿε}I is empty)
    """
    mode = spec.boundary_mode if mode is None else mode
    space = tuple(float(v) for v in spec.space)
    eps = np.asarray(eps, dtype=float)
    a, b = interval
    shrink = lam ** depth * eps
    ba, bb = _is_boundary(a, space, mode), _is_boundary(b, space, mode)
    width = b - a
    denominator = np.zeros_like(eps)
    if ba and bb:
        denominator = np.minimum(2.0 * shrink, width)
    elif ba or bb:
        denominator = np.minimum(shrink, width)
    numerator = np.zeros_like(eps)
    # ∂_{λⁿε}I = I once both strips meet
    saturated = (2.0 * shrink >= width) if (ba and bb) else np.zeros_like(eps, dtype=bool)

    def excluded(u, v):
        total = v - u
        if ba:
            total = total - _overlap(u, v, a, a + shrink)
        if bb:
            total = total - _overlap(u, v, b - shrink, b)
        return np.clip(total, 0.0, None)

    if depth == 1:
        cylinders = [Cylinder((br.id,), (br,), br.domain, br.image) for br in spec.branches_over(interval)]
    else:
        cylinders = cylinders_over(spec, depth, [interval])
    for cyl in cylinders:
        piece = geo.intersect_piece(interval, cyl.domain)
        if piece is None:
            continue
        image = _push_path(cyl, piece)
        if image is None or image[1] <= image[0]:
            continue
        p, q = image
        bp, bq = _is_boundary(p, space, mode), _is_boundary(q, space, mode)
        increasing = all(br.increasing for br in cyl.branches)
        end_of = {p: piece[0] if increasing else piece[1], q: piece[1] if increasing else piece[0]}

        def pulled(s0, s1):
            pts = cyl.composite_inverse(np.concatenate([s0, s1]))
            x0, x1 = pts[:len(s0)], pts[len(s0):]
            x0 = np.where(s0 == p, end_of[p], x0)
            x1 = np.where(s1 == q, end_of[q], x1)
            return np.minimum(x0, x1), np.maximum(x0, x1)

        if bp and bq:
            whole = 2.0 * eps >= q - p
            u1, v1 = pulled(np.full_like(eps, p), np.minimum(p + eps, q))
            u2, v2 = pulled(np.maximum(q - eps, p), np.full_like(eps, q))
            strips = excluded(u1, v1) + excluded(u2, v2)
            full_piece = excluded(np.full_like(eps, piece[0]), np.full_like(eps, piece[1]))
            numerator += np.where(whole, full_piece, strips)
        elif bp:
            top = np.minimum(p + eps, q) if not math.isinf(q) else p + eps
            u, v = pulled(np.full_like(eps, p), top)
            numerator += excluded(u, v)
        elif bq:
            u, v = pulled(np.maximum(q - eps, p), np.full_like(eps, q))
            numerator += excluded(u, v)
    numerator = np.where(saturated, 0.0, numerator)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(denominator > 0, numerator / np.where(denominator > 0, denominator, 1.0), 0.0)


def _trial_intervals(spec: MapSpec, eps4: float, count: int, rng: np.random.Generator) -> List[Interval]:
    lo, hi = _sampling_window(spec)
    cuts = sorted({end for br in spec.all_branches() for end in br.domain
                   if lo < end < hi and not math.isinf(end)})
    hard: List[Interval] = []
    for d in cuts:
        for length in (0.99 * eps4, 0.5 * eps4, 0.1 * eps4):
            for frac in (0.5, 0.25, 0.75, 0.05, 0.95):
                a, b = d - frac * length, d + (1.0 - frac) * length
                if a > lo and b < hi:
                    hard.append((a, b))
    for length in (0.99 * eps4, 0.3 * eps4):
        hard.append((lo, lo + length))
        if not math.isinf(spec.space[1]):
            hard.append((hi - length, hi))
    random_count = max(0, count - len(hard))
    lengths = rng.uniform(eps4 / 100.0, 0.99 * eps4, random_count)
    starts = rng.uniform(lo, hi - lengths)
    out = hard[:count] + [(float(s), float(s + L)) for s, L in zip(starts, lengths)]
    return out


def _trial_boxes(eps4: float, count: int, rng: np.random.Generator) -> List[geo.Box]:
    b = skew_map.breakpoints()
    hard: List[geo.Box] = []
    for i in range(1, 7):
        step = 0.2 if i == 1 else 5.0 ** (-i)
        corner_y = [step * k for k in (1, 2)] + [0.5 - (0.5 % step)]
        for y in corner_y:
            for d in (0.9 * eps4, 0.3 * eps4, 0.05 * eps4):
                for theta in (0.2, math.pi / 4, 1.3):
                    w, h = d * math.cos(theta), d * math.sin(theta)
                    hard.append(geo.Box(b[i] - w / 2, b[i] + w / 2, y - h / 2, y + h / 2))
    for d in (0.9 * eps4, 0.2 * eps4):
        for theta in (0.3, 1.2):
            w, h = d * math.cos(theta), d * math.sin(theta)
            hard.append(geo.Box(1e-9, 1e-9 + w, 0.5 - h / 2, 0.5 + h / 2))
    out = [box for box in hard if _box_inside(box)][:count]
    while len(out) < count:
        d = rng.uniform(eps4 / 20.0, 0.99 * eps4)
        theta = rng.uniform(0.1, math.pi / 2 - 0.1)
        w, h = d * math.cos(theta), d * math.sin(theta)
        x, y = rng.uniform(0.0, 1.04), rng.uniform(0.0, 1.0)
        box = geo.Box(x - w / 2, x + w / 2, y - h / 2, y + h / 2)
        if _box_inside(box):
            out.append(box)
    return out


def _box_inside(box: geo.Box) -> bool:
    return box.x0 > 0 and box.y0 > 0 and box.y1 < 1 and box.x1 < 1 + skew_map.SHEAR * box.y0


def check_complexity(spec: MapSpec, lam: Number, n0: Optional[int] = None, eps4: Optional[Number] = None,
                     trial_count: Optional[int] = None, seed: Optional[int] = None,
                     mode: Optional[str] = None) -> ComplexityResult:
    """
    Sampled sup of the complexity expression

    Args:
        spec: The map
        lam: Global λ
        n0: Iterate of the complexity window (declared, default 1)
        eps4: Largest diameter of tested sets
        trial_count: Number of tested sets; defaults by dimension
        seed: RNG seed
        mode: Boundary-mode override

    Returns:
        σ (declared when available, else sampled), the sampled sup and C̄ when n0 > 1
    """
    n0 = int(spec.declared.get('n0', 1)) if n0 is None else int(n0)
    eps4 = spec.declared.get('eps4') if eps4 is None else eps4
    if trial_count is None:
        trial_count = TRIALS_2D if spec.dimension == 2 else TRIALS_1D
    if trial_count < MIN_TRIALS:
        raise InsufficientTrials(f"{trial_count} trials requested, at least {MIN_TRIALS} needed")
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    lam_f = _as_float(lam)
    threshold = _power(lam, -n0) - 1
    grid = eps_grid(float(eps4))
    worst: Tuple[Any, float] = (None, 0.0)
    sampled = 0.0
    Cbar = None

    if spec.dimension == 2:
        if n0 != 1:
            raise HypothesisError("2D complexity is implemented for n0 = 1")
        for box in _trial_boxes(float(eps4), trial_count, rng):
            for eps in grid:
                ratio = skew_map.complexity_ratio(box, float(eps), lam_f)
                if ratio > sampled:
                    sampled, worst = ratio, (box.as_tuple(), float(eps))
    else:
        intervals = _trial_intervals(spec, float(eps4), trial_count, rng)
        Cbar = 0.0 if n0 > 1 else None
        for interval in intervals:
            ratios = complexity_expression(spec, interval, grid, n0, lam_f, mode)
            k = int(np.argmax(ratios))
            if ratios[k] > sampled:
                sampled, worst = float(ratios[k]), (interval, float(grid[k]))
            for r in range(1, n0):
                Cbar = max(Cbar, float(np.max(complexity_expression(spec, interval, grid, r, lam_f, mode))))
        if len(intervals) < MIN_TRIALS:
            raise InsufficientTrials(f"only {len(intervals)} intervals could be placed")

    declared = spec.declared.get('sigma') if mode is None else None
    if declared is not None:
        if sampled > float(declared) * (1 + CROSS_CHECK_TOL) + CROSS_CHECK_TOL:
            logger.error(f"Sampled complexity {sampled:.12g} above declared σ = {declared}")
            raise HypothesisError(f"sampled complexity {sampled:.12g} exceeds declared σ = {declared} at {worst}")
        sigma, evidence = declared, 'analytic'
    else:
        sigma, evidence = sampled, 'sampled'
    if _as_float(sigma) >= _as_float(threshold):
        logger.error(f"Complexity too large: σ = {sigma} ≥ {threshold}")
        raise ComplexityTooLarge(f"σ = {_as_float(sigma):.6g} ≥ λ^(-n0) − 1 = {_as_float(threshold):.6g}")
    logger.info(f"✓ H3: σ = {sigma} (sampled sup {sampled:.6f} over {trial_count} sets, threshold {_as_float(threshold):.6f})")
    return ComplexityResult(sigma, sampled, Cbar, threshold, trial_count, worst, evidence)


# --- H4: divisibility of large sets ---

def divisibility_constant(dimension: int, eps0: Number, D: Number, alpha: Number = 1,
                          diam_X: Optional[float] = None) -> mp.mpf:
    """C_{ε₀}: e^{Dε₀^α}·6/ε₀ in 1D, e^{D diam(X)^α}·6·d^{3/2}/ε₀ in dimension d ≥ 2"""
    eps0, D, alpha = to_mp(eps0), to_mp(D), to_mp(alpha)
    if dimension == 1:
        return mp.exp(D * eps0 ** alpha) * 6 / eps0
    return mp.exp(D * mp.mpf(diam_X) ** alpha) * 6 * mp.mpf(dimension) ** mp.mpf(1.5) / eps0


def _equal_chop(piece: Interval, eps0: float) -> List[Interval]:
    lo, hi = piece
    k = max(1, math.ceil((hi - lo) / eps0 - 1e-12))
    cuts = np.linspace(lo, hi, k + 1)
    cuts[0], cuts[-1] = lo, hi
    return [(float(cuts[i]), float(cuts[i + 1])) for i in range(k)]


def _grid_chop(piece: Interval, eps0: float, step: float) -> List[Interval]:
    lo, hi = piece
    first = math.floor(lo / step) + 1
    cuts = [lo] + [k * step for k in range(first, math.ceil(hi / step)) if lo < k * step < hi] + [hi]
    cells = [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]
    if len(cells) > 1 and cells[0][1] - cells[0][0] < eps0 / 3:
        cells[1] = (cells[0][0], cells[1][1])
        cells.pop(0)
    if len(cells) > 1 and cells[-1][1] - cells[-1][0] < eps0 / 3:
        cells[-2] = (cells[-2][0], cells[-1][1])
        cells.pop()
    return cells


def _partition_component(piece: Interval, star: Optional[Interval], eps0: float,
                         grid_step: Optional[float]) -> List[Interval]:
    lo, hi = piece
    if hi - lo <= eps0:
        return [piece]
    chop = (lambda p: _grid_chop(p, eps0, grid_step)) if grid_step else (lambda p: _equal_chop(p, eps0))
    if star is None:
        return chop(piece)
    if grid_step:
        cells = chop(piece)
        hit = [i for i, c in enumerate(cells) if c[1] > star[0] and c[0] < star[1]]
        if hit and cells[hit[-1]][1] - cells[hit[0]][0] <= eps0:
            merged = (cells[hit[0]][0], cells[hit[-1]][1])
            return cells[:hit[0]] + [merged] + cells[hit[-1] + 1:]

    center = 0.5 * (star[0] + star[1])
    u0 = max(lo, min(center - eps0 / 3, hi - 2 * eps0 / 3))
    u1 = u0 + 2 * eps0 / 3
    left, right = (lo, u0), (u1, hi)
    short_left = geo.length(left) < eps0 / 3
    short_right = geo.length(right) < eps0 / 3
    if short_left and short_right:
        cut = 0.5 * (lo + hi)
        if star[0] <= cut <= star[1]:
            cut = star[0] if cut - star[0] <= star[1] - cut else star[1]
        return [(lo, cut), (cut, hi)]
    cells: List[Interval] = []
    core = (u0, u1)
    if short_left:
        core = (lo, core[1])
    elif geo.length(left) > 0:
        cells.extend(chop(left) if geo.length(left) > eps0 else [left])
    if short_right:
        core = (core[0], hi)
        cells.append(core)
    else:
        cells.append(core)
        cells.extend(chop(right) if geo.length(right) > eps0 else [right])
    return cells


def build_partition_of_large_set(spec: MapSpec, V: Union[Sequence[Interval], Interval, geo.Box],
                                 V_star: Optional[Union[Interval, geo.Box]], eps0: Number,
                                 eta: Optional[Number] = None,
                                 grid_step: Optional[float] = None) -> List[Any]:
    """
    Partition an open set into cells of diameter at most ε₀, one of them containing V_star

    Args:
        spec: The map (fixes the dimension)
        V: Open set (interval, list of intervals, or a box in 2D)
        V_star: Protected subset, or None
        eps0: ε₀
        eta: Largest admissible diam V_star / ε₀ (declared η, default 1/3)
        grid_step: Cut at multiples of this step instead of equal chopping (1D)

    Returns:
        Cells (intervals in 1D, boxes in 2D) in left-to-right order
    """
    eta = spec.declared.get('eta', Fraction(1, 3)) if eta is None else eta
    eps0 = float(eps0)
    if spec.dimension == 2:
        return _partition_box(V, V_star, eps0, float(eta))
    pieces = [V] if isinstance(V, tuple) else list(V)
    pieces = geo.normalize(pieces)
    if V_star is not None and V_star[1] - V_star[0] > float(eta) * eps0 * (1 + 1e-12):
        logger.error(f"Protected set too large: {V_star}")
        raise VStarTooLarge(f"diam V_star = {V_star[1] - V_star[0]:.6g} > η·ε₀ = {float(eta) * eps0:.6g}")
    if grid_step is not None and not (eps0 / 3 <= grid_step <= 2 * eps0 / 3):
        raise ValueError("grid_step must lie in [ε₀/3, 2ε₀/3]")
    cells: List[Interval] = []
    for piece in pieces:
        star = None
        if V_star is not None and piece[0] <= V_star[0] and V_star[1] <= piece[1]:
            star = V_star
        cells.extend(_partition_component(piece, star, eps0, grid_step))
    return cells


def _partition_box(V: geo.Box, V_star: Optional[geo.Box], eps0: float, eta: float) -> List[geo.Box]:
    if V.diameter <= eps0:
        return [V]
    if V_star is not None and V_star.diameter > eta * eps0 * (1 + 1e-12):
        raise VStarTooLarge(f"diam V_star = {V_star.diameter:.6g} > η·ε₀ = {eta * eps0:.6g}")
    side = eps0 / (3.0 * math.sqrt(2.0))
    nx, ny = math.ceil(V.width / side), math.ceil(V.height / side)
    xs = [V.x0 + k * side for k in range(nx)] + [V.x1]
    ys = [V.y0 + k * side for k in range(ny)] + [V.y1]
    block = None
    if V_star is not None:
        cx, cy = V_star.center
        ix = min(nx - 1, int((cx - V.x0) // side))
        iy = min(ny - 1, int((cy - V.y0) // side))
        block = (max(0, ix - 1), min(nx - 1, ix + 1), max(0, iy - 1), min(ny - 1, iy + 1))
    cells: List[geo.Box] = []
    if block is not None:
        cells.append(geo.Box(xs[block[0]], xs[block[1] + 1], ys[block[2]], ys[block[3] + 1]))
    for ix in range(nx):
        for iy in range(ny):
            if block is not None and block[0] <= ix <= block[1] and block[2] <= iy <= block[3]:
                continue
            cells.append(geo.Box(xs[ix], xs[ix + 1], ys[iy], ys[iy + 1]))
    return cells


def partition_boundary_ratio(spec: MapSpec, V: Sequence[Interval], cells: Sequence[Interval],
                             eps: float, cylinder: Optional[Cylinder] = None) -> float:
    """Σ m(h(∂_ε U \\ ∂_ε V)) / m(h(V)) for a 1D partition, h the cylinder's inverse (identity if None)"""
    space, mode = tuple(float(v) for v in spec.space), spec.boundary_mode
    V = geo.normalize(V)
    outer = geo.eps_boundary(V, eps, space, mode)

    def measure(pieces):
        if cylinder is None:
            return geo.total_length(pieces)
        return sum(geo.length(cylinder.pull(p)) for p in pieces)

    total = 0.0
    for cell in cells:
        strips = geo.eps_boundary([cell], eps, space, mode)
        for cut in outer:
            strips = geo.subtract_closed(strips, cut)
        total += measure(strips)
    return total / measure(V)


# --- H5: positively linked ---

def largest_piece_bound(z: Sequence[float], c: float) -> float:
    """
    Lower bound on max_j z_j·α_j over α ≥ 0 with Σα_j = c

    Args:
        z: Expansion factors, all positive
        c: Total length

    Returns:
        c / Σ z_j^{-1}
    """
    if not z or any(v <= 0 for v in z):
        raise ValueError("expansion factors must be positive")
    return c / sum(1.0 / v for v in z)


@dataclass(frozen=True)
class GrowthPath:
    steps: int
    word: Tuple[str, ...]
    piece: Interval
    covered: str
    origin: Interval


@dataclass(frozen=True)
class LinkResult:
    N: int
    E: int
    N_delta: int
    Q: Tuple[Interval, ...]
    omega: Interval
    Delta: Number
    Gamma: Number
    C_X: Number
    strategy: str
    s_H: Optional[Number]
    delta_max: Optional[float]
    max_tile_steps: int
    overlap_worst: float


def _shaved(branch, part: Interval, shave: float) -> Interval:
    if branch.singular_end == 'right':
        return (part[0], min(part[1], branch.domain[1] - shave))
    if branch.singular_end == 'left':
        return (max(part[0], branch.domain[0] + shave), part[1])
    return part


def _materialized_reach(spec: MapSpec) -> Tuple[Optional[float], float]:
    """Right end of the materialized branches of a generated map, and the longest domain"""
    branches = spec.all_branches()
    longest = max(geo.length(b.domain) for b in branches)
    if spec.generator is None:
        return None, longest
    return max(b.domain[1] for b in branches), longest


def grow_interval(spec: MapSpec, J: Interval, shave: float = 0.0, cap: int = SEARCH_CAP) -> GrowthPath:
    """
    Iterate the largest image piece until it contains a full partition element

    Args:
        spec: The map (1D)
        J: Starting interval
        shave: Length removed next to singular branch ends before pushing
        cap: Largest number of steps

    Returns:
        Steps taken, the branch word, the final piece and its origin inside J
    """
    piece = J
    path = []
    reach, longest = _materialized_reach(spec)
    for step in range(cap + 1):
        overlapping = spec.branches_over(piece)
        full = [b for b in overlapping if piece[0] <= b.domain[0] and b.domain[1] <= piece[1]]
        if full:
            origin = full[0].domain
            for b in reversed(path):
                origin = b.pull(origin)
            return GrowthPath(step, tuple(b.id for b in path), piece, full[0].id, origin)
        if reach is not None and piece[1] > reach and geo.length(piece) >= 2 * longest:
            # generated branches tile X beyond the truncation, so a piece of twice the longest domain holds one
            origin = (piece[0], piece[0] + 2 * longest)
            for b in reversed(path):
                origin = b.pull(origin)
            return GrowthPath(step, tuple(b.id for b in path), piece, 'beyond truncation', origin)
        if step == cap:
            break
        best = None
        for b in overlapping:
            part = geo.intersect_piece(piece, b.domain)
            if part is None:
                continue
            part = _shaved(b, part, shave)
            if part[1] <= part[0]:
                continue
            image = b.push(part)
            if best is None or geo.length(image) > geo.length(best[1]):
                best = (b, image)
        if best is None:
            raise SearchDiverged(f"interval {J} vanished after shaving at step {step}")
        path.append(best[0])
        piece = best[1]
    raise SearchDiverged(f"interval {J} did not cover a partition element within {cap} steps")


def _push_union(spec: MapSpec, pieces: Sequence[Interval]) -> List[Interval]:
    out = []
    for piece in pieces:
        for b in spec.branches_over(piece):
            part = geo.intersect_piece(piece, b.domain)
            if part is not None:
                out.append(b.push(part))
    return geo.merge_touching(out)


def _covering_iterate(spec: MapSpec, omega: Interval, cap: int = 20) -> int:
    """Least E ≥ 1 with T^E(O) ⊇ ω for every partition element O"""
    worst = 0
    for b in spec.all_branches():
        pieces = [b.image]
        for e in range(1, cap + 1):
            if geo.covers(pieces, omega):
                worst = max(worst, e)
                break
            pieces = _push_union(spec, pieces)
        else:
            raise SearchDiverged(f"T^e({b.id}) does not cover ω within {cap} steps")
    return worst


def _adjacent_pairs(spec: MapSpec):
    branches = spec.all_branches()
    for left, right in zip(branches, branches[1:]):
        if abs(left.domain[1] - right.domain[0]) <= 1e-12 * max(1.0, abs(right.domain[0])):
            yield left, right


def _jacobian_floor(spec: MapSpec, shave: float) -> Number:
    floors: List[Number] = []
    for b in spec.all_branches():
        if b.singular_end is not None:
            lo, hi = b.domain
            inner = (lo, hi - shave) if b.singular_end == 'right' else (lo + shave, hi)
            image = b.push(inner)
            end = image[1] if b.increasing else image[0]
            floors.append(float(b.jacobian(np.array([end]))[0]))
        elif b.jacobian_floor is not None:
            floors.append(b.jacobian_floor)
        else:
            lo, hi = b.image
            y = np.linspace(lo, min(hi, lo + 1e3), 4097)[1:-1]
            floors.append(float(np.min(b.jacobian(y))))
    return min(floors, key=_as_float)


def _check_good_overlap(spec: MapSpec, omega: Interval, eps0: float, rng: np.random.Generator,
                        C_X: float, count: int = 200) -> float:
    """Worst LHS/RHS of the good-overlap inequality on sampled V ⊇ ω"""
    # balls of the line: both ends of V count as boundary
    space, mode = tuple(float(v) for v in spec.space), geo.AMBIENT
    worst = 0.0
    slack = eps0 - geo.length(omega)
    for _ in range(count):
        left = rng.uniform(0.0, slack)
        right = rng.uniform(0.0, slack - left)
        V = (max(space[0], omega[0] - left), omega[1] + right)
        for eps in eps_grid(eps0, 8):
            lhs = geo.total_length(geo.subtract_many(geo.eps_boundary([omega], eps, space, mode),
                                                     geo.eps_boundary([V], eps, space, mode)))
            rest = geo.subtract_closed([V], omega)
            lhs += geo.total_length(geo.subtract_many(geo.eps_boundary(rest, eps, space, mode),
                                                      geo.eps_boundary([V], eps, space, mode)))
            rhs = C_X * geo.eps_boundary_length([V], eps, space, mode)
            if rhs > 0:
                worst = max(worst, lhs / rhs)
            elif lhs > 0:
                worst = math.inf
    if worst > 1.0 + 1e-9:
        raise HypothesisError(f"ω = {omega} fails the good-overlap inequality (ratio {worst:.6g})")
    return worst


def positively_linked_search(spec: MapSpec, delta0: Number, constants_so_far: Mapping[str, Any],
                             shave: Optional[Number] = None, cap: int = SEARCH_CAP,
                             sample_tiles: int = 64, seed: Optional[int] = None) -> LinkResult:
    """
    Find N_δ, 𝓠, ω, Δ_δ, Γ_{N_δ} and C_X for a 1D map

    Args:
        spec: The map (1D)
        delta0: δ₀ from the constants chain
        constants_so_far: Needs 'eps0' and 'M'
        shave: Fraction s of δ₁ removed next to singular ends (declared, default 0.6)
        cap: Largest admissible N
        sample_tiles: Number of tiles verified by direct growth

    Returns:
        LinkResult
    """
    if spec.dimension != 1:
        raise HypothesisError("the positively-linked search is implemented for 1D maps only")
    eps0_exact = constants_so_far['eps0']
    eps0 = float(eps0_exact)
    M = int(constants_so_far.get('M', 1))
    delta1 = float(delta0) / 3.0
    s = spec.declared.get('singular_shave', DEFAULT_SHAVE) if shave is None else shave
    singular = any(b.singular_end for b in spec.all_branches())
    shave_length = float(s) * delta1 if singular else 0.0
    lo = float(spec.space[0])
    omega = (lo, lo + eps0 / 3.0)
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    C_X = Fraction(1)

    full_branch = all(geo.covers([b.image], tuple(float(v) for v in spec.space)) for b in spec.all_branches())
    pairs = list(_adjacent_pairs(spec))
    s_H = _max_exact([a.contraction_bound + b.contraction_bound for a, b in pairs]) if pairs else None
    delta_max = max(geo.length(a.domain) + geo.length(b.domain) for a, b in pairs) if pairs else None

    if full_branch:
        strategy = 'full-branch'
        biggest = max(geo.length(b.domain) for b in spec.all_branches())
        lam = _as_float(_max_exact([b.contraction_bound for b in spec.all_branches()]))
        N = 1
        while lam ** (N - 1) * biggest > delta1 / 2.0:
            N += 1
            if N > cap:
                raise SearchDiverged(f"cylinders do not shrink below δ₁/2 within {cap} steps")
        E = 0
    else:
        strategy = 'interval-growth'
        if s_H is None or _as_float(s_H) >= 1:
            logger.error(f"Interval growth impossible: s_H = {s_H}")
            raise SearchDiverged(f"adjacent contraction sum s_H = {s_H} is not below 1")
        L, N = delta1, 0
        while L < delta_max:
            L = (L - shave_length) / _as_float(s_H)
            N += 1
            if L <= 0 or N > cap:
                raise SearchDiverged(f"interval growth did not reach δ_max within {cap} steps")
        E = _covering_iterate(spec, omega)
    N_delta = max(N + E, M)

    # direct verification on sampled tiles
    window = _sampling_window(spec)
    starts = np.concatenate([[window[0], window[1] - delta1],
                             rng.uniform(window[0], window[1] - delta1, max(0, sample_tiles - 2))])
    Q: List[Interval] = []
    max_steps = 0
    for a in starts:
        tile = (float(a), float(a) + delta1)
        if full_branch:
            inside = [c for c in cylinders_over(spec, N, [tile])
                      if tile[0] <= c.domain[0] and c.domain[1] <= tile[1]]
            if not inside:
                raise HypothesisError(f"tile {tile} contains no depth-{N} cylinder")
            Q.append(inside[0].domain)
            continue
        path = grow_interval(spec, tile, shave_length, cap)
        max_steps = max(max_steps, path.steps)
        if path.steps > N:
            raise HypothesisError(f"tile {tile} needed {path.steps} > N = {N} growth steps")
        Q.append(path.origin)

    g = _jacobian_floor(spec, shave_length)
    Gamma = _power(g, N_delta) if isinstance(g, Fraction) else to_mp(g) ** N_delta
    Delta = _divide(eps0_exact, 3)
    worst = _check_good_overlap(spec, omega, eps0, rng, float(C_X))
    logger.info(f"✓ H5 ({strategy}): N = {N}, E = {E}, N_δ = {N_delta}, Γ = {mp.nstr(to_mp(Gamma), 6)}")
    return LinkResult(N=N, E=E, N_delta=N_delta, Q=tuple(Q), omega=omega, Delta=Delta, Gamma=Gamma,
                      C_X=C_X, strategy=strategy, s_H=s_H, delta_max=delta_max,
                      max_tile_steps=max_steps, overlap_worst=worst)


# --- H6/H7/H8: inducing partition ---

@dataclass
class InducingPartition:
    """Grid partition 𝓡 with the verdicts of the inducing hypotheses"""

    dimension: int
    cell_size: float
    origin: float
    count: int
    c: float
    c_R: float
    C_R: float
    boundary_sup: float
    Z: Optional[Any] = None
    Zprime: Optional[Any] = None
    P_Z: List[Dict[str, Any]] = field(default_factory=list)
    returns: List[int] = field(default_factory=list)
    gcd: Optional[int] = None
    verdicts: Dict[str, bool] = field(default_factory=dict)

    def cell(self, k: int) -> Interval:
        return (self.origin + k * self.cell_size, self.origin + (k + 1) * self.cell_size)

    def cells_in(self, piece: Interval) -> range:
        """Indices of the cells contained in a piece (1D)"""
        first = math.ceil((piece[0] - self.origin) / self.cell_size - 1e-9)
        last = math.floor((piece[1] - self.origin) / self.cell_size + 1e-9)
        return range(max(first, 0), min(last, self.count))

    @property
    def mass(self) -> float:
        return self.cell_size ** self.dimension


def _return_times(spec: MapSpec, Z: Interval, depth: int) -> List[int]:
    pieces = [Z]
    found = []
    for n in range(1, depth + 1):
        pieces = _push_union(spec, pieces)
        if geo.covers(pieces, Z):
            found.append(n)
            if len(found) >= 2 and math.gcd(*found) == 1:
                break
        if len(pieces) > 5000:
            pieces = geo.merge_touching(pieces, tol=1e-9)
    return found


def check_inducing_partition(spec: MapSpec, delta0: Number, c: Optional[float] = None,
                             depth: int = SEARCH_CAP, samples: int = 200,
                             seed: Optional[int] = None) -> InducingPartition:
    """
    Build the grid partition 𝓡 and check its boundary, containment and return properties

    Args:
        spec: The map
        delta0: δ₀ from the constants chain
        c: Cell side as a fraction of δ₀ (1/3 in 1D, 0.01 in 2D)
        depth: Search depth for returns TⁿZ ⊇ Z
        samples: Number of sampled δ₀-regular sets for the containment check

    Returns:
        InducingPartition with Z, Z′ and 𝓟_Z where the map provides them
    """
    delta0 = float(delta0)
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    if spec.dimension == 2:
        return _inducing_partition_2d(spec, delta0, 0.01 if c is None else c)

    c = 1.0 / 3.0 if c is None else c
    side = c * delta0
    lo, hi = _sampling_window(spec)
    count = int(math.floor((hi - lo) / side))
    partition = InducingPartition(dimension=1, cell_size=side, origin=lo, count=count, c=c,
                                  c_R=1.0 - c, C_R=2.0, boundary_sup=0.0)
    space, mode = tuple(float(v) for v in spec.space), geo.AMBIENT
    for eps in eps_grid(delta0):
        partition.boundary_sup = max(partition.boundary_sup,
                                     geo.eps_boundary_length([partition.cell(1)], eps, space, mode) / eps)
    containment = True
    for _ in range(samples):
        length = rng.uniform(2 * delta0, 6 * delta0)
        a = rng.uniform(lo, hi - length)
        I = (a, a + length)
        cells = partition.cells_in(I)
        if len(cells) == 0:
            containment = False
            continue
        R = partition.cell(cells[len(cells) // 2])
        rest = geo.subtract_closed([I], R)
        containment &= geo.total_length(rest) >= partition.c_R * length - 1e-15
        for eps in eps_grid(delta0, 6):
            new = geo.subtract_many(geo.eps_boundary(rest, eps, space, mode),
                                    geo.eps_boundary([I], eps, space, mode))
            containment &= geo.total_length(new) <= partition.C_R * geo.eps_boundary_length([I], eps, space, mode) + 1e-15
    partition.verdicts['boundary'] = partition.boundary_sup <= 2.0 + 1e-9
    partition.verdicts['containment'] = bool(containment)

    Z = partition.cell(0)
    returns = _return_times(spec, Z, depth)
    if not returns or math.gcd(*returns) != 1:
        logger.error(f"No return set found for Z = {Z} within depth {depth}")
        raise NoZFound(f"gcd of returns of Z = {Z} within depth {depth} is not 1 (found {returns})")
    partition.Z, partition.returns, partition.gcd = Z, returns, math.gcd(*returns)
    partition.verdicts['gcd'] = True
    logger.info(f"✓ H6/H7: {count} cells of side {side:.3e}, Z = {Z}, returns {returns}")
    return partition


def _inducing_partition_2d(spec: MapSpec, delta0: float, c: float) -> InducingPartition:
    side = c * delta0
    ny = int(math.floor(1.0 / side))
    partition = InducingPartition(dimension=2, cell_size=side, origin=0.0, count=ny * ny, c=c,
                                  c_R=1.0 - c * c / math.pi, C_R=4.0, boundary_sup=0.0)
    corner = geo.Box(0.0, side, 0.0, side)
    for eps in eps_grid(delta0):
        partition.boundary_sup = max(partition.boundary_sup, corner.eps_boundary_area(eps) / eps)
    partition.verdicts['boundary'] = partition.boundary_sup <= 4.0 * side * (1 + 1e-9)
    partition.verdicts['containment'] = partition.mass <= (1.0 - partition.c_R) * math.pi * delta0 ** 2 * (1 + 1e-9)

    row = math.floor(0.5 / side)
    Z = geo.Box(0.0, side, row * side, (row + 1) * side)
    # columns from i0 on lie inside (0, side) and every cell row 5^{-i} is far below side
    i0 = skew_map.whole_column_index(side)
    if i0 * mp.log(5) <= mp.log(2 / side):
        raise NoZFound(f"rows of column {mp.nstr(i0, 6)} are not thin enough for Z")
    radius = side * math.sqrt(1.0 / (2.0 * (1.0 - partition.c_R))) * 1.01
    Zprime = geo.Box(0.0, radius, 0.5 - radius, 0.5 + radius)
    if not (Zprime.contains_box(Z) and Zprime.x1 < 1.0 and Zprime.y1 < 1.0):
        raise NoZFound("Z′ does not fit inside the unit square")
    partition.Z, partition.Zprime = Z, Zprime
    partition.P_Z = [{'column': i0 + m, 'row_offset': k, 'log_area': skew_map.log_cell_area(i0 + m),
                      'log_jacobian_floor': skew_map.log_jacobian_floor(i0 + m)}
                     for m in range(2) for k in range(2)]
    witnesses = [cell for cell in partition.P_Z if _cell_inside_box(cell, Z)]
    if not witnesses:
        raise NoZFound(f"no cell of columns {mp.nstr(i0, 6)}, {mp.nstr(i0 + 1, 6)} lies inside Z = {Z.as_tuple()}")
    partition.returns = _returns_from_witnesses(witnesses, Z, depth=2)
    if not partition.returns:
        raise NoZFound(f"the cells inside Z = {Z.as_tuple()} do not map over Z")
    partition.gcd = math.gcd(*partition.returns)
    partition.verdicts.update({'gcd': partition.gcd == 1, 'TZ_contains_Z': 1 in partition.returns,
                               'Zprime': Zprime.area * (1.0 - partition.c_R) >= Z.area * (1 - 1e-9)})
    logger.info(f"✓ H6–H8 (2D): side {side:.3e}, i0 ≈ 10^{mp.nstr(mp.log10(i0), 6)}, "
                f"{len(witnesses)} cells witness TZ ⊇ Z, returns {partition.returns}")
    return partition


def _cell_inside_box(cell: Dict[str, Any], box: geo.Box) -> bool:
    """Whether column `cell['column']` lies in the box's x-range with a whole row inside its y-range"""
    i = cell['column']
    if i < skew_map.whole_column_index(box.x1) or box.x0 >= skew_map.column_breakpoint(i):
        return False
    row_height = -i * mp.log(5)
    return row_height + mp.log(2 + cell['row_offset']) < mp.log(box.y1 - box.y0)


def _returns_from_witnesses(witnesses: List[Dict[str, Any]], Z: geo.Box, depth: int) -> List[int]:
    """
    Return times n ≤ depth with TⁿZ ⊇ Z, read off the whole cells of Z

    A witness cell lies in Z and its branch maps it onto a region holding (0, 1)², so
    TZ ⊇ Z once Z ⊂ (0, 1)²; TⁿZ ⊇ Tⁿ⁻¹Z ⊇ Z then holds for every later n.
    """
    inside_square = Z.x0 >= 0 and Z.y0 >= 0 and Z.x1 <= 1 and Z.y1 <= 1
    if not inside_square or not any(skew_map.image_holds_unit_square(c['column']) for c in witnesses):
        return []
    return list(range(1, depth + 1))


# --- Certificate assembly ---

def certify(spec: MapSpec, trial_count: Optional[int] = None, seed: Optional[int] = None,
            n0: Optional[int] = None) -> HypothesisCertificate:
    """
    Run the expansion, distortion, complexity checks and prepare the linking step

    Args:
        spec: The map
        trial_count: Complexity trials (defaults by dimension)
        seed: RNG seed of every sampled check
        n0: Complexity iterate (declared default)

    Returns:
        Certificate; the positively-linked fields are filled by its linker once δ₀ is known
    """
    logger.info(f"Certifying {spec.name or 'map'}")
    expansion = check_expansion(spec, seed=seed)
    distortion = check_distortion(spec, expansion.lam, seed=seed)
    complexity = check_complexity(spec, expansion.lam, n0=n0, trial_count=trial_count, seed=seed)
    declared = spec.declared
    cert = HypothesisCertificate(
        name=spec.name, dimension=spec.dimension,
        eps2=declared.get('eps2', spec.metric.eps1), lam=expansion.lam,
        alpha=distortion.alpha, Dtilde=distortion.Dtilde, eps3=declared.get('eps3', spec.metric.eps1),
        D=distortion.D, n0=int(declared.get('n0', 1)) if n0 is None else n0,
        eps4=declared['eps4'], sigma=complexity.sigma, Cbar=complexity.Cbar,
        eta=declared.get('eta', Fraction(1, 3)),
        evidence={'lambda': expansion.evidence, 'Dtilde': distortion.evidence, 'sigma': complexity.evidence},
        sigma_sampled=complexity.sampled, declared=dict(declared))
    if spec.dimension == 1:
        cert.linker = lambda delta0, constants, **kw: positively_linked_search(spec, delta0, constants, seed=seed, **kw)
    logger.info(f"✓ Certificate ready for {spec.name}")
    return cert
