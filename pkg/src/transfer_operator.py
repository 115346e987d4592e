"""
Transfer Operator for expmix
Density evolution ℒf = Σ f∘h·Jh·1_{T(O_h)} on grids, invariant densities and Monte-Carlo cross-checks
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats
from scipy.integrate import trapezoid
from scipy.special import roots_legendre

import geometry as geo
from errors import NoConvergence, TransferError, TruncationInsufficient
from map_model import Interval, MapSpec
from settings import DEFAULT_SEED, DENSITY_NODES
from standard_families import StandardFamily, support_cap

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

EXACT_STEPS = 8
MASS_TOL = 1e-8
TAIL_BUDGET = 1e-9
MAX_ITERATIONS = 10_000
GAUSS_ORDER = 32
SEGMENTS = 256
MC_POINTS = 10**7
MC_BINS = 512
MC_CHAINS = 100_000
MC_BURN_IN = 64


def _gauss_rule(edges: np.ndarray, order: int = GAUSS_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on every segment between consecutive edges"""
    t, w = roots_legendre(order)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    x = 0.5 * (a + b)[:, None] + half[:, None] * t[None, :]
    return x.ravel(), (half[:, None] * w[None, :]).ravel()


def _edges(points: Sequence[float], lo: float, hi: float, segments: int = SEGMENTS) -> np.ndarray:
    """Sorted breakpoints inside [lo, hi], refined so no segment exceeds (hi − lo)/segments"""
    base = np.unique(np.clip(np.concatenate([[lo, hi], np.asarray(points, dtype=float)]), lo, hi))
    step = (hi - lo) / segments
    out = [base[0]]
    for a, b in zip(base[:-1], base[1:]):
        k = max(1, int(math.ceil((b - a) / step)))
        out.extend(np.linspace(a, b, k + 1)[1:])
    return np.asarray(out)


@dataclass
class GridDensity:
    """Density on a node grid, optionally backed by an exact callable and its discontinuities"""

    nodes: np.ndarray
    values: np.ndarray
    support: List[Interval]
    source: Optional[Callable[[np.ndarray], np.ndarray]] = None
    breakpoints: Tuple[float, ...] = ()

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], support: Sequence[Interval],
                      n_nodes: Optional[int] = None, breakpoints: Sequence[float] = ()) -> 'GridDensity':
        support = geo.normalize(support)
        nodes = np.linspace(support[0][0], support[-1][1], DENSITY_NODES if n_nodes is None else n_nodes)
        return cls(nodes, np.asarray(func(nodes), dtype=float), support, func, tuple(breakpoints))

    @classmethod
    def uniform(cls, support: Sequence[Interval], n_nodes: Optional[int] = None) -> 'GridDensity':
        support = geo.normalize(support)
        height = 1.0 / geo.total_length(support)

        def func(x):
            x = np.asarray(x, dtype=float)
            inside = np.zeros(x.shape, dtype=bool)
            for a, b in support:
                inside |= (x >= a) & (x <= b)
            return np.where(inside, height, 0.0)
        ends = [e for piece in support for e in piece]
        return cls.from_function(func, support, n_nodes, ends)

    @classmethod
    def from_family(cls, family: StandardFamily, n_nodes: Optional[int] = None) -> 'GridDensity':
        """ρ_G of a standard family with its piece ends as breakpoints"""
        pieces = [p for pair in family.pairs for p in pair.pieces]
        ends = sorted({e for p in pieces for e in p})
        return cls.from_function(family.density_at, geo.merge_touching(pieces), n_nodes, ends)

    @property
    def lo(self) -> float:
        return float(self.support[0][0])

    @property
    def hi(self) -> float:
        return float(self.support[-1][1])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.source is not None:
            return self.source(x)
        return np.interp(x, self.nodes, self.values, left=0.0, right=0.0)

    def mass(self) -> float:
        if self.source is None:
            return float(trapezoid(self.values, self.nodes))
        x, w = _gauss_rule(_edges(self.breakpoints, self.lo, self.hi))
        return float(w @ self(x))

    def on_grid(self) -> 'GridDensity':
        """Drop the exact source and keep the sampled values"""
        return GridDensity(self.nodes, np.asarray(self(self.nodes), dtype=float), self.support)


def _transfer(spec: MapSpec, g: Callable[[np.ndarray], np.ndarray], x: np.ndarray, cap: float) -> np.ndarray:
    """One application of ℒ at the points x"""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    for b in spec.all_branches():
        lo, hi = b.image
        mask = (x >= lo) & (x <= min(hi, cap))
        if mask.any():
            y = x[mask]
            out[mask] += g(b.inverse(y)) * b.jacobian(y)
    return out


def _propagate(spec: MapSpec, points: Sequence[float], cap: float) -> List[float]:
    """Possible discontinuities of ℒg given those of g"""
    out = {float(e) for b in spec.all_branches() for e in b.image if not math.isinf(e) and e <= cap}
    out.add(cap)
    for p in points:
        for b in spec.branches_over((p, p)):
            if b.domain[0] < p < b.domain[1]:
                q = float(b.forward(np.array([p]))[0])
                if q <= cap:
                    out.add(q)
    return sorted(out)


def _space_support(spec: MapSpec) -> List[Interval]:
    return [(float(spec.space[0]), support_cap(spec))]


def _on_space(spec: MapSpec, f: GridDensity) -> GridDensity:
    """f sampled on a grid spanning the whole (truncated) space"""
    support = _space_support(spec)
    nodes = np.linspace(support[0][0], support[0][1], len(f.nodes))
    return GridDensity(nodes, np.asarray(f(nodes), dtype=float), support)


def apply_L(spec: MapSpec, f: GridDensity, n: int = 1, mode: str = 'auto') -> GridDensity:
    """
    Apply the transfer operator n times

    Args:
        spec: The map (1D)
        f: Density
        n: Steps (≥ 1)
        mode: 'exact' (recursive branch sums at any point), 'grid' (stepwise on f's nodes) or 'auto'

    Returns:
        ℒⁿf; the exact mode keeps a callable source and its breakpoints
    """
    if n < 1:
        raise ValueError("apply_L needs n ≥ 1")
    tail = n * spec.truncation_tail(f.support)
    if tail > TAIL_BUDGET:
        logger.error(f"Tail bound {tail:.3e} of the truncated branch family is too large")
        raise TruncationInsufficient(f"tail bound {tail:.3e} exceeds {TAIL_BUDGET:.0e}")
    if mode == 'auto':
        mode = 'exact' if (n <= EXACT_STEPS and f.source is not None) else 'grid'
    cap = support_cap(spec)
    support = _space_support(spec)
    before = f.mass()

    if mode == 'exact':
        if f.source is None:
            raise TransferError("exact mode needs a density with a callable source")
        source, points = f.source, list(f.breakpoints)
        for _ in range(n):
            source = (lambda g: (lambda x: _transfer(spec, g, x, cap)))(source)
            points = _propagate(spec, points, cap)
        nodes = np.linspace(support[0][0], support[0][1], len(f.nodes))
        out = GridDensity(nodes, np.asarray(source(nodes)), support, source, tuple(points))
    elif mode == 'grid':
        current = _on_space(spec, f)
        values = current.values
        for _ in range(n):
            previous = GridDensity(current.nodes, values, current.support)
            values = _transfer(spec, previous, current.nodes, cap)
        out = GridDensity(current.nodes, values, current.support)
    else:
        raise ValueError(f"unknown mode '{mode}'")

    after = out.mass()
    if abs(after - before) > MASS_TOL * max(1.0, before):
        logger.warning(f"ℒ^{n}: mass changed from {before:.12f} to {after:.12f}")
    return out


def l1_distance(f: GridDensity, g: GridDensity) -> float:
    """∫ |f − g| over the union of both supports"""
    lo, hi = min(f.lo, g.lo), max(f.hi, g.hi)
    if f.source is None and g.source is None:
        nodes = np.union1d(f.nodes, g.nodes)
        return float(trapezoid(np.abs(f(nodes) - g(nodes)), nodes))
    points = list(f.breakpoints) + list(g.breakpoints) + [f.lo, f.hi, g.lo, g.hi]
    if f.source is None:
        points += list(f.nodes)
    if g.source is None:
        points += list(g.nodes)
    x, w = _gauss_rule(_edges(points, lo, hi))
    return float(w @ np.abs(f(x) - g(x)))


@dataclass
class InvariantResult:
    density: GridDensity
    residual: float
    iterations: int


def invariant_density(spec: MapSpec, report=None, tol: float = 1e-6, max_iterations: int = MAX_ITERATIONS,
                      n_nodes: Optional[int] = None) -> InvariantResult:
    """
    Iterate ℒ from the uniform density until ‖ℒf − f‖₁ < tol

    Args:
        spec: The map (1D)
        report: Constants report (logged alongside the residual when given)
        tol: Residual target
        max_iterations: Iteration cap

    Returns:
        InvariantResult with the grid density, the last residual and the iteration count
    """
    cap = support_cap(spec)
    support = _space_support(spec)
    f = GridDensity.uniform(support, n_nodes).on_grid()
    residual = math.inf
    for k in range(1, max_iterations + 1):
        values = _transfer(spec, f, f.nodes, cap)
        mass = float(trapezoid(values, f.nodes))
        if not mass > 0:
            raise TransferError("density vanished while iterating")
        g = GridDensity(f.nodes, values / mass, support)
        residual = l1_distance(f, g)
        f = g
        if residual < tol:
            suffix = f", bound C = {float(report.C):.3f}" if report is not None and report.complete else ''
            logger.info(f"✓ Invariant density of {spec.name}: residual {residual:.2e} after {k} steps{suffix}")
            return InvariantResult(f, residual, k)
    logger.error(f"No convergence after {max_iterations} iterations (residual {residual:.3e})")
    raise NoConvergence(f"residual {residual:.3e} ≥ {tol:.1e} after {max_iterations} iterations")


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * np.diff(self.edges))

    @property
    def sigma(self) -> np.ndarray:
        """Binomial standard error of the density in each bin"""
        p = self.counts / self.total
        return np.sqrt(np.maximum(p * (1 - p), 1.0 / self.total) / self.total) / np.diff(self.edges)


def monte_carlo_histogram(spec: MapSpec, points: int = MC_POINTS, bins: int = MC_BINS,
                          chains: int = MC_CHAINS, burn_in: int = MC_BURN_IN,
                          seed: Optional[int] = None) -> Histogram:
    """
    Histogram of orbit points of many independent chains

    Args:
        spec: The map (1D)
        points: Total number of recorded orbit points
        bins: Number of equal bins over the (truncated) space
        chains: Number of chains advanced together
        burn_in: Discarded steps before recording

    Returns:
        Histogram; points leaving the representable orbit are restarted uniformly
    """
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    lo, hi = float(spec.space[0]), support_cap(spec)
    edges = np.linspace(lo, hi, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    chains = min(chains, points)
    x = rng.uniform(lo, hi, chains)
    recorded = 0
    step = 0
    while recorded < points:
        x = spec.forward_many(x)
        lost = ~np.isfinite(x) | (x <= lo) | (x >= hi)
        if lost.any():
            x[lost] = rng.uniform(lo, hi, int(lost.sum()))
        step += 1
        if step <= burn_in:
            continue
        take = min(chains, points - recorded)
        counts += np.histogram(x[:take], bins=edges)[0]
        recorded += take
    logger.info(f"✓ Monte-Carlo histogram of {spec.name}: {recorded} points, {bins} bins")
    return Histogram(edges, counts, recorded)


def histogram_agreement(density: GridDensity, histogram: Histogram, sigmas: float = 3.0) -> float:
    """Fraction of bins where the bin average of the density lies within sigmas·σ of the histogram"""
    x, w = _gauss_rule(histogram.edges, 8)
    averages = (w * density(x)).reshape(len(histogram.counts), -1).sum(axis=1) / np.diff(histogram.edges)
    return float(np.mean(np.abs(averages - histogram.density) <= sigmas * histogram.sigma))


@dataclass(frozen=True)
class ExponentialFit:
    rate: float
    intercept: float
    r_squared: float
    points: int


def fit_exponential(values: Sequence[float], steps: Optional[Sequence[float]] = None,
                    floor: float = 1e-13) -> ExponentialFit:
    """Least-squares fit of ln v_m = ln A + m ln r over the entries above floor"""
    values = np.asarray(values, dtype=float)
    steps = np.arange(len(values), dtype=float) if steps is None else np.asarray(steps, dtype=float)
    keep = values > floor
    if keep.sum() < 3:
        raise TransferError("need at least three positive values to fit a rate")
    slope, intercept = np.polyfit(steps[keep], np.log(values[keep]), 1)
    r = stats.linregress(steps[keep], np.log(values[keep])).rvalue
    return ExponentialFit(float(np.exp(slope)), float(intercept), float(r * r), int(keep.sum()))


def l1_series(spec: MapSpec, f: GridDensity, g: GridDensity, steps: int) -> pd.DataFrame:
    """
    ‖ℒᵐf − ℒᵐg‖₁ for m = 0..steps

    Args:
        spec: The map
        f, g: Densities (exact sources used for m ≤ EXACT_STEPS, grids afterwards)
        steps: Largest m

    Returns:
        DataFrame with columns m, l1
    """
    rows = [{'m': 0, 'l1': l1_distance(f, g)}]
    cap = support_cap(spec)
    fm, gm = f, g
    if f.source is None or g.source is None:
        fm, gm = _on_space(spec, f), _on_space(spec, g)
    for m in range(1, steps + 1):
        if m <= EXACT_STEPS and fm.source is not None and gm.source is not None:
            fm, gm = apply_L(spec, fm, 1, 'exact'), apply_L(spec, gm, 1, 'exact')
            if m == EXACT_STEPS:
                fm = GridDensity(fm.nodes, fm.values, fm.support)
                gm = GridDensity(gm.nodes, gm.values, gm.support)
        else:
            fm = GridDensity(fm.nodes, _transfer(spec, fm, fm.nodes, cap), fm.support)
            gm = GridDensity(gm.nodes, _transfer(spec, gm, gm.nodes, cap), gm.support)
        rows.append({'m': m, 'l1': l1_distance(fm, gm)})
    return pd.DataFrame(rows, columns=['m', 'l1'])


def mixing_series(spec: MapSpec, f: GridDensity, invariant: GridDensity, steps: int, report=None) -> pd.DataFrame:
    """
    ‖ℒᵐf − ℘‖₁ for m = 0..steps with the bound C·γ₂^m when a complete report is given

    Returns:
        DataFrame with columns m, l1, bound
    """
    cap = support_cap(spec)
    current = GridDensity(invariant.nodes, np.asarray(f(invariant.nodes), dtype=float), invariant.support)
    rows = []
    for m in range(steps + 1):
        bound = None
        if report is not None and report.complete:
            bound = float(report.C * report.gamma2 ** m)
        rows.append({'m': m, 'l1': l1_distance(current, invariant), 'bound': bound})
        current = GridDensity(current.nodes, _transfer(spec, current, current.nodes, cap), current.support)
    return pd.DataFrame(rows, columns=['m', 'l1', 'bound'])
