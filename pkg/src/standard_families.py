"""
Standard Families for expmix
Standard pairs with log-linear densities, iteration with chopping, boundary functionals and audits
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import geometry as geo
from errors import ComparabilityViolated, FamilyError, GridUnderflow, GrowthViolated, TruncationInsufficient
from hypothesis_suite import build_partition_of_large_set, eps_grid
from map_model import Interval, MapSpec, Number, to_mp
from settings import GRID_NODES, X_MAX

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-10
UNDERFLOW_WEIGHT = 1e-15
PRUNE_RATIO = 1e-12
MAX_PIECES = 64
TAIL_TOL = 1e-9
MIN_PIECE = 1e-13


def _exp_ratio(du: np.ndarray) -> np.ndarray:
    """expm1(du)/du, continuous at 0"""
    du = np.asarray(du, dtype=float)
    safe = np.where(du == 0.0, 1.0, du)
    return np.where(np.abs(du) > 1e-12, np.expm1(du) / safe, 1.0 + 0.5 * du)


def segment_integrals(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Exact integrals of exp(interpolant of (x, u)) over each grid segment"""
    dx = np.diff(x)
    du = np.diff(u)
    return dx * np.exp(u[:-1]) * _exp_ratio(du)


def support_cap(spec: MapSpec) -> float:
    """Right end used to truncate images on unbounded spaces"""
    hi = float(spec.space[1])
    if not math.isinf(hi):
        return hi
    return min(X_MAX, spec.coverage()[-1][1])


@dataclass
class StandardPair:
    """Open domain with a normalized density, log-linear between nodes on each piece"""

    pieces: List[Interval]
    nodes: List[np.ndarray]
    log_values: List[np.ndarray]
    word: Tuple[str, ...] = ()

    def __post_init__(self):
        self._cumulative = [np.concatenate([[0.0], np.cumsum(segment_integrals(x, u))])
                            for x, u in zip(self.nodes, self.log_values)]

    @classmethod
    def build(cls, pieces: Sequence[Interval], log_density: Callable[[np.ndarray], np.ndarray],
              n_nodes: Optional[int] = None, word: Tuple[str, ...] = ()) -> Tuple['StandardPair', float]:
        """
        Sample an unnormalized log-density on the node grids and normalize it

        Args:
            pieces: Disjoint open intervals
            log_density: Vectorized log of the unnormalized density
            n_nodes: Nodes per piece (default GRID_NODES)
            word: Branch word that produced the pair

        Returns:
            (pair, integral of the unnormalized interpolant)
        """
        pieces = geo.normalize(pieces)
        if not pieces:
            raise FamilyError("a standard pair needs a nonempty domain")
        if len(pieces) > MAX_PIECES:
            raise FamilyError(f"{len(pieces)} pieces exceed the cap of {MAX_PIECES}; split the pair first")
        n = GRID_NODES if n_nodes is None else n_nodes
        nodes = [np.linspace(a, b, n) for a, b in pieces]
        values = [np.asarray(log_density(x), dtype=float) for x in nodes]
        if not all(np.all(np.isfinite(v)) for v in values):
            raise GridUnderflow(f"log-density is not finite on {pieces[:3]}")
        total = float(sum(segment_integrals(x, u).sum() for x, u in zip(nodes, values)))
        if not (total > 0.0 and math.isfinite(total)):
            raise GridUnderflow(f"density integrates to {total} on {pieces[:3]}")
        shift = math.log(total)
        return cls(pieces, nodes, [u - shift for u in values], word), total

    @classmethod
    def uniform(cls, pieces: Sequence[Interval], n_nodes: Optional[int] = None) -> 'StandardPair':
        return cls.build(pieces, lambda x: np.zeros_like(x), n_nodes)[0]

    @property
    def measure(self) -> float:
        return geo.total_length(self.pieces)

    @property
    def diameter(self) -> float:
        return geo.diameter(self.pieces)

    def norm(self) -> float:
        return float(sum(c[-1] for c in self._cumulative))

    def piece_log_density(self, k: int, x: np.ndarray) -> np.ndarray:
        """Log-density interpolated on piece k, clamped to the piece"""
        return np.interp(x, self.nodes[k], self.log_values[k])

    def log_density(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, np.nan)
        for k, (a, b) in enumerate(self.pieces):
            mask = (x >= a) & (x <= b)
            if mask.any():
                out[mask] = self.piece_log_density(k, x[mask])
        return out

    def density(self, x: np.ndarray) -> np.ndarray:
        """ρ on the open domain, 0 elsewhere"""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k, (a, b) in enumerate(self.pieces):
            mask = (x > a) & (x < b)
            if mask.any():
                out[mask] = np.exp(self.piece_log_density(k, x[mask]))
        return out

    def cumulative(self, k: int, s) -> np.ndarray:
        """∫ ρ from the left end of piece k to s (vectorized, exact for the interpolant)"""
        x, u, cum = self.nodes[k], self.log_values[k], self._cumulative[k]
        s = np.clip(np.asarray(s, dtype=float), x[0], x[-1])
        i = np.clip(np.searchsorted(x, s, side='right') - 1, 0, len(x) - 2)
        dx = s - x[i]
        slope = (u[i + 1] - u[i]) / (x[i + 1] - x[i])
        return cum[i] + dx * np.exp(u[i]) * _exp_ratio(slope * dx)

    def integral_on_piece(self, k: int, part: Interval) -> float:
        lo, hi = self.cumulative(k, np.array(part, dtype=float))
        return float(max(0.0, hi - lo))

    def integral(self, pieces: Sequence[Interval]) -> float:
        """∫ ρ over the intersection of the domain with a union of intervals"""
        total = 0.0
        for target in geo.normalize(pieces):
            for k, piece in enumerate(self.pieces):
                part = geo.intersect_piece(piece, target)
                if part is not None:
                    total += self.integral_on_piece(k, part)
        return total

    def piece_of(self, part: Interval) -> int:
        for k, (a, b) in enumerate(self.pieces):
            if a - 1e-12 * max(1.0, abs(a)) <= part[0] and part[1] <= b + 1e-12 * max(1.0, abs(b)):
                return k
        raise FamilyError(f"{part} is not inside one piece of {self.pieces[:3]}")

    def extrema(self) -> Tuple[float, float]:
        """inf ρ and sup ρ (attained at nodes)"""
        lo = min(float(u.min()) for u in self.log_values)
        hi = max(float(u.max()) for u in self.log_values)
        return math.exp(lo), math.exp(hi)

    def holder_constant(self, alpha: Number = 1) -> float:
        """sup |ln ρ(x) − ln ρ(y)| / d(x, y)^α over node pairs"""
        alpha = float(alpha)
        best = 0.0
        if alpha == 1.0:
            # the interpolant is Lipschitz with its steepest segment slope
            best = max(float(np.max(np.abs(np.diff(u)) / np.diff(x))) for x, u in zip(self.nodes, self.log_values))
            if len(self.pieces) == 1:
                return best
        x = np.concatenate(self.nodes)
        u = np.concatenate(self.log_values)
        if len(x) > 1024:
            keep = np.linspace(0, len(x) - 1, 1024).astype(int)
            x, u = x[keep], u[keep]
        dx = np.abs(x[:, None] - x[None, :])
        du = np.abs(u[:, None] - u[None, :])
        mask = dx > 0
        return max(best, float(np.max(du[mask] / dx[mask] ** alpha))) if mask.any() else best

    def to_dict(self) -> Dict[str, Any]:
        return {'pieces': [list(p) for p in self.pieces], 'word': list(self.word),
                'nodes': [x.tolist() for x in self.nodes], 'log_values': [u.tolist() for u in self.log_values]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'StandardPair':
        return cls([tuple(p) for p in data['pieces']], [np.asarray(x) for x in data['nodes']],
                   [np.asarray(u) for u in data['log_values']], tuple(data.get('word', ())))


@dataclass
class StandardFamily:
    """Weighted collection of standard pairs over one map"""

    spec: MapSpec
    pairs: List[StandardPair]
    weights: List[float]
    eps0: float
    a_class: Optional[Number] = None
    B: Optional[float] = None
    grid_step: Optional[float] = None
    n_nodes: Optional[int] = None
    deficit: float = 0.0
    ledger: List[Dict[str, Any]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def space(self) -> Interval:
        return tuple(float(v) for v in self.spec.space)

    @property
    def boundary_mode(self) -> str:
        return self.spec.boundary_mode

    def total_weight(self) -> float:
        return float(math.fsum(self.weights))

    def copy_with(self, pairs: List[StandardPair], weights: List[float], **changes) -> 'StandardFamily':
        values = dict(spec=self.spec, pairs=pairs, weights=weights, eps0=self.eps0, a_class=self.a_class,
                      B=self.B, grid_step=self.grid_step, n_nodes=self.n_nodes, deficit=self.deficit,
                      ledger=list(self.ledger))
        values.update(changes)
        return StandardFamily(**values)

    def density_at(self, x: np.ndarray) -> np.ndarray:
        """ρ_G = Σ w_j ρ_j"""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for pair, w in zip(self.pairs, self.weights):
            out += w * pair.density(x)
        return out

    def record_deficit(self, amount: float, reason: str) -> None:
        if amount <= 0:
            return
        self.deficit += amount
        self.ledger.append({'reason': reason, 'mass': amount})

    def prune(self, ratio: float = PRUNE_RATIO, max_pairs: Optional[int] = None) -> 'StandardFamily':
        """Drop pairs below ratio·|G| (and the lightest beyond max_pairs); dropped mass goes to the deficit"""
        total = self.total_weight()
        keep = [i for i, w in enumerate(self.weights) if w >= ratio * total]
        if max_pairs is not None and len(keep) > max_pairs:
            ranked = sorted(keep, key=lambda i: -self.weights[i])[:max_pairs]
            keep = sorted(ranked)
        if len(keep) == len(self.pairs):
            return self
        kept = set(keep)
        dropped = math.fsum(w for i, w in enumerate(self.weights) if i not in kept)
        pruned = self.copy_with([self.pairs[i] for i in keep], [self.weights[i] for i in keep])
        pruned.record_deficit(dropped, 'pruned')
        logger.warning(f"Pruned {len(self.pairs) - len(keep)} pairs carrying {dropped:.3e}")
        return pruned

    def consolidate(self) -> 'StandardFamily':
        """Merge pairs with identical domains (densities summed at the shared nodes)"""
        groups: Dict[Tuple, List[int]] = {}
        for i, pair in enumerate(self.pairs):
            groups.setdefault(tuple(pair.pieces), []).append(i)
        if len(groups) == len(self.pairs):
            return self
        pairs, weights = [], []
        for members in groups.values():
            if len(members) == 1:
                pairs.append(self.pairs[members[0]])
                weights.append(self.weights[members[0]])
                continue
            w = math.fsum(self.weights[i] for i in members)
            first = self.pairs[members[0]]
            values = []
            for k in range(len(first.pieces)):
                stacked = np.array([np.log(self.weights[i] / w) + self.pairs[i].log_values[k] for i in members])
                top = stacked.max(axis=0)
                values.append(top + np.log(np.exp(stacked - top).sum(axis=0)))
            merged = StandardPair(first.pieces, first.nodes, values, first.word)
            shift = math.log(merged.norm())
            pairs.append(StandardPair(first.pieces, first.nodes, [u - shift for u in values], first.word))
            weights.append(w)
        logger.debug(f"Consolidated {len(self.pairs)} pairs into {len(pairs)}")
        return self.copy_with(pairs, weights)

    def holder_sup(self, alpha: Number = 1) -> float:
        return max((p.holder_constant(alpha) for p in self.pairs), default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {'map': self.spec.name, 'eps0': self.eps0,
                'a_class': None if self.a_class is None else float(self.a_class), 'B': self.B,
                'deficit': self.deficit, 'weights': list(self.weights),
                'pairs': [p.to_dict() for p in self.pairs], 'ledger': list(self.ledger)}

    def save_json(self, path: str) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(self.to_dict(), indent=1))
        logger.info(f"✓ Family snapshot written to {target}")
        return target

    @classmethod
    def from_dict(cls, spec: MapSpec, data: Dict[str, Any]) -> 'StandardFamily':
        return cls(spec=spec, pairs=[StandardPair.from_dict(p) for p in data['pairs']],
                   weights=[float(w) for w in data['weights']], eps0=float(data['eps0']),
                   a_class=data.get('a_class'), B=data.get('B'), deficit=float(data.get('deficit', 0.0)),
                   ledger=list(data.get('ledger', [])))


def family_from_density(spec: MapSpec, support: Sequence[Interval], log_density: Callable[[np.ndarray], np.ndarray],
                        eps0: Number, n_nodes: Optional[int] = None, grid_step: Optional[float] = None,
                        V_star: Optional[Interval] = None, a_class: Optional[Number] = None) -> StandardFamily:
    """
    Chop a density into standard pairs of diameter ≤ ε₀

    Args:
        spec: The map (1D)
        support: Union of open intervals carrying the density
        log_density: Vectorized log of the (unnormalized) density
        eps0: ε₀
        n_nodes: Nodes per piece
        grid_step: Grid-aligned chopping step
        V_star: Protected subset kept inside one cell

    Returns:
        Family whose weights are the masses of the cells
    """
    eps0 = float(eps0)
    cells = build_partition_of_large_set(spec, list(support), V_star, eps0, grid_step=grid_step)
    pairs, weights = [], []
    for cell in cells:
        pair, mass = StandardPair.build([cell], log_density, n_nodes)
        pairs.append(pair)
        weights.append(mass)
    return StandardFamily(spec=spec, pairs=pairs, weights=weights, eps0=eps0, a_class=a_class,
                          grid_step=grid_step, n_nodes=n_nodes)


def split_pieces(pair: StandardPair, weight: float, cap: int = MAX_PIECES) -> List[Tuple[StandardPair, float]]:
    """Split a pair with more than cap pieces into pairs carrying proportional weight"""
    if len(pair.pieces) <= cap:
        return [(pair, weight)]
    out = []
    for start in range(0, len(pair.pieces), cap):
        chunk = range(start, min(start + cap, len(pair.pieces)))
        mass = math.fsum(pair._cumulative[k][-1] for k in chunk)
        piece = StandardPair([pair.pieces[k] for k in chunk], [pair.nodes[k] for k in chunk],
                             [pair.log_values[k] - math.log(mass) for k in chunk], pair.word)
        out.append((piece, weight * mass))
    return out


def _uncovered_mass(spec: MapSpec, pair: StandardPair) -> float:
    if spec.generator is None:
        return 0.0
    end = spec.coverage()[-1][1]
    return pair.integral([(end, math.inf)])


def _push_pair(spec: MapSpec, family: StandardFamily, pair: StandardPair, weight: float,
               avoid: Optional[Interval], cap: float) -> Tuple[List[Tuple[StandardPair, float]], float, float]:
    """Children of one pair under one step, the truncated mass and the underflow mass"""
    grouped: Dict[str, Tuple[Any, List[Tuple[int, Interval]]]] = {}
    for k, piece in enumerate(pair.pieces):
        for b in spec.branches_over(piece):
            part = geo.intersect_piece(piece, b.domain)
            if part is not None:
                grouped.setdefault(b.id, (b, []))[1].append((k, part))

    children: List[Tuple[StandardPair, float]] = []
    truncated = underflow = 0.0
    for b, parts in grouped.values():
        images = []
        for k, part in parts:
            image = b.push(part)
            if image[1] > cap:
                kept = (image[0], cap)
                inside = pair.integral_on_piece(k, b.pull(kept)) if kept[1] > kept[0] else 0.0
                truncated += weight * max(0.0, pair.integral_on_piece(k, part) - inside)
                image = kept
            if image[1] - image[0] <= MIN_PIECE * max(1.0, abs(image[0])):
                underflow += weight * pair.integral_on_piece(k, part)
                continue
            images.append((k, image))
        if not images:
            continue
        cells = build_partition_of_large_set(spec, [im for _, im in images], avoid, family.eps0,
                                             grid_step=family.grid_step)
        for cell in cells:
            pulled = b.pull(cell)
            k = pair.piece_of(pulled)
            z = pair.integral_on_piece(k, pulled)
            if weight * z < UNDERFLOW_WEIGHT or cell[1] - cell[0] <= MIN_PIECE * max(1.0, abs(cell[0])):
                underflow += weight * z
                continue
            lo, hi = pair.pieces[k]

            def log_child(y, k=k, b=b, lo=lo, hi=hi):
                return pair.piece_log_density(k, np.clip(b.inverse(y), lo, hi)) + np.log(b.jacobian(y))

            child, _ = StandardPair.build([cell], log_child, family.n_nodes, pair.word + (b.id,))
            children.append((child, weight * z))
    return children, truncated, underflow


def iterate(family: StandardFamily, n: int = 1, avoid: Optional[Interval] = None,
            max_pairs: Optional[int] = None, consolidate: bool = True) -> StandardFamily:
    """
    Push a family forward n steps, chopping images larger than ε₀

    Args:
        family: Standard family
        n: Number of steps (≥ 1)
        avoid: Protected set V_star kept inside one output cell
        max_pairs: Keep at most this many pairs per step (lightest pruned into the deficit)
        consolidate: Merge pairs with identical domains after each step

    Returns:
        𝒯ⁿG with |𝒯ⁿG| + added deficit = |G|
    """
    if n < 1:
        raise ValueError("iterate needs n ≥ 1")
    spec = family.spec
    cap = support_cap(spec)
    current = family
    for step in range(n):
        pairs: List[StandardPair] = []
        weights: List[float] = []
        truncated = underflow = 0.0
        for pair, weight in zip(current.pairs, current.weights):
            tail = _uncovered_mass(spec, pair)
            if tail > TAIL_TOL:
                logger.error(f"Pair {pair.pieces[:2]} reaches beyond the materialized branches")
                raise TruncationInsufficient(f"mass {tail:.3e} of a pair lies beyond the truncation level")
            children, cut, lost = _push_pair(spec, current, pair, weight, avoid, cap)
            truncated += cut
            underflow += lost
            for child, w in children:
                pairs.append(child)
                weights.append(w)
        nxt = current.copy_with(pairs, weights)
        if truncated > 0:
            nxt.record_deficit(truncated, f'truncated at x = {cap:g}')
            logger.warning(f"Step {step + 1}: mass {truncated:.3e} beyond x = {cap:g} truncated")
        if underflow > 0:
            nxt.record_deficit(underflow, 'underflow')
            logger.debug(f"Step {step + 1}: {underflow:.3e} below the underflow threshold dropped")
        if consolidate:
            nxt = nxt.consolidate()
        current = nxt.prune(max_pairs=max_pairs)
    return current


def boundary_measure(family: StandardFamily, eps) -> np.ndarray:
    """
    |∂_ε G| = Σ w_j ∫_{∂_ε I_j} ρ_j

    Args:
        family: Standard family
        eps: Scale or array of scales

    Returns:
        Array of boundary masses, one per scale
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    space, mode = family.space, family.boundary_mode
    out = np.zeros(eps.shape)
    for pair, w in zip(family.pairs, family.weights):
        if len(pair.pieces) == 1:
            a, b = pair.pieces[0]
            ends = geo.boundary_points(pair.pieces, space, mode)
            left, right = a in ends, b in ends
            if left and right:
                inner = pair.cumulative(0, a + eps) + (pair.cumulative(0, b) - pair.cumulative(0, b - eps))
                mass = np.where(2 * eps >= b - a, pair.cumulative(0, b), inner)
            elif left:
                mass = pair.cumulative(0, a + eps)
            elif right:
                mass = pair.cumulative(0, b) - pair.cumulative(0, b - eps)
            else:
                mass = np.zeros(eps.shape)
            out += w * mass
        else:
            out += w * np.array([pair.integral(geo.eps_boundary(pair.pieces, e, space, mode)) for e in eps])
    return out


def properness_constant(family: StandardFamily, eps_values: Optional[np.ndarray] = None) -> float:
    """sup_ε |∂_ε G| / (|G| ε) over a grid of scales below ε₀"""
    eps_values = eps_grid(family.eps0) if eps_values is None else np.asarray(eps_values, dtype=float)
    total = family.total_weight()
    if total <= 0:
        return 0.0
    return float(np.max(boundary_measure(family, eps_values) / (total * eps_values)))


@dataclass(frozen=True)
class ComparabilityReport:
    inf_rho: float
    avg_J: float
    avg_Jprime: float
    sup_rho: float
    factor: float
    passed: bool

    @property
    def ratio(self) -> float:
        return self.sup_rho / self.inf_rho


def comparability_check(pair: StandardPair, J: Sequence[Interval], Jprime: Sequence[Interval],
                        a: Number, eps0: Number, alpha: Number = 1) -> ComparabilityReport:
    """
    Check inf ρ ≍ 𝒜_J ρ ≍ 𝒜_{J'} ρ ≍ sup ρ within e^{±aε₀^α}

    Args:
        pair: Standard pair
        J, Jprime: Subsets of the domain with positive measure
        a: Regularity class
        eps0: ε₀
    """
    J, Jprime = geo.intersect(pair.pieces, list(J)), geo.intersect(pair.pieces, list(Jprime))
    mJ, mJp = geo.total_length(J), geo.total_length(Jprime)
    if mJ <= 0 or mJp <= 0:
        raise ValueError("J and J' must have positive measure inside the domain")
    lo, hi = pair.extrema()
    avg, avg_p = pair.integral(J) / mJ, pair.integral(Jprime) / mJp
    factor = math.exp(float(a) * float(eps0) ** float(alpha))
    tol = 1 + 1e-9
    passed = (hi / lo <= factor * tol and lo <= avg * tol and avg <= hi * tol
              and lo <= avg_p * tol and avg_p <= hi * tol)
    report = ComparabilityReport(lo, avg, avg_p, hi, factor, passed)
    if not passed:
        logger.error(f"Comparability fails: sup/inf = {report.ratio:.6g} > {factor:.6g}")
        raise ComparabilityViolated(f"sup ρ / inf ρ = {report.ratio:.6g} exceeds e^(aε₀^α) = {factor:.6g}")
    return report


@dataclass
class GrowthAudit:
    table: pd.DataFrame
    worst_ratio: float
    B_start: float
    deficit: float

    @property
    def violations(self) -> int:
        return int((self.table['lhs'] > self.table['rhs'] * (1 + 1e-9)).sum())

    def to_csv(self, path: str) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        self.table.to_csv(target, index=False)
        return target


def growth_audit(family: StandardFamily, report, horizon: int = 20, eps_points: int = 20,
                 max_pairs: Optional[int] = None, raise_on_violation: bool = True) -> GrowthAudit:
    """
    Check the one-step, iterated and properness growth bounds along 𝒯ᵐG

    Args:
        family: Starting standard family
        report: ConstantsReport (Ca, σ, λ, ζ₁..ζ₄, θ₂, n₀)
        horizon: Largest m
        eps_points: Size of the ε grid below ε₀
        max_pairs: Pair cap applied while iterating

    Returns:
        GrowthAudit with one row per (m, ε, bound)
    """
    eps = eps_grid(family.eps0, eps_points)
    total = family.total_weight()
    n0 = int(report.n0)
    lam = float(to_mp(report.lam))
    growth = float(1 + report.Ca * to_mp(report.sigma))
    zeta1, zeta2, zeta3, zeta4 = (float(report.zeta1), float(report.zeta2), float(report.zeta3),
                                  float(report.zeta4))
    theta2 = float(report.theta2)
    B = properness_constant(family, eps)
    history = [family]
    rows = []
    for m in range(1, horizon + 1):
        history.append(iterate(history[-1], 1, max_pairs=max_pairs))
        current = boundary_measure(history[m], eps)
        if m >= n0:
            previous = boundary_measure(history[m - n0], lam ** n0 * eps)
            rhs = growth * previous + zeta1 * total * eps
            rows.extend(_rows(m, eps, 'one_step', current, rhs))
        start = boundary_measure(family, lam ** m * eps)
        if m % n0 == 0:
            rhs = growth ** (m // n0) * start + zeta2 * total * eps
        else:
            rhs = zeta3 * growth ** (m / n0) * start + zeta4 * total * eps
        rows.extend(_rows(m, eps, 'iterated', current, rhs))
        rows.extend(_rows(m, eps, 'proper', current, B * total * eps * (zeta3 * theta2 ** m) + zeta4 * total * eps))
        logger.debug(f"audit m = {m}: {len(history[m])} pairs")
        if m >= n0:
            history[m - n0] = None

    table = pd.DataFrame(rows, columns=['m', 'eps', 'bound', 'lhs', 'rhs', 'slack'])
    audit = GrowthAudit(table=table, worst_ratio=float((table['lhs'] / table['rhs']).max()), B_start=B,
                        deficit=history[-1].deficit)
    if audit.violations and raise_on_violation:
        bad = table[table['lhs'] > table['rhs'] * (1 + 1e-9)].iloc[0]
        logger.error(f"Growth bound '{bad['bound']}' fails at m = {bad['m']}, ε = {bad['eps']:.3e}")
        raise GrowthViolated(int(bad['m']), float(bad['eps']), str(bad['bound']), float(bad['lhs']), float(bad['rhs']))
    logger.info(f"✓ Growth audit: {len(table)} checks, worst lhs/rhs = {audit.worst_ratio:.3e}")
    return audit


def _rows(m: int, eps: np.ndarray, bound: str, lhs: np.ndarray, rhs: np.ndarray) -> List[Dict[str, Any]]:
    return [{'m': m, 'eps': float(e), 'bound': bound, 'lhs': float(l), 'rhs': float(r), 'slack': float(r - l)}
            for e, l, r in zip(eps, lhs, rhs)]
