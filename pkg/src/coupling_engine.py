"""
Coupling Engine for expmix
Splits constant components off matched standard pairs, removes their common overlap and tracks the uncoupled mass
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import geometry as geo
from errors import (CouplingError, DensityTooSmall, OverlapTooSmall, PropernessNotRecovered,
                    RegularityNotRecovered)
from map_model import Interval, MapSpec
from settings import DENSITY_NODES, DEFAULT_SEED
from standard_families import (StandardFamily, StandardPair, family_from_density, iterate,
                               properness_constant, support_cap)
from transfer_operator import GridDensity, fit_exponential, l1_distance, l1_series

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

REGULARITY_TOL = 1e-6
LEVEL_TOL = 1e-12
DIFFERENCE_TOL = 1e-6
WEIGHT_TOL = 1e-9
SAMPLE_POINTS = 2001
DESK_MAX_PAIRS = 400
REGULAR_SHARE = 2.0 / 3.0


@dataclass
class CouplingConfig:
    """Block length, recovery length, chopping grid and pair cap; None means the full-scale value"""

    block_steps: Optional[int] = None
    recovery_steps: Optional[int] = None
    chop_grid: Optional[float] = None
    max_pairs: Optional[int] = None
    n_nodes: Optional[int] = None

    @classmethod
    def desk(cls, eps0: float) -> 'CouplingConfig':
        return cls(block_steps=1, recovery_steps=1, chop_grid=float(eps0) / 2, max_pairs=DESK_MAX_PAIRS)

    def resolve(self, report) -> Tuple[int, int]:
        """(N, recovery) for one block, with every override logged"""
        if not report.complete:
            raise CouplingError(f"constants chain of {report.name} stops at δ₀; coupling needs N_δ, n₁, n₂")
        full_block = int(report.N_delta)
        full_recovery = max(int(report.n1), int(report.n2))
        block = full_block if self.block_steps is None else int(self.block_steps)
        recovery = full_recovery if self.recovery_steps is None else int(self.recovery_steps)
        if block < 1 or recovery < 0:
            raise ValueError("a block needs at least one step and a nonnegative recovery")
        if block != full_block:
            logger.warning(f"Desk-scale block length N = {block} (full scale N_δ = {full_block}, M = {report.M})")
        if recovery != full_recovery:
            logger.warning(f"Desk-scale recovery of {recovery} steps (full scale max(n₁, n₂) = {full_recovery})")
        if self.chop_grid is not None:
            logger.warning(f"Grid-aligned chopping with step {self.chop_grid:.4g}")
        if self.max_pairs is not None:
            logger.warning(f"Pair cap {self.max_pairs}; pruned mass goes to the deficit ledger")
        return block, recovery

    def full_scale(self, report) -> bool:
        return ((self.block_steps is None or self.block_steps >= int(report.N_delta))
                and (self.recovery_steps is None or self.recovery_steps >= max(int(report.n1), int(report.n2))))


@dataclass
class SplitResult:
    """Constant and remainder parts of two pairs (pair, weight)"""

    bar1: Tuple[StandardPair, float]
    ring1: Tuple[StandardPair, float]
    bar2: Tuple[StandardPair, float]
    ring2: Tuple[StandardPair, float]
    c: float

    @property
    def level(self) -> float:
        """Common value of w̄₁ρ̄₁ = w̄₂ρ̄₂"""
        pair, w = self.bar2
        return w / pair.measure


@dataclass
class OverlapResult:
    rest_A: List[Tuple[StandardPair, float]]
    rest_B: List[Tuple[StandardPair, float]]
    removed: float


@dataclass
class CouplingState:
    family_A: StandardFamily
    family_B: StandardFamily
    round: int = 0
    steps: int = 0
    initial_weight: float = 0.0
    uncoupled_series: List[float] = field(default_factory=list)
    l1_series: List[float] = field(default_factory=list)
    removed_series: List[float] = field(default_factory=list)
    step_series: List[int] = field(default_factory=list)
    regular_fraction: List[float] = field(default_factory=list)
    deferred: List[int] = field(default_factory=list)
    ledger: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def uncoupled(self) -> float:
        return self.family_A.total_weight()

    @property
    def deficit(self) -> float:
        return max(self.family_A.deficit, self.family_B.deficit)

    def empirical_gamma(self) -> List[float]:
        """Coupled fraction per block"""
        out = []
        for k in range(1, len(self.uncoupled_series)):
            before = self.uncoupled_series[k - 1]
            out.append(self.removed_series[k] / before if before > 0 else 0.0)
        return out

    def to_frame(self, report=None) -> pd.DataFrame:
        rows = []
        for k, (m, u, l1, removed) in enumerate(zip(self.step_series, self.uncoupled_series, self.l1_series,
                                                      self.removed_series)):
            bound = None
            if report is not None and report.complete:
                bound = float(report.C * report.gamma2 ** m)
            rows.append({'round': k, 'm': m, 'uncoupled': u, 'l1': l1, 'removed': removed, 'bound': bound})
        return pd.DataFrame(rows, columns=['round', 'm', 'uncoupled', 'l1', 'removed', 'bound'])

    def to_csv(self, path: str, report=None) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame(report)[['round', 'uncoupled', 'l1', 'bound']].to_csv(target, index=False)
        logger.info(f"✓ Coupling series written to {target}")
        return target


def _remainder(pair: StandardPair, weight: float, level: float) -> Tuple[StandardPair, float]:
    """(wρ − level) as a standard pair carrying weight w − level·m(I)"""
    lo, _ = pair.extrema()
    if weight * lo <= level:
        raise DensityTooSmall(f"w·inf ρ = {weight * lo:.6g} does not exceed the extracted level {level:.6g}")
    values = []
    for x, u in zip(pair.nodes, pair.log_values):
        values.append(np.log(weight * np.exp(u) - level))
    raw = StandardPair(pair.pieces, pair.nodes, values, pair.word)
    shift = math.log(raw.norm())
    ring = StandardPair(pair.pieces, pair.nodes, [u - shift for u in values], pair.word)
    return ring, weight - level * pair.measure


def split_constant(pair1: StandardPair, w1: float, pair2: StandardPair, w2: float, report) -> SplitResult:
    """
    Split two weighted pairs into a common constant level c·w₂ and remainders

    Args:
        pair1, w1: Heavier pair (w₂ ≤ w₁)
        pair2, w2: Lighter pair, w₂ > 0
        report: ConstantsReport providing c_split and a₀

    Returns:
        SplitResult with w̄ᵢρ̄ᵢ = c·w₂ on Iᵢ and w̄ᵢρ̄ᵢ + ẘᵢρ̊ᵢ = wᵢρᵢ
    """
    if not w2 > 0:
        raise ValueError("split_constant needs w₂ > 0")
    if w2 > w1:
        raise ValueError(f"split_constant needs w₂ ≤ w₁ (got {w2:.6g} > {w1:.6g})")
    c = float(report.c_split)
    for name, pair in (('first', pair1), ('second', pair2)):
        inf_rho = pair.extrema()[0]
        if inf_rho < 2 * c * (1 - REGULARITY_TOL):
            logger.error(f"{name} pair has inf ρ = {inf_rho:.6g} < 2c = {2 * c:.6g}")
            raise DensityTooSmall(f"inf ρ = {inf_rho:.6g} is below 2c = {2 * c:.6g}")
    level = c * w2
    out = []
    for pair, w in ((pair1, w1), (pair2, w2)):
        bar = (StandardPair.uniform(pair.pieces, len(pair.nodes[0])), level * pair.measure)
        out.append((bar, _remainder(pair, w, level)))
    return SplitResult(out[0][0], out[0][1], out[1][0], out[1][1], c)


def _constant_level(pair: StandardPair, weight: float) -> float:
    lo, hi = pair.extrema()
    if hi > lo * (1 + LEVEL_TOL * 1e3):
        raise ValueError(f"extract_overlap needs constant densities (sup/inf = {hi / lo:.12g})")
    return weight / pair.measure


def _uniform_parts(pieces: Sequence[Interval], level: float,
                   n_nodes: Optional[int]) -> List[Tuple[StandardPair, float]]:
    return [(StandardPair.uniform([p], n_nodes), level * geo.length(p)) for p in geo.normalize(pieces)]


def extract_overlap(bar_A: Tuple[StandardPair, float], bar_B: Tuple[StandardPair, float], omega: Interval,
                    Delta: float, n_nodes: Optional[int] = None) -> OverlapResult:
    """
    Chop both constant elements along ω and remove the common (ω, 1/m(ω)) element

    Args:
        bar_A, bar_B: Constant-density (pair, weight) elements
        omega: Overlap interval inside both domains
        Delta: Lower bound on m(ω)

    Returns:
        OverlapResult; the ω elements are kept on both sides when the levels differ
    """
    (pair_A, w_A), (pair_B, w_B) = bar_A, bar_B
    if geo.length(omega) < float(Delta) * (1 - LEVEL_TOL):
        logger.error(f"m(ω) = {geo.length(omega):.6g} below Δ = {float(Delta):.6g}")
        raise OverlapTooSmall(f"m(ω) = {geo.length(omega):.6g} < Δ = {float(Delta):.6g}")
    for pair in (pair_A, pair_B):
        if not geo.covers(pair.pieces, omega):
            raise ValueError(f"ω = {omega} is not inside {pair.pieces}")
    level_A, level_B = _constant_level(pair_A, w_A), _constant_level(pair_B, w_B)
    rest_A = _uniform_parts(geo.subtract_closed(pair_A.pieces, omega), level_A, n_nodes)
    rest_B = _uniform_parts(geo.subtract_closed(pair_B.pieces, omega), level_B, n_nodes)
    if abs(level_A - level_B) <= LEVEL_TOL * max(level_A, level_B):
        return OverlapResult(rest_A, rest_B, level_A * geo.length(omega))
    logger.debug(f"Levels {level_A:.6g} and {level_B:.6g} differ; nothing removed")
    rest_A.append((StandardPair.uniform([omega], n_nodes), level_A * geo.length(omega)))
    rest_B.append((StandardPair.uniform([omega], n_nodes), level_B * geo.length(omega)))
    return OverlapResult(rest_A, rest_B, 0.0)


def is_regular(pair: StandardPair, delta0: float, space: Interval, mode: str) -> bool:
    """Some point of the domain lies at distance ≥ δ₀ from its boundary"""
    ends = geo.boundary_points(pair.pieces, space, mode)
    for a, b in pair.pieces:
        lo = a + delta0 if a in ends else a
        hi = b - delta0 if b in ends else b
        if hi > lo:
            return True
    return False


def regular_weight(family: StandardFamily, delta0: float) -> float:
    return math.fsum(w for pair, w in zip(family.pairs, family.weights)
                     if is_regular(pair, delta0, family.space, family.boundary_mode))


def _eligible(family: StandardFamily, omega: Interval, c: float, a0: float, alpha: float) -> List[int]:
    """Pairs whose single-piece domain contains ω, class a₀ and inf ρ ≥ 2c"""
    out = []
    for i, pair in enumerate(family.pairs):
        if len(pair.pieces) != 1 or not geo.covers(pair.pieces, omega):
            continue
        if pair.holder_constant(alpha) > a0 * (1 + REGULARITY_TOL) + REGULARITY_TOL:
            continue
        if pair.extrema()[0] < 2 * c * (1 - REGULARITY_TOL):
            continue
        out.append(i)
    return sorted(out, key=lambda i: (family.pairs[i].pieces[0], i))


def _match_weights(weights_A: Sequence[float], weights_B: Sequence[float]) -> Tuple[List[float], List[float]]:
    """Matched weight per element for the lazy product split (two-pointer over both lists)"""
    left_A, left_B = list(weights_A), list(weights_B)
    matched_A, matched_B = [0.0] * len(left_A), [0.0] * len(left_B)
    i = j = 0
    while i < len(left_A) and j < len(left_B):
        chunk = min(left_A[i], left_B[j])
        matched_A[i] += chunk
        matched_B[j] += chunk
        left_A[i] -= chunk
        left_B[j] -= chunk
        if left_A[i] <= 0:
            i += 1
        if left_B[j] <= 0:
            j += 1
    return matched_A, matched_B


def _sample_points(state_space: Interval, cap: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo, hi = state_space[0], min(state_space[1], cap)
    return np.sort(rng.uniform(lo, hi, SAMPLE_POINTS))


def _apply_coupling(family: StandardFamily, chosen: Sequence[int], matched: Sequence[float], level: float,
                    omega: Interval) -> StandardFamily:
    """Replace each chosen pair by its remainder and the uniform parts of I \\ cl ω"""
    replaced = {i: M for i, M in zip(chosen, matched) if M > 0}
    pairs: List[StandardPair] = []
    weights: List[float] = []
    for i, (pair, w) in enumerate(zip(family.pairs, family.weights)):
        if i not in replaced:
            pairs.append(pair)
            weights.append(w)
            continue
        cut = level * replaced[i]
        ring, ring_weight = _remainder(pair, w, cut)
        pairs.append(ring)
        weights.append(ring_weight)
        for part, part_weight in _uniform_parts(geo.subtract_closed(pair.pieces, omega), cut, family.n_nodes):
            pairs.append(part)
            weights.append(part_weight)
    return family.copy_with(pairs, weights)


def couple_on_overlap(family_A: StandardFamily, family_B: StandardFamily, report,
                      seed: int = DEFAULT_SEED) -> Tuple[StandardFamily, StandardFamily, float]:
    """
    Match the pairs covering ω by weight, split off c·(matched weight) and remove it on ω from both families

    Returns:
        (A*, B*, removed weight per family)
    """
    omega = tuple(float(v) for v in report.omega)
    c, a0, alpha = float(report.c_split), float(report.a0), float(report.alpha)
    idx_A = _eligible(family_A, omega, c, a0, alpha)
    idx_B = _eligible(family_B, omega, c, a0, alpha)
    if not idx_A or not idx_B:
        logger.debug("No matched pairs cover ω in this block")
        return family_A, family_B, 0.0
    matched_A, matched_B = _match_weights([family_A.weights[i] for i in idx_A],
                                          [family_B.weights[j] for j in idx_B])
    total = math.fsum(matched_A)
    removed = c * total * geo.length(omega)
    if geo.length(omega) < float(report.Delta) * (1 - LEVEL_TOL):
        raise OverlapTooSmall(f"m(ω) = {geo.length(omega):.6g} < Δ = {float(report.Delta):.6g}")

    x = _sample_points(family_A.space, support_cap(family_A.spec), seed)
    before = family_A.density_at(x) - family_B.density_at(x)
    coupled_A = _apply_coupling(family_A, idx_A, matched_A, c, omega)
    coupled_B = _apply_coupling(family_B, idx_B, matched_B, c, omega)
    after = coupled_A.density_at(x) - coupled_B.density_at(x)
    scale = max(1.0, float(np.max(family_A.density_at(x))), float(np.max(family_B.density_at(x))))
    drift = float(np.max(np.abs(after - before)))
    if drift > DIFFERENCE_TOL * scale:
        logger.error(f"ρ_A − ρ_B changed by {drift:.3e} while coupling")
        raise CouplingError(f"coupling changed ρ_A − ρ_B by {drift:.3e}")
    logger.debug(f"Coupled {removed:.6e} on ω from {len(idx_A)} × {len(idx_B)} covering pairs")
    return coupled_A, coupled_B, removed


def _check_recovery(family: StandardFamily, report, strict: bool, side: str) -> None:
    a0, B0 = float(report.a0), float(report.B0)
    H = family.holder_sup(float(report.alpha))
    if H > a0 * (1 + REGULARITY_TOL) + REGULARITY_TOL:
        message = f"family {side} has H = {H:.6g} > a₀ = {a0:.6g} after recovery"
        if strict:
            logger.error(message)
            raise RegularityNotRecovered(message)
        logger.warning(message)
    B = properness_constant(family)
    if B > B0 * (1 + REGULARITY_TOL):
        message = f"family {side} is only {B:.6g}-proper (B₀ = {B0:.6g}) after recovery"
        if strict:
            logger.error(message)
            raise PropernessNotRecovered(message)
        logger.warning(message)


def family_l1(family_A: StandardFamily, family_B: StandardFamily) -> float:
    """‖ρ_A − ρ_B‖₁ by quadrature"""
    if not family_A.pairs and not family_B.pairs:
        return 0.0
    if not family_A.pairs or not family_B.pairs:
        one = family_A if family_A.pairs else family_B
        return one.total_weight()
    return l1_distance(GridDensity.from_family(family_A), GridDensity.from_family(family_B))


def start_coupling(family_A: StandardFamily, family_B: StandardFamily) -> CouplingState:
    wa, wb = family_A.total_weight(), family_B.total_weight()
    if abs(wa - wb) > WEIGHT_TOL * max(1.0, wa):
        raise CouplingError(f"coupled families need equal weights (|A| = {wa:.12g}, |B| = {wb:.12g})")
    state = CouplingState(family_A, family_B, initial_weight=wa)
    state.uncoupled_series.append(wa)
    state.l1_series.append(family_l1(family_A, family_B))
    state.removed_series.append(0.0)
    state.step_series.append(0)
    return state


def regular_split(family: StandardFamily, delta0: float) -> Tuple[StandardFamily, StandardFamily]:
    """(δ₀-regular subfamily, the rest); the deficit and ledger stay with the regular part"""
    keep = [is_regular(pair, delta0, family.space, family.boundary_mode) for pair in family.pairs]
    regular = family.copy_with([p for p, k in zip(family.pairs, keep) if k],
                               [w for w, k in zip(family.weights, keep) if k])
    rest = family.copy_with([p for p, k in zip(family.pairs, keep) if not k],
                            [w for w, k in zip(family.weights, keep) if not k], deficit=0.0, ledger=[])
    return regular, rest


def _rejoin(part: StandardFamily, rest: StandardFamily) -> StandardFamily:
    if not rest.pairs and rest.deficit == 0:
        return part
    return part.copy_with(list(part.pairs) + list(rest.pairs), list(part.weights) + list(rest.weights),
                          deficit=part.deficit + rest.deficit, ledger=list(part.ledger) + list(rest.ledger))


def _advance(family: StandardFamily, n: int, omega: Interval, config: 'CouplingConfig') -> StandardFamily:
    if n <= 0 or not family.pairs:
        return family
    return iterate(family, n, avoid=omega, max_pairs=config.max_pairs)


def couple_block(state: CouplingState, report, config: Optional[CouplingConfig] = None) -> CouplingState:
    """
    One coupling block: iterate N steps protecting ω, couple on ω, iterate the recovery steps

    Only the δ₀-regular subfamilies are coupled. When they hold less than 2/3 of the weight
    the block raises at full scale and defers the coupling to the next block at desk scale.

    Args:
        state: Current coupling state (|A| = |B|)
        report: Complete ConstantsReport
        config: Desk-scale overrides

    Returns:
        The updated state (same object)
    """
    config = config or CouplingConfig()
    block, recovery = config.resolve(report)
    strict = config.full_scale(report)
    omega = tuple(float(v) for v in report.omega)
    delta0 = float(report.delta0)
    A, B = state.family_A, state.family_B
    pre = A.total_weight()
    pre_deficit = A.deficit

    regular = min(regular_weight(F, delta0) / pre if pre > 0 else 1.0 for F in (A, B))
    state.regular_fraction.append(regular)
    deferred = regular < REGULAR_SHARE
    if deferred:
        message = f"only {regular:.3f} of the weight is δ₀-regular (need {REGULAR_SHARE:.3f})"
        if strict:
            logger.error(message)
            raise RegularityNotRecovered(message)
        logger.warning(f"{message}; coupling deferred to the next block")
        state.deferred.append(state.round + 1)

    A_regular, A_rest = regular_split(A, delta0)
    B_regular, B_rest = regular_split(B, delta0)
    A_regular, A_rest = _advance(A_regular, block, omega, config), _advance(A_rest, block, omega, config)
    B_regular, B_rest = _advance(B_regular, block, omega, config), _advance(B_rest, block, omega, config)
    removed = 0.0
    if not deferred:
        A_regular, B_regular, removed = couple_on_overlap(A_regular, B_regular, report,
                                                          seed=DEFAULT_SEED + state.round)
    A, B = _rejoin(A_regular, A_rest), _rejoin(B_regular, B_rest)
    A, B = _advance(A, recovery, omega, config), _advance(B, recovery, omega, config)
    _check_recovery(A, report, strict, 'A')
    _check_recovery(B, report, strict, 'B')

    book_A, book_B = A.total_weight() + A.deficit, B.total_weight() + B.deficit
    if abs(book_A - book_B) > WEIGHT_TOL * max(1.0, state.initial_weight):
        logger.error(f"|A| + deficit = {book_A:.15g} but |B| + deficit = {book_B:.15g}")
        raise CouplingError("coupling removed unequal mass from the two families")
    post = A.total_weight()
    allowed = float(1 - report.gamma1) * pre + (A.deficit - pre_deficit) + WEIGHT_TOL
    if post > allowed and strict:
        raise CouplingError(f"uncoupled mass {post:.6g} exceeds (1−γ₁)·{pre:.6g}")

    state.family_A, state.family_B = A, B
    state.round += 1
    state.steps += block + recovery
    state.uncoupled_series.append(post)
    state.l1_series.append(family_l1(A, B))
    state.removed_series.append(removed)
    state.step_series.append(state.steps)
    if A.deficit > pre_deficit:
        state.ledger.append({'round': state.round, 'mass': A.deficit - pre_deficit})
    logger.info(f"✓ Block {state.round}: uncoupled {post:.6e}, removed {removed:.3e}, "
                f"L¹ {state.l1_series[-1]:.3e}")
    return state


@dataclass
class CouplingRun:
    state: CouplingState
    oracle: pd.DataFrame
    table: pd.DataFrame
    rate: Optional[float]
    bound_ok: bool


def run_coupling(spec: MapSpec, pair_A: StandardPair, pair_B: StandardPair, report, rounds: int,
                 config: Optional[CouplingConfig] = None, with_oracle: bool = True) -> CouplingRun:
    """
    Couple two standard pairs for a number of blocks

    Args:
        spec: The map (1D, with a complete constants chain)
        pair_A, pair_B: Starting pairs, each with weight 1
        report: Complete ConstantsReport
        rounds: Number of blocks
        config: Desk-scale overrides
        with_oracle: Also evolve both densities with the transfer operator

    Returns:
        CouplingRun with the per-round table, the oracle L¹ series and the fitted decay rate per step
    """
    if spec.dimension != 1:
        raise CouplingError("coupling runs on 1D maps only")
    config = config or CouplingConfig()
    eps0 = float(report.eps0)
    families = []
    for pair in (pair_A, pair_B):
        if pair.diameter > eps0 * (1 + 1e-12):
            raise CouplingError(f"pair diameter {pair.diameter:.6g} exceeds ε₀ = {eps0:.6g}")
        families.append(StandardFamily(spec=spec, pairs=[pair], weights=[1.0], eps0=eps0, a_class=report.a0,
                                       grid_step=config.chop_grid, n_nodes=config.n_nodes))
    for family, side in zip(families, 'AB'):
        B = properness_constant(family)
        if B > float(report.B0):
            raise PropernessNotRecovered(f"starting pair {side} is only {B:.6g}-proper (B₀ = {float(report.B0):.6g})")
    state = start_coupling(*families)
    for _ in range(rounds):
        couple_block(state, report, config)
    table = state.to_frame(report)

    oracle = pd.DataFrame(columns=['m', 'l1'])
    if with_oracle and state.steps > 0:
        oracle = l1_series(spec, GridDensity.from_family(families[0]), GridDensity.from_family(families[1]),
                           state.steps)
        table = table.merge(oracle.rename(columns={'l1': 'oracle_l1'}), on='m', how='left')
    rate = None
    series = oracle if len(oracle) else table[['m', 'l1']]
    try:
        rate = fit_exponential(series['l1'].to_numpy(dtype=float), series['m'].to_numpy(dtype=float)).rate
    except Exception as exc:
        logger.warning(f"No decay rate fitted: {exc}")
    bound_ok = bool((table['bound'].isna() | (table['l1'] <= table['bound'] * (1 + 1e-9))).all())
    logger.info(f"✓ Coupling finished after {state.round} blocks ({state.steps} steps), rate {rate}")
    return CouplingRun(state, oracle, table, rate, bound_ok)


def holder_seminorm(f: Callable[[np.ndarray], np.ndarray], support: Sequence[Interval], alpha: float = 1.0,
                    n_points: int = DENSITY_NODES) -> Tuple[float, float]:
    """(|f|_α, sup |f|) estimated on a uniform grid of the support"""
    support = geo.normalize(support)
    x = np.concatenate([np.linspace(a, b, max(3, n_points // len(support)))[1:-1] for a, b in support])
    y = np.asarray(f(x), dtype=float)
    sup = float(np.max(np.abs(y)))
    if alpha == 1.0:
        return float(np.max(np.abs(np.diff(y)) / np.diff(x))), sup
    keep = np.linspace(0, len(x) - 1, min(len(x), 1024)).astype(int)
    xs, ys = x[keep], y[keep]
    dx = np.abs(xs[:, None] - xs[None, :])
    mask = dx > 0
    return float(np.max(np.abs(ys[:, None] - ys[None, :])[mask] / dx[mask] ** alpha)), sup


@dataclass
class HolderSeed:
    shifted: StandardFamily
    constant: StandardFamily
    c: float
    holder_norm: float
    sup_norm: float
    a_measured: float
    B_measured: float
    proper: bool


def holder_seed(spec: MapSpec, f: Callable[[np.ndarray], np.ndarray], report,
                holder_norm: Optional[float] = None, n_nodes: Optional[int] = None,
                grid_step: Optional[float] = None) -> HolderSeed:
    """
    Represent f + c, c = |f|_α/a₀ + sup|f|, and the constant c as standard families on a partition of X

    Args:
        spec: The map (1D)
        f: Bounded α-Hölder function
        report: ConstantsReport (a₀, α, ε₀, B₀)
        holder_norm: Known |f|_α (estimated on a grid otherwise)

    Returns:
        HolderSeed with both families and the measured regularity and properness
    """
    a0, alpha, eps0 = float(report.a0), float(report.alpha), float(report.eps0)
    lo, hi = float(spec.space[0]), min(float(spec.space[1]), support_cap(spec))
    support = [(lo, hi)]
    estimate, sup = holder_seminorm(f, support, alpha)
    seminorm = estimate if holder_norm is None else float(holder_norm)
    if a0 <= 0:
        if seminorm > 0:
            raise CouplingError("a₀ = 0 only admits constant functions")
        c = sup
    else:
        c = seminorm / a0 + sup
    if c <= 0:
        raise CouplingError("f + c must be positive; f vanishes identically")

    def log_shifted(x):
        return np.log(np.asarray(f(x), dtype=float) + c)

    shifted = family_from_density(spec, support, log_shifted, eps0, n_nodes, grid_step, a_class=a0)
    constant = family_from_density(spec, support, lambda x: np.full(np.shape(x), math.log(c)), eps0, n_nodes,
                                   grid_step, a_class=0)
    a_measured = shifted.holder_sup(alpha)
    B_measured = properness_constant(shifted)
    proper = a_measured <= a0 * (1 + REGULARITY_TOL) + REGULARITY_TOL and B_measured <= float(report.B0)
    if proper:
        logger.info(f"✓ f + {c:.4g} is a {len(shifted)}-pair family of class {a_measured:.4g}, {B_measured:.4g}-proper")
    else:
        logger.warning(f"Seeded family has H = {a_measured:.4g} (a₀ = {a0:.4g}) and B = {B_measured:.4g}")
    return HolderSeed(shifted, constant, c, seminorm, sup, a_measured, B_measured, proper)
