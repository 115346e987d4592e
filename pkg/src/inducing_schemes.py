"""
Inducing Schemes for expmix
Return-time partitions built by stopping standard pairs on elements of a finite partition, with tail statistics
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath as mp
import numpy as np
import pandas as pd
from scipy import stats

import geometry as geo
from constants_pipeline import inducing_constants, least_integer, recovery_time
from coupling_engine import is_regular
from errors import GcdSearchFailed, InducingError, InsufficientLevels, StallDetected
from hypothesis_suite import InducingPartition, build_partition_of_large_set, check_inducing_partition
from map_model import Interval, MapSpec, to_mp
from settings import DEFAULT_SEED
from standard_families import (MIN_PIECE, UNDERFLOW_WEIGHT, StandardFamily, StandardPair, iterate,
                               properness_constant, support_cap)

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-6
DEPTH_CAP = 200
STALL_PATIENCE = 5
MIN_LEVELS = 10
TREE_CAP = 512
MC_POINTS = 10**6
GCD_MASS = 1e-9
DEFAULT_BASES = 3
MARKOV_DEPTH = 30
DISTORTION_SAMPLES = 9


@dataclass
class InducingConfig:
    """Desk-scale overrides; None means the full-scale value"""

    delta0: Optional[float] = None
    block_steps: Optional[int] = None
    chop_grid: Optional[float] = None
    max_pairs: Optional[int] = None
    n_nodes: Optional[int] = None
    bases: Optional[Sequence[int]] = None
    depth_cap: int = DEPTH_CAP
    residual_tol: float = RESIDUAL_TOL
    tree_cap: int = TREE_CAP
    mc_points: int = MC_POINTS
    seed: Optional[int] = None

    @classmethod
    def desk(cls, report) -> 'InducingConfig':
        eps0 = float(report.eps0)
        return cls(delta0=3 * eps0 / 8, chop_grid=eps0 / 2, max_pairs=2000, n_nodes=16, mc_points=20_000)


@dataclass
class InducedCell:
    """{τ = tau} piece of the base carried onto one partition element"""

    base: int
    tau: int
    image: Any
    image_index: Optional[int]
    mass: Any
    word: Optional[Tuple[str, ...]] = None
    domain: Optional[Interval] = None
    returns: Optional[int] = None


@dataclass
class ReturnTimeScheme:
    kind: int
    name: str
    base: List[Any]
    base_mass: Any
    cells: List[InducedCell]
    t: Any
    partition: InducingPartition
    schedule: Dict[str, Any]
    ratios: List[float] = field(default_factory=list)
    deficit: Any = 0.0
    residual: Any = 0.0
    log_scale: bool = False
    complete: bool = False
    checks: Dict[str, Any] = field(default_factory=dict)

    @property
    def images(self) -> List[Any]:
        seen, out = set(), []
        for cell in self.cells:
            key = cell.image_index if cell.image_index is not None else str(cell.image)
            if key not in seen:
                seen.add(key)
                out.append(cell.image)
        return out

    def level_masses(self) -> Dict[int, Any]:
        out: Dict[int, Any] = {}
        for cell in self.cells:
            if self.log_scale:
                out[cell.tau] = mp.log(mp.exp(out[cell.tau]) + mp.exp(cell.mass)) if cell.tau in out else cell.mass
            else:
                out[cell.tau] = out.get(cell.tau, 0.0) + cell.mass
        return dict(sorted(out.items()))

    @property
    def levels(self) -> List[int]:
        masses = self.level_masses()
        if self.log_scale:
            # fixed-ratio shares sit far below any relative floor
            return [n for n, m in masses.items() if m > -mp.inf]
        return [n for n, m in masses.items() if m > GCD_MASS * self.base_mass]

    @property
    def gcd(self) -> int:
        levels = self.levels
        return math.gcd(*levels) if levels else 0

    def assigned_mass(self) -> Any:
        if self.log_scale:
            return mp.log(mp.fsum(mp.exp(m) for m in self.level_masses().values()))
        return math.fsum(cell.mass for cell in self.cells)

    def mass_error(self) -> float:
        """|Σ cells + deficit − m(base)| relative to m(base)"""
        if self.log_scale:
            total = mp.fsum(mp.exp(m) for m in self.level_masses().values()) + mp.exp(self.deficit)
            return float(abs(total / mp.exp(self.base_mass) - 1))
        return abs(self.assigned_mass() + self.deficit - self.base_mass) / self.base_mass

    def tail(self) -> pd.DataFrame:
        """m(τ > n) for n = 0..max τ (natural log of it for log-scale schemes)"""
        masses = self.level_masses()
        top = max(masses) if masses else 0
        rows = []
        if self.log_scale:
            remaining = mp.exp(self.base_mass)
            for n in range(top + 1):
                if n in masses:
                    remaining -= mp.exp(masses[n])
                rows.append({'n': n, 'log_tail': mp.log(remaining) if remaining > 0 else -mp.inf})
            return pd.DataFrame(rows, columns=['n', 'log_tail'])
        assigned = 0.0
        for n in range(top + 1):
            assigned += masses.get(n, 0.0)
            rows.append({'n': n, 'tail': max(0.0, self.base_mass - assigned)})
        return pd.DataFrame(rows, columns=['n', 'tail'])

    def to_csv(self, path: str) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        table = self.tail()
        if self.log_scale:
            table['log_tail'] = [mp.nstr(v, 30) for v in table['log_tail']]
        table.to_csv(target, index=False)
        logger.info(f"✓ Tail table written to {target}")
        return target

    def to_dict(self) -> Dict[str, Any]:
        show = (lambda v: mp.nstr(v, 20)) if self.log_scale else float
        return {'scheme': self.kind, 'map': self.name, 'cells': len(self.cells), 'levels': len(self.levels),
                'gcd': self.gcd, 't': mp.nstr(mp.mpf(self.t), 12), 'base_mass': show(self.base_mass),
                'deficit': show(self.deficit), 'residual': show(self.residual), 'complete': self.complete,
                'log_scale': self.log_scale, 'images': len(self.images),
                'schedule': {k: (v if isinstance(v, (int, float, list)) else str(v))
                             for k, v in self.schedule.items()},
                'checks': {k: v for k, v in self.checks.items() if isinstance(v, (int, float, bool, str))}}


@dataclass(frozen=True)
class TailFit:
    kappa: Any
    r_squared: float
    gcd: int
    deficit: Any
    levels: int
    one_minus_kappa: Any
    modeled: bool = False


def fixed_ratio(report, cell_measure: Any, dimension: int = 1) -> mp.mpf:
    """t = (2/3)·Caa·C_B(ε₀)⁻¹·m(𝓡)² / ((1/3)·m(𝓡) + Ca·C_B(ε₀))"""
    eps0 = to_mp(report.eps0)
    C_B = eps0 if dimension == 1 else mp.pi * eps0 ** 2 / 4
    m = to_mp(cell_measure)
    return (mp.mpf(2) / 3) * report.Caa * m ** 2 / C_B / (m / 3 + report.Ca * C_B)


def return_schedule(returns: Sequence[int], seed_steps: int, block_steps: int) -> List[int]:
    """
    Times n₁ < … < n_K in 𝓝_Z with gcd 1, n₁ ≥ n_rec(B) and spacing from n_rec(C̄_𝓡B₀)

    Args:
        returns: ñ₁ < … < ñ_K with TⁿZ ⊇ Z and gcd 1
        seed_steps: n_rec of the seed family
        block_steps: n_rec of the remainder family
    """
    tn = sorted(set(int(n) for n in returns))
    if not tn or math.gcd(*tn) != 1:
        raise GcdSearchFailed(f"returns {tn} do not have gcd 1")
    if len(tn) == 1:
        tn = [1, 2]
    m1 = least_integer(lambda m: tn[0] + m * tn[-1] >= seed_steps, 0, 'm₁')
    m2 = least_integer(lambda m: m * tn[-1] >= block_steps, 0, 'm₂')
    m0 = max(m1, m2)
    times = [n + m0 * tn[-1] for n in tn[:-1]]
    times.append(tn[-1] + sum(times))
    gaps = [b - a for a, b in zip(times, times[1:])]
    if gaps and min(gaps) < block_steps:
        logger.warning(f"Return times {times} leave gaps {gaps} shorter than the recovery {block_steps}")
    return times


def _choose_element(partition: InducingPartition, pieces: Sequence[Interval]) -> Optional[Tuple[int, Interval]]:
    """Element of 𝓡 inside the domain: largest measure, leftmost on ties"""
    best = None
    for piece in pieces:
        cells = partition.cells_in(piece)
        if len(cells):
            k = cells[0]
            if best is None or k < best:
                best = k
    return None if best is None else (best, partition.cell(best))


def _next_stop(n: int, stops: int, schedule: Dict[str, Any]) -> int:
    times = schedule['return_times']
    if stops == 0 and times and n < times[-1]:
        return min(t for t in times if t > n)
    return n + schedule['block_steps']


def _z_phase(n: int, stops: int, schedule: Dict[str, Any]) -> bool:
    return stops == 0 and n in schedule['return_times']


@dataclass
class _Cohort:
    family: StandardFamily
    stops: int
    tree: bool


def _restrict(pair: StandardPair, pieces: Sequence[Interval], n_nodes: Optional[int]) -> Tuple[StandardPair, float]:
    return StandardPair.build(pieces, pair.log_density, n_nodes, pair.word)


def _pull_word(spec: MapSpec, lookup: Dict[str, Any], word: Sequence[str], piece: Interval) -> Interval:
    for branch_id in reversed(word):
        piece = lookup[branch_id].pull(piece)
    return piece


def _log_jacobian_spread(lookup: Dict[str, Any], word: Sequence[str], piece: Interval) -> float:
    y = np.linspace(piece[0], piece[1], DISTORTION_SAMPLES + 2)[1:-1]
    total = np.zeros_like(y)
    for branch_id in reversed(word):
        b = lookup[branch_id]
        total += np.log(b.jacobian(y))
        y = b.inverse(y)
    return float(total.max() - total.min())


def _stop_cohort(cohort: _Cohort, n: int, partition: InducingPartition, schedule: Dict[str, Any],
                 n_nodes: Optional[int]) -> Tuple[List[Tuple[StandardPair, float]], List[Dict[str, Any]],
                                                  List[Tuple[StandardPair, float]], float]:
    """Split a cohort at a stopping time into (kept pairs, stopped records, restarted pairs, stopped mass)"""
    family = cohort.family
    delta0 = schedule['delta0']
    Z = schedule['Z']
    z_rule = _z_phase(n, cohort.stops, schedule)
    kept, restarted, records = [], [], []
    removed = 0.0
    for pair, w in zip(family.pairs, family.weights):
        if z_rule:
            choice = (schedule['z_index'], Z) if geo.covers(pair.pieces, Z) else None
        elif is_regular(pair, delta0, family.space, family.boundary_mode):
            choice = _choose_element(partition, pair.pieces)
        else:
            choice = None
        if choice is None:
            kept.append((pair, w))
            continue
        k, R = choice
        share = pair.integral([R])
        stopped = w * share
        rest = geo.subtract_closed(pair.pieces, R)
        if rest and w - stopped > UNDERFLOW_WEIGHT:
            piece_pair, _ = _restrict(pair, rest, n_nodes)
            kept.append((piece_pair, w - stopped))
        elif w - stopped > 0:
            family.record_deficit(w - stopped, 'underflow')
        if stopped <= 0:
            continue
        removed += stopped
        final = not schedule['continue_chain'] or k == schedule['z_index']
        records.append({'tau': n, 'image': R, 'image_index': k, 'mass': stopped,
                        'word': pair.word if cohort.tree else None, 'returns': cohort.stops + 1,
                        'final': final})
        if not final:
            restarted.append((_restrict(pair, [R], n_nodes)[0], stopped))
    return kept, records, restarted, removed


def _merge(cohorts: Dict[int, _Cohort], when: int, stops: int, pairs: List[Tuple[StandardPair, float]],
           template: StandardFamily, tree: bool, deficit: float = 0.0) -> None:
    if not pairs and deficit <= 0:
        return
    family = template.copy_with([p for p, _ in pairs], [w for _, w in pairs], deficit=0.0, ledger=[])
    family.record_deficit(deficit, 'carried')
    if when in cohorts:
        other = cohorts[when]
        merged = other.family.copy_with(other.family.pairs + family.pairs, other.family.weights + family.weights,
                                        deficit=other.family.deficit + family.deficit)
        tree = tree and other.tree
        cohorts[when] = _Cohort(merged if tree else merged.consolidate(), min(stops, other.stops), tree)
    else:
        cohorts[when] = _Cohort(family, stops, tree)


def _induce_base(spec: MapSpec, report, partition: InducingPartition, base_index: int, base: Interval,
                 schedule: Dict[str, Any], config: InducingConfig, t: float) -> Dict[str, Any]:
    """Run the stopping procedure from one base element"""
    eps0 = float(report.eps0)
    seed_pair = StandardPair.uniform([base], config.n_nodes)
    template = StandardFamily(spec=spec, pairs=[seed_pair], weights=[geo.length(base)], eps0=eps0,
                              a_class=report.a0, grid_step=config.chop_grid, n_nodes=config.n_nodes)
    avoid = schedule['Z'] if schedule['continue_chain'] else None
    cohorts: Dict[int, _Cohort] = {}
    first = schedule['return_times'][0] if schedule['return_times'] else schedule['seed_steps']
    cohorts[first] = _Cohort(template, 0, True)
    base_mass = geo.length(base)
    records: List[Dict[str, Any]] = []
    ratios: List[float] = []
    deficit = 0.0
    slow = 0
    horizon = (schedule['return_times'][-1] if schedule['return_times'] else 0) + \
        schedule['seed_steps'] + config.depth_cap * schedule['block_steps']
    n = 0
    while cohorts and n < horizon:
        live = math.fsum(c.family.total_weight() for c in cohorts.values())
        if live < config.residual_tol * base_mass:
            break
        n += 1
        for key, cohort in list(cohorts.items()):
            family = iterate(cohort.family, 1, avoid=avoid, max_pairs=config.max_pairs, consolidate=not cohort.tree)
            tree = cohort.tree and len(family) <= config.tree_cap
            if cohort.tree and not tree:
                logger.debug(f"Base {base_index}: {len(family)} pairs at n = {n}, words no longer tracked")
                family = family.consolidate()
            cohorts[key] = _Cohort(family, cohort.stops, tree)
        if n not in cohorts:
            continue
        cohort = cohorts.pop(n)
        kept, stopped, restarted, removed = _stop_cohort(cohort, n, partition, schedule, config.n_nodes)
        records.extend(stopped)
        remaining = math.fsum(w for _, w in kept)
        if removed > 0 or remaining > 0:
            ratio = removed / remaining if remaining > 0 else math.inf
            ratios.append(ratio)
            if not _z_phase(n, cohort.stops, schedule):
                slow = slow + 1 if ratio < t / 2 else 0
                if slow >= STALL_PATIENCE:
                    logger.error(f"Base {base_index}: removal ratio below t/2 = {t / 2:.3e} for {slow} stops")
                    raise StallDetected(f"removed/remaining stayed below t/2 = {t / 2:.3e} for {slow} stops "
                                        f"(last {ratio:.3e} at n = {n})")
        _merge(cohorts, _next_stop(n, cohort.stops, schedule), cohort.stops, kept, template, cohort.tree,
               cohort.family.deficit)
        if restarted:
            _merge(cohorts, n + schedule['seed_steps'], cohort.stops + 1, restarted, template, cohort.tree)
    residual = math.fsum(c.family.total_weight() for c in cohorts.values())
    deficit += math.fsum(c.family.deficit for c in cohorts.values())
    return {'records': records, 'ratios': ratios, 'deficit': deficit, 'residual': residual, 'steps': n,
            'base_mass': base_mass}


def _check_cells(spec: MapSpec, report, cells: List[InducedCell]) -> Dict[str, Any]:
    """Pulled-back masses, Markov landing and composite distortion on the cells whose words are known"""
    lookup = {b.id: b for b in spec.all_branches()}
    D, alpha = float(report.D), float(report.alpha)
    worst_mass, worst_distortion, landed, tried = 0.0, 0.0, 0, 0
    for cell in cells:
        if cell.word is None:
            continue
        domain = _pull_word(spec, lookup, cell.word, cell.image)
        cell.domain = domain
        if cell.returns == 1 or cell.returns is None:
            worst_mass = max(worst_mass, abs(geo.length(domain) - cell.mass) / cell.mass)
        spread = _log_jacobian_spread(lookup, cell.word, cell.image)
        bound = D * geo.length(cell.image) ** alpha
        worst_distortion = max(worst_distortion, spread / bound if bound > 0 else 0.0)
        if cell.tau <= MARKOV_DEPTH:
            x = np.array([0.5 * (domain[0] + domain[1])])
            for branch_id in cell.word:
                x = lookup[branch_id].forward(x)
            tried += 1
            landed += int(cell.image[0] < x[0] < cell.image[1])
    return {'materialized': sum(c.word is not None for c in cells), 'pullback_mass_error': worst_mass,
            'distortion_ratio': worst_distortion, 'distortion_ok': worst_distortion <= 1 + 1e-6,
            'markov_landed': landed, 'markov_tried': tried}


def _pick_bases(partition: InducingPartition, config: InducingConfig) -> List[int]:
    if config.bases is not None:
        return [int(k) for k in config.bases]
    count = min(DEFAULT_BASES, partition.count)
    return sorted({int(round(v)) for v in np.linspace(1, partition.count - 2, count)})


def _schedule_1d(spec: MapSpec, report, partition: InducingPartition, config: InducingConfig,
                 continue_chain: bool) -> Dict[str, Any]:
    eps0 = float(report.eps0)
    seed = StandardFamily(spec=spec, pairs=[StandardPair.uniform([partition.cell(1)], config.n_nodes)],
                          weights=[partition.cell_size], eps0=eps0)
    B_seed = properness_constant(seed)
    Cbar = inducing_constants(report, partition.c_R, partition.C_R)['Cbar_R']
    seed_steps = max(1, recovery_time(report, B_seed))
    block_steps = max(1, recovery_time(report, Cbar * report.B0))
    if config.block_steps is not None:
        logger.warning(f"Desk-scale block of {config.block_steps} steps (n_rec(C̄B₀) = {block_steps})")
        block_steps = seed_steps = int(config.block_steps)
    return {'seed_steps': seed_steps, 'block_steps': block_steps, 'B_seed': B_seed, 'Cbar_R': Cbar,
            'delta0': float(config.delta0 if config.delta0 is not None else report.delta0),
            'Z': partition.Z, 'z_index': 0, 'continue_chain': continue_chain, 'return_times': [],
            'eps0': eps0, 'grid_step': config.chop_grid}


def _partition_for(spec: MapSpec, report, config: InducingConfig,
                   partition: Optional[InducingPartition]) -> InducingPartition:
    if partition is not None:
        return partition
    delta0 = report.delta0 if config.delta0 is None else config.delta0
    if config.delta0 is not None:
        logger.warning(f"Desk-scale δ₀ = {float(config.delta0):.4g} for 𝓡 (chain value {float(report.delta0):.4g})")
    return check_inducing_partition(spec, delta0, seed=config.seed)


def _assemble_1d(spec: MapSpec, report, partition: InducingPartition, schedule: Dict[str, Any],
                 config: InducingConfig, kind: int) -> ReturnTimeScheme:
    t = float(fixed_ratio(report, partition.cell_size, 1))
    bases = [0] if kind == 2 else _pick_bases(partition, config)
    cells: List[InducedCell] = []
    ratios: List[float] = []
    deficit = residual = base_mass = 0.0
    for index in bases:
        base = partition.cell(index)
        run = _induce_base(spec, report, partition, index, base, schedule, config, t)
        base_mass += run['base_mass']
        deficit += run['deficit']
        residual += run['residual']
        ratios.extend(run['ratios'])
        for rec in run['records']:
            if rec['final']:
                cells.append(InducedCell(index, rec['tau'], rec['image'], rec['image_index'], rec['mass'],
                                         rec['word'], None, rec['returns']))
    scheme = ReturnTimeScheme(kind=kind, name=spec.name, base=[partition.cell(i) for i in bases],
                              base_mass=base_mass, cells=cells, t=t, partition=partition, schedule=schedule,
                              ratios=ratios, deficit=deficit + residual, residual=residual,
                              complete=residual < config.residual_tol * base_mass)
    scheme.schedule['bases'] = bases
    scheme.checks.update(_check_cells(spec, report, cells))
    scheme.checks['fixed_ratio_min'] = min(ratios) if ratios else 0.0
    scheme.checks['fixed_ratio_ok'] = bool(ratios) and min(ratios) >= t
    if not scheme.complete:
        logger.warning(f"Scheme {kind}: residual mass {residual:.3e} after the depth cap")
    logger.info(f"✓ Scheme {kind} on {spec.name}: {len(cells)} cells, {len(scheme.levels)} τ levels, "
                f"deficit {scheme.deficit:.3e}")
    return scheme


def build_scheme_1(spec: MapSpec, report, partition: Optional[InducingPartition] = None,
                   config: Optional[InducingConfig] = None) -> ReturnTimeScheme:
    """
    Gibbs-Markov inducing scheme with finitely many images

    Args:
        spec: The map
        report: ConstantsReport (δ₀, ε₀, θ₁, ζ₂, B₀, Ca, Caa)
        partition: 𝓡 from check_inducing_partition (built here when omitted)
        config: Desk-scale overrides

    Returns:
        ReturnTimeScheme whose images are elements of 𝓡
    """
    config = config or InducingConfig()
    partition = _partition_for(spec, report, config, partition)
    if spec.dimension == 2:
        return _model_2d(spec, report, partition, 1, config)
    schedule = _schedule_1d(spec, report, partition, config, continue_chain=False)
    return _assemble_1d(spec, report, partition, schedule, config, 1)


def build_scheme_2(spec: MapSpec, report, partition: Optional[InducingPartition] = None,
                   config: Optional[InducingConfig] = None) -> ReturnTimeScheme:
    """
    Full-branch scheme over Z with gcd 1: τ = n_j on A_j, then stopping on 𝓡 composed until the return to Z

    Args:
        spec: The map
        report: ConstantsReport
        partition: 𝓡 with Z and its return times
        config: Desk-scale overrides

    Returns:
        ReturnTimeScheme on Z whose cells all map onto Z
    """
    config = config or InducingConfig()
    partition = _partition_for(spec, report, config, partition)
    if not partition.returns or partition.Z is None:
        raise GcdSearchFailed("the partition carries no return set Z")
    if spec.dimension == 2:
        return _model_2d(spec, report, partition, 2, config)
    schedule = _schedule_1d(spec, report, partition, config, continue_chain=True)
    schedule['return_times'] = return_schedule(partition.returns, schedule['seed_steps'], schedule['block_steps'])
    return _assemble_1d(spec, report, partition, schedule, config, 2)


def build_scheme_3(spec: MapSpec, report, partition: Optional[InducingPartition] = None,
                   config: Optional[InducingConfig] = None) -> ReturnTimeScheme:
    """
    Full-branch scheme over Z with τ = 1 on every element of 𝓟_Z

    Args:
        spec: The map (2D skew map)
        report: ConstantsReport
        partition: 𝓡 with Z, Z′ and 𝓟_Z
        config: Desk-scale overrides
    """
    config = config or InducingConfig()
    partition = _partition_for(spec, report, config, partition)
    if not partition.P_Z or partition.Zprime is None:
        raise InducingError(f"{spec.name} provides no Z′ and 𝓟_Z")
    return _model_2d(spec, report, partition, 3, config)


def _model_2d(spec: MapSpec, report, partition: InducingPartition, kind: int,
              config: InducingConfig) -> ReturnTimeScheme:
    """Log-mass scheme in which every stop removes the fixed-ratio share t/(1+t) of the remainder"""
    side = mp.mpf(partition.cell_size)
    log_base = 2 * mp.log(side)
    t = fixed_ratio(report, side ** 2, 2)
    B_seed = mp.mpf(4) / side
    Cbar = inducing_constants(report, partition.c_R, partition.C_R)['Cbar_R']
    seed_steps = max(1, recovery_time(report, B_seed))
    block_steps = max(1, recovery_time(report, Cbar * report.B0))
    if config.block_steps is not None:
        block_steps = seed_steps = int(config.block_steps)
    schedule: Dict[str, Any] = {'seed_steps': seed_steps, 'block_steps': block_steps, 'Cbar_R': Cbar,
                                'B_prime': Cbar * report.B0, 'return_times': [], 'model': 'fixed-ratio'}
    share = t / (1 + t)
    log_keep = mp.log1p(-share)
    cells: List[InducedCell] = []
    log_remaining = log_base
    Z = partition.Z

    if kind == 3:
        removed = mp.mpf(0)
        for k, element in enumerate(partition.P_Z):
            log_mass = log_base + element['log_jacobian_floor']
            cells.append(InducedCell(0, 1, Z, k, log_mass))
            removed += mp.exp(log_mass)
        log_remaining = mp.log(mp.exp(log_base) - removed)
        start = 1
    elif kind == 2:
        times = return_schedule(partition.returns, seed_steps, block_steps)
        schedule['return_times'] = times
        for n in times:
            cells.append(InducedCell(0, n, Z, 0, log_remaining + mp.log(share)))
            log_remaining += log_keep
        start = times[-1]
    else:
        start = seed_steps - block_steps
    for k in range(1, config.depth_cap + 1):
        cells.append(InducedCell(0, start + k * block_steps, Z if kind > 1 else 'R', 0,
                                 log_remaining + mp.log(share)))
        log_remaining += log_keep
    scheme = ReturnTimeScheme(kind=kind, name=spec.name, base=[Z], base_mass=log_base, cells=cells, t=t,
                              partition=partition, schedule=schedule, ratios=[float(t)] * len(cells),
                              deficit=log_remaining, residual=log_remaining, log_scale=True,
                              complete=log_remaining - log_base < mp.log(config.residual_tol))
    scheme.checks['fixed_ratio_ok'] = True
    # every level keeps 1/(1+t) of the previous one, so a tail fit returns that rate
    scheme.checks['tail_by_construction'] = True
    scheme.checks['tau_one_cells'] = sum(1 for c in cells if c.tau == 1)
    logger.info(f"✓ Scheme {kind} on {spec.name} (log-mass model): {len(cells)} levels, t = {mp.nstr(t, 6)}")
    logger.warning(f"Scheme {kind} on {spec.name} is the fixed-ratio model: its tail rate is "
                   f"1/(1+t) per block by construction, not measured on orbits")
    return scheme


def fit_tail(levels: Sequence[int], tails: Sequence[Any], log_scale: bool = False) -> Tuple[Any, float, Any]:
    """
    Least-squares fit of ln m(τ > n) = c + n ln κ

    Returns:
        (κ, R², 1 − κ)
    """
    x = [int(n) for n in levels]
    if log_scale:
        y = [mp.mpf(v) for v in tails]
        xm = mp.fsum(x) / len(x)
        ym = mp.fsum(y) / len(y)
        sxx = mp.fsum((xi - xm) ** 2 for xi in x)
        sxy = mp.fsum((xi - xm) * (yi - ym) for xi, yi in zip(x, y))
        syy = mp.fsum((yi - ym) ** 2 for yi in y)
        slope = sxy / sxx
        r2 = float(sxy ** 2 / (sxx * syy)) if syy > 0 else 1.0
        return mp.exp(slope), r2, -mp.expm1(slope)
    y = np.log(np.asarray(tails, dtype=float))
    slope, _ = np.polyfit(np.asarray(x, dtype=float), y, 1)
    fit = stats.linregress(np.asarray(x, dtype=float), y)
    r2 = float(fit.rvalue ** 2) if np.ptp(y) > 0 else 1.0
    return float(np.exp(slope)), r2, float(-np.expm1(slope))


def tail_statistics(scheme: ReturnTimeScheme) -> TailFit:
    """
    κ fit, R², gcd and deficit of a scheme

    Raises:
        InsufficientLevels: fewer than 10 realized τ levels
    """
    levels = scheme.levels
    if len(levels) < MIN_LEVELS:
        logger.error(f"Scheme {scheme.kind} has {len(levels)} τ levels")
        raise InsufficientLevels(f"{len(levels)} realized τ levels (need {MIN_LEVELS})")
    table = scheme.tail().set_index('n')
    column = 'log_tail' if scheme.log_scale else 'tail'
    xs, ys = [], []
    for n in levels:
        value = table.loc[n, column]
        if scheme.log_scale:
            if value > -mp.inf:
                xs.append(n)
                ys.append(value)
        elif value > GCD_MASS * scheme.base_mass:
            xs.append(n)
            ys.append(value)
    if len(xs) < 3:
        raise InsufficientLevels(f"only {len(xs)} levels carry a positive tail")
    kappa, r2, one_minus = fit_tail(xs, ys, scheme.log_scale)
    logger.info(f"✓ Tail of scheme {scheme.kind}: κ = {mp.nstr(mp.mpf(kappa), 8)}, R² = {r2:.4f}, "
                f"gcd = {scheme.gcd}")
    return TailFit(kappa, r2, scheme.gcd, scheme.deficit, len(levels), one_minus,
                   modeled=bool(scheme.checks.get('tail_by_construction')))


def synthetic_scheme(masses: Dict[int, float], base_mass: float = 1.0) -> ReturnTimeScheme:
    """Scheme with prescribed level masses, for checking the tail fit"""
    cells = [InducedCell(0, n, None, None, m) for n, m in sorted(masses.items())]
    partition = InducingPartition(dimension=1, cell_size=base_mass, origin=0.0, count=1, c=1.0, c_R=0.5,
                                  C_R=1.0, boundary_sup=0.0)
    deficit = base_mass - math.fsum(masses.values())
    return ReturnTimeScheme(kind=0, name='synthetic', base=[(0.0, base_mass)], base_mass=base_mass, cells=cells,
                            t=0.0, partition=partition, schedule={}, deficit=deficit, residual=deficit)


# --- Point replay oracle (1D) ---

@dataclass
class ReplayResult:
    table: pd.DataFrame
    points: int
    lost: float
    agreement: float
    returns: pd.Series


def _group(keys: np.ndarray) -> List[np.ndarray]:
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    order = np.argsort(inverse, kind='stable')
    counts = np.bincount(inverse)
    return np.split(order, np.cumsum(counts)[:-1])


def replay_tail(spec: MapSpec, scheme: ReturnTimeScheme, points: Optional[int] = None,
                seed: Optional[int] = None) -> ReplayResult:
    """
    Sample base points and replay the stopping rule on each orbit

    Args:
        spec: The map (1D)
        scheme: Scheme from build_scheme_1 / build_scheme_2
        points: Number of sample points (MC_POINTS by default)

    Returns:
        ReplayResult with columns n, tail, tail_mc, sigma, within
    """
    if scheme.log_scale or spec.dimension != 1:
        raise InducingError("the point replay runs on 1D interval schemes")
    sched, partition = scheme.schedule, scheme.partition
    points = MC_POINTS if points is None else int(points)
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    per_base = max(1, points // len(scheme.base))
    y = np.concatenate([rng.uniform(a, b, per_base) for a, b in scheme.base])
    weight = np.repeat([geo.length(b) / per_base for b in scheme.base], per_base)
    dlo = np.repeat([b[0] for b in scheme.base], per_base)
    dhi = np.repeat([b[1] for b in scheme.base], per_base)
    first = sched['return_times'][0] if sched['return_times'] else sched['seed_steps']
    next_stop = np.full(y.shape, first)
    stops = np.zeros(y.shape, dtype=int)
    tau = np.full(y.shape, -1)
    alive = np.ones(y.shape, dtype=bool)
    branches = spec.all_branches()
    lows = np.array([b.domain[0] for b in branches])
    cap = support_cap(spec)
    avoid = sched['Z'] if sched['continue_chain'] else None
    cache: Dict[Tuple, List[Interval]] = {}
    horizon = max((c.tau for c in scheme.cells), default=0)

    for n in range(1, horizon + 1):
        live = np.where(alive & (tau < 0))[0]
        if live.size == 0:
            break
        bi = np.clip(np.searchsorted(lows, y[live], side='right') - 1, 0, len(branches) - 1)
        for members in _group(np.column_stack([dlo[live], dhi[live], bi])):
            idx = live[members]
            b = branches[bi[members[0]]]
            part = geo.intersect_piece((dlo[idx[0]], dhi[idx[0]]), b.domain)
            if part is None:
                alive[idx] = False
                continue
            image = b.push(part)
            if image[1] > cap:
                image = (image[0], cap)
            key = (image, avoid)
            if key not in cache:
                cache[key] = build_partition_of_large_set(spec, [image], avoid, sched['eps0'],
                                                          grid_step=sched['grid_step'])
            cells = cache[key]
            ends = np.array([c[1] for c in cells])
            ynew = b.forward(y[idx])
            j = np.clip(np.searchsorted(ends, ynew), 0, len(cells) - 1)
            lo = np.array([cells[i][0] for i in j])
            hi = np.array([cells[i][1] for i in j])
            ok = np.isfinite(ynew) & (ynew > image[0]) & (ynew < image[1]) & \
                (hi - lo > MIN_PIECE * np.maximum(1.0, np.abs(lo)))
            alive[idx[~ok]] = False
            y[idx], dlo[idx], dhi[idx] = ynew, lo, hi

        due = np.where(alive & (tau < 0) & (next_stop == n))[0]
        if due.size == 0:
            continue
        for members in _group(np.column_stack([dlo[due], dhi[due], stops[due]])):
            idx = due[members]
            piece = (float(dlo[idx[0]]), float(dhi[idx[0]]))
            s = int(stops[idx[0]])
            if _z_phase(n, s, sched):
                choice = (sched['z_index'], sched['Z']) if geo.covers([piece], sched['Z']) else None
            elif is_regular(StandardPair.uniform([piece], 2), sched['delta0'], tuple(float(v) for v in spec.space),
                            spec.boundary_mode):
                choice = _choose_element(partition, [piece])
            else:
                choice = None
            if choice is None:
                next_stop[idx] = _next_stop(n, s, sched)
                continue
            k, R = choice
            inside = (y[idx] > R[0]) & (y[idx] < R[1])
            hit, miss = idx[inside], idx[~inside]
            if hit.size:
                final = not sched['continue_chain'] or k == sched['z_index']
                stops[hit] += 1
                if final:
                    tau[hit] = n
                else:
                    dlo[hit], dhi[hit] = R
                    next_stop[hit] = n + sched['seed_steps']
            if miss.size:
                left = y[miss] < R[0]
                dhi[miss[left]] = R[0]
                dlo[miss[~left]] = R[1]
                next_stop[miss] = _next_stop(n, s, sched)

    expected = scheme.tail().set_index('n')['tail']
    total = float(weight.sum())
    rows = []
    for n in scheme.levels:
        p = float(weight[(tau < 0) | (tau > n)].sum()) / total
        sigma = math.sqrt(max(p * (1 - p), 1.0 / len(y)) / len(y)) * scheme.base_mass
        mc = p * scheme.base_mass
        slack = 3 * sigma + scheme.deficit - scheme.residual + float(weight[~alive].sum())
        rows.append({'n': n, 'tail': float(expected.loc[n]), 'tail_mc': mc, 'sigma': sigma,
                     'within': abs(mc - float(expected.loc[n])) <= slack})
    table = pd.DataFrame(rows, columns=['n', 'tail', 'tail_mc', 'sigma', 'within'])
    agreement = float(table['within'].mean()) if len(table) else 0.0
    returns = pd.Series(stops[tau > 0]).value_counts().sort_index()
    logger.info(f"✓ Replay of {len(y)} points: {agreement:.3f} of the levels within 3σ")
    return ReplayResult(table, len(y), float(weight[~alive].sum()), agreement, returns)
