"""
Built-in Example Maps
W-map, the non-Markov map of the half line, the doubling map and the 2D skew map
"""

import logging
import math
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np

import geometry as geo
from errors import InputError
from map_model import Branch, BranchGenerator, MapSpec, MetricMeasureConfig

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

F = Fraction

# --- W-map on (0, 1) ---

_W_B = 81.0 / 112.0


def _w4_inverse(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return 0.5 * (-_W_B + np.sqrt(_W_B * _W_B + 4.0 * (_W_B + y)))


def wmap() -> MapSpec:
    """Four-branch W-shaped map with one nonlinear branch"""
    c1, c2, c3 = 9 / 40, 9 / 20, 9 / 16
    branches = [
        Branch(id='h1', domain=(0.0, c1), image=(0.0, 1.0),
               forward=lambda x: 1.0 - (40.0 / 9.0) * np.asarray(x),
               inverse=lambda y: (9.0 / 40.0) * (1.0 - np.asarray(y)),
               jacobian=lambda y: np.full_like(np.asarray(y, dtype=float), 9.0 / 40.0),
               contraction_bound=F(9, 40), distortion_bound=F(0), jacobian_floor=F(9, 40),
               increasing=False),
        Branch(id='h2', domain=(c1, c2), image=(0.0, c2),
               forward=lambda x: 2.0 * (np.asarray(x) - 9.0 / 40.0),
               inverse=lambda y: 0.5 * np.asarray(y) + 9.0 / 40.0,
               jacobian=lambda y: np.full_like(np.asarray(y, dtype=float), 0.5),
               contraction_bound=F(1, 2), distortion_bound=F(0), jacobian_floor=F(1, 2)),
        Branch(id='h3', domain=(c2, c3), image=(0.0, c2),
               forward=lambda x: -4.0 * (np.asarray(x) - 9.0 / 16.0),
               inverse=lambda y: 9.0 / 16.0 - 0.25 * np.asarray(y),
               jacobian=lambda y: np.full_like(np.asarray(y, dtype=float), 0.25),
               contraction_bound=F(1, 4), distortion_bound=F(0), jacobian_floor=F(1, 4),
               increasing=False),
        Branch(id='h4', domain=(c3, 1.0), image=(0.0, 1.0),
               forward=lambda x: np.asarray(x) ** 2 + _W_B * np.asarray(x) - _W_B,
               inverse=_w4_inverse,
               jacobian=lambda y: 1.0 / (2.0 * _w4_inverse(y) + _W_B),
               contraction_bound=F(112, 207), distortion_bound=F(25088, 42849),
               jacobian_floor=F(112, 305)),
    ]
    declared = {
        'alpha': F(1), 'n0': 1, 'eps1': F(1), 'eps2': F(1), 'eps3': F(1), 'eps4': F(1, 4),
        'sigma': F(621, 896), 'a0': F(25089, 9025), 'eps0_rule': 'average', 'eta': F(1, 3),
        'C_X': F(1),
    }
    metric = MetricMeasureConfig.lebesgue_1d((0.0, 1.0), eps1=F(1), mode=geo.IN_SPACE)
    return MapSpec(metric=metric, branches=branches, name='wmap', declared=declared)


# --- Non-Markov map of (0, ∞) ---

def _rplus_branches(t: float) -> Callable[[int], List[Branch]]:
    tf = F(t).limit_denominator(10**6)

    def make(k: int) -> List[Branch]:
        slope = 10.0 + 2.0 ** (-k)
        odd = Branch(id=f'O{2 * k - 1}', domain=(k - 1.0, k - t), image=(0.0, slope * (1.0 - t)),
                     forward=lambda x, k=k, s=slope: s * (np.asarray(x) - k + 1.0),
                     inverse=lambda y, k=k, s=slope: np.asarray(y) / s + k - 1.0,
                     jacobian=lambda y, s=slope: np.full_like(np.asarray(y, dtype=float), 1.0 / s),
                     contraction_bound=F(1, 10), distortion_bound=F(0),
                     jacobian_floor=F(2 ** k, 10 * 2 ** k + 1), index=k)
        even = Branch(id=f'O{2 * k}', domain=(k - t, float(k)), image=(1.0 / t, math.inf),
                      forward=lambda x, k=k: 1.0 / (k - np.asarray(x)),
                      inverse=lambda y, k=k: k - 1.0 / np.asarray(y),
                      jacobian=lambda y: 1.0 / np.asarray(y, dtype=float) ** 2,
                      contraction_bound=tf * tf, distortion_bound=2 * tf,
                      singular_end='right', index=k)
        return [odd, even]
    return make


def _uncovered_beyond(K: int, region) -> float:
    return float(sum(max(0.0, hi - max(lo, float(K))) for lo, hi in region))


def rplus(t: float = 0.1, truncation: int = 40) -> MapSpec:
    """Countably many branches on (0, ∞); even branches blow up near the integers"""
    tf = F(t).limit_denominator(10**6)
    generator = BranchGenerator(make=_rplus_branches(t), start=1, truncation=truncation,
                                tail_bound=_uncovered_beyond,
                                locate_index=lambda x: int(math.ceil(x)),
                                description='O_{2k-1} = (k-1, k-t), O_{2k} = (k-t, k)')
    declared = {
        'alpha': F(1), 'n0': 1, 'eps1': math.inf, 'eps2': math.inf, 'eps3': math.inf,
        'eps4': F(1, 2), 'sigma': 1 + 5 * tf * tf, 'a0': F(21, 81), 'eps0_rule': 'fixed',
        'eps0': F(1, 2), 'eta': F(1, 3), 'C_X': F(1), 'singular_shave': F(3, 5),
        'C_eps0_published': '12*exp(1/10)', 'sigma_bound_published': '9*exp(-1/10)',
        't': tf,
    }
    metric = MetricMeasureConfig.lebesgue_1d((0.0, math.inf), eps1=math.inf, mode=geo.IN_SPACE)
    return MapSpec(metric=metric, generator=generator, name='rplus', declared=declared)


# --- Doubling map ---

def doubling() -> MapSpec:
    """T(x) = 2x mod 1, distortion-free reference"""
    branches = [
        Branch(id='L', domain=(0.0, 0.5), image=(0.0, 1.0),
               forward=lambda x: 2.0 * np.asarray(x),
               inverse=lambda y: 0.5 * np.asarray(y),
               jacobian=lambda y: np.full_like(np.asarray(y, dtype=float), 0.5),
               contraction_bound=F(1, 2), distortion_bound=F(0), jacobian_floor=F(1, 2)),
        Branch(id='R', domain=(0.5, 1.0), image=(0.0, 1.0),
               forward=lambda x: 2.0 * np.asarray(x) - 1.0,
               inverse=lambda y: 0.5 * (np.asarray(y) + 1.0),
               jacobian=lambda y: np.full_like(np.asarray(y, dtype=float), 0.5),
               contraction_bound=F(1, 2), distortion_bound=F(0), jacobian_floor=F(1, 2)),
    ]
    declared = {
        'alpha': F(1), 'n0': 1, 'eps1': F(1), 'eps2': F(1), 'eps3': F(1), 'eps4': F(1, 4),
        'sigma': F(0), 'a0': F(0), 'eps0_rule': 'fixed', 'eps0': F(1, 4), 'eta': F(1, 3),
        'C_X': F(1),
    }
    metric = MetricMeasureConfig.lebesgue_1d((0.0, 1.0), eps1=F(1), mode=geo.IN_SPACE)
    return MapSpec(metric=metric, branches=branches, name='doubling', declared=declared)


def skew2d() -> MapSpec:
    from skew_map import build_skew_map
    return build_skew_map()


FIXTURES: Dict[str, Callable[[], MapSpec]] = {
    'wmap': wmap,
    'rplus': rplus,
    'skew2d': skew2d,
    'doubling': doubling,
}


def load_fixture(name: str) -> MapSpec:
    """
    Build a fixture by id

    Args:
        name: One of wmap, rplus, skew2d, doubling
    """
    try:
        builder = FIXTURES[name]
    except KeyError:
        logger.error(f"Unknown fixture: {name}")
        raise InputError(f"unknown fixture '{name}' (expected one of {', '.join(FIXTURES)})")
    spec = builder()
    logger.info(f"✓ Loaded fixture {name}")
    return spec
