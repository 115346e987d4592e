"""
2D Skew Map Support
Column geometry from the Hurwitz zeta function, cell branches, strip-area complexity model
"""

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import List, Tuple

import mpmath as mp
import numpy as np

import geometry as geo
from errors import OutsideSpace, TruncationInsufficient
from map_model import Branch, MapSpec, MetricMeasureConfig

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SHEAR = 1.0 / 25.0
EXPLICIT_COLUMNS = 60
# 5^{-i} falls below double resolution of y beyond this column
MAX_FLOAT_COLUMN = 20
_ASYMPTOTIC_FROM = mp.mpf(10) ** 12


def exponent() -> mp.mpf:
    """Column widths decay like i^{-(1+s)} with s = 0.02"""
    return mp.mpf('1.02')


@lru_cache(maxsize=None)
def _w_constant(dps: int) -> mp.mpf:
    return mp.zeta(exponent()) / 5


def W() -> mp.mpf:
    return _w_constant(mp.mp.dps)


def hurwitz(s: mp.mpf, a) -> mp.mpf:
    """ζ(s, a), switching to the Euler-Maclaurin tail for very large a"""
    a = mp.mpf(a)
    if a < _ASYMPTOTIC_FROM:
        return mp.zeta(s, a)
    return a ** (1 - s) / (s - 1) + a ** (-s) / 2 + s * a ** (-s - 1) / 12


def column_breakpoint(i) -> mp.mpf:
    """b_i: column i occupies (b_i, b_{i-1}); b_0 = 1"""
    return hurwitz(exponent(), mp.mpf(i) + 1) / (5 * W())


def column_width(i) -> mp.mpf:
    return mp.mpf(i) ** (-exponent()) / (5 * W())


@lru_cache(maxsize=None)
def _mp_breakpoints(dps: int) -> Tuple[mp.mpf, ...]:
    return tuple(column_breakpoint(i) for i in range(EXPLICIT_COLUMNS + 1))


@lru_cache(maxsize=None)
def _float_breakpoints(dps: int) -> Tuple[float, ...]:
    return tuple(float(b) for b in _mp_breakpoints(dps))


def breakpoints() -> Tuple[float, ...]:
    return _float_breakpoints(mp.mp.dps)


def column_contraction(i: int) -> float:
    """Declared Λ for every cell of column i"""
    w = float(W())
    if i == 1:
        return math.sqrt(2.0) * (1.0 + w) / (5.0 * w)
    return math.sqrt(2.0) * (float(column_width(i)) + 5.0 ** (-i))


def column_of(x) -> mp.mpf:
    """Index i of the column containing abscissa x (mpmath integer for far columns)"""
    x = mp.mpf(x)
    b = _mp_breakpoints(mp.mp.dps)
    if x > b[1]:
        return mp.mpf(1)
    for i in range(2, EXPLICIT_COLUMNS + 1):
        if b[i] < x <= b[i - 1]:
            return mp.mpf(i)
    s = exponent()
    target = 5 * W() * x
    # ζ(s, a) ≈ a^{1-s}/(s-1) gives the first guess, Newton on log a refines it
    log_a = -mp.log(target * (s - 1)) / (s - 1)
    for _ in range(60):
        a = mp.exp(log_a)
        value = hurwitz(s, a) - target
        slope = -s * hurwitz(s + 1, a) * a
        step = value / slope
        log_a -= step
        if abs(step) < mp.mpf(10) ** (-mp.mp.dps + 10):
            break
    i = mp.floor(mp.exp(log_a))
    if i < mp.mpf(10) ** (mp.mp.dps - 5):
        # Newton lands within one column of the answer; settle it on the breakpoints themselves
        while column_breakpoint(i) >= x:
            i += 1
        while i > EXPLICIT_COLUMNS + 1 and column_breakpoint(i - 1) < x:
            i -= 1
    return i


def in_space(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(points)
    x, y = points[:, 0], points[:, 1]
    return (y > 0) & (y < 1) & (x > 0) & (x < 1 + SHEAR * y)


def space_region() -> geo.ShearedBox:
    return geo.ShearedBox(x0=0.0, y0=0.0, y1=1.0, intercept=1.0, slope=SHEAR)


@lru_cache(maxsize=4096)
def cell_branch(i: int, j: int) -> Branch:
    """Branch of the cell O_{i,j} (row j counted from the bottom, starting at 1)"""
    w = float(W())
    b = breakpoints()
    if i == 1:
        scale = 5.0 * w / (1.0 + w)
        b1 = b[1]
        lo = (j - 1) / 5.0

        def forward(p, b1=b1, scale=scale, lo=lo):
            p = np.atleast_2d(p)
            return np.column_stack([scale * (p[:, 0] - b1), 5.0 * (p[:, 1] - lo)])

        def inverse(q, b1=b1, scale=scale, lo=lo):
            q = np.atleast_2d(q)
            return np.column_stack([b1 + q[:, 0] / scale, lo + q[:, 1] / 5.0])

        def jacobian(q, scale=scale):
            q = np.atleast_2d(q)
            return np.full(len(q), 1.0 / (5.0 * scale))

        domain = geo.ShearedBox(x0=b1, y0=lo, y1=j / 5.0, intercept=1.0, slope=SHEAR)
        image = geo.ShearedBox(x0=0.0, y0=0.0, y1=1.0,
                               intercept=scale * (1.0 + SHEAR * lo - b1),
                               slope=scale * SHEAR / 5.0)
        return Branch(id=f'O[1,{j}]', domain=domain, image=image, forward=forward,
                      inverse=inverse, jacobian=jacobian,
                      contraction_bound=column_contraction(1), distortion_bound=Fraction(0),
                      index=1)

    if i > MAX_FLOAT_COLUMN:
        raise TruncationInsufficient(f"column {i} is below double resolution; use the log-scale helpers")
    step = 5.0 ** (-i)
    left = b[i] if i <= EXPLICIT_COLUMNS else float(column_breakpoint(i))
    width = float(column_width(i))
    lo = (j - 1) * step
    stretch = 1.0 / width

    def forward(p, left=left, stretch=stretch, lo=lo, step=step):
        p = np.atleast_2d(p)
        yp = p[:, 1] - lo
        return np.column_stack([stretch * (p[:, 0] - left) * (1.0 + yp), yp / step])

    def inverse(q, left=left, stretch=stretch, lo=lo, step=step):
        q = np.atleast_2d(q)
        yp = q[:, 1] * step
        return np.column_stack([left + q[:, 0] / (stretch * (1.0 + yp)), lo + yp])

    def jacobian(q, stretch=stretch, step=step):
        q = np.atleast_2d(q)
        return step / (stretch * (1.0 + q[:, 1] * step))

    domain = geo.Box(left, left + width, lo, lo + step)
    image = geo.ShearedBox(x0=0.0, y0=0.0, y1=1.0, intercept=1.0, slope=step)
    return Branch(id=f'O[{i},{j}]', domain=domain, image=image, forward=forward, inverse=inverse,
                  jacobian=jacobian, contraction_bound=column_contraction(i),
                  distortion_bound=Fraction(1), index=i)


def locate(point: np.ndarray) -> Branch:
    """Branch of the cell containing a point of X"""
    point = np.atleast_2d(point)
    if not in_space(point)[0]:
        raise OutsideSpace(f"{point[0].tolist()} is not in X")
    x, y = float(point[0, 0]), float(point[0, 1])
    i = column_of(x)
    if i > MAX_FLOAT_COLUMN:
        raise TruncationInsufficient(f"point {point[0].tolist()} lies in column {mp.nstr(i, 5)}")
    i = int(i)
    rows = 5 if i == 1 else 5 ** i
    j = min(rows, int(math.floor(y * rows)) + 1)
    return cell_branch(i, j)


# --- Complexity model ---

def _line_coverage(y0: float, y1: float, step: float, half_width: float) -> float:
    """Measure of (y0, y1) within half_width of the lines y = k·step, lines y = 0, 1 excluded"""

    def cumulative(y: float) -> float:
        periods = math.floor(y / step)
        r = y - periods * step
        return periods * 2.0 * half_width + min(r, half_width) + max(0.0, r - (step - half_width))

    covered = cumulative(y1) - cumulative(y0)
    covered -= max(0.0, min(y1, half_width) - max(y0, 0.0))
    covered -= max(0.0, min(y1, 1.0) - max(y0, 1.0 - half_width))
    return max(0.0, covered)


def internal_strip_area(box: geo.Box, eps: float, lam: float) -> Tuple[float, float]:
    """
    Numerator and denominator of the complexity expression for a rectangle inside X

    Args:
        box: Rectangle strictly inside X
        eps: Scale ε
        lam: Global contraction λ

    Returns:
        (pulled-back image-boundary area outside ∂_{λε}box, area of ∂_{λε}box)
    """
    inner = box.shrink(lam * eps)
    denominator = box.eps_boundary_area(lam * eps)
    if inner.is_empty():
        return 0.0, denominator
    height = inner.height
    b = breakpoints()
    total = 0.0
    for i in range(1, EXPLICIT_COLUMNS + 1):
        left = b[i]
        right = b[i - 1] if i >= 2 else 1.0 + SHEAR
        p, q = max(inner.x0, left), min(inner.x1, right)
        if q <= p:
            continue
        strip = min(column_contraction(i) * eps, right - left)
        vertical = max(0.0, min(q, left + strip) - p)
        if i >= 2:
            vertical += max(0.0, q - max(p, right - strip))
        total += vertical * height
        step = 0.2 if i == 1 else 5.0 ** (-i)
        total += (q - p) * _line_coverage(inner.y0, inner.y1, step, min(step * eps, 0.5 * step))
    p, q = max(inner.x0, 0.0), min(inner.x1, b[EXPLICIT_COLUMNS])
    if q > p:
        total += (min(2.0 * math.sqrt(2.0) * eps, 1.0) + min(2.0 * eps, 1.0)) * (q - p) * height
    return total, denominator


def complexity_ratio(box: geo.Box, eps: float, lam: float) -> float:
    numerator, denominator = internal_strip_area(box, eps, lam)
    return numerator / denominator if denominator > 0 else 0.0


# --- Log-scale helpers for cells near the accumulation line ---

def whole_column_index(side: float) -> mp.mpf:
    """Least i such that column i lies inside (0, side)"""
    return column_of(side) + 1


def image_holds_unit_square(i) -> bool:
    """Cells of column i ≥ 2 map onto {0 < y < 1, 0 < x < 1 + 5^{-i}y} ⊇ (0, 1)²"""
    return i >= 2


def log_cell_area(i) -> mp.mpf:
    i = mp.mpf(i)
    return mp.log(column_width(i)) - i * mp.log(5)


def log_jacobian_floor(i) -> mp.mpf:
    """ln inf Jh over the image of any cell of column i ≥ 2"""
    i = mp.mpf(i)
    return -(i + 1) * mp.log(5) - mp.log(W()) - exponent() * mp.log(i) - mp.log1p(mp.power(5, -i))


def build_skew_map() -> MapSpec:
    """Skew map of X = {0 < y < 1, 0 < x < 1 + y/25} with columns accumulating on x = 0"""
    w = W()
    lam = mp.mpf('1.1') * mp.sqrt(2) / 5
    declared = {
        'alpha': Fraction(1), 'n0': 1, 'eps1': Fraction(2), 'eps2': Fraction(2),
        'eps3': Fraction(2), 'eps4': Fraction(1, 20), 'lambda': lam, 'Dtilde': Fraction(1),
        'eps0_rule': 'search', 'eta': Fraction(1, 3), 'diam_X': math.hypot(1.0 + SHEAR, 1.0),
        'W': w, 'h5': False,
    }
    metric = MetricMeasureConfig.lebesgue_2d(space_region(), eps1=Fraction(2), mode=geo.AMBIENT)
    spec = MapSpec(metric=metric, branches=[], name='skew2d', declared=declared, locator=locate)
    logger.info(f"✓ Skew map ready (W = {mp.nstr(w, 8)}, b_1 = {breakpoints()[1]:.6f})")
    return spec
