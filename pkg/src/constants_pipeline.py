"""
Constants Pipeline for expmix
Derives the explicit chain a₀, ε₀, ζ₁..ζ₄, θ₁, θ₂, M, B₀, δ₀, γ, γ₁, n₁, n₂, n̄, γ₂, C from a certificate
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import mpmath as mp

from errors import ConstantsError, InfeasibleEps0, NeverRecovers
from expressions import Expression
from hypothesis_suite import HypothesisCertificate, divisibility_constant
from map_model import Number, to_mp

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

DEFAULT_A0_MARGIN = mp.mpf('1.0001')
HALVING_CAP = 200
LEAST_INTEGER_CAP = 10**6


def _show(value: Any) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, mp.mpf):
        return mp.nstr(value, 15)
    return str(value)


@dataclass(frozen=True)
class Provenance:
    formula: str
    inputs: Dict[str, str]

    def line(self, name: str, value: Any) -> str:
        inputs = ', '.join(f"{k}={v}" for k, v in self.inputs.items())
        return f"{name} = {_show(value)}  [{self.formula}; {inputs}]"


@dataclass
class ConstantsReport:
    """Full derived chain with one provenance record per constant"""

    name: str
    dimension: int
    lam: Number
    alpha: Number
    Dtilde: Number
    D: Number
    n0: int
    sigma: Number
    a0: Number
    eps0: Number
    Ca: mp.mpf
    Caa: mp.mpf
    C_eps0: mp.mpf
    C_eps0_recomputed: mp.mpf
    sigma_bound: mp.mpf
    zeta1: mp.mpf
    theta1: mp.mpf
    zeta2: mp.mpf
    zeta3: mp.mpf
    zeta4: mp.mpf
    theta2: mp.mpf
    M: int
    B0_min: mp.mpf
    B0: mp.mpf
    delta0: mp.mpf
    c_split: mp.mpf
    sigma_bound_published: Optional[mp.mpf] = None
    delta_exponent: int = 2
    C_X: Optional[Number] = None
    N_delta: Optional[int] = None
    Delta: Optional[Number] = None
    Gamma: Optional[Number] = None
    omega: Optional[Tuple[float, float]] = None
    gamma: Optional[mp.mpf] = None
    gamma1: Optional[mp.mpf] = None
    n1: Optional[int] = None
    k0: Optional[int] = None
    n2: Optional[int] = None
    nbar: Optional[int] = None
    C_gamma1: Optional[mp.mpf] = None
    one_minus_gamma2: Optional[mp.mpf] = None
    gamma2: Optional[mp.mpf] = None
    C: Optional[mp.mpf] = None
    provenance: Dict[str, Provenance] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.gamma2 is not None

    @property
    def log10_one_minus_gamma2(self) -> Optional[float]:
        if self.one_minus_gamma2 is None:
            return None
        return float(mp.log10(self.one_minus_gamma2))

    def provenance_lines(self) -> List[str]:
        return [record.line(name, getattr(self, name)) for name, record in self.provenance.items()]

    def rows(self) -> List[Dict[str, str]]:
        """One row per constant: name, value, formula, inputs"""
        return [{'name': name, 'value': _show(getattr(self, name)), 'formula': record.formula,
                 'inputs': '; '.join(f"{k}={v}" for k, v in record.inputs.items())}
                for name, record in self.provenance.items()]

    def to_dict(self) -> Dict[str, Any]:
        out = {row['name']: row['value'] for row in self.rows()}
        out.update({'name': self.name, 'complete': self.complete,
                    'log10_one_minus_gamma2': self.log10_one_minus_gamma2,
                    'provenance': self.provenance_lines()})
        return out


class _ChainBuilder:
    """Collects values and provenance while the chain is evaluated"""

    def __init__(self):
        self.values: Dict[str, Any] = {}
        self.provenance: Dict[str, Provenance] = {}

    def record(self, name: str, value: Any, formula: str, **inputs) -> Any:
        self.values[name] = value
        self.provenance[name] = Provenance(formula, {k: _show(v) for k, v in inputs.items()})
        return value


def least_integer(predicate: Callable[[int], bool], start: int = 0, what: str = 'integer') -> int:
    """Smallest n ≥ start with predicate(n)"""
    n = start
    while not predicate(n):
        n += 1
        if n > LEAST_INTEGER_CAP:
            raise ConstantsError(f"no {what} found below {LEAST_INTEGER_CAP}")
    return n


def _declared(cert: HypothesisCertificate, key: str, default: Any = None) -> Any:
    value = cert.declared.get(key, default)
    if isinstance(value, str):
        return Expression(value).evaluate()
    return value


def _select_eps0(cert: HypothesisCertificate, a0: mp.mpf, eps_max: mp.mpf,
                 eps0_choice: Optional[Number]) -> Number:
    lam, alpha, n0 = to_mp(cert.lam), to_mp(cert.alpha), cert.n0
    sigma = to_mp(cert.sigma)
    threshold = lam ** (-n0) - 1

    def feasible(eps0) -> bool:
        return sigma < mp.exp(-a0 * to_mp(eps0) ** alpha) * threshold

    rule = cert.declared.get('eps0_rule', 'search')
    if eps0_choice is not None:
        eps0 = eps0_choice
    elif rule == 'average':
        if a0 <= 0:
            raise InfeasibleEps0("the averaging rule needs a0 > 0")
        eps0 = (mp.log(2 * threshold / (sigma + threshold)) / a0) ** (1 / alpha)
    elif rule == 'fixed':
        eps0 = cert.declared['eps0']
    else:
        eps0 = eps_max if mp.isfinite(eps_max) else mp.mpf(1)
        for _ in range(HALVING_CAP):
            if feasible(eps0):
                break
            eps0 = eps0 / 2
        else:
            raise InfeasibleEps0(f"no ε₀ ≤ {mp.nstr(eps_max, 6)} satisfies σ < e^(-a₀ε₀^α)(λ^(-n₀)−1)")
    if to_mp(eps0) > eps_max * (1 + mp.mpf(10) ** -20) or not feasible(eps0):
        logger.error(f"ε₀ = {_show(eps0)} is infeasible")
        raise InfeasibleEps0(f"ε₀ = {_show(eps0)} violates ε₀ ≤ {mp.nstr(eps_max, 6)} or "
                             f"σ < e^(-a₀ε₀^α)(λ^(-n₀)−1)")
    return eps0


def _ball_bound(dimension: int, eps: mp.mpf) -> mp.mpf:
    return eps if dimension == 1 else mp.pi * eps ** 2 / 4


def derive_constants(cert: HypothesisCertificate, a0_choice: Optional[Number] = None,
                     B0_choice: Optional[Number] = None, eps0_choice: Optional[Number] = None,
                     delta_exponent: int = 2,
                     linker: Optional[Callable[..., Any]] = None) -> ConstantsReport:
    """
    Evaluate the constants chain

    Args:
        cert: Certificate from hypothesis_suite.certify
        a0_choice: a₀ override (must exceed D/(1−λ^α))
        B0_choice: B₀ override (at least the minimum admissible value)
        eps0_choice: ε₀ override
        delta_exponent: Power of Δ_δ in γ (2 by default, 1 for the alternative reading)
        linker: Positively-linked search run once δ₀ is known; defaults to the certificate's

    Returns:
        ConstantsReport; the chain stops after δ₀ when no linking data can be produced (2D)
    """
    if delta_exponent not in (1, 2):
        raise ConstantsError("delta_exponent must be 1 or 2")
    chain = _ChainBuilder()
    lam, alpha, n0 = cert.lam, cert.alpha, cert.n0
    lam_m, alpha_m = to_mp(lam), to_mp(alpha)
    D = cert.D

    a0_floor = to_mp(D) / (1 - lam_m ** alpha_m)
    if a0_choice is not None:
        a0 = a0_choice
    elif 'a0' in cert.declared:
        a0 = cert.declared['a0']
    else:
        a0 = DEFAULT_A0_MARGIN * a0_floor
    if to_mp(a0) < a0_floor or (to_mp(a0) == a0_floor and a0_floor > 0):
        raise ConstantsError(f"a₀ = {_show(a0)} must exceed D/(1−λ^α) = {mp.nstr(a0_floor, 12)}")
    chain.record('a0', a0, 'a0 > D/(1-lam^alpha)', D=D, lam=lam, alpha=alpha)
    a0_m = to_mp(a0)

    eps_max = min(to_mp(_declared(cert, k, mp.inf)) for k in ('eps1', 'eps2', 'eps3', 'eps4'))
    eps0 = _select_eps0(cert, a0_m, eps_max, eps0_choice)
    chain.record('eps0', eps0, f"eps0 rule '{cert.declared.get('eps0_rule', 'search')}'",
                 sigma=cert.sigma, a0=a0, lam=lam, n0=n0)
    eps0_m = to_mp(eps0)

    exponent = a0_m * eps0_m ** alpha_m
    Ca = chain.record('Ca', mp.exp(exponent), 'exp(a0*eps0^alpha)', a0=a0, eps0=eps0)
    Caa = chain.record('Caa', 1 / Ca, 'exp(-a0*eps0^alpha)', Ca=Ca)
    threshold = lam_m ** (-n0) - 1
    chain.record('sigma_bound', Caa * threshold, 'exp(-a0*eps0^alpha)*(lam^-n0 - 1)', Caa=Caa, lam=lam)

    recomputed = divisibility_constant(cert.dimension, eps0_m, D, alpha_m, cert.declared.get('diam_X'))
    chain.record('C_eps0_recomputed', recomputed,
                 'exp(D*eps0^alpha)*6/eps0' if cert.dimension == 1 else 'exp(D*diamX^alpha)*6*d^1.5/eps0',
                 D=D, eps0=eps0)
    published = cert.declared.get('C_eps0_published')
    C_eps0 = Expression(published).evaluate() if published is not None else recomputed
    chain.record('C_eps0', C_eps0, 'published value' if published is not None else 'recomputed value',
                 recomputed=recomputed)
    cert.C_eps0 = C_eps0
    sigma_published = cert.declared.get('sigma_bound_published')
    if sigma_published is not None:
        chain.record('sigma_bound_published', Expression(sigma_published).evaluate(),
                     f"published value {sigma_published}", a0=a0, eps0=eps0)

    sigma_m = to_mp(cert.sigma)
    zeta1 = chain.record('zeta1', Ca * C_eps0, 'Ca*C_eps0', Ca=Ca, C_eps0=C_eps0)
    theta1 = chain.record('theta1', lam_m ** n0 * (1 + Ca * sigma_m), 'lam^n0*(1+Ca*sigma)',
                          lam=lam, n0=n0, Ca=Ca, sigma=cert.sigma)
    if theta1 >= 1:
        raise InfeasibleEps0(f"θ₁ = {mp.nstr(theta1, 12)} ≥ 1")
    zeta2 = chain.record('zeta2', zeta1 / (1 - theta1), 'zeta1/(1-theta1)', zeta1=zeta1, theta1=theta1)
    Cbar = to_mp(cert.Cbar) if (n0 > 1 and cert.Cbar is not None) else mp.mpf(0)
    zeta3 = chain.record('zeta3', 1 + Cbar if n0 > 1 else mp.mpf(1), '1+Cbar (1 if n0=1)', Cbar=Cbar, n0=n0)
    zeta4 = chain.record('zeta4', 1 + zeta2 * zeta3 if n0 > 1 else zeta2, '1+zeta2*zeta3 (zeta2 if n0=1)',
                         zeta2=zeta2, zeta3=zeta3)
    theta2 = chain.record('theta2', theta1 ** (mp.mpf(1) / n0), 'theta1^(1/n0)', theta1=theta1, n0=n0)
    M = chain.record('M', least_integer(lambda m: zeta3 * theta2 ** m < 1, 1, 'M'),
                     'least M>=1 with zeta3*theta2^M < 1', zeta3=zeta3, theta2=theta2)
    B0_min = chain.record('B0_min', zeta4 / (1 - zeta3 * theta2 ** M), 'zeta4/(1-zeta3*theta2^M)',
                          zeta4=zeta4, zeta3=zeta3, theta2=theta2, M=M)
    if B0_choice is not None and to_mp(B0_choice) < B0_min:
        raise ConstantsError(f"B₀ = {_show(B0_choice)} is below the minimum {mp.nstr(B0_min, 12)}")
    B0 = chain.record('B0', to_mp(B0_choice) if B0_choice is not None else B0_min,
                      'chosen' if B0_choice is not None else 'minimum admissible', B0_min=B0_min)
    delta0 = chain.record('delta0', 1 / (3 * B0), '1/(3*B0)', B0=B0)
    C_B = _ball_bound(cert.dimension, eps0_m)
    c_split = chain.record('c_split', C_B ** -1 * Caa / 2, '(1/2)*C_B(eps0)^-1*exp(-a0*eps0^alpha)',
                           C_B=C_B, Caa=Caa)

    report = ConstantsReport(
        name=cert.name, dimension=cert.dimension, lam=lam, alpha=alpha, Dtilde=cert.Dtilde, D=D, n0=n0,
        sigma=cert.sigma, a0=a0, eps0=eps0, Ca=Ca, Caa=Caa, C_eps0=C_eps0, C_eps0_recomputed=recomputed,
        sigma_bound=chain.values['sigma_bound'], zeta1=zeta1, theta1=theta1, zeta2=zeta2, zeta3=zeta3,
        zeta4=zeta4, theta2=theta2, M=M, B0_min=B0_min, B0=B0, delta0=delta0, c_split=c_split,
        sigma_bound_published=chain.values.get('sigma_bound_published'), delta_exponent=delta_exponent)

    linker = cert.linker if linker is None else linker
    if not cert.h5_complete and linker is not None:
        cert.attach_link(linker(delta0, {'eps0': eps0, 'M': M}))
    if not cert.h5_complete:
        logger.warning(f"No positively-linked data for {cert.name}; chain stops at δ₀")
        report.provenance = chain.provenance
        return report

    _finish_chain(report, cert, chain, C_B)
    report.provenance = chain.provenance
    logger.info(f"✓ Constants for {cert.name}: ε₀ = {_show(eps0)}, δ₀ = {mp.nstr(delta0, 6)}, "
                f"N_δ = {report.N_delta}, n̄ = {report.nbar}, log10(1−γ₂) = {report.log10_one_minus_gamma2:.2f}")
    return report


def _finish_chain(report: ConstantsReport, cert: HypothesisCertificate, chain: _ChainBuilder,
                  C_B: mp.mpf) -> None:
    a0_m, lam_m, alpha_m, D_m = to_mp(report.a0), to_mp(report.lam), to_mp(report.alpha), to_mp(report.D)
    report.C_X = chain.record('C_X', cert.C_X, 'balls of the line are good overlap sets')
    report.N_delta = chain.record('N_delta', cert.N_delta, 'max(N+E, M) from the positively-linked search',
                                  M=report.M)
    report.Delta = chain.record('Delta', cert.Delta, 'm(omega) = eps0/3', eps0=report.eps0)
    report.Gamma = chain.record('Gamma', cert.Gamma, 'inf Jh over the stopped cylinders')
    report.omega = cert.omega
    Gamma, Delta = to_mp(cert.Gamma), to_mp(cert.Delta)
    p = report.delta_exponent
    report.gamma = chain.record('gamma', C_B ** -2 * report.Caa ** 2 * Delta ** p * Gamma / 2,
                                f'(1/2)*C_B^-2*exp(-2*a0*eps0^alpha)*Delta^{p}*Gamma',
                                C_B=C_B, Caa=report.Caa, Delta=Delta, Gamma=Gamma)
    report.gamma1 = chain.record('gamma1', 2 * report.gamma / 3, '(2/3)*gamma', gamma=report.gamma)
    if not (0 < report.gamma1 < 1):
        raise ConstantsError(f"γ₁ = {mp.nstr(report.gamma1, 6)} is outside (0, 1)")

    if a0_m == 0:
        n1 = 0
    else:
        n1 = least_integer(lambda n: 2 * a0_m * lam_m ** (alpha_m * n) + D_m < a0_m, 1, 'n1')
    report.n1 = chain.record('n1', n1, 'least n with 2*a0*lam^(alpha*n) + D < a0 (0 if a0=0)',
                             a0=report.a0, D=report.D, lam=report.lam)
    C_X = to_mp(cert.C_X)
    ratio = report.zeta2 / report.B0
    report.k0 = chain.record('k0', least_integer(lambda k: (1 + C_X) * report.theta1 ** k + ratio < 1, 1, 'k0'),
                             'least k with (1+C_X)*theta1^k + zeta2/B0 < 1',
                             C_X=cert.C_X, theta1=report.theta1, zeta2=report.zeta2, B0=report.B0)
    report.n2 = chain.record('n2', report.k0 * report.n0, 'k0*n0', k0=report.k0, n0=report.n0)
    report.nbar = chain.record('nbar', report.N_delta + max(report.n1, report.n2), 'N_delta + max(n1, n2)',
                               N_delta=report.N_delta, n1=report.n1, n2=report.n2)
    report.C_gamma1 = chain.record('C_gamma1', 1 / (1 - report.gamma1), '(1-gamma1)^-1', gamma1=report.gamma1)
    report.one_minus_gamma2 = chain.record('one_minus_gamma2',
                                           -mp.expm1(mp.log1p(-report.gamma1) / report.nbar),
                                           '-expm1(log1p(-gamma1)/nbar)', gamma1=report.gamma1, nbar=report.nbar)
    report.gamma2 = chain.record('gamma2', 1 - report.one_minus_gamma2, '(1-gamma1)^(1/nbar)',
                                 one_minus_gamma2=report.one_minus_gamma2)
    report.C = chain.record('C', 2 * report.C_gamma1, '2*C_gamma1', C_gamma1=report.C_gamma1)


def mixing_time(report: ConstantsReport, p: Number) -> int:
    """
    Least m with C·γ₂^m ≤ p

    Args:
        report: Complete constants report
        p: Target L¹ discrepancy, 0 < p

    Returns:
        m (0 when p ≥ C)
    """
    if not report.complete:
        raise ConstantsError("mixing time needs a complete constants report")
    p = to_mp(p)
    if p <= 0:
        raise ValueError("target discrepancy must be positive")
    if p >= report.C:
        return 0
    log_gamma2 = mp.log1p(-report.one_minus_gamma2)
    m = mp.ceil(mp.log(p / report.C) / log_gamma2)
    return int(m)


def recovery_steps(theta1: Number, zeta2: Number, B0: Number, n0: int, B: Number) -> int:
    """
    n_rec(B) = n₀·k, k least with θ₁^k·B + ζ₂ ≤ B₀

    Args:
        theta1: θ₁ in (0, 1)
        zeta2: ζ₂
        B0: Target properness constant
        n0: Complexity iterate
        B: Starting properness constant (≥ 0)
    """
    theta1, zeta2, B0, B = to_mp(theta1), to_mp(zeta2), to_mp(B0), to_mp(B)
    if B < 0:
        raise ValueError("properness constant must be nonnegative")
    if B0 <= zeta2:
        raise NeverRecovers(f"B₀ = {mp.nstr(B0, 8)} does not exceed ζ₂ = {mp.nstr(zeta2, 8)}")
    if B + zeta2 <= B0:
        return 0
    k = max(0, int(mp.floor(mp.log((B0 - zeta2) / B) / mp.log(theta1))))
    while theta1 ** k * B + zeta2 > B0:
        k += 1
    while k > 0 and theta1 ** (k - 1) * B + zeta2 <= B0:
        k -= 1
    return n0 * k


def recovery_time(report: ConstantsReport, B: Number) -> int:
    """n_rec(B) for the report's θ₁, ζ₂, B₀ and n₀"""
    return recovery_steps(report.theta1, report.zeta2, report.B0, report.n0, B)


def inducing_constants(report: ConstantsReport, c_R: float, C_R: float) -> Dict[str, mp.mpf]:
    """C̄_𝓡 = (Ca·C_𝓡 + 1)·Ca/c_𝓡 for the remainder family"""
    Cbar_R = (report.Ca * C_R + 1) * report.Ca / mp.mpf(c_R)
    return {'Cbar_R': Cbar_R, 'c_R': mp.mpf(c_R), 'C_R': mp.mpf(C_R)}


if __name__ == "__main__":
    from fixtures import load_fixture
    from hypothesis_suite import certify

    print("=" * 60)
    print("Constants chain for the built-in 1D maps")
    print("=" * 60)
    for name in ('wmap', 'rplus', 'doubling'):
        cert = certify(load_fixture(name), trial_count=500)
        report = derive_constants(cert)
        print(f"\n{name}:")
        for line in report.provenance_lines():
            print(f"  {line}")
