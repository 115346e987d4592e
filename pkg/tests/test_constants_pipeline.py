"""
Unit Tests for the Constants Chain
Tests the derived constants of the built-in maps, recovery times and mixing times
"""

import pytest
import sys
from fractions import Fraction
from pathlib import Path

import math

import mpmath as mp

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

from constants_pipeline import (derive_constants, inducing_constants, least_integer, mixing_time,
                                recovery_steps, recovery_time)
from errors import ConstantsError, NeverRecovers
from fixtures import load_fixture
from hypothesis_suite import certify
from map_model import to_mp


def _derive(name, **kwargs):
    cert = certify(load_fixture(name), trial_count=200)
    return derive_constants(cert, **kwargs)


@pytest.fixture(scope='module')
def doubling_report():
    """Constants of the doubling map"""
    return _derive('doubling')


@pytest.fixture(scope='module')
def wmap_report():
    """Constants of the W-map"""
    return _derive('wmap')


@pytest.fixture(scope='module')
def rplus_report():
    """Constants of the non-Markov map of the half line"""
    return _derive('rplus')


@pytest.fixture(scope='module')
def skew_report():
    """Constants of the 2D skew map (chain stops at δ₀)"""
    cert = certify(load_fixture('skew2d'), trial_count=100)
    return derive_constants(cert)


class TestDoubling:
    """Test the distortion-free chain, every value by hand"""

    def test_front_of_chain(self, doubling_report):
        """Test ε₀, C_{ε₀}, θ₁, ζ₂ and B₀"""
        r = doubling_report
        assert r.a0 == 0
        assert r.eps0 == Fraction(1, 4)
        assert float(r.C_eps0) == pytest.approx(24.0)
        assert float(r.theta1) == pytest.approx(0.5)
        assert float(r.zeta2) == pytest.approx(48.0)
        assert r.M == 1
        assert float(r.B0) == pytest.approx(96.0)
        assert float(r.delta0) == pytest.approx(1 / 288)

    def test_tail_of_chain(self, doubling_report):
        """Test N_δ, n₁, k₀, n̄ and γ₁"""
        r = doubling_report
        assert r.complete
        assert r.N_delta == 11
        assert r.n1 == 0
        assert r.k0 == 3
        assert r.nbar == 14
        assert float(r.gamma1) == pytest.approx(1 / 55296)

    def test_gamma2_is_exact_root(self, doubling_report):
        """Test (1−γ₁)^{1/n̄} against the stable evaluation"""
        r = doubling_report
        assert abs(r.gamma2 - (1 - r.gamma1) ** (mp.mpf(1) / r.nbar)) < mp.mpf(10) ** -25

    def test_provenance(self, doubling_report):
        """Test one provenance record per constant"""
        r = doubling_report
        assert r.provenance['B0'].formula == 'minimum admissible'
        names = [row['name'] for row in r.rows()]
        assert names.index('eps0') < names.index('delta0') < names.index('gamma2')
        assert r.to_dict()['complete'] is True


class TestWMap:
    """Test the W-map chain"""

    def test_a0_and_eps0(self, wmap_report):
        """Test the declared a₀ and the averaged ε₀"""
        r = wmap_report
        assert r.a0 == Fraction(25089, 9025)
        assert float(r.C_eps0) == pytest.approx(181.75, rel=1e-3)

    def test_eps0_closed_form(self, wmap_report):
        """Test ε₀ = (9025/25089)·ln(1520/1381)"""
        expected = mp.mpf(9025) / 25089 * mp.log(mp.mpf(1520) / 1381)
        assert abs(to_mp(wmap_report.eps0) / expected - 1) < mp.mpf('1e-12')

    def test_B0_and_delta0(self, wmap_report):
        """Test B₀ ≈ 9.4·10⁴ and δ₀ = 1/(3B₀)"""
        r = wmap_report
        assert float(r.B0) == pytest.approx(9.4e4, rel=0.02)
        assert float(r.delta0) == pytest.approx(3.5e-6, rel=0.03)

    def test_iteration_counts(self, wmap_report):
        """Test n₁, k₀ and N_δ"""
        r = wmap_report
        assert r.n1 == 3
        assert r.k0 == 16
        assert abs(r.N_delta - 57) <= 2
        assert r.nbar == r.N_delta + 16

    def test_gamma2(self, wmap_report):
        """Test 1−γ₂ ≈ 10^{−40.3}"""
        assert wmap_report.log10_one_minus_gamma2 == pytest.approx(-40.3, abs=1.0)


class TestRPlus:
    """Test the chain of the non-Markov half-line map"""

    def test_front_of_chain(self, rplus_report):
        """Test θ₁, ζ₂, B₀ and δ₀"""
        r = rplus_report
        assert float(r.theta1) == pytest.approx(0.2195, abs=1e-4)
        assert float(r.zeta2) == pytest.approx(19.34, abs=0.01)
        assert float(r.B0) == pytest.approx(24.78, abs=0.01)
        assert float(r.delta0) == pytest.approx(0.01345, abs=1e-4)

    def test_chain_completes_with_published_sigma(self, rplus_report):
        """Test that the published σ bound is carried and the chain reaches N_δ"""
        r = rplus_report
        assert r.complete
        assert float(r.sigma_bound_published) == pytest.approx(9 * math.exp(-0.1))
        assert abs(r.N_delta - 5) <= 1

    def test_published_and_recomputed_C_eps0(self, rplus_report):
        """Test that both readings of C_{ε₀} are carried"""
        r = rplus_report
        assert float(r.C_eps0) == pytest.approx(12 * math.exp(0.1))
        assert float(r.C_eps0_recomputed) == pytest.approx(12 * math.exp(1 / 9))

    def test_iteration_counts(self, rplus_report):
        """Test N_δ, n₁, k₀ and n̄"""
        r = rplus_report
        assert r.N_delta == 5
        assert (r.n1, r.k0, r.nbar) == (2, 2, 7)
        assert r.log10_one_minus_gamma2 == pytest.approx(-28.1, abs=1.0)


class TestSkew:
    """Test the 2D chain"""

    def test_stops_at_delta0(self, skew_report):
        """Test that the chain is incomplete and δ₀ is of order 10⁻⁵"""
        r = skew_report
        assert not r.complete
        assert r.N_delta is None
        assert float(r.eps0) == pytest.approx(0.05, rel=0.05)
        # σ is sampled in 2D, so δ₀ moves with the trial count; the golden check is an order comparison
        assert abs(math.log10(float(r.delta0)) - math.log10(2.2e-5)) < 0.2
        assert abs(r.delta0 - (1 - r.theta1) ** 2 / (3 * r.zeta1)) < mp.mpf(10) ** -30

    def test_more_trials_do_not_raise_delta0(self, skew_report):
        """Test that a larger sample can only raise σ and so lower δ₀"""
        wider = derive_constants(certify(load_fixture('skew2d'), trial_count=400))
        assert wider.sigma >= skew_report.sigma
        assert wider.delta0 <= skew_report.delta0

    def test_mixing_time_needs_complete_chain(self, skew_report):
        """Test that an incomplete report has no mixing time"""
        with pytest.raises(ConstantsError):
            mixing_time(skew_report, 0.5)


class TestChoices:
    """Test overrides and their validation"""

    def test_delta_exponent(self):
        """Test that only Δ and Δ² are accepted"""
        cert = certify(load_fixture('doubling'), trial_count=100)
        with pytest.raises(ConstantsError):
            derive_constants(cert, delta_exponent=3)

    def test_linear_delta_gives_larger_gamma(self, doubling_report):
        """Test γ(Δ¹) = γ(Δ²)/Δ"""
        linear = _derive('doubling', delta_exponent=1)
        assert float(linear.gamma) == pytest.approx(float(doubling_report.gamma) * 12)

    def test_a0_too_small(self):
        """Test a₀ ≤ D/(1−λ) is refused"""
        cert = certify(load_fixture('wmap'), trial_count=100)
        with pytest.raises(ConstantsError):
            derive_constants(cert, a0_choice=Fraction(1))

    def test_B0_below_minimum(self):
        """Test that B₀ under the admissible minimum is refused"""
        cert = certify(load_fixture('doubling'), trial_count=100)
        with pytest.raises(ConstantsError):
            derive_constants(cert, B0_choice=50)


class TestRecovery:
    """Test recovery times of the properness constant"""

    def test_recovery_steps(self):
        """Test n_rec for the doubling constants"""
        assert recovery_steps(0.5, 48, 96, 1, 1000) == 5
        assert recovery_steps(0.5, 48, 96, 2, 1000) == 10
        assert recovery_steps(0.5, 48, 96, 1, 40) == 0

    def test_never_recovers(self):
        """Test B₀ ≤ ζ₂"""
        with pytest.raises(NeverRecovers):
            recovery_steps(0.5, 48, 48, 1, 10)

    def test_negative_B(self):
        """Test that a negative properness constant is rejected"""
        with pytest.raises(ValueError):
            recovery_steps(0.5, 48, 96, 1, -1)

    def test_recovery_time_uses_report(self, doubling_report):
        """Test the report wrapper"""
        assert recovery_time(doubling_report, 1000) == 5


class TestMixingTime:
    """Test m(p)"""

    def test_large_target(self, doubling_report):
        """Test that p ≥ C needs no steps"""
        assert mixing_time(doubling_report, float(doubling_report.C) + 1) == 0

    def test_least_m(self, doubling_report):
        """Test C·γ₂^m ≤ p < C·γ₂^{m−1}"""
        r = doubling_report
        p = mp.mpf('0.01')
        m = mixing_time(r, p)
        assert r.C * r.gamma2 ** m <= p * (1 + mp.mpf(10) ** -20)
        assert r.C * r.gamma2 ** (m - 1) > p

    def test_nonpositive_target(self, doubling_report):
        """Test p ≤ 0 is rejected"""
        with pytest.raises(ValueError):
            mixing_time(doubling_report, 0)


class TestHelpers:
    """Test small helpers of the chain"""

    def test_least_integer(self):
        """Test the least-integer search"""
        assert least_integer(lambda n: n * n > 50, 1) == 8
        assert least_integer(lambda n: True, 5) == 5

    def test_inducing_constants(self, doubling_report):
        """Test C̄_𝓡 = (Ca·C_𝓡 + 1)·Ca/c_𝓡 with Ca = 1"""
        out = inducing_constants(doubling_report, 2 / 3, 2.0)
        assert float(out['Cbar_R']) == pytest.approx(4.5)


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
