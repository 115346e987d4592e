"""
Unit Tests for Inducing Schemes
Tests return schedules, the fixed ratio, tail fits and the three schemes on the built-in maps
"""

import pytest
import sys
from pathlib import Path

import math

import mpmath as mp

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

from constants_pipeline import derive_constants
from errors import GcdSearchFailed, InducingError, InsufficientLevels
from fixtures import load_fixture
from hypothesis_suite import certify, check_inducing_partition
from inducing_schemes import (InducingConfig, build_scheme_1, build_scheme_2, build_scheme_3, fit_tail,
                              fixed_ratio, replay_tail, return_schedule, synthetic_scheme, tail_statistics)


@pytest.fixture(scope='module')
def doubling():
    """Doubling map fixture"""
    return load_fixture('doubling')


@pytest.fixture(scope='module')
def doubling_report(doubling):
    """Complete constants of the doubling map"""
    return derive_constants(certify(doubling, trial_count=100))


@pytest.fixture(scope='module')
def desk_scheme(doubling, doubling_report):
    """Scheme 1 of the doubling map at desk scale"""
    return build_scheme_1(doubling, doubling_report, config=InducingConfig.desk(doubling_report))


@pytest.fixture(scope='module')
def skew():
    """2D skew map with its (incomplete) constants"""
    spec = load_fixture('skew2d')
    return spec, derive_constants(certify(spec, trial_count=100))


class TestSchedule:
    """Test the return times over Z"""

    def test_two_returns(self):
        """Test n₁ = ñ₁ + m₀ñ_K and n_K = ñ_K + Σ n_j"""
        assert return_schedule([1, 2], seed_steps=3, block_steps=2) == [3, 5]

    def test_late_seed(self):
        """Test that the first time waits for the seed recovery"""
        times = return_schedule([3, 5], seed_steps=10, block_steps=4)
        assert times == [13, 18]
        assert math.gcd(*times) == 1

    def test_single_return(self):
        """Test that one return time is read as {1, 2}"""
        assert return_schedule([1], seed_steps=1, block_steps=1) == [3, 5]

    def test_gcd_must_be_one(self):
        """Test returns with a common divisor"""
        with pytest.raises(GcdSearchFailed):
            return_schedule([2, 4], seed_steps=1, block_steps=1)


class TestFixedRatio:
    """Test t in one and two dimensions"""

    def test_one_dimension(self, doubling_report):
        """Test t with Ca = 1 and C_B = ε₀"""
        m = 0.01
        expected = (2 / 3) * m ** 2 / 0.25 / (m / 3 + 0.25)
        assert float(fixed_ratio(doubling_report, m)) == pytest.approx(expected)

    def test_two_dimensions(self, doubling_report):
        """Test C_B = πε₀²/4"""
        m = 0.01
        C_B = math.pi * 0.25 ** 2 / 4
        expected = (2 / 3) * m ** 2 / C_B / (m / 3 + C_B)
        assert float(fixed_ratio(doubling_report, m, 2)) == pytest.approx(expected)


class TestTailFit:
    """Test κ fits on prescribed tails"""

    def test_geometric_tail(self):
        """Test m(τ = n) = 2⁻ⁿ gives κ = 1/2"""
        scheme = synthetic_scheme({n: 2.0 ** -n for n in range(1, 21)})
        fit = tail_statistics(scheme)
        assert fit.kappa == pytest.approx(0.5)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.one_minus_kappa == pytest.approx(0.5)
        assert fit.gcd == 1
        assert fit.levels == 20

    def test_too_few_levels(self):
        """Test that a short tail is refused"""
        with pytest.raises(InsufficientLevels):
            tail_statistics(synthetic_scheme({n: 2.0 ** -n for n in range(1, 6)}))

    def test_gcd_of_even_levels(self):
        """Test the gcd of realized levels"""
        scheme = synthetic_scheme({2 * n: 2.0 ** -n for n in range(1, 12)})
        assert scheme.gcd == 2

    def test_log_scale_fit(self):
        """Test the mpmath least-squares path"""
        kappa, r2, one_minus = fit_tail(range(1, 11), [-n * mp.log(2) for n in range(1, 11)], log_scale=True)
        assert abs(kappa - mp.mpf(1) / 2) < mp.mpf(10) ** -25
        assert r2 == pytest.approx(1.0)
        assert abs(one_minus - mp.mpf(1) / 2) < mp.mpf(10) ** -25


class TestDoublingScheme:
    """Test scheme 1 on the doubling map"""

    def test_cells_map_onto_partition(self, desk_scheme):
        """Test that every image is an element of 𝓡"""
        partition = desk_scheme.partition
        assert desk_scheme.cells
        for cell in desk_scheme.cells:
            assert cell.image == partition.cell(cell.image_index)
            assert cell.tau >= 1

    def test_mass_balance(self, desk_scheme):
        """Test Σ cells + deficit = m(base)"""
        assert desk_scheme.mass_error() < 1e-6
        tail = desk_scheme.tail()['tail']
        assert (tail.diff().dropna() <= 1e-15).all(), "Tail must be nonincreasing"

    def test_markov_landing(self, desk_scheme):
        """Test that pulled-back cell domains land on their images"""
        assert desk_scheme.checks['markov_landed'] == desk_scheme.checks['markov_tried']

    def test_first_stop(self, desk_scheme):
        """Test that the base touching 0 stops after one step"""
        assert 1 in desk_scheme.levels
        assert desk_scheme.gcd == 1

    def test_replay(self, doubling, desk_scheme):
        """Test the orbit replay against the computed tail on the first levels"""
        result = replay_tail(doubling, desk_scheme, points=20_000, seed=3)
        early = result.table[result.table['n'] <= 20]
        assert len(early) > 0
        assert early['within'].all()

    def test_scheme_3_needs_pz(self, doubling, doubling_report):
        """Test that a 1D partition has no 𝓟_Z"""
        partition = check_inducing_partition(doubling, 0.09375)
        with pytest.raises(InducingError):
            build_scheme_3(doubling, doubling_report, partition)


class TestWMapScheme:
    """Test scheme 1 on the W-map against orbits"""

    @pytest.fixture(scope='class')
    def wmap_scheme(self):
        """W-map and its desk-scale scheme 1"""
        wmap = load_fixture('wmap')
        report = derive_constants(certify(wmap, trial_count=100))
        return wmap, build_scheme_1(wmap, report, config=InducingConfig.desk(report))

    def test_mass_balance(self, wmap_scheme):
        """Test Σ cells + deficit = m(base) with a nonincreasing tail"""
        _, scheme = wmap_scheme
        assert scheme.mass_error() < 1e-6
        tail = scheme.tail()['tail']
        assert (tail.diff().dropna() <= 1e-15).all()

    def test_replay_agrees(self, wmap_scheme):
        """Test that Monte Carlo return times match the computed tail on the first levels"""
        wmap, scheme = wmap_scheme
        result = replay_tail(wmap, scheme, points=20_000, seed=5)
        early = result.table[result.table['n'] <= 20]
        assert len(early) > 0
        assert early['within'].all()


class TestSkewSchemes:
    """Test the log-mass schemes of the 2D map"""

    def test_scheme_2_has_gcd_one(self, skew):
        """Test gcd 1 and a tail rate strictly inside (0, 1)"""
        spec, report = skew
        scheme = build_scheme_2(spec, report)
        assert scheme.log_scale
        assert scheme.gcd == 1
        fit = tail_statistics(scheme)
        assert 0 < fit.one_minus_kappa < 1
        assert fit.r_squared > 0.99

    def test_scheme_2_tail_is_modeled(self, skew):
        """Test that the fixed-ratio tail is flagged as following from t rather than orbits"""
        spec, report = skew
        scheme = build_scheme_2(spec, report)
        assert scheme.checks['tail_by_construction']
        assert tail_statistics(scheme).modeled
        assert not tail_statistics(synthetic_scheme({n: 2.0 ** -n for n in range(1, 21)})).modeled

    def test_scheme_3_unit_return(self, skew):
        """Test τ = 1 on the four elements of 𝓟_Z"""
        spec, report = skew
        scheme = build_scheme_3(spec, report)
        assert scheme.checks['tau_one_cells'] == 4
        assert scheme.level_masses()[1] < scheme.base_mass

    def test_replay_is_one_dimensional(self, skew):
        """Test that the orbit replay refuses log-scale schemes"""
        spec, report = skew
        with pytest.raises(InducingError):
            replay_tail(spec, build_scheme_1(spec, report))


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
