"""
Unit Tests for Standard Families
Tests standard pairs, family iteration with chopping, boundary masses and the growth audit
"""

import pytest
import sys
from pathlib import Path

import math

import numpy as np

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

from constants_pipeline import derive_constants
from errors import ComparabilityViolated, FamilyError, GridUnderflow, TruncationInsufficient
from fixtures import load_fixture
from hypothesis_suite import certify
from standard_families import (MAX_PIECES, StandardPair, boundary_measure, comparability_check,
                               family_from_density, growth_audit, iterate, properness_constant)
from transfer_operator import GridDensity, apply_L


@pytest.fixture(scope='module')
def doubling():
    """Doubling map fixture"""
    return load_fixture('doubling')


@pytest.fixture(scope='module')
def wmap():
    """W-map fixture"""
    return load_fixture('wmap')


@pytest.fixture(scope='module')
def wmap_report(wmap):
    """Constants of the W-map"""
    return derive_constants(certify(wmap, trial_count=100))


@pytest.fixture
def uniform_family(doubling):
    """Lebesgue measure on (0, 1) chopped into four pairs"""
    return family_from_density(doubling, [(0.0, 1.0)], lambda x: np.zeros_like(x), 0.25)


class TestStandardPair:
    """Test a single pair"""

    def test_uniform_pair(self):
        """Test normalization and the density off the domain"""
        pair = StandardPair.uniform([(0.0, 0.25)])
        assert pair.norm() == pytest.approx(1.0)
        assert pair.density(np.array([0.1, 0.5])) == pytest.approx([4.0, 0.0])
        assert pair.integral([(0.0, 0.1)]) == pytest.approx(0.4)

    def test_log_linear_density_is_exact(self):
        """Test that the cumulative integral of e^{2x} is exact"""
        pair, total = StandardPair.build([(0.0, 1.0)], lambda x: 2.0 * x, n_nodes=8)
        assert total == pytest.approx((math.exp(2.0) - 1.0) / 2.0)
        half = pair.integral([(0.0, 0.5)])
        assert half == pytest.approx((math.e - 1.0) / (math.exp(2.0) - 1.0))

    def test_holder_constant(self):
        """Test the Lipschitz constant of ln ρ"""
        pair, _ = StandardPair.build([(0.0, 1.0)], lambda x: 2.0 * x, n_nodes=16)
        assert pair.holder_constant() == pytest.approx(2.0)

    def test_too_many_pieces(self):
        """Test the piece cap"""
        pieces = [(float(k), k + 0.5) for k in range(MAX_PIECES + 1)]
        with pytest.raises(FamilyError):
            StandardPair.uniform(pieces)

    def test_nonfinite_density(self):
        """Test that a vanishing density is reported"""
        with pytest.raises(GridUnderflow):
            StandardPair.build([(0.0, 1.0)], lambda x: np.full_like(x, -np.inf))

    def test_comparability(self):
        """Test inf ρ ≍ averages ≍ sup ρ within e^{aε₀}"""
        flat = StandardPair.uniform([(0.0, 0.25)])
        report = comparability_check(flat, [(0.0, 0.1)], [(0.1, 0.25)], a=1, eps0=0.25)
        assert report.passed
        steep, _ = StandardPair.build([(0.0, 0.25)], lambda x: 10.0 * x)
        with pytest.raises(ComparabilityViolated):
            comparability_check(steep, [(0.0, 0.1)], [(0.1, 0.25)], a=1, eps0=0.25)


class TestFamilies:
    """Test families and their iteration"""

    def test_chopping(self, uniform_family):
        """Test four cells of mass 1/4"""
        assert len(uniform_family) == 4
        assert uniform_family.weights == pytest.approx([0.25] * 4)

    def test_lebesgue_is_invariant(self, uniform_family):
        """Test that Lebesgue measure is fixed by the doubling map"""
        pushed = iterate(uniform_family, 3)
        assert pushed.total_weight() + pushed.deficit == pytest.approx(1.0, abs=1e-12)
        xs = np.linspace(0.05, 0.95, 6)
        assert np.allclose(pushed.density_at(xs), 1.0, rtol=1e-6)
        assert len(pushed) == 4, "Identical domains are consolidated"

    def test_invalid_steps(self, uniform_family):
        """Test n = 0"""
        with pytest.raises(ValueError):
            iterate(uniform_family, 0)

    def test_prune_moves_mass_to_deficit(self, uniform_family):
        """Test that a negligible pair is dropped into the deficit"""
        tiny = uniform_family.copy_with(uniform_family.pairs, [1.0, 1.0, 1.0, 1e-14])
        pruned = tiny.prune()
        assert len(pruned) == 3
        assert pruned.deficit == pytest.approx(1e-14)
        assert pruned.ledger[-1]['reason'] == 'pruned'

    def test_truncation_is_reported(self):
        """Test that mass beyond the materialized branches stops the iteration"""
        spec = load_fixture('rplus')
        family = family_from_density(spec, [(39.5, 40.5)], lambda x: np.zeros_like(x), 0.5)
        with pytest.raises(TruncationInsufficient):
            iterate(family, 1)


class TestBoundary:
    """Test |∂_ε G| and the properness constant"""

    def test_boundary_measure(self, uniform_family):
        """Test that only interior cut points carry boundary mass"""
        masses = boundary_measure(uniform_family, [0.01, 0.05])
        assert masses == pytest.approx([0.06, 0.30])

    def test_properness_constant(self, uniform_family):
        """Test sup_ε |∂_ε G| / (|G| ε) = 6"""
        assert properness_constant(uniform_family) == pytest.approx(6.0)


class TestGrowthAudit:
    """Test the growth bounds along the iterates"""

    def test_doubling_audit(self, uniform_family):
        """Test that no bound is violated for an invariant family"""
        report = derive_constants(certify(load_fixture('doubling'), trial_count=100))
        audit = growth_audit(uniform_family, report, horizon=3, eps_points=6)
        assert audit.violations == 0
        assert audit.B_start == pytest.approx(6.0, rel=0.05)
        assert set(audit.table['bound']) == {'one_step', 'iterated', 'proper'}

    def test_wmap_audit(self, wmap, wmap_report):
        """Test the three bounds over twenty W-map iterates of Lebesgue measure"""
        family = family_from_density(wmap, [(0.0, 1.0)], lambda x: np.zeros_like(x), float(wmap_report.eps0))
        audit = growth_audit(family, wmap_report, horizon=20, eps_points=20, max_pairs=2000,
                             raise_on_violation=False)
        assert audit.violations == 0
        assert audit.table['m'].max() == 20


class TestOracleAgreement:
    """Test 𝒯G against ℒρ_G one step at a time"""

    @staticmethod
    def _compare(spec, family, steps):
        for n in range(1, steps + 1):
            pushed = iterate(family, 1)
            exact = apply_L(spec, GridDensity.from_family(family), 1, 'exact')
            cuts = np.array(sorted(set(exact.breakpoints) | {e for p in pushed.pairs for piece in p.pieces
                                                             for e in piece}))
            xs = np.concatenate([x[1:-1] for p in pushed.pairs for x in p.nodes])
            xs = xs[np.min(np.abs(xs[:, None] - cuts[None, :]), axis=1) > 1e-9]
            expected = exact(xs)
            scale = max(1.0, float(np.max(expected)))
            assert np.max(np.abs(pushed.density_at(xs) - expected)) <= 1e-5 * scale, f"step {n}"
            family = pushed

    def test_doubling(self, doubling):
        """Test ten steps of the doubling map from a tilted density"""
        family = family_from_density(doubling, [(0.0, 1.0)], lambda x: 0.5 * x, 0.25)
        self._compare(doubling, family, 10)

    def test_wmap(self, wmap):
        """Test ten steps of the W-map from e^{−x}"""
        family = family_from_density(wmap, [(0.0, 1.0)], lambda x: -x, 0.1)
        self._compare(wmap, family, 10)

if __name__ == "__main__":
    pytest.main([__file__, '-v'])
