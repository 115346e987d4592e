"""
Unit Tests for the Transfer Operator
Tests ℒ in exact and grid mode, invariant densities, the Monte-Carlo oracle and rate fits
"""

import pytest
import sys
from pathlib import Path

import numpy as np

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

from constants_pipeline import derive_constants
from errors import TransferError
from fixtures import load_fixture
from hypothesis_suite import certify
from transfer_operator import (GridDensity, apply_L, fit_exponential, histogram_agreement, invariant_density,
                               l1_distance, l1_series, mixing_series, monte_carlo_histogram)


@pytest.fixture(scope='module')
def doubling():
    """Doubling map fixture"""
    return load_fixture('doubling')


@pytest.fixture
def half():
    """Density 2 on (0, 1/2)"""
    return GridDensity.uniform([(0.0, 0.5)])


@pytest.fixture
def lebesgue():
    """Density 1 on (0, 1)"""
    return GridDensity.uniform([(0.0, 1.0)])


class TestGridDensity:
    """Test densities and distances"""

    def test_uniform_mass(self, half):
        """Test that a uniform density has mass one"""
        assert half.mass() == pytest.approx(1.0)
        assert half(np.array([0.25, 0.75])) == pytest.approx([2.0, 0.0])

    def test_l1_distance(self, half, lebesgue):
        """Test ‖f − g‖₁ across a jump"""
        assert l1_distance(half, lebesgue) == pytest.approx(1.0, abs=1e-9)
        assert l1_distance(lebesgue, lebesgue) == pytest.approx(0.0)


class TestApplyL:
    """Test the transfer operator"""

    def test_lebesgue_is_fixed(self, doubling, lebesgue):
        """Test ℒ1 = 1 for the doubling map"""
        out = apply_L(doubling, lebesgue, 1)
        xs = np.linspace(0.05, 0.95, 6)
        assert out(xs) == pytest.approx(np.ones(6))
        assert out.mass() == pytest.approx(1.0)

    def test_half_density_spreads(self, doubling, half, lebesgue):
        """Test that ℒ of 2·1_(0,1/2) is Lebesgue in one step"""
        out = apply_L(doubling, half, 1, 'exact')
        assert l1_distance(out, lebesgue) == pytest.approx(0.0, abs=1e-9)

    def test_grid_mode_agrees(self, doubling, half):
        """Test grid mode against exact mode"""
        exact = apply_L(doubling, half, 2, 'exact')
        grid = apply_L(doubling, half, 2, 'grid')
        assert l1_distance(exact.on_grid(), grid) < 1e-2

    def test_invalid_calls(self, doubling, half):
        """Test n = 0, an unknown mode and exact mode without a source"""
        with pytest.raises(ValueError):
            apply_L(doubling, half, 0)
        with pytest.raises(ValueError):
            apply_L(doubling, half, 1, 'spectral')
        with pytest.raises(TransferError):
            apply_L(doubling, half.on_grid(), 1, 'exact')


class TestInvariantDensity:
    """Test the fixed point of ℒ"""

    def test_doubling(self, doubling):
        """Test that Lebesgue is found at once"""
        result = invariant_density(doubling)
        assert result.residual < 1e-6
        assert result.density(np.array([0.3, 0.7])) == pytest.approx([1.0, 1.0], rel=1e-6)

    def test_wmap_against_orbits(self):
        """Test the W-map density against an orbit histogram"""
        spec = load_fixture('wmap')
        result = invariant_density(spec, n_nodes=2049)
        assert result.density.mass() == pytest.approx(1.0, rel=1e-6)
        histogram = monte_carlo_histogram(spec, points=200_000, bins=64, chains=20_000, seed=7)
        assert histogram.counts.sum() == 200_000
        assert histogram_agreement(result.density, histogram) >= 0.9


class TestMixing:
    """Test L¹ series and the rate fit"""

    def test_mixing_series(self, doubling, half):
        """Test ‖ℒᵐf − ℘‖₁ for the doubling map"""
        invariant = invariant_density(doubling).density
        table = mixing_series(doubling, half, invariant, steps=3)
        assert list(table.columns) == ['m', 'l1', 'bound']
        assert table['l1'].iloc[0] == pytest.approx(1.0, abs=1e-3)
        assert table['l1'].iloc[1] < 1e-2
        assert table['bound'].isna().all()

    def test_wmap_rate_and_bound(self):
        """Test a contraction rate below 0.9 and ‖ℒᵐf − ℒᵐg‖₁ ≤ C·γ₂ᵐ on the W-map"""
        wmap = load_fixture('wmap')
        report = derive_constants(certify(wmap, trial_count=100))
        f = GridDensity.uniform([(0.0, 1.0)]).on_grid()
        g = GridDensity.from_function(lambda x: np.exp(-x) / (1 - np.exp(-1.0)), [(0.0, 1.0)]).on_grid()
        table = l1_series(wmap, f, g, 30)
        fit = fit_exponential(table['l1'].to_numpy(), table['m'].to_numpy(), floor=1e-6)
        assert fit.rate < 0.9
        for m, l1 in zip(table['m'], table['l1']):
            assert l1 <= float(report.C * report.gamma2 ** int(m)), f"m = {m}"

    def test_fit_exponential(self):
        """Test an exact geometric sequence"""
        fit = fit_exponential([2.0 * 0.5 ** m for m in range(10)])
        assert fit.rate == pytest.approx(0.5)
        assert fit.r_squared == pytest.approx(1.0)

    def test_fit_needs_three_points(self):
        """Test that too few positive values are rejected"""
        with pytest.raises(TransferError):
            fit_exponential([1.0, 0.0, 0.0])


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
