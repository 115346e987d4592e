"""
Unit Tests for the Hypothesis Suite
Tests expansion, distortion, complexity, divisibility, linking and the inducing partition
"""

import pytest
import sys
from fractions import Fraction
from pathlib import Path

import math

import mpmath as mp

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

import geometry as geo
import skew_map
from errors import InsufficientTrials, VStarTooLarge
from fixtures import load_fixture
from hypothesis_suite import (build_partition_of_large_set, certify, check_complexity, check_distortion,
                              check_expansion, check_inducing_partition, divisibility_constant, grow_interval,
                              largest_piece_bound, partition_boundary_ratio, positively_linked_search)


@pytest.fixture(scope='module')
def wmap():
    """W-map fixture"""
    return load_fixture('wmap')


@pytest.fixture(scope='module')
def doubling():
    """Doubling map fixture"""
    return load_fixture('doubling')


class TestExpansionAndDistortion:
    """Test H1 and H2"""

    def test_wmap_lambda_exact(self, wmap):
        """Test λ = 112/207 from the declared branch bounds"""
        result = check_expansion(wmap)
        assert result.lam == Fraction(112, 207)
        assert result.evidence == 'analytic'

    def test_wmap_distortion_exact(self, wmap):
        """Test D̃ and D = D̃/(1−λ) as exact rationals"""
        result = check_distortion(wmap, Fraction(112, 207))
        assert result.Dtilde == Fraction(25088, 42849)
        assert result.D == Fraction(25088, 19665)

    def test_doubling_is_distortion_free(self, doubling):
        """Test D = 0 for a piecewise linear map"""
        result = check_distortion(doubling, Fraction(1, 2))
        assert result.D == 0


class TestComplexity:
    """Test H3"""

    def test_wmap_sigma(self, wmap):
        """Test that sampled complexity stays below the declared σ"""
        result = check_complexity(wmap, Fraction(112, 207), trial_count=200)
        assert result.sigma == Fraction(621, 896)
        assert result.sampled <= float(result.sigma) * (1 + 1e-9)
        assert float(result.sigma) < float(result.threshold)

    def test_skew_sigma_over_full_sample(self):
        """Test the sampled σ below λ⁻¹ − 1 over 2 000 boxes"""
        lam = 1.1 * math.sqrt(2) / 5
        result = check_complexity(load_fixture('skew2d'), mp.mpf('1.1') * mp.sqrt(2) / 5, trial_count=2000)
        assert result.trials == 2000
        assert result.evidence == 'sampled'
        assert 0 < result.sampled < 1 / lam - 1
        assert float(result.threshold) == pytest.approx(1 / lam - 1, rel=1e-12)

    def test_too_few_trials(self, wmap):
        """Test that a tiny sample is refused"""
        with pytest.raises(InsufficientTrials):
            check_complexity(wmap, Fraction(112, 207), trial_count=10)


class TestDivisibility:
    """Test H4 partitions of large sets"""

    def test_cells_are_small_and_cover(self, wmap):
        """Test diam ≤ ε₀ and exact cover"""
        eps0 = 0.1
        cells = build_partition_of_large_set(wmap, [(0.05, 0.83)], None, eps0)
        assert all(c[1] - c[0] <= eps0 * (1 + 1e-12) for c in cells)
        assert geo.total_length(cells) == pytest.approx(0.78)

    def test_protected_set_in_one_cell(self, wmap):
        """Test that V_star lies inside a single cell"""
        star = (0.4, 0.42)
        cells = build_partition_of_large_set(wmap, [(0.0, 1.0)], star, 0.1)
        assert sum(1 for c in cells if c[0] <= star[0] and star[1] <= c[1]) == 1

    def test_protected_set_too_large(self, wmap):
        """Test diam V_star ≤ η·ε₀"""
        with pytest.raises(VStarTooLarge):
            build_partition_of_large_set(wmap, [(0.0, 1.0)], (0.2, 0.3), 0.1)

    def test_grid_step_range(self, wmap):
        """Test that the grid step must lie in [ε₀/3, 2ε₀/3]"""
        with pytest.raises(ValueError):
            build_partition_of_large_set(wmap, [(0.0, 1.0)], None, 0.1, grid_step=0.09)

    def test_boundary_ratio_is_bounded(self, wmap):
        """Test Σ m(∂_ε U \\ ∂_ε V) ≤ C_{ε₀}·m(V)·ε on a long interval"""
        eps0 = 0.1
        V = [(0.0, 1.0)]
        cells = build_partition_of_large_set(wmap, V, None, eps0)
        C = float(divisibility_constant(1, eps0, 0))
        for eps in (1e-4, 1e-3, 1e-2):
            assert partition_boundary_ratio(wmap, V, cells, eps) <= C * eps

    def test_divisibility_constant(self):
        """Test C_{ε₀} = 6/ε₀ without distortion"""
        assert float(divisibility_constant(1, 0.25, 0)) == pytest.approx(24.0)


class TestLinking:
    """Test H5"""

    def test_largest_piece_bound(self):
        """Test c/Σz⁻¹"""
        assert largest_piece_bound([2.0, 2.0], 1.0) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            largest_piece_bound([0.0], 1.0)

    def test_growth_reaches_full_element(self, wmap):
        """Test that a short interval grows onto a whole partition element"""
        path = grow_interval(wmap, (0.3, 0.31))
        assert path.steps >= 1
        assert path.origin[0] >= 0.3 - 1e-12 and path.origin[1] <= 0.31 + 1e-12

    def test_growth_past_the_truncation(self):
        """Test the last tile before the truncation, whose image leaves the materialized branches"""
        spec = load_fixture('rplus')
        delta1 = 0.01345 / 3
        tile = (20.0 - delta1, 20.0)
        path = grow_interval(spec, tile, shave=0.6 * delta1)
        assert path.covered == 'beyond truncation'
        assert path.steps == 1
        assert path.piece[0] > 40.0
        assert tile[0] - 1e-12 <= path.origin[0] < path.origin[1] <= 20.0 - 0.6 * delta1 + 1e-12

    def test_doubling_full_branch(self, doubling):
        """Test the full-branch strategy on the doubling map"""
        link = positively_linked_search(doubling, 0.03, {'eps0': Fraction(1, 4), 'M': 1})
        assert link.strategy == 'full-branch'
        assert link.E == 0
        assert link.Delta == Fraction(1, 12)
        assert len(link.Q) > 0


class TestInducingPartition:
    """Test the grid partition and the return set Z"""

    def test_wmap_grid(self, wmap):
        """Test cell side δ₀/3 and gcd-one returns of Z"""
        partition = check_inducing_partition(wmap, 0.03)
        assert partition.cell_size == pytest.approx(0.01)
        assert partition.Z == partition.cell(0)
        assert math.gcd(*partition.returns) == 1
        assert partition.verdicts['boundary']

    def test_cells_in(self, wmap):
        """Test the cells contained in an interval"""
        partition = check_inducing_partition(wmap, 0.03)
        assert list(partition.cells_in((0.015, 0.05))) == [2, 3, 4]

    def test_skew_partition(self):
        """Test Z, Z′ and four 𝓟_Z cells for the 2D map"""
        partition = check_inducing_partition(load_fixture('skew2d'), 2.2e-5)
        assert len(partition.P_Z) == 4
        assert partition.Zprime.contains_box(partition.Z)
        assert partition.verdicts['Zprime']

    def test_skew_returns_come_from_whole_cells(self):
        """Test that TZ ⊇ Z is witnessed by deep cells lying inside Z"""
        partition = check_inducing_partition(load_fixture('skew2d'), 2.2e-5)
        assert partition.verdicts['TZ_contains_Z']
        assert partition.returns == [1, 2]
        assert partition.gcd == 1
        side = partition.cell_size
        for cell in partition.P_Z:
            assert cell['column'] >= skew_map.whole_column_index(side)
            assert -cell['column'] * mp.log(5) < mp.log(side)


class TestCertificate:
    """Test the composed certificate"""

    def test_certify_wmap(self, wmap):
        """Test that the 1D certificate carries a linker"""
        cert = certify(wmap, trial_count=100)
        assert cert.lam == Fraction(112, 207)
        assert cert.linker is not None
        assert not cert.h5_complete

    def test_certificate_dict(self, doubling):
        """Test the JSON-ready view"""
        data = certify(doubling, trial_count=100).to_dict()
        assert data['lam'] == '1/2'
        assert data['evidence']['lambda'] == 'analytic'


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
