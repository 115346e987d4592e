"""
Unit Tests for expmix Map Model
Tests branches, point evaluation, cylinders and the built-in fixtures
"""

import pytest
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

from errors import BoundaryPoint, InputError, OutsideSpace
from fixtures import load_fixture
from map_model import composite_contraction, cylinders_over, evaluate_forward, round_trip_error


@pytest.fixture(scope='module')
def wmap():
    """W-map fixture"""
    return load_fixture('wmap')


@pytest.fixture(scope='module')
def rplus():
    """Non-Markov map of the half line"""
    return load_fixture('rplus')


class TestFixtures:
    """Test the built-in maps"""

    def test_unknown_fixture(self):
        """Test that an unknown id is an input error"""
        with pytest.raises(InputError):
            load_fixture('tent')

    def test_wmap_branches(self, wmap):
        """Test the W-map partition"""
        branches = wmap.all_branches()
        assert [b.id for b in branches] == ['h1', 'h2', 'h3', 'h4']
        assert wmap.coverage() == [(0.0, 1.0)]

    def test_rplus_materialization(self, rplus):
        """Test two branches per k up to the truncation"""
        assert len(rplus.all_branches()) == 80
        assert rplus.truncation_tail([(39.0, 45.0)]) == pytest.approx(5.0)

    def test_round_trip(self, wmap, rplus):
        """Test h(T(x)) = x on every branch"""
        for spec in (wmap, rplus):
            for branch in spec.all_branches()[:10]:
                assert round_trip_error(branch) < 1e-10, f"{branch.id} inverse is inconsistent"


class TestEvaluation:
    """Test T at single points"""

    def test_wmap_values(self, wmap):
        """Test each W-map branch at one point"""
        assert evaluate_forward(wmap, 0.1) == (pytest.approx(1 - 4 / 9), 'h1')
        assert evaluate_forward(wmap, 0.3) == (pytest.approx(0.15), 'h2')
        assert evaluate_forward(wmap, 0.5) == (pytest.approx(0.25), 'h3')
        value, branch = evaluate_forward(wmap, 0.8)
        assert branch == 'h4'
        assert value == pytest.approx(0.64 + (81 / 112) * 0.8 - 81 / 112)

    def test_boundary_point(self, wmap):
        """Test that a partition boundary is rejected"""
        with pytest.raises(BoundaryPoint):
            evaluate_forward(wmap, 9 / 40)

    def test_outside_space(self, wmap):
        """Test that a point outside X is rejected"""
        with pytest.raises(OutsideSpace):
            evaluate_forward(wmap, 1.5)

    def test_rplus_singular_branch(self, rplus):
        """Test the blow-up branch near an integer"""
        value, branch = evaluate_forward(rplus, 2.95)
        assert branch == 'O6'
        assert value == pytest.approx(20.0)

    def test_forward_many(self, wmap):
        """Test the vectorized forward map against single evaluations"""
        xs = np.array([0.1, 0.3, 0.5, 0.8])
        expected = [evaluate_forward(wmap, x)[0] for x in xs]
        assert np.allclose(wmap.forward_many(xs), expected)


class TestCylinders:
    """Test depth-n inverse branches"""

    def test_depth_two_covers(self, wmap):
        """Test that depth-2 cylinder domains tile X"""
        cylinders = cylinders_over(wmap, 2, [(0.0, 1.0)])
        total = sum(c.domain[1] - c.domain[0] for c in cylinders)
        assert total == pytest.approx(1.0, abs=1e-12)
        assert all(c.depth == 2 for c in cylinders)

    def test_composite_contraction_is_product(self, wmap):
        """Test that declared contraction factors multiply exactly"""
        cylinder = cylinders_over(wmap, 2, [(0.0, 0.2)])[0]
        estimate = composite_contraction(cylinder, 1)
        assert estimate.evidence == 'analytic'
        assert isinstance(estimate.value, Fraction)
        assert estimate.sampled <= float(estimate.value) * (1 + 1e-9)

    def test_invalid_depth(self, wmap):
        """Test that depth 0 is rejected"""
        with pytest.raises(ValueError):
            cylinders_over(wmap, 0, [(0.0, 1.0)])


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
