"""
Unit Tests for expmix Geometry
Tests interval sets, ε-boundaries in both boundary modes, and boxes
"""

import pytest
import sys
from pathlib import Path

import numpy as np

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

import geometry as geo


class TestIntervalSets:
    """Test finite unions of open intervals"""

    def test_normalize_merges_overlaps(self):
        """Test that overlapping pieces merge and touching ones stay apart"""
        assert geo.normalize([(0.5, 1.0), (0.0, 0.6), (2.0, 2.0)]) == [(0.0, 1.0)]
        assert geo.normalize([(0.0, 0.5), (0.5, 1.0)]) == [(0.0, 0.5), (0.5, 1.0)]

    def test_merge_touching(self):
        """Test coverage up to finitely many points"""
        assert geo.merge_touching([(0.0, 0.5), (0.5, 1.0)]) == [(0.0, 1.0)]

    def test_subtract_closed(self):
        """Test removing a closed interval from the middle"""
        rest = geo.subtract_closed([(0.0, 1.0)], (0.25, 0.5))
        assert rest == [(0.0, 0.25), (0.5, 1.0)]
        assert geo.total_length(rest) == pytest.approx(0.75)

    def test_intersection(self):
        """Test intersection of two unions"""
        out = geo.intersect([(0.0, 0.4), (0.6, 1.0)], [(0.3, 0.7)])
        assert out == [(0.3, 0.4), (0.6, 0.7)]

    def test_covers(self):
        """Test that two touching pieces cover their union"""
        assert geo.covers([(0.0, 0.5), (0.5, 1.0)], (0.1, 0.9))
        assert not geo.covers([(0.0, 0.4), (0.5, 1.0)], (0.1, 0.9))

    def test_diameter(self):
        """Test diameter of a disconnected set"""
        assert geo.diameter([(0.0, 0.1), (0.8, 0.9)]) == pytest.approx(0.9)
        assert geo.diameter([]) == 0.0


class TestEpsBoundary:
    """Test ε-boundaries"""

    def test_interior_interval(self):
        """Test that an interior interval has ε-boundary 2ε"""
        length = geo.eps_boundary_length([(0.2, 0.6)], 0.05, (0.0, 1.0))
        assert length == pytest.approx(0.1)

    def test_in_space_mode_drops_space_ends(self):
        """Test that the ends of X do not count in the in-X mode"""
        in_x = geo.eps_boundary_length([(0.0, 0.3)], 0.05, (0.0, 1.0), geo.IN_SPACE)
        ambient = geo.eps_boundary_length([(0.0, 0.3)], 0.05, (0.0, 1.0), geo.AMBIENT)
        assert in_x == pytest.approx(0.05)
        assert ambient == pytest.approx(0.1)

    def test_large_eps_saturates(self):
        """Test that the ε-boundary never exceeds the set"""
        assert geo.eps_boundary_length([(0.2, 0.3)], 1.0, (0.0, 1.0)) == pytest.approx(0.1)

    def test_unbounded_space(self):
        """Test that an infinite end is never a boundary point"""
        points = geo.boundary_points([(3.0, float('inf'))], (0.0, float('inf')))
        assert points == [3.0]


class TestBoxes:
    """Test axis-aligned boxes"""

    def test_area_and_frame(self):
        """Test the ε-frame of a square"""
        box = geo.Box(0.0, 1.0, 0.0, 1.0)
        assert box.area == pytest.approx(1.0)
        assert box.eps_boundary_area(0.1) == pytest.approx(1.0 - 0.64)
        assert box.eps_boundary_area(0.6) == pytest.approx(1.0), "Frame wider than half the side covers the box"

    def test_contains(self):
        """Test open-box membership"""
        box = geo.Box(0.0, 1.0, 0.0, 2.0)
        inside = box.contains(np.array([[0.5, 1.0], [1.0, 1.0], [0.5, 2.5]]))
        assert inside.tolist() == [True, False, False]

    def test_intersection(self):
        """Test box intersection and emptiness"""
        a = geo.Box(0.0, 1.0, 0.0, 1.0)
        assert a.intersect(geo.Box(0.5, 2.0, 0.5, 2.0)).area == pytest.approx(0.25)
        assert a.intersect(geo.Box(2.0, 3.0, 0.0, 1.0)).is_empty()


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
