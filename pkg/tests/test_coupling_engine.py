"""
Unit Tests for the Coupling Engine
Tests the constant split, overlap extraction, regularity, block configuration and a desk-scale run
"""

import pytest
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

import geometry as geo
from constants_pipeline import derive_constants
from coupling_engine import (CouplingConfig, _match_weights, couple_block, extract_overlap, holder_seed,
                             holder_seminorm, is_regular, regular_split, run_coupling, split_constant,
                             start_coupling)
from errors import CouplingError, DensityTooSmall, OverlapTooSmall, RegularityNotRecovered
from fixtures import load_fixture
from hypothesis_suite import certify
from standard_families import StandardFamily, StandardPair, iterate


@pytest.fixture(scope='module')
def doubling():
    """Doubling map fixture"""
    return load_fixture('doubling')


@pytest.fixture(scope='module')
def report(doubling):
    """Complete constants of the doubling map (c_split = 2, ω = (0, 1/12))"""
    return derive_constants(certify(doubling, trial_count=100))


@pytest.fixture(scope='module')
def desk_run(doubling, report):
    """Two desk-scale blocks coupling the left and right quarters"""
    pair_A = StandardPair.uniform([(0.0, 0.25)])
    pair_B = StandardPair.uniform([(0.75, 1.0)])
    return run_coupling(doubling, pair_A, pair_B, report, rounds=2, config=CouplingConfig.desk(report.eps0))


class TestSplit:
    """Test the constant/remainder split"""

    def test_split_keeps_weight(self, report):
        """Test w̄ᵢ + ẘᵢ = wᵢ and the common level c·w₂"""
        pair1 = StandardPair.uniform([(0.0, 0.25)])
        pair2 = StandardPair.uniform([(0.5, 0.75)])
        split = split_constant(pair1, 1.0, pair2, 0.5, report)
        assert split.c == pytest.approx(2.0)
        assert split.level == pytest.approx(1.0)
        assert split.bar1[1] + split.ring1[1] == pytest.approx(1.0)
        assert split.bar2[1] + split.ring2[1] == pytest.approx(0.5)
        assert split.ring2[0].norm() == pytest.approx(1.0)

    def test_order_of_weights(self, report):
        """Test that the lighter pair comes second"""
        pair = StandardPair.uniform([(0.0, 0.25)])
        with pytest.raises(ValueError):
            split_constant(pair, 0.5, pair, 1.0, report)

    def test_density_too_small(self, report):
        """Test inf ρ < 2c"""
        wide = StandardPair.uniform([(0.0, 0.5)])
        with pytest.raises(DensityTooSmall):
            split_constant(wide, 1.0, wide, 1.0, report)


class TestOverlap:
    """Test removal of the common element on ω"""

    def test_equal_levels_remove_omega(self):
        """Test that m(ω)·level leaves both families"""
        bar_A = (StandardPair.uniform([(0.0, 0.25)]), 0.25)
        bar_B = (StandardPair.uniform([(0.0, 0.2)]), 0.2)
        out = extract_overlap(bar_A, bar_B, (0.0, 1 / 12), 1 / 12)
        assert out.removed == pytest.approx(1 / 12)
        assert sum(w for _, w in out.rest_A) + out.removed == pytest.approx(0.25)
        assert sum(w for _, w in out.rest_B) + out.removed == pytest.approx(0.2)

    def test_different_levels_keep_omega(self):
        """Test that nothing is removed when the levels differ"""
        bar_A = (StandardPair.uniform([(0.0, 0.25)]), 0.25)
        bar_B = (StandardPair.uniform([(0.0, 0.2)]), 0.4)
        out = extract_overlap(bar_A, bar_B, (0.0, 1 / 12), 1 / 12)
        assert out.removed == 0.0
        assert sum(w for _, w in out.rest_B) == pytest.approx(0.4)

    def test_overlap_too_small(self):
        """Test m(ω) < Δ"""
        bar = (StandardPair.uniform([(0.0, 0.25)]), 0.25)
        with pytest.raises(OverlapTooSmall):
            extract_overlap(bar, bar, (0.0, 0.05), 1 / 12)

    def test_match_weights(self):
        """Test the two-pointer weight matching"""
        matched_A, matched_B = _match_weights([0.5, 0.5], [0.3, 0.7])
        assert matched_A == pytest.approx([0.5, 0.5])
        assert matched_B == pytest.approx([0.3, 0.7])
        matched_A, matched_B = _match_weights([1.0], [0.4])
        assert matched_A == pytest.approx([0.4])
        assert matched_B == pytest.approx([0.4])


class TestRegularity:
    """Test δ₀-regular pairs"""

    def test_interior_pairs(self):
        """Test distance δ₀ from both cut points"""
        space = (0.0, 1.0)
        assert is_regular(StandardPair.uniform([(0.3, 0.35)]), 0.01, space, geo.IN_SPACE)
        assert not is_regular(StandardPair.uniform([(0.3, 0.31)]), 0.01, space, geo.IN_SPACE)

    def test_end_of_space_is_not_a_cut(self):
        """Test that the end of X does not count in the in-X mode"""
        space = (0.0, 1.0)
        assert is_regular(StandardPair.uniform([(0.0, 0.015)]), 0.01, space, geo.IN_SPACE)
        assert not is_regular(StandardPair.uniform([(0.0, 0.015)]), 0.01, space, geo.AMBIENT)


    def test_regular_split(self, doubling, report):
        """Test that the regular part keeps the deficit and the rest holds the short pairs"""
        delta0 = float(report.delta0)
        short = StandardPair.uniform([(0.3, 0.3 + delta0 / 2)])
        long = StandardPair.uniform([(0.5, 0.6)])
        family = StandardFamily(spec=doubling, pairs=[short, long], weights=[0.25, 0.75], eps0=0.25)
        family.record_deficit(0.1, 'pruned')
        regular, rest = regular_split(family, delta0)
        assert len(regular.pairs) == 1 and regular.pairs[0] is long and regular.weights == [0.75]
        assert len(rest.pairs) == 1 and rest.pairs[0] is short and rest.weights == [0.25]
        assert regular.deficit == pytest.approx(0.1)
        assert rest.deficit == 0.0

    def test_irregular_block_is_deferred(self, doubling, report):
        """Test that a desk block below 2/3 regular weight removes nothing and defers"""
        pair = StandardPair.uniform([(0.3, 0.3 + float(report.delta0) / 2)])
        A = StandardFamily(spec=doubling, pairs=[pair], weights=[1.0], eps0=0.25)
        B = StandardFamily(spec=doubling, pairs=[pair], weights=[1.0], eps0=0.25)
        state = couple_block(start_coupling(A, B), report, CouplingConfig.desk(report.eps0))
        assert state.deferred == [1]
        assert state.regular_fraction[-1] == 0.0
        assert state.removed_series[-1] == 0.0
        assert state.family_A.total_weight() + state.family_A.deficit == pytest.approx(1.0)

    def test_irregular_block_raises_at_full_scale(self, doubling, report):
        """Test that the full-scale block refuses to couple an irregular family"""
        pair = StandardPair.uniform([(0.3, 0.3 + float(report.delta0) / 2)])
        A = StandardFamily(spec=doubling, pairs=[pair], weights=[1.0], eps0=0.25)
        B = StandardFamily(spec=doubling, pairs=[pair], weights=[1.0], eps0=0.25)
        with pytest.raises(RegularityNotRecovered):
            couple_block(start_coupling(A, B), report, CouplingConfig())


class TestRegularityBounds:
    """Test the Hölder class of W-map pairs through one block"""

    @pytest.fixture(scope='class')
    def wmap_setup(self):
        """W-map, its constants and a pair of class a₀ on (0.3, 0.33)"""
        wmap = load_fixture('wmap')
        report = derive_constants(certify(wmap, trial_count=100))
        a0 = float(report.a0)
        pair, _ = StandardPair.build([(0.3, 0.33)], lambda x: a0 * x)
        return wmap, report, pair

    def test_one_step(self, wmap_setup):
        """Test H(𝒯G) ≤ a₀λ^α + D"""
        wmap, report, pair = wmap_setup
        alpha = float(report.alpha)
        family = StandardFamily(spec=wmap, pairs=[pair], weights=[1.0], eps0=float(report.eps0))
        bound = float(report.a0) * float(report.lam) ** alpha + float(report.D)
        assert iterate(family, 1).holder_sup(alpha) <= bound * (1 + 1e-6)

    def test_remainder_after_split(self, wmap_setup):
        """Test H(ρ̊) ≤ 2a₀ for the remainder of a class-a₀ pair"""
        _, report, pair = wmap_setup
        split = split_constant(pair, 1.0, pair, 1.0, report)
        assert split.ring1[0].holder_constant(report.alpha) <= 2 * float(report.a0)

    def test_recovery_after_n1_steps(self, wmap_setup):
        """Test that n₁ steps bring the remainder back to class a₀"""
        wmap, report, pair = wmap_setup
        ring, weight = split_constant(pair, 1.0, pair, 1.0, report).ring1
        family = StandardFamily(spec=wmap, pairs=[ring], weights=[weight], eps0=float(report.eps0))
        assert iterate(family, report.n1).holder_sup(report.alpha) <= float(report.a0) * (1 + 1e-6)


class TestConfig:
    """Test block configuration"""

    def test_full_scale(self, report):
        """Test N = N_δ and recovery max(n₁, n₂)"""
        config = CouplingConfig()
        assert config.resolve(report) == (11, 3)
        assert config.full_scale(report)

    def test_desk_scale(self, report):
        """Test the desk configuration"""
        config = CouplingConfig.desk(report.eps0)
        assert config.resolve(report) == (1, 1)
        assert config.chop_grid == pytest.approx(0.125)
        assert not config.full_scale(report)

    def test_incomplete_chain(self, report):
        """Test that coupling needs the full constants chain"""
        with pytest.raises(CouplingError):
            CouplingConfig().resolve(replace(report, gamma2=None))


class TestRun:
    """Test a desk-scale coupling of two quarters"""

    def test_rounds_and_steps(self, desk_run):
        """Test the block bookkeeping"""
        state = desk_run.state
        assert state.round == 2
        assert state.steps == 4
        assert len(desk_run.table) == 3

    def test_mass_is_removed_equally(self, desk_run):
        """Test |A| + deficit = |B| + deficit and a positive removal on ω"""
        state = desk_run.state
        book_A = state.family_A.total_weight() + state.family_A.deficit
        book_B = state.family_B.total_weight() + state.family_B.deficit
        assert book_A == pytest.approx(book_B, abs=1e-9)
        assert state.removed_series[1] == 0.0, "The right quarter cannot reach ω in one step"
        assert state.removed_series[2] == pytest.approx(1 / 48, rel=1e-6)
        assert state.uncoupled < 1.0

    def test_oracle_column(self, desk_run):
        """Test the transfer-operator oracle next to the coupling series"""
        assert 'oracle_l1' in desk_run.table.columns
        assert desk_run.oracle['l1'].iloc[0] == pytest.approx(2.0, abs=1e-6)
        assert desk_run.oracle['l1'].iloc[-1] == pytest.approx(0.0, abs=1e-6)
        assert desk_run.bound_ok

    def test_csv(self, desk_run, report, tmp_path):
        """Test the per-round CSV"""
        target = desk_run.state.to_csv(str(tmp_path / 'coupling.csv'), report)
        table = pd.read_csv(target)
        assert list(table.columns) == ['round', 'uncoupled', 'l1', 'bound']

    def test_single_block_on_equal_families(self, doubling, report):
        """Test that identical families couple on ω in one block"""
        pair = StandardPair.uniform([(0.0, 0.25)])
        A = StandardFamily(spec=doubling, pairs=[pair], weights=[1.0], eps0=0.25)
        B = StandardFamily(spec=doubling, pairs=[pair], weights=[1.0], eps0=0.25)
        state = couple_block(start_coupling(A, B), report, CouplingConfig.desk(report.eps0))
        assert state.round == 1
        assert state.removed_series[-1] > 0
        assert state.family_A.total_weight() == pytest.approx(state.family_B.total_weight(), abs=1e-9)

    def test_wide_pair(self, doubling, report):
        """Test that a pair wider than ε₀ is refused"""
        wide = StandardPair.uniform([(0.0, 0.5)])
        with pytest.raises(CouplingError):
            run_coupling(doubling, wide, wide, report, rounds=1)

    def test_unequal_weights(self, doubling):
        """Test that coupled families carry equal weight"""
        pair = StandardPair.uniform([(0.0, 0.25)])
        A = StandardFamily(spec=doubling, pairs=[pair], weights=[1.0], eps0=0.25)
        B = StandardFamily(spec=doubling, pairs=[pair], weights=[0.5], eps0=0.25)
        with pytest.raises(CouplingError):
            start_coupling(A, B)


class TestHolderSeed:
    """Test the representation of Hölder functions"""

    def test_seminorm(self):
        """Test |3x|_1 = 3"""
        seminorm, sup = holder_seminorm(lambda x: 3.0 * x, [(0.0, 1.0)])
        assert seminorm == pytest.approx(3.0)
        assert sup == pytest.approx(3.0, rel=1e-3)

    def test_constant_function(self, doubling, report):
        """Test that a₀ = 0 admits constants"""
        seed = holder_seed(doubling, lambda x: np.ones_like(x), report)
        assert seed.c == pytest.approx(1.0)
        assert seed.proper
        assert seed.shifted.total_weight() == pytest.approx(2.0)

    def test_nonconstant_with_zero_class(self, doubling, report):
        """Test that a₀ = 0 rejects a varying function"""
        with pytest.raises(CouplingError):
            holder_seed(doubling, lambda x: np.sin(2 * np.pi * x), report)


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
