"""
Integration Tests for expmix
Tests the end-to-end flow from a map to certificates, constants and the three experiments
"""

import pytest
import sys
from pathlib import Path

# Add src to path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

from cli_reporting import parse_config, run_pipeline
from fixtures import load_fixture
from hypothesis_suite import certify

CONFIGS = Path(__file__).parent.parent / 'data' / 'configs'


@pytest.fixture(scope='module')
def doubling():
    """Doubling map fixture"""
    return load_fixture('doubling')


class TestEndToEndFlow:
    """Test complete map → constants → experiment runs"""

    def test_config_matches_fixture(self, doubling):
        """Test: the shipped config and the fixture certify the same constants"""
        from_file = certify(parse_config(CONFIGS / 'doubling.json'), trial_count=200)
        built_in = certify(doubling, trial_count=200)
        assert from_file.lam == built_in.lam
        assert from_file.D == built_in.D
        assert from_file.N_delta == built_in.N_delta

    def test_mix(self, doubling):
        """Test: the L¹ series of a half-interval density"""
        run = run_pipeline(doubling, {'command': 'mix', 'steps': 5, 'trials': 200})
        assert run.exit_code == 0
        assert run.results['bound_ok']
        assert run.results['invariant_residual'] < 1e-6

        print(f"\n✓ mix: rate {run.results['rate']}")

    def test_couple(self, doubling):
        """Test: two desk-scale coupling blocks"""
        run = run_pipeline(doubling, {'command': 'couple', 'rounds': 2, 'trials': 200})
        assert run.results['blocks'] == 2
        assert run.results['uncoupled'] < 1.0
        assert run.results['bound_ok']

    def test_induce(self, doubling, tmp_path):
        """Test: scheme 1 with its tail table and orbit replay"""
        csv = tmp_path / 'tail.csv'
        run = run_pipeline(doubling, {'command': 'induce', 'scheme': 1, 'trials': 200, 'points': 20_000,
                                      'csv': str(csv)})
        assert run.results['mass_error'] < 1e-6
        assert run.results['gcd'] == 1
        assert 'replay_agreement' in run.results
        assert csv.exists()

    def test_check_skew(self):
        """Test: the 2D map certifies without a constants stage"""
        run = run_pipeline(load_fixture('skew2d'), {'command': 'check', 'trials': 100})
        assert run.certificate['dimension'] == 2
        assert run.constants == {}
        assert run.golden == []


if __name__ == "__main__":
    pytest.main([__file__, "-v", "-s"])
