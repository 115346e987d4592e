"""
Golden Validation Script - Recomputes every golden value of the built-in maps
Run this to verify the constants chain before committing
"""

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent / 'src'))

from cli_reporting import compare_golden, load_golden
from constants_pipeline import derive_constants
from fixtures import FIXTURES, load_fixture
from hypothesis_suite import certify

print("="*70)
print("EXPMIX GOLDEN VALIDATION")
print("="*70)

golden = load_golden()
failed = []

for i, name in enumerate(FIXTURES, start=1):
    print(f"\n{i}. {name}...")
    spec = load_fixture(name)
    cert = certify(spec, trial_count=500)
    report = derive_constants(cert)
    print(f"   λ = {cert.lam}, D = {cert.D}, N_δ = {cert.N_delta}")
    print(f"   Chain complete: {report.complete}")
    for check in compare_golden(name, cert, report, golden):
        mark = '✓' if check.passed else '✗'
        print(f"   {mark} {check.name} ({check.kind})")
        if not check.passed:
            failed.append(f"{name}.{check.name}")

print("\n" + "="*70)
if failed:
    print(f"FAILED: {', '.join(failed)}")
    sys.exit(1)
print("ALL GOLDEN VALUES MATCH")
print("="*70)
