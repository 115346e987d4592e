"""
Command Line and Reports for expmix
Map configs, subcommand dispatch, JSON/CSV reports and golden-value comparison
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import mpmath as mp
import numpy as np
import pandas as pd

import geometry as geo
from errors import ExpmixError, ExpressionError, InputError, SchemaError
from expressions import Expression, parse_quantity
from fixtures import FIXTURES, load_fixture
from map_model import Branch, BranchGenerator, MapSpec, MetricMeasureConfig, to_mp
from settings import DEFAULT_SEED, GOLDEN_PATH, OUTPUT_DIR, configure_precision

# Setup logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

STRING_KEYS = ('eps0_rule', 'C_eps0_published', 'sigma_bound_published')
GOLDEN_KINDS = ('exact', 'relative', 'absolute', 'order', 'interval')
PIPELINE_MODULES = ('fixtures', 'skew_map', 'map_model', 'hypothesis_suite', 'constants_pipeline',
                    'standard_families', 'transfer_operator', 'coupling_engine', 'inducing_schemes',
                    'cli_reporting')
COMMANDS = ('check', 'constants', 'mix', 'couple', 'induce', 'report')


# --- Config ingestion ---

def _require(doc: Dict[str, Any], key: str, pointer: str) -> Any:
    if key not in doc:
        raise SchemaError(f"{pointer}/{key}", "required field is missing")
    return doc[key]


def _number(value: Any, pointer: str, env: Dict[str, Any]) -> float:
    try:
        return float(to_mp(parse_quantity(value if not isinstance(value, float) else repr(value), **env)))
    except ExpressionError:
        raise
    except (TypeError, ValueError) as e:
        raise SchemaError(pointer, f"not a number ({e})")


def _pair(value: Any, pointer: str, env: Dict[str, Any]) -> Tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaError(pointer, "expected a two-element list [lo, hi]")
    lo, hi = _number(value[0], f"{pointer}/0", env), _number(value[1], f"{pointer}/1", env)
    if not lo < hi:
        raise SchemaError(pointer, f"empty interval ({lo}, {hi})")
    return lo, hi


def _formula(doc: Dict[str, Any], key: str, pointer: str, variable: str, params: Sequence[str]) -> Expression:
    expression = Expression(_require(doc, key, pointer))
    unknown = expression.variables - {variable, *params, 'pi', 'e', 'inf'}
    if unknown:
        raise SchemaError(f"{pointer}/{key}", f"unknown variable(s) {sorted(unknown)} in '{expression.source}'")
    return expression


def _compile(expression: Expression, variable: str, env: Dict[str, Any]) -> Callable[[np.ndarray], np.ndarray]:
    names = sorted(env)
    fn = expression.vectorized(variable, *names)
    values = [float(to_mp(env[n])) for n in names]
    return lambda v: fn(v, *values)


def _branch(doc: Dict[str, Any], pointer: str, env: Dict[str, Any], index: Optional[int] = None) -> Branch:
    """One branch from its config entry, formulas evaluated with the parameters in env"""
    params = list(env)
    forward = _formula(doc, 'forward', pointer, 'x', params)
    inverse = _formula(doc, 'inverse', pointer, 'y', params)
    jacobian = _formula(doc, 'jacobian', pointer, 'y', params)
    domain = _pair(_require(doc, 'domain', pointer), f"{pointer}/domain", env)
    if 'image' in doc:
        image = _pair(doc['image'], f"{pointer}/image", env)
        increasing = bool(doc.get('increasing', True))
    else:
        try:
            ends = [float(forward.evaluate(x=end, **env)) for end in domain]
        except ExpressionError as e:
            raise SchemaError(f"{pointer}/image", f"image needed, forward map is singular at an end ({e})")
        increasing = bool(doc.get('increasing', ends[0] < ends[1]))
        image = (min(ends), max(ends))
    bounds = {}
    for key in ('contraction_bound', 'distortion_bound', 'jacobian_floor'):
        if key in doc:
            bounds[key] = parse_quantity(doc[key], **env)
    branch_id = str(_require(doc, 'id', pointer))
    if index is not None:
        branch_id = branch_id.replace('{k}', str(index))
    return Branch(id=branch_id, domain=domain, image=image,
                  forward=_compile(forward, 'x', env), inverse=_compile(inverse, 'y', env),
                  jacobian=_compile(jacobian, 'y', env), increasing=increasing,
                  singular_end=doc.get('singular_end'), index=index,
                  mp_inverse=lambda y, e=dict(env): inverse.evaluate(y=y, **e), **bounds)


def _check_disjoint(branches: List[Tuple[Branch, str]], space: Tuple[float, float]) -> None:
    ordered = sorted(branches, key=lambda item: item[0].domain[0])
    for (b, pointer) in ordered:
        lo, hi = b.domain
        if lo < space[0] - 1e-12 or hi > space[1] + 1e-12:
            raise SchemaError(f"{pointer}/domain", f"domain ({lo}, {hi}) leaves the space {space}")
    for (a, _), (b, pointer) in zip(ordered, ordered[1:]):
        if b.domain[0] < a.domain[1] - 1e-12:
            raise SchemaError(f"{pointer}/domain",
                              f"domain of {b.id} overlaps {a.id} ({a.domain} and {b.domain})")


def _declared(doc: Dict[str, Any], env: Dict[str, Any]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in doc.items():
        if key in STRING_KEYS:
            out[key] = str(value)
        elif key == 'n0':
            out[key] = int(value)
        else:
            out[key] = parse_quantity(value if not isinstance(value, float) else repr(value), **env)
    return out


def spec_from_document(doc: Dict[str, Any]) -> MapSpec:
    """
    Build a MapSpec from a parsed config document

    Args:
        doc: Document with space, branches and/or generator, parameters and declared constants

    Returns:
        MapSpec with validated, compiled expressions
    """
    if not isinstance(doc, dict):
        raise SchemaError('/', "config must be a JSON object")
    if int(doc.get('dimension', 1)) != 1:
        raise SchemaError('/dimension', "configs describe interval maps; use the skew2d fixture for 2D")
    params = {}
    for key, value in doc.get('parameters', {}).items():
        params[key] = parse_quantity(value if not isinstance(value, float) else repr(value))
    space = _pair(_require(doc, 'space', ''), '/space', params)
    mode = doc.get('boundary_mode', geo.IN_SPACE)
    if mode not in (geo.IN_SPACE, geo.AMBIENT):
        raise SchemaError('/boundary_mode', f"expected '{geo.IN_SPACE}' or '{geo.AMBIENT}'")

    fixed = []
    for i, entry in enumerate(doc.get('branches', [])):
        fixed.append((_branch(entry, f"/branches/{i}", params), f"/branches/{i}"))

    generator = None
    materialized = list(fixed)
    if 'generator' in doc:
        g = doc['generator']
        var = g.get('index_var', 'k')
        start = int(g.get('start', 1))
        truncation = int(_require(g, 'truncation', '/generator'))
        templates = _require(g, 'branches', '/generator')

        def make(k: int, templates=templates, var=var) -> List[Branch]:
            env = dict(params)
            env[var] = Fraction(k)
            return [_branch(entry, f"/generator/branches/{j}", env, index=k) for j, entry in enumerate(templates)]

        for k in range(start, truncation + 1):
            materialized.extend((b, f"/generator/branches/{j}") for j, b in enumerate(make(k)))
        coverage = geo.merge_touching(b.domain for b, _ in materialized)

        def tail_bound(K: int, region: Sequence[geo.Interval], coverage=coverage) -> float:
            return geo.total_length(geo.subtract_many(list(region), coverage))

        generator = BranchGenerator(make=make, start=start, truncation=truncation, tail_bound=tail_bound,
                                    description=str(g.get('description', '')))
    if not materialized:
        raise SchemaError('/branches', "no branches given")
    _check_disjoint(materialized, space)

    declared = _declared(doc.get('declared', {}), params)
    for key, value in params.items():
        declared.setdefault(key, value)
    eps1 = declared.get('eps1', math.inf)
    metric = MetricMeasureConfig.lebesgue_1d(space, eps1=eps1, mode=mode)
    spec = MapSpec(metric=metric, branches=[b for b, _ in fixed], generator=generator,
                   name=str(doc.get('name', 'config')), declared=declared)
    logger.info(f"✓ Config {spec.name}: {len(materialized)} materialized branches")
    return spec


def parse_config(path: Union[str, Path]) -> MapSpec:
    """
    Load a map from a fixture id or a JSON config file

    Args:
        path: Fixture id (wmap, rplus, skew2d, doubling) or path to a JSON document

    Returns:
        MapSpec

    Raises:
        InputError: unknown fixture or unreadable file
        SchemaError: schema violation, with the JSON pointer of the offending field
        ExpressionError: formula that does not parse
    """
    target = str(path)
    if target in FIXTURES:
        return load_fixture(target)
    file = Path(target)
    if not file.exists():
        logger.error(f"Neither a fixture nor a file: {target}")
        raise InputError(f"unknown fixture or missing config '{target}' (fixtures: {', '.join(FIXTURES)})")
    try:
        with open(file, 'r', encoding='utf-8') as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in {file}: {e}")
        raise SchemaError('/', f"invalid JSON ({e.msg} at line {e.lineno})")
    return spec_from_document(doc)


# --- Golden values ---

@dataclass
class GoldenCheck:
    name: str
    kind: str
    expected: Any
    actual: Any
    tol: Optional[float]
    passed: bool
    provenance: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'kind': self.kind, 'expected': _show(self.expected),
                'actual': _show(self.actual), 'tol': self.tol, 'passed': self.passed,
                'provenance': self.provenance}


def _show(value: Any) -> Any:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, mp.mpf):
        return mp.nstr(value, 20)
    if isinstance(value, (list, tuple)):
        return [_show(v) for v in value]
    return value


def load_golden(path: Optional[str] = None) -> Dict[str, Any]:
    """Read the versioned golden-value file"""
    file = Path(path or GOLDEN_PATH)
    try:
        with open(file, 'r', encoding='utf-8') as f:
            golden = json.load(f)
    except FileNotFoundError:
        logger.error(f"Golden file not found: {file}")
        raise InputError(f"golden file not found: {file}")
    except json.JSONDecodeError as e:
        logger.error(f"Invalid golden file {file}: {e}")
        raise SchemaError('/', f"invalid golden JSON ({e.msg})")
    logger.info(f"✓ Golden values v{golden.get('version')} from {file}")
    return golden


def _actual(name: str, cert, report) -> Any:
    for source in (report, cert):
        if source is not None and getattr(source, name, None) is not None:
            return getattr(source, name)
    return None


def compare_value(kind: str, expected: Any, actual: Any, tol: Optional[float] = None) -> bool:
    """
    One golden comparison

    Args:
        kind: exact, relative, absolute, order or interval
        expected: Golden value (formula text, number, or [lo, hi] for interval)
        actual: Computed value
        tol: Relative/absolute tolerance, or decades for order
    """
    if actual is None:
        return False
    if kind == 'exact':
        target = parse_quantity(expected)
        return isinstance(actual, (int, Fraction)) and Fraction(actual) == target
    if kind == 'interval':
        lo, hi = (to_mp(parse_quantity(v)) for v in expected)
        return lo <= to_mp(actual) <= hi
    e, a = to_mp(parse_quantity(expected)), to_mp(actual)
    if kind == 'relative':
        return abs(a - e) <= mp.mpf(tol) * abs(e)
    if kind == 'absolute':
        return abs(a - e) <= mp.mpf(tol)
    if kind == 'order':
        if a <= 0 or e <= 0:
            return False
        return abs(mp.log10(a) - mp.log10(e)) <= mp.mpf(tol)
    raise SchemaError('/kind', f"unknown comparison kind '{kind}' (expected one of {', '.join(GOLDEN_KINDS)})")


def compare_golden(name: str, cert, report, golden: Optional[Dict[str, Any]] = None) -> List[GoldenCheck]:
    """Compare a certificate and constants report against the golden entries for a map"""
    golden = golden if golden is not None else load_golden()
    entries = golden.get('fixtures', {}).get(name, [])
    checks = []
    for i, entry in enumerate(entries):
        for key in ('name', 'kind', 'value'):
            _require(entry, key, f"/fixtures/{name}/{i}")
        actual = _actual(entry['name'], cert, report)
        passed = compare_value(entry['kind'], entry['value'], actual, entry.get('tol'))
        record = report.provenance.get(entry['name']) if report is not None else None
        checks.append(GoldenCheck(entry['name'], entry['kind'], entry['value'], actual, entry.get('tol'), passed,
                                  record.line(entry['name'], actual) if record is not None else ''))
        if passed:
            logger.info(f"✓ {entry['name']} matches ({entry['kind']})")
        else:
            logger.warning(f"✗ {entry['name']}: expected {entry['value']} ({entry['kind']}), got {_show(actual)}")
    return checks


# --- Pipeline ---

@dataclass
class RunReport:
    """Everything one CLI run produced"""

    target: str
    command: str
    seed: int
    certificate: Dict[str, Any] = field(default_factory=dict)
    constants: Dict[str, Any] = field(default_factory=dict)
    series: Dict[str, str] = field(default_factory=dict)
    golden: List[GoldenCheck] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.golden) and self.results.get('passed', True)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> Dict[str, Any]:
        return {'target': self.target, 'command': self.command, 'seed': self.seed,
                'certificate': {k: _show(v) for k, v in self.certificate.items()},
                'constants': {k: _show(v) for k, v in self.constants.items()},
                'series': dict(self.series), 'golden': [c.to_dict() for c in self.golden],
                'results': {k: _show(v) for k, v in self.results.items()}, 'passed': self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str, ensure_ascii=False)

    def save_json(self, path: str) -> Path:
        target = resolve_output(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.to_json() + '\n', encoding='utf-8')
        logger.info(f"✓ Report written to {target}")
        return target


def resolve_output(path: str) -> Path:
    target = Path(path)
    return target if target.is_absolute() else Path(OUTPUT_DIR) / target


def _write_csv(table: pd.DataFrame, path: Optional[str]) -> Optional[str]:
    if not path:
        return None
    target = resolve_output(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(target, index=False)
    logger.info(f"✓ Table written to {target}")
    return str(target)


def _half_density(spec: MapSpec):
    from standard_families import support_cap
    from transfer_operator import GridDensity

    lo, hi = float(spec.space[0]), support_cap(spec)
    mid = 0.5 * (lo + hi)
    height = 2.0 / (hi - lo)
    return GridDensity.from_function(lambda x: np.where(np.asarray(x) < mid, height, 0.0), [(lo, hi)],
                                     breakpoints=[mid])


def _run_mix(spec: MapSpec, report, options: Dict[str, Any], run: RunReport) -> None:
    from transfer_operator import fit_exponential, invariant_density, mixing_series

    invariant = invariant_density(spec, report)
    table = mixing_series(spec, _half_density(spec), invariant.density, int(options.get('steps') or 30), report)
    fit = fit_exponential(table['l1'].to_numpy(dtype=float), table['m'].to_numpy(dtype=float))
    bound = table['bound'].astype(float)
    run.results.update({'invariant_residual': invariant.residual, 'rate': fit.rate, 'r_squared': fit.r_squared,
                        'bound_ok': bool((bound.isna() | (table['l1'] <= bound)).all())})
    path = _write_csv(table, options.get('csv'))
    if path:
        run.series['mixing'] = path


def _run_couple(spec: MapSpec, report, options: Dict[str, Any], run: RunReport) -> None:
    from coupling_engine import CouplingConfig, run_coupling
    from standard_families import StandardPair, support_cap

    eps0 = float(report.eps0)
    lo, hi = float(spec.space[0]), support_cap(spec)
    pair_A = StandardPair.uniform([(lo, lo + eps0)])
    pair_B = StandardPair.uniform([(hi - eps0, hi)])
    config = None if options.get('full_scale') else CouplingConfig.desk(eps0)
    result = run_coupling(spec, pair_A, pair_B, report, int(options.get('rounds') or 3), config)
    run.results.update({'rate': result.rate, 'bound_ok': result.bound_ok, 'blocks': result.state.round,
                        'steps': result.state.steps, 'uncoupled': result.state.uncoupled})
    path = _write_csv(result.table, options.get('csv'))
    if path:
        run.series['coupling'] = path


def _run_induce(spec: MapSpec, report, options: Dict[str, Any], run: RunReport) -> None:
    from errors import InsufficientLevels
    from inducing_schemes import (InducingConfig, build_scheme_1, build_scheme_2, build_scheme_3, replay_tail,
                                  tail_statistics)

    builders = {1: build_scheme_1, 2: build_scheme_2, 3: build_scheme_3}
    kind = int(options.get('scheme') or 1)
    config = InducingConfig(seed=run.seed) if options.get('full_scale') else InducingConfig.desk(report)
    config.seed = run.seed
    scheme = builders[kind](spec, report, config=config)
    run.results.update(scheme.to_dict())
    run.results['mass_error'] = scheme.mass_error()
    try:
        fit = tail_statistics(scheme)
        run.results.update({'kappa': fit.kappa, 'r_squared': fit.r_squared, 'one_minus_kappa': fit.one_minus_kappa})
        if fit.modeled:
            run.results['tail_model'] = 'fixed-ratio: tail rate follows from t, not from orbits'
    except InsufficientLevels as e:
        logger.warning(f"No tail fit: {e}")
    if not scheme.log_scale:
        replay = replay_tail(spec, scheme, points=options.get('points') or config.mc_points, seed=run.seed)
        run.results['replay_agreement'] = replay.agreement
    path = _write_csv(scheme.tail(), options.get('csv'))
    if path:
        run.series['tail'] = path


STAGES = {'mix': _run_mix, 'couple': _run_couple, 'induce': _run_induce}

HYPOTHESES = ('h1', 'h2', 'h3', 'h4', 'h5', 'h6', 'h7', 'h8')


def hypothesis_verdicts(spec: MapSpec, cert, selected: Sequence[str], seed: Optional[int] = None) -> Dict[str, Any]:
    """
    Per-hypothesis verdicts for `check --hypothesis`

    H1 to H3 read the certificate; H4 and H5 need the constants chain; H6 to H8 build 𝓡
    at the resulting δ₀. A hypothesis that does not apply to the map reads None.

    Returns:
        {'h1': True, ..., 'passed': bool} with an 'hN_error' message for every failed step
    """
    from constants_pipeline import derive_constants
    from hypothesis_suite import check_inducing_partition

    wanted = [h for h in HYPOTHESES if h in set(selected)]
    verdicts: Dict[str, Any] = {}
    report, partition = None, None
    if any(h in wanted for h in ('h4', 'h5', 'h6', 'h7', 'h8')):
        try:
            report = derive_constants(cert)
        except ExpmixError as e:
            logger.warning(f"Constants chain failed: {e}")
            verdicts['h4_error'] = str(e)
    if report is not None and any(h in wanted for h in ('h6', 'h7', 'h8')):
        try:
            partition = check_inducing_partition(spec, report.delta0, seed=seed)
        except ExpmixError as e:
            logger.warning(f"Inducing partition failed: {e}")
            verdicts['h6_error'] = str(e)

    for h in wanted:
        if h == 'h1':
            verdicts[h] = bool(to_mp(cert.lam) < 1)
        elif h == 'h2':
            verdicts[h] = bool(mp.isfinite(to_mp(cert.D)))
        elif h == 'h3':
            verdicts[h] = bool(to_mp(cert.sigma) < to_mp(cert.sigma_threshold))
        elif h == 'h4':
            verdicts[h] = report is not None and bool(mp.isfinite(to_mp(report.C_eps0)))
        elif h == 'h5':
            verdicts[h] = report is not None and cert.h5_complete
        elif partition is None:
            verdicts[h] = False
        elif h == 'h6':
            verdicts[h] = bool(partition.verdicts.get('boundary') and partition.verdicts.get('containment'))
        elif h == 'h7':
            verdicts[h] = bool(partition.verdicts.get('gcd'))
        else:
            verdicts[h] = bool(partition.verdicts.get('Zprime')) if partition.Zprime is not None else None
    verdicts['passed'] = all(verdicts[h] is not False for h in wanted)
    logger.info("Hypotheses: " + ', '.join(f"{h} {verdicts[h]}" for h in wanted))
    return verdicts


def run_pipeline(spec: MapSpec, options: Optional[Dict[str, Any]] = None) -> RunReport:
    """
    Run check → constants → (optional) mix / couple / induce for one map

    Args:
        spec: The map
        options: command, seed, trials, csv, json, steps, rounds, scheme, points, full_scale, golden_path,
            hypotheses (check), a0 and B0 (constants)

    Returns:
        RunReport; exit_code is 0 iff every golden comparison passes
    """
    from constants_pipeline import derive_constants, mixing_time
    from errors import ConstantsError
    from hypothesis_suite import certify

    options = dict(options or {})
    command = options.get('command', 'report')
    seed = DEFAULT_SEED if options.get('seed') is None else int(options['seed'])
    run = RunReport(target=spec.name, command=command, seed=seed)

    cert = certify(spec, trial_count=options.get('trials'), seed=seed)
    run.certificate = cert.to_dict()
    if command == 'check':
        if options.get('hypotheses'):
            run.results.update(hypothesis_verdicts(spec, cert, options['hypotheses'], seed=seed))
        if options.get('json'):
            run.save_json(options['json'])
        return run

    choices = {key: parse_quantity(options[key]) for key in ('a0', 'B0') if options.get(key) is not None}
    try:
        report = derive_constants(cert, a0_choice=choices.get('a0'), B0_choice=choices.get('B0'))
    except ConstantsError as e:
        if not choices:
            raise
        raise InputError(f"rejected choice: {e}") from e
    if choices:
        run.results['choices'] = ', '.join(f"{k} = {options[k]}" for k in choices)
    run.constants = report.to_dict()
    if report.complete:
        run.constants['mixing_time_half'] = mixing_time(report, Fraction(1, 2))
    if options.get('csv') and command in ('constants', 'report'):
        path = _write_csv(pd.DataFrame(report.rows(), columns=['name', 'value', 'formula', 'inputs']),
                          options['csv'])
        run.series['constants'] = path
    golden = load_golden(options.get('golden_path'))
    run.golden = compare_golden(spec.name, cert, report, golden)

    stage = STAGES.get(command)
    if stage is not None:
        stage(spec, report, options, run)
    if options.get('json'):
        run.save_json(options['json'])
    return run


# --- Command line ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('target', help="Fixture id (wmap, rplus, skew2d, doubling) or JSON config path")
    common.add_argument('--seed', type=int, default=None, help=f"Seed of every sampled check (default {DEFAULT_SEED})")
    common.add_argument('--json', type=str, default=None, help="Write the run report as JSON")
    common.add_argument('--csv', type=str, default=None, help="Write the main table as CSV")
    common.add_argument('--precision', type=int, default=None, help="mpmath decimal digits (at least 30)")
    common.add_argument('--verbose', action='store_true', help="Show progress logs of every module")
    common.add_argument('--trials', type=int, default=None, help="Complexity trials (defaults by dimension)")
    common.add_argument('--golden', type=str, default=None, dest='golden_path', help="Golden-value file")

    parser = argparse.ArgumentParser(prog='expmix', description="Exponential mixing toolkit for piecewise expanding maps")
    sub = parser.add_subparsers(dest='command', required=True)
    check = sub.add_parser('check', parents=[common], help="Verify the expansion, distortion and complexity hypotheses")
    check.add_argument('--hypothesis', action='append', choices=HYPOTHESES, dest='hypotheses', default=None,
                       help="Report the verdict of one hypothesis (repeatable)")
    constants = sub.add_parser('constants', parents=[common],
                               help="Derive the constants chain and compare with golden values")
    constants.add_argument('--a0', type=str, default=None, help="Hölder class a₀ (exact or formula, above D/(1−λ^α))")
    constants.add_argument('--B0', type=str, default=None, help="Properness B₀ (at least the minimum admissible)")
    mix = sub.add_parser('mix', parents=[common], help="L¹ distance of ℒᵐf to the invariant density")
    mix.add_argument('--steps', type=int, default=30)
    couple = sub.add_parser('couple', parents=[common], help="Couple two standard pairs")
    couple.add_argument('--rounds', type=int, default=3)
    couple.add_argument('--full-scale', action='store_true', dest='full_scale')
    induce = sub.add_parser('induce', parents=[common], help="Build an inducing scheme and fit its tail")
    induce.add_argument('--scheme', type=int, choices=(1, 2, 3), default=1)
    induce.add_argument('--points', type=int, default=None, help="Monte-Carlo replay points")
    induce.add_argument('--full-scale', action='store_true', dest='full_scale')
    sub.add_parser('report', parents=[common], help="Full constants report with golden comparison")
    return parser


def _quiet(verbose: bool) -> None:
    level = logging.INFO if verbose else logging.WARNING
    for name in PIPELINE_MODULES:
        logging.getLogger(name).setLevel(level)


def _summary(run: RunReport) -> None:
    print("=" * 60)
    print(f"expmix {run.command} {run.target} (seed {run.seed})")
    print("=" * 60)
    for key in ('lam', 'D', 'sigma', 'N_delta'):
        if key in run.certificate:
            print(f"  {key:>18}: {run.certificate[key]}")
    for key in ('a0', 'eps0', 'B0', 'delta0', 'n1', 'k0', 'nbar', 'log10_one_minus_gamma2', 'mixing_time_half'):
        if key in run.constants:
            print(f"  {key:>18}: {_show(run.constants[key])}")
    for key, value in run.results.items():
        if isinstance(value, (int, float, str, bool, mp.mpf)):
            print(f"  {key:>18}: {_show(value)}")
    for check in run.golden:
        mark = '✓' if check.passed else '✗'
        print(f"  {mark} {check.name} ({check.kind})")
    print("=" * 60)
    print("PASS" if run.passed else "FAIL")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the expmix command; returns the exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    _quiet(args.verbose)
    try:
        configure_precision(args.precision)
        spec = parse_config(args.target)
        json_path = args.json
        if args.command == 'report' and json_path is None:
            json_path = f"{spec.name}_report.json"
        options = dict(vars(args), json=json_path)
        run = run_pipeline(spec, options)
    except InputError as e:
        logger.error(f"Input error: {e}")
        print(f"expmix: error: {e}", file=sys.stderr)
        return 2
    except ExpmixError as e:
        logger.error(f"{e.module}: {e}")
        print(f"expmix: {e.module}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command} {args.target}")
        print(f"expmix: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    _summary(run)
    return run.exit_code


if __name__ == "__main__":
    sys.exit(main())
