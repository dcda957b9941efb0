#!/usr/bin/env python3
"""Subcommand handlers and the stage builders the verify-all workflow runs.

Handlers take the parsed argparse namespace plus the RunConfig and return
the process exit code.
"""

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .campaigns import (
    SMOKE_M_LIMIT,
    campaign_thm1_large_k,
    campaign_thm1_small_k,
    campaign_thm2_large_k,
    campaign_thm2_small_k,
    check_forms_nonvanishing,
    verify_reduction_constants,
)
from .config import RunConfig
from .constants import PUBLISHED, SMALL_K_RANGE, THEOREM_TAG, RootConstants, resolve_spec
from .continued_fraction import cf_expand
from .errors import ConfigError
from .linforms import (
    BALANCING,
    LUCAS,
    chain_n_bound,
    derive_n_bound,
    l_upper_bound,
    large_k_initial_bounds,
    matveev_constant,
    verify_slack_facts,
)
from .manifest import BoundCheck, Manifest, SKIPPED, StageResult, render_report
from .persistence import ResultWriter, decimal_string, render_table
from .reduction import ReductionInstance, reduce_or_route
from .search import (
    THEOREM_MIN_K,
    SolutionRecord,
    brute_force_box,
    certify_solution,
    diff_solutions,
    equation_tag,
    format_solution_table,
    prefix_case_check,
    theorem_solutions,
)
from .sequences import (
    SEQUENCE_KINDS,
    balancing_terms,
    check_binet_grid,
    check_growth_bounds,
    lucas_balancing_terms,
    table_for,
    verify_sequence_identities,
)


SOLUTIONS_FILE = 'solutions.jsonl'
SMOKE_K_RANGE = (2, 10)
# Smoke campaigns sample both ends of the small-k range and one k in between
SMOKE_CAMPAIGN_K = {BALANCING: (3, 50, 450), LUCAS: (2, 50, 500)}
SEARCH_BOX = {
    BALANCING: ('thm1.small.n_max', 'thm1.small.l_max'),
    LUCAS: ('thm2.small.n_max', 'thm2.small.l_max'),
}
SMALL_K_CAMPAIGNS = {BALANCING: campaign_thm1_small_k, LUCAS: campaign_thm2_small_k}
LARGE_K_CAMPAIGNS = {BALANCING: campaign_thm1_large_k, LUCAS: campaign_thm2_large_k}


def parse_range(text: str) -> Tuple[int, int]:
    """'3..450' -> (3, 450); a single number is a one-element range"""
    parts = str(text).split('..')
    try:
        if len(parts) == 1:
            value = int(parts[0])
            return value, value
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ConfigError(f"expected a range like 3..450, got {text!r}")


def load_json_argument(text: str) -> Any:
    """Inline JSON, or the path of a JSON file"""
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        inline_error = e
    try:
        content = Path(text).read_text(encoding='utf-8')
    except OSError:
        raise ConfigError(f"invalid JSON argument: {inline_error}")
    try:
        return json.loads(content)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {text}: {e}")


def _emit(writer: ResultWriter, records: List[Dict[str, Any]], out: Optional[str],
          columns: Optional[List[str]] = None) -> None:
    if out:
        if writer.write_records(out, records, columns):
            print(f"💾 Wrote {len(records)} record(s) to {out}")
    else:
        print(writer.format_records(records, columns), end='')


def search_box(tag: str) -> Tuple[int, int]:
    n_label, l_label = SEARCH_BOX[tag]
    return int(PUBLISHED[n_label].value), int(PUBLISHED[l_label].value)


def effective_k_range(cfg: RunConfig, tag: str, default: Tuple[int, int]) -> Tuple[int, int]:
    k_lo, k_hi = cfg.k_range or (SMOKE_K_RANGE if cfg.smoke else default)
    return max(k_lo, THEOREM_MIN_K[tag]), k_hi


# Stage builders for verify-all

def sequence_stage(cfg: RunConfig) -> StageResult:
    stage = StageResult(name='sequences')
    ctx = cfg.precision()
    if cfg.smoke:
        identities = verify_sequence_identities(l_max=200, k_max=60, fib_n_max=100, binet_l_max=60)
        binet_k, binet_n = range(2, 7), 80
    else:
        identities = verify_sequence_identities()
        binet_k, binet_n = range(2, 31), 500
    stage.summary.update({name: count for name, count in sorted(identities.checks.items())})
    stage.failures.extend({'instance': v, 'error': 'InvariantViolation', 'message': v, 'exit_code': 1}
                          for v in identities.violations)
    stage.summary['binet_residuals'] = check_binet_grid(binet_k, binet_n, ctx, cfg.root_cache())
    for kind, k in (('balancing', None), ('lucas', None), ('kfib', 3), ('kfib', 10)):
        growth = check_growth_bounds(kind, range(1, binet_n + 1), k=k, ctx=ctx, cache=cfg.root_cache())
        key = kind if k is None else f"{kind}_{k}"
        stage.summary[f"growth_{key}"] = growth.checked
        stage.failures.extend({'instance': f"{key} n={n}", 'error': 'InvariantViolation',
                               'message': 'growth bound violated', 'exit_code': 1} for n in growth.violations)
    return stage.settle()


def bounds_stage(cfg: RunConfig) -> StageResult:
    stage = StageResult(name='bounds')
    ctx = cfg.precision()
    stage.checks.append(BoundCheck.against('matveev.s3', matveev_constant(3)))
    for theorem in cfg.theorems:
        tag = THEOREM_TAG[theorem]
        slack = verify_slack_facts(tag, ctx=ctx)
        for result in slack:
            if not result.holds:
                stage.failures.append({'instance': result.name, 'error': 'ReproductionMismatch', 'exit_code': 1,
                                       'message': f"slack fact fails at {result.first_failure}"})
        stage.summary[f"{tag}_slack_facts"] = len(slack)
        for check in verify_reduction_constants(tag, ctx, cfg.root_cache()):
            if not check.passed:
                stage.failures.append({'instance': check.name, 'error': 'ReproductionMismatch', 'exit_code': 1,
                                       'message': f"{check.lhs} vs {check.rhs}"})
        k_lo, k_hi = SMALL_K_RANGE[tag]
        for k in (k_lo, k_hi):
            chain = chain_n_bound(tag, k)
            stage.summary[f"{tag}_chain_ratio_k{k}"] = chain.ratio
        large = large_k_initial_bounds(tag)
        stage.summary[f"{tag}_large_k_cap"] = large.k_cap
        stage.summary[f"{tag}_large_n_cap"] = large.n_cap
        if not large.within_published:
            stage.failures.append({'instance': f"{tag} large-k caps", 'error': 'ReproductionMismatch', 'exit_code': 1,
                                   'message': f"k < {decimal_string(large.k_cap)}, n < {decimal_string(large.n_cap)}"})
    return stage.settle()


def small_k_stage(cfg: RunConfig, theorem: int) -> Tuple[StageResult, List[Dict[str, Any]]]:
    tag = THEOREM_TAG[theorem]
    k_range = effective_k_range(cfg, tag, SMALL_K_RANGE[tag])
    k_values = SMOKE_CAMPAIGN_K[tag] if cfg.smoke and not cfg.k_range else None
    report = SMALL_K_CAMPAIGNS[tag](k_range=k_range, jobs=cfg.jobs, ctx=cfg.precision(), cache_dir=cfg.cache_dir,
                                    m_limit=SMOKE_M_LIMIT if cfg.smoke else None, k_values=k_values)
    return report.stage_result(), report.records


def large_k_stage(cfg: RunConfig, theorem: int) -> Tuple[StageResult, List[Dict[str, Any]]]:
    tag = THEOREM_TAG[theorem]
    prefix = 'thm1' if tag == BALANCING else 'thm2'
    if cfg.smoke:
        labels = [label for label in PUBLISHED if label.startswith(f"{prefix}.large.")]
        return StageResult(name=f"{prefix}.large", status=SKIPPED,
                           checks=[BoundCheck.skipped(label) for label in labels]), []
    report = LARGE_K_CAMPAIGNS[tag](cfg.precision())
    return report.stage_result(), report.records


def prefix_stage(cfg: RunConfig) -> StageResult:
    stage = StageResult(name='prefix')
    for theorem in cfg.theorems:
        tag = THEOREM_TAG[theorem]
        k_lo, k_hi = effective_k_range(cfg, tag, SMALL_K_RANGE[tag])
        report = prefix_case_check(tag, k_lo, k_hi)
        stage.summary[f"{tag}_powers_of_two"] = len(report.powers_of_two)
        stage.summary[f"{tag}_prefix_solutions"] = len(report.solutions)
        if not report.only_trivial:
            stage.failures.append({'instance': tag, 'error': 'ReproductionMismatch', 'exit_code': 1,
                                   'message': f"unexpected powers of two {report.powers_of_two}"})
    return stage.settle()


def search_stage(cfg: RunConfig, theorem: int) -> Tuple[StageResult, List[SolutionRecord]]:
    tag = THEOREM_TAG[theorem]
    prefix = 'thm1' if tag == BALANCING else 'thm2'
    stage = StageResult(name=f"{prefix}.search")
    k_lo, k_hi = effective_k_range(cfg, tag, SMALL_K_RANGE[tag])
    n_max, l_max = search_box(tag)
    found = brute_force_box(tag, k_lo, k_hi, n_max, l_max, jobs=cfg.jobs)
    difference = diff_solutions(found, theorem_solutions(tag, k_lo, k_hi))
    for kind, records in difference.items():
        stage.failures.extend({'instance': rec.describe(), 'error': 'ReproductionMismatch', 'exit_code': 1,
                               'message': f"{kind} solution"} for rec in records)
    stage.summary.update({'k_lo': k_lo, 'k_hi': k_hi, 'n_max': n_max, 'l_max': l_max, 'solutions': len(found)})
    return stage.settle(), found


def certification_stage(cfg: RunConfig, solutions: List[SolutionRecord]) -> StageResult:
    stage = StageResult(name='certification')
    for rec in solutions:
        if not certify_solution(rec):
            stage.failures.append({'instance': rec.describe(), 'error': 'ReproductionMismatch', 'exit_code': 1,
                                   'message': 'independent recomputation disagrees'})
    forms = check_forms_nonvanishing(solutions, cfg.precision(), cfg.root_cache())
    stage.summary.update({'certified': len(solutions), 'nonvanishing_forms': len(forms)})
    return stage.settle()


# Subcommands

def cmd_phi(args, cfg: RunConfig) -> int:
    k_lo, k_hi = parse_range(args.k)
    ctx = cfg.precision()
    cache = cfg.root_cache()
    rows = []
    for k in range(k_lo, k_hi + 1):
        values = RootConstants(k, cache).at(ctx)
        rows.append({'k': k, 'phi': values['phi'].to_decimal(args.digits),
                     'err': values['phi'].err_decimal(), 'f_k': values['f'].to_decimal(args.digits)})
    _emit(ResultWriter(cfg.output_format), rows, args.out)
    return 0


def cmd_seq(args, cfg: RunConfig) -> int:
    if args.kind not in SEQUENCE_KINDS:
        raise ConfigError(f"kind must be one of {SEQUENCE_KINDS}")
    if args.kind == 'balancing':
        values = balancing_terms(args.count)
    elif args.kind == 'lucas':
        values = lucas_balancing_terms(args.count)
    else:
        if args.k is None:
            raise ConfigError("kfib needs --k")
        values = table_for(args.k).terms(args.count)
    k = args.k if args.kind == 'kfib' else None
    rows = [{'kind': args.kind, 'k': k, 'index': i, 'value': str(v)} for i, v in enumerate(values)]
    _emit(ResultWriter(cfg.output_format), rows, args.out)
    return 0


def cmd_cf(args, cfg: RunConfig) -> int:
    x = resolve_spec(load_json_argument(args.x), cfg.root_cache())
    if args.min_denominator is not None:
        expansion = cf_expand(x, cfg.precision(), min_denominator=int(Fraction(args.min_denominator)))
    else:
        expansion = cf_expand(x, cfg.precision(), count=args.count)
    print(f"📐 {expansion.source}: [{', '.join(str(a) for a in expansion.partial_quotients)}]")
    _emit(ResultWriter(cfg.output_format), expansion.as_records(), args.out)
    return 0


def cmd_reduce(args, cfg: RunConfig) -> int:
    spec = load_json_argument(args.instance)
    if not isinstance(spec, dict):
        raise ConfigError("reduce instance must be a JSON object")
    missing = [key for key in ('tau_spec', 'mu_spec', 'A', 'B', 'M') if key not in spec]
    if missing:
        raise ConfigError(f"reduce instance lacks {', '.join(missing)}")
    cache = cfg.root_cache()
    inst = ReductionInstance(
        tau=resolve_spec(spec['tau_spec'], cache),
        mu=resolve_spec(spec['mu_spec'], cache),
        A=Fraction(str(spec['A'])),
        B=resolve_spec(spec['B'], cache),
        M=int(Fraction(str(spec['M']))),
        label=str(spec.get('label', '')),
    )
    outcome = reduce_or_route(inst, cfg.precision())
    print(json.dumps(outcome.to_record(), indent=2, sort_keys=True))
    return 0 if outcome.reduced else 1


def cmd_bounds(args, cfg: RunConfig) -> int:
    tag = THEOREM_TAG[args.theorem]
    ctx = cfg.precision()
    rows = []
    if args.k is not None:
        k_lo, k_hi = parse_range(args.k)
        for k in range(k_lo, k_hi + 1):
            n_bound = derive_n_bound(tag, k, ctx)
            chain = chain_n_bound(tag, k)
            rows.append({'theorem': args.theorem, 'k': k, 'M_k': str(n_bound), 'l_max': l_upper_bound(tag, n_bound),
                         'chain_n_bound': decimal_string(chain.n_bound), 'chain_ratio': decimal_string(chain.ratio, 6)})
        _emit(ResultWriter(cfg.output_format), rows, args.out)
        return 0
    large = large_k_initial_bounds(tag)
    slack = verify_slack_facts(tag, ctx=ctx)
    print(render_table([{'fact': r.name, 'from': r.start, 'holds': r.holds} for r in slack], ('fact', 'from', 'holds')))
    print()
    checks = verify_reduction_constants(tag, ctx, cfg.root_cache())
    print(render_table([c.to_record() for c in checks], ('name', 'lhs', 'rhs', 'passed')))
    print(f"\nLarge k: k < {decimal_string(large.k_cap, 6)}, n < {decimal_string(large.n_cap, 6)}"
          f" (published k < {decimal_string(large.published_k, 6)}, n < {decimal_string(large.published_n, 6)})")
    ok = all(r.holds for r in slack) and all(c.passed for c in checks) and large.within_published
    return 0 if ok else 1


def cmd_campaign(args, cfg: RunConfig) -> int:
    tag = THEOREM_TAG[args.theorem]
    if args.stage == 'small':
        k_range = parse_range(args.k_range) if args.k_range else None
        report = SMALL_K_CAMPAIGNS[tag](k_range=k_range, jobs=cfg.jobs, ctx=cfg.precision(),
                                        cache_dir=cfg.cache_dir, m_limit=args.m_limit)
    else:
        report = LARGE_K_CAMPAIGNS[tag](cfg.precision())
    if args.out:
        _emit(ResultWriter(cfg.output_format), report.records, args.out)
    result = report.stage_result()
    print(render_table([c.to_record() for c in result.checks], ('label', 'published', 'computed', 'tolerance', 'status')))
    for failure in result.failures:
        print(f"  ❌ {failure['instance']}: {failure['message']}")
    print(f"\n{'✅' if result.status == 'PASS' else '❌'} {report.name}: {result.status}")
    return 0 if result.status == 'PASS' else 1


def cmd_search(args, cfg: RunConfig) -> int:
    tag = equation_tag(args.equation)
    k_lo, k_hi = parse_range(args.k)
    records = brute_force_box(tag, k_lo, k_hi, args.n_max, args.l_max, jobs=cfg.jobs,
                              allow_out_of_theorem=args.allow_out_of_theorem)
    if args.out:
        _emit(ResultWriter(cfg.output_format), [rec.to_record() for rec in records], args.out)
    print(format_solution_table(records))
    return 0


def cmd_report(manifest_path: str) -> str:
    """The manifest table, followed by the solutions saved next to it"""
    text = render_report(Manifest.load(manifest_path))
    solutions_path = Path(manifest_path).with_name(SOLUTIONS_FILE)
    if solutions_path.is_file():
        records = [SolutionRecord.from_record(r) for r in ResultWriter().read_records(str(solutions_path))]
        if records:
            text += '\n\n' + format_solution_table(records)
    return text
