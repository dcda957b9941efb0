#!/usr/bin/env python3
"""Campaign drivers that turn the n < M_k bounds into the final search boxes.

Small k: two Dujella-Petho passes per k. The first bounds m, the second
bounds n for every m up to that bound. Large k: the k < c log n bound is
reduced twice, once with the initial n cap and once with the n bound at the
first reduced k, until k falls below the small-k range.
"""

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from mpmath import mp

from .constants import (
    REDUCTION_A,
    REDUCTION_SMOOTHING,
    SMALL_K_RANGE,
    RootConstants,
    log2_over_log_gamma,
    log_gamma_over_log2,
    published,
)
from .continued_fraction import cf_expand
from .errors import DomainError, PreconditionError, PrecisionInsufficient, ReproductionError
from .linforms import (
    BALANCING,
    BOUND_PREC,
    LUCAS,
    N_BOUND_MIN_K,
    check_tag,
    derive_n_bound,
    exp_smoothing_constant,
    l_upper_bound,
    large_k_initial_bounds,
    large_k_log_coefficient,
    log_smoothing_constant,
    n_bound_after_k_cap,
)
from .manifest import BoundCheck, StageResult
from .numerics import (
    AlgebraicConstants,
    ApproxReal,
    PrecisionContext,
    RefinableReal,
    decide,
    dominant_root,
    with_escalation,
)
from .persistence import decimal_string
from .pool import chunked, parallel_map
from .reduction import (
    DEFAULT_RETRIES,
    LEGENDRE,
    REDUCED,
    ReductionInstance,
    dujella_petho_reduce,
    reduce_or_route,
)
from .root_cache import RootCache
from .sequences import kfib


THEOREM_PREFIX = {BALANCING: 'thm1', LUCAS: 'thm2'}

# Retries after the first convergent when eps is not positive, second round
WIDE_RETRIES = 4 * DEFAULT_RETRIES
STAGE2_CHUNK = 128
# Smoke runs stop the second stage here
SMOKE_M_LIMIT = 12

# phi(k) exceeds this for every k in the small-k range
PHI_FLOOR = {BALANCING: Fraction(7, 4), LUCAS: Fraction(3, 2)}

# |l log gamma - x log 2 - shift| < 4.1 / 2^(k/2) for large k, divided by log 2 or log gamma
LARGE_K_FORM_BOUND = Fraction('4.1')
LARGE_K_A = {BALANCING: Fraction('5.92'), LUCAS: Fraction('2.33')}


@dataclass
class CampaignReport:
    name: str
    tag: str
    records: List[Dict[str, Any]] = field(default_factory=list)
    checks: List[BoundCheck] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def status(self) -> str:
        return self.stage_result().status

    def check(self, label: str, computed: Any) -> BoundCheck:
        result = BoundCheck.against(label, computed)
        self.checks.append(result)
        return result

    def fail(self, instance: str, message: str, error: str = 'ReproductionMismatch', exit_code: int = 1) -> None:
        self.failures.append({'instance': instance, 'error': error, 'message': message, 'exit_code': exit_code})

    def stage_result(self) -> StageResult:
        return StageResult(name=self.name, checks=list(self.checks), summary=dict(self.summary),
                           failures=list(self.failures)).settle()


# Small k

def _error_record(error: ReproductionError) -> Dict[str, Any]:
    record = error.to_record()
    record.pop('stage', None)
    record.pop('instance', None)
    return {'status': 'Error', **record}


def _reduce_task(task: Tuple) -> List[Dict[str, Any]]:
    """Worker: reduce one k for a run of m values (stage 2) or once (stage 1, m=None)"""
    tag, stage, k, m_values, bits, max_bits, cache_dir = task
    ctx = PrecisionContext(working_bits=bits, max_bits=max_bits)
    cache = RootCache(cache_dir) if cache_dir else None
    keys = [{'k': k} if m is None else {'k': k, 'm': m} for m in m_values]
    try:
        roots = RootConstants(k, cache)
        bound = derive_n_bound(tag, k, ctx)
        tau = roots.tau()
        expansion = cf_expand(tau, ctx, min_denominator=6 * bound, extra=DEFAULT_RETRIES)
    except ReproductionError as e:
        return [{**key, **_error_record(e)} for key in keys]

    records = []
    for key, m in zip(keys, m_values):
        label = f"{THEOREM_PREFIX[tag]} stage {stage} k={k}" + ('' if m is None else f" m={m}")
        try:
            inst = ReductionInstance(tau=tau, mu=roots.mu(tag, stage, m), A=REDUCTION_A[(tag, stage)],
                                     B=roots.phi(), M=bound, label=label)
            retry_limit = DEFAULT_RETRIES
            outcome = dujella_petho_reduce(inst, ctx, expansion=expansion)
            if not outcome.reduced:
                print(f"  ⚠️ eps not positive for {label} after {outcome.attempts} convergents, widening to {WIDE_RETRIES}")
                retry_limit = WIDE_RETRIES
                outcome = dujella_petho_reduce(inst, ctx, max_retries=WIDE_RETRIES)
            records.append({**key, **outcome.to_record(), 'retry_limit': retry_limit})
        except ReproductionError as e:
            records.append({**key, **_error_record(e)})
    return records


def _stage_tasks(tag: str, stage: int, k_values: Sequence[int], m_values: Sequence[Optional[int]],
                 ctx: PrecisionContext, cache_dir: Optional[str]) -> List[Tuple]:
    size = STAGE2_CHUNK if stage == 2 else 1
    return [
        (tag, stage, k, tuple(chunk), ctx.working_bits, ctx.max_bits, cache_dir)
        for k in k_values
        for chunk in chunked(list(m_values), size)
    ]


def _collect(report: CampaignReport, batches: Iterable[List[Dict[str, Any]]]) -> List[Dict[str, Any]]:
    records = sorted((r for batch in batches for r in batch), key=lambda r: (r['k'], r.get('m') or 0))
    for record in records:
        if record['status'] not in (REDUCED, LEGENDRE):
            where = f"k={record['k']}" + (f", m={record['m']}" if 'm' in record else '')
            report.failures.append({
                'instance': where,
                'error': record.get('error', 'EpsilonFailed'),
                'message': record.get('message', f"eps not positive after {record.get('attempts')} convergents"),
                'exit_code': record.get('exit_code', 1),
            })
    return records


def _worst(records: List[Dict[str, Any]]) -> Optional[Dict[str, Any]]:
    reduced = [r for r in records if r.get('bound') is not None]
    if not reduced:
        return None
    return max(reduced, key=lambda r: Fraction(r['bound']))


def small_k_campaign(tag: str, k_range: Optional[Tuple[int, int]] = None, jobs: int = 1,
                     ctx: Optional[PrecisionContext] = None, cache_dir: Optional[str] = None,
                     m_limit: Optional[int] = None, k_values: Optional[Sequence[int]] = None) -> CampaignReport:
    """Both reduction stages over k_range (default: the full small-k range).

    k_values replaces the range with an explicit subset and m_limit caps the
    second stage's m range, for smoke runs.
    """
    check_tag(tag)
    ctx = ctx or PrecisionContext()
    if k_values is not None:
        k_values = sorted(set(k_values))
        if not k_values:
            raise DomainError("empty k subset")
        k_range = (k_values[0], k_values[-1])
    k_lo, k_hi = k_range or SMALL_K_RANGE[tag]
    if k_lo < N_BOUND_MIN_K[tag]:
        raise PreconditionError(f"{tag} campaign needs k >= {N_BOUND_MIN_K[tag]}, got {k_lo}")
    if k_lo > k_hi:
        raise DomainError(f"empty k range {k_lo}..{k_hi}")
    prefix = THEOREM_PREFIX[tag]
    report = CampaignReport(name=f"{prefix}.small", tag=tag)
    start = time.time()
    if k_values is None:
        k_values = list(range(k_lo, k_hi + 1))

    stage1 = _collect(report, parallel_map(_reduce_task, _stage_tasks(tag, 1, k_values, [None], ctx, cache_dir), jobs))
    report.records.extend({'stage': 1, **r} for r in stage1)
    worst1 = _worst(stage1)
    if report.failures or worst1 is None:
        report.elapsed = time.time() - start
        return report
    # m - 1 < bound, so m <= ceil(bound); the reduction assumes m >= 5
    m_max = max([4] + [r['w_bound'] for r in stage1])
    report.check(f"{prefix}.small.stage1", Fraction(worst1['bound']))
    report.check(f"{prefix}.small.m_max", m_max)

    m_top = m_max if m_limit is None else min(m_max, m_limit)
    stage2_tasks = _stage_tasks(tag, 2, k_values, list(range(1, m_top + 1)), ctx, cache_dir)
    stage2 = _collect(report, parallel_map(_reduce_task, stage2_tasks, jobs))
    report.records.extend({'stage': 2, **r} for r in stage2)
    worst2 = _worst(stage2)
    if not report.failures and worst2 is not None:
        n_max = max(r['w_bound'] for r in stage2)
        l_max = l_upper_bound(tag, n_max)
        report.check(f"{prefix}.small.stage2", Fraction(worst2['bound']))
        report.check(f"{prefix}.small.n_max", n_max)
        report.check(f"{prefix}.small.l_max", l_max)
        report.summary.update({'n_max': n_max, 'l_max': l_max, 'stage2_argmax_k': worst2['k'],
                               'stage2_argmax_m': worst2['m']})

    report.summary.update({
        'k_lo': k_lo, 'k_hi': k_hi, 'm_max': m_max, 'm_searched': m_top,
        'stage1_argmax_k': worst1['k'], 'instances': len(stage1) + len(stage2),
        'widened': sum(1 for r in stage1 + stage2 if r.get('retry_limit', DEFAULT_RETRIES) > DEFAULT_RETRIES),
    })
    report.elapsed = time.time() - start
    return report


def campaign_thm1_small_k(**kwargs) -> CampaignReport:
    return small_k_campaign(BALANCING, **kwargs)


def campaign_thm2_small_k(**kwargs) -> CampaignReport:
    return small_k_campaign(LUCAS, **kwargs)


# Large k

def _certified_double(value: ApproxReal, ctx: PrecisionContext) -> ApproxReal:
    with ctx.activated():
        return 2 * value


def _half(value: ApproxReal, ctx: PrecisionContext) -> ApproxReal:
    with ctx.activated():
        return value / 2


def _int_published(label: str) -> int:
    value = published(label).value
    if value.denominator != 1:
        raise DomainError(f"published value {label} is not an integer")
    return value.numerator


def campaign_thm1_large_k(ctx: Optional[PrecisionContext] = None) -> CampaignReport:
    """Two reductions of |l tau - x - 1/2| < 5.92 / 2^(k/2), tau = log gamma / log 2"""
    ctx = ctx or PrecisionContext()
    report = CampaignReport(name='thm1.large', tag=BALANCING)
    start = time.time()
    tau = log_gamma_over_log2()
    mu = RefinableReal.rational(Fraction(-1, 2))

    bounds = large_k_initial_bounds(BALANCING)
    report.check('thm1.large.log_coefficient', large_k_log_coefficient(BALANCING))
    first_m = _int_published('thm1.large.initial_m')
    report.check('thm1.large.initial_m', 2 * bounds.n_cap)

    first = dujella_petho_reduce(ReductionInstance(tau, mu, LARGE_K_A[BALANCING], 2, first_m, 'thm1.large pass 1'), ctx)
    report.records.append({'pass': 1, 'M': decimal_string(first_m), **first.to_record()})
    if not first.reduced:
        report.fail('pass 1', f"eps not positive after {first.attempts} convergents", 'EpsilonFailed')
        report.elapsed = time.time() - start
        return report
    # k/2 < value
    if not report.check('thm1.large.half_k', first.value).passed:
        report.elapsed = time.time() - start
        return report
    # k/2 < value gives k <= 2 ceil(value); the chain continues from the published ceiling
    k_max_computed = 2 * first.value.ceil_upper()
    report.check('thm1.large.k_max', k_max_computed)
    k_max = 2 * _int_published('thm1.large.half_k')

    second_n = n_bound_after_k_cap(BALANCING, k_max, ctx)
    report.check('thm1.large.n_at_k_max', second_n)
    second_m = _int_published('thm1.large.second_m')
    report.check('thm1.large.second_m', 2 * second_n)
    second = dujella_petho_reduce(ReductionInstance(tau, mu, LARGE_K_A[BALANCING], 2, second_m, 'thm1.large pass 2'), ctx)
    report.records.append({'pass': 2, 'M': decimal_string(second_m), **second.to_record()})
    if not second.reduced:
        report.fail('pass 2', f"eps not positive after {second.attempts} convergents", 'EpsilonFailed')
    else:
        k_bound = _certified_double(second.value, ctx)
        report.check('thm1.large.second_k', k_bound)
        report.check('thm1.large.closing_k', k_bound)
        report.summary['second_k_bound'] = k_bound

    report.summary.update({
        'k_cap': bounds.k_cap, 'n_cap': bounds.n_cap,
        'first_q_index': first.q_index, 'first_half_k_bound': first.value,
        'k_max': k_max, 'k_max_computed': k_max_computed,
        'n_at_k_max': second_n,
    })
    report.elapsed = time.time() - start
    return report


def _sqrt2() -> RefinableReal:
    return RefinableReal('sqrt(2)', lambda ctx: AlgebraicConstants.at(ctx).sqrt2)


def campaign_thm2_large_k(ctx: Optional[PrecisionContext] = None) -> CampaignReport:
    """|x tau - l| < 2.33 / sqrt(2)^k with tau = log 2 / log gamma, closed by the Legendre bound"""
    ctx = ctx or PrecisionContext()
    report = CampaignReport(name='thm2.large', tag=LUCAS)
    start = time.time()
    tau = log2_over_log_gamma()
    mu = RefinableReal.rational(0)

    bounds = large_k_initial_bounds(LUCAS)
    report.check('thm2.large.log_coefficient', large_k_log_coefficient(LUCAS))
    first_m = _int_published('thm2.large.initial_m')
    report.check('thm2.large.initial_m', 2 * bounds.n_cap)

    first = reduce_or_route(ReductionInstance(tau, mu, LARGE_K_A[LUCAS], _sqrt2(), first_m, 'thm2.large pass 1'), ctx)
    report.records.append({'pass': 1, 'M': decimal_string(first_m), **first.to_record()})
    if first.status != LEGENDRE:
        report.fail('pass 1', f"expected the Legendre route, got {first.status}")
        report.elapsed = time.time() - start
        return report
    report.check('thm2.large.a_max', first.a_max)
    report.check('thm2.large.n_index', first.q_index)
    # the reduced exponent is k itself, so k/2 < value/2
    half_k = _half(first.value, ctx)
    if not report.check('thm2.large.half_k', half_k).passed:
        report.elapsed = time.time() - start
        return report
    k_max_computed = 2 * half_k.ceil_upper()
    report.check('thm2.large.k_max', k_max_computed)
    k_max = 2 * _int_published('thm2.large.half_k')

    second_n = n_bound_after_k_cap(LUCAS, k_max, ctx)
    report.check('thm2.large.n_at_k_max', second_n)
    second_m = _int_published('thm2.large.second_m')
    report.check('thm2.large.second_m', 2 * second_n)
    second = reduce_or_route(ReductionInstance(tau, mu, LARGE_K_A[LUCAS], _sqrt2(), second_m, 'thm2.large pass 2'), ctx)
    report.records.append({'pass': 2, 'M': decimal_string(second_m), **second.to_record()})
    if not second.reduced:
        report.fail('pass 2', f"reduction failed with status {second.status}", 'EpsilonFailed')
    else:
        report.check('thm2.large.second_k', second.value)
        report.check('thm2.large.closing_k', second.value)
        report.summary['second_k_bound'] = second.value
        report.summary['second_a_max'] = second.a_max

    report.summary.update({
        'k_cap': bounds.k_cap, 'n_cap': bounds.n_cap,
        'first_a_max': first.a_max, 'first_n_index': first.q_index, 'first_half_k_bound': half_k,
        'k_max': k_max, 'k_max_computed': k_max_computed, 'n_at_k_max': second_n,
    })
    report.elapsed = time.time() - start
    return report


# Constants feeding the reductions

@dataclass
class ConstantCheck:
    name: str
    lhs: str
    rhs: str
    passed: bool

    def to_record(self) -> Dict[str, Any]:
        return {'name': self.name, 'lhs': self.lhs, 'rhs': self.rhs, 'passed': self.passed}


def _phi_floor_check(tag: str, ctx: PrecisionContext, cache=None) -> ConstantCheck:
    k_min = SMALL_K_RANGE[tag][0]
    floor = PHI_FLOOR[tag]
    phi = dominant_root(k_min, ctx, cache)
    ok = with_escalation(lambda c: decide(phi.gt(floor), f"phi({k_min}) > {floor}"), ctx)
    return ConstantCheck(f"{tag}: phi({k_min}) > {floor}", phi.to_decimal(12), str(floor), ok)


def verify_reduction_constants(tag: str, ctx: Optional[PrecisionContext] = None, cache=None) -> List[ConstantCheck]:
    """Check that each A constant follows from its smoothing step.

    With |Lambda| < rhs / phi^w and |Lambda| < a, |log(1 + Lambda)| < c(a) rhs / phi^w,
    so A = log_bound / log phi works once c(a) rhs <= log_bound and phi > PHI_FLOOR.
    """
    check_tag(tag)
    ctx = ctx or PrecisionContext()
    checks = [_phi_floor_check(tag, ctx, cache)]
    with mp.workprec(BOUND_PREC):
        log_floor = mp.log(mp.mpf(PHI_FLOOR[tag].numerator) / PHI_FLOOR[tag].denominator)
        for stage in (1, 2):
            smoothing = REDUCTION_SMOOTHING[(tag, stage)]
            a = smoothing['a']
            scaled = log_smoothing_constant(a) * smoothing['rhs']
            log_bound = mp.mpf(smoothing['log_bound'].numerator) / smoothing['log_bound'].denominator
            checks.append(ConstantCheck(f"{tag} stage {stage}: c({decimal_string(a)}) * {smoothing['rhs']} <= log bound",
                                        mp.nstr(scaled, 10), mp.nstr(log_bound, 10), bool(scaled <= log_bound)))
            # |Gamma| < -log(1 - a) maps back to |e^Gamma - 1| < a with the same constant
            back = exp_smoothing_constant(-mp.log(1 - mp.mpf(a.numerator) / a.denominator))
            checks.append(ConstantCheck(f"{tag} stage {stage}: exp and log smoothing agree at {decimal_string(a)}",
                                        mp.nstr(back, 10), mp.nstr(log_smoothing_constant(a), 10),
                                        bool(abs(back - log_smoothing_constant(a)) < mp.mpf(10) ** -25)))
            a_constant = REDUCTION_A[(tag, stage)]
            ratio = log_bound / log_floor
            checks.append(ConstantCheck(f"{tag} stage {stage}: log bound / log {PHI_FLOOR[tag]} <= A",
                                        mp.nstr(ratio, 10), decimal_string(a_constant),
                                        bool(ratio <= mp.mpf(a_constant.numerator) / a_constant.denominator)))

    def large_k(c: PrecisionContext) -> ConstantCheck:
        consts = AlgebraicConstants.at(c)
        divisor = consts.log2 if tag == BALANCING else consts.log_gamma
        with c.activated():
            ratio = LARGE_K_FORM_BOUND / divisor
        ok = decide(ratio.le(LARGE_K_A[tag]), f"large-k A for {tag}")
        return ConstantCheck(f"{tag} large k: {LARGE_K_FORM_BOUND} / log {'2' if tag == BALANCING else 'gamma'} <= A",
                             ratio.to_decimal(10), decimal_string(LARGE_K_A[tag]), ok)

    checks.append(with_escalation(large_k, ctx))
    return checks


# Linear forms at known solutions

def linear_forms_at(tag: str, k: int, l: int, n: int, m: int, ctx: Optional[PrecisionContext] = None,
                    cache=None) -> Dict[str, ApproxReal]:
    """The three forms the reductions start from, evaluated at (l, k, n, m), each certified nonzero"""
    check_tag(tag)
    ctx = ctx or PrecisionContext()
    roots = RootConstants(k, cache)
    fm = kfib(k, m)

    def compute(c: PrecisionContext) -> Dict[str, ApproxReal]:
        consts = AlgebraicConstants.at(c)
        values = roots.at(c)
        phi, f_value = values['phi'], values['f']
        with c.activated():
            scale = 4 * consts.sqrt2 if tag == BALANCING else ApproxReal.exact(2)
            gamma_l = consts.gamma ** l
            forms = {
                'stage1': gamma_l / (scale * f_value * f_value * phi ** (n + m - 2)) - 1,
                'stage2': gamma_l / (scale * f_value * fm * phi ** (n - 1)) - 1,
                'large_k': gamma_l / (scale * Fraction(2) ** (n + m - 4)) - 1,
            }
        for name, value in forms.items():
            if value.touches_zero():
                raise PrecisionInsufficient(f"{name} form at l={l}, k={k}, n={n}, m={m} not separated from 0")
        return forms

    return with_escalation(compute, ctx)


def check_forms_nonvanishing(solutions: Iterable, ctx: Optional[PrecisionContext] = None,
                             cache=None) -> List[Dict[str, Any]]:
    """Records of every form value at each solution (objects with equation, k, l, n, m)"""
    records = []
    for rec in solutions:
        forms = linear_forms_at(rec.equation, rec.k, rec.l, rec.n, rec.m, ctx, cache)
        for name, value in forms.items():
            records.append({'equation': rec.equation, 'k': rec.k, 'l': rec.l, 'n': rec.n, 'm': rec.m,
                            'form': name, 'value': value.to_decimal(12), 'sign': value.sign()})
    return records
