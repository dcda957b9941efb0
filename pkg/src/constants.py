#!/usr/bin/env python3
"""Named real constants and the published figures the reproduction is checked against.

resolve_spec() turns the JSON constant specs accepted by the `cf` and
`reduce` commands into RefinableReal values:

    {"kind": "rational", "value": "1/3"}
    {"kind": "sqrt", "value": 2}
    {"kind": "golden_ratio"}
    {"kind": "phi", "k": 5}
    {"kind": "log_ratio", "num": "gamma", "den": "phi", "k": 5}
    {"kind": "thm_tau", "k": 5}
    {"kind": "thm_mu", "theorem": 1, "stage": 2, "k": 5, "m": 3}
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Optional, Union

from mpmath import iv

from .errors import ConfigError, DomainError
from .linforms import BALANCING, LUCAS
from .numerics import (
    AlgebraicConstants,
    ApproxReal,
    PrecisionContext,
    RefinableReal,
    dominant_root,
    f_k_at_root,
    log_of,
    sqrt_of,
)
from .sequences import kfib


THEOREM_TAG = {1: BALANCING, 2: LUCAS}


@dataclass(frozen=True)
class PublishedValue:
    label: str
    value: Fraction
    description: str
    tolerance: str = 'ceiling'
    text: str = ''

    def accepts(self, computed: Fraction) -> bool:
        """ceiling: computed <= value; exact: equal; rel:x: within x * value; info: reported only"""
        if self.tolerance == 'info':
            return True
        if self.tolerance == 'ceiling':
            return computed <= self.value
        if self.tolerance == 'exact':
            return computed == self.value
        if self.tolerance.startswith('rel:'):
            return abs(computed - self.value) <= Fraction(self.tolerance[4:]) * abs(self.value)
        raise ConfigError(f"unknown tolerance {self.tolerance!r} for {self.label}")


def _published(label: str, value: str, description: str, tolerance: str = 'ceiling') -> PublishedValue:
    return PublishedValue(label, Fraction(value), description, tolerance, text=value)


PUBLISHED = {
    item.label: item for item in (
        _published('thm1.small.stage1', '442.771', 'max log(Aq/eps)/log B over k in [3, 450], bounds m - 1', 'info'),
        _published('thm1.small.stage2', '408.668', 'max over (k, m) in [3, 450] x [1, 443], bounds n - 1', 'info'),
        _published('thm1.small.m_max', '443', 'm bound for 3 <= k <= 450'),
        _published('thm1.small.n_max', '409', 'n bound for 3 <= k <= 450'),
        _published('thm1.small.l_max', '327', 'l bound for 3 <= k <= 450'),
        _published('thm2.small.stage1', '553.311', 'max over k in [2, 500], bounds m - 1', 'info'),
        _published('thm2.small.stage2', '567.728', 'max over (k, m) in [2, 500] x [1, 554], bounds n - 1', 'info'),
        _published('thm2.small.m_max', '554', 'm bound for 2 <= k <= 500'),
        _published('thm2.small.n_max', '568', 'n bound for 2 <= k <= 500'),
        _published('thm2.small.l_max', '454', 'l bound for 2 <= k <= 500'),
        _published('thm1.large.initial_m', '9.72e173', 'M for the first large-k reduction'),
        _published('thm1.large.half_k', '590', 'ceiling on k/2 from the first large-k reduction'),
        _published('thm1.large.k_max', '1180', 'k bound after the first large-k reduction'),
        _published('thm1.large.n_at_k_max', '3.4e60', 'n bound at k = 1180'),
        _published('thm1.large.second_m', '6.8e60', 'M for the second large-k reduction'),
        _published('thm1.large.second_k', '420', 'k bound after the second large-k reduction', 'info'),
        _published('thm1.large.closing_k', '450', 'second-pass k bound must fall below the small-k range'),
        _published('thm2.large.initial_m', '3.94e158', 'M for the first large-k Legendre step'),
        _published('thm2.large.a_max', '4008', 'max partial quotient of log 2/log gamma through q_N > M', 'exact'),
        _published('thm2.large.n_index', '302', '1-based N with q_(N-1) < M < q_N', 'exact'),
        _published('thm2.large.half_k', '541', 'ceiling on k/2 from the Legendre step'),
        _published('thm2.large.k_max', '1082', 'k bound after the Legendre step'),
        _published('thm2.large.n_at_k_max', '1.1e61', 'n bound at k = 1082'),
        _published('thm2.large.second_m', '2.2e61', 'M for the second Legendre step'),
        _published('thm2.large.second_k', '430', 'k bound after the second Legendre step', 'info'),
        _published('thm2.large.closing_k', '500', 'second-pass k bound must fall below the small-k range'),
        _published('matveev.s3', '1.432e11', 'lower-bound constant for three logarithms', 'rel:1e-3'),
        _published('thm1.large.log_coefficient', '1.1e13', 'k < c log n for large k'),
        _published('thm2.large.log_coefficient', '8.52e10', 'k < c log n for large k'),
    )
}

# The reduction targets: A constants and where the smoothing argument starts
SMALL_K_RANGE = {BALANCING: (3, 450), LUCAS: (2, 500)}
REDUCTION_A = {
    (BALANCING, 1): Fraction('17.2'),
    (BALANCING, 2): Fraction('21.45'),
    (LUCAS, 1): Fraction('49.23'),
    (LUCAS, 2): Fraction('12.26'),
}
# Lambda < rhs / B^w with |Lambda| < a for the smoothing constant
REDUCTION_SMOOTHING = {
    (BALANCING, 1): {'a': Fraction('0.64'), 'rhs': 6, 'log_bound': Fraction('9.6')},
    (BALANCING, 2): {'a': Fraction('0.98'), 'rhs': 3, 'log_bound': Fraction(12)},
    (LUCAS, 1): {'a': Fraction('0.98'), 'rhs': 5, 'log_bound': Fraction('19.96')},
    (LUCAS, 2): {'a': Fraction('0.89'), 'rhs': 2, 'log_bound': Fraction('4.97')},
}


def published(label: str) -> PublishedValue:
    if label not in PUBLISHED:
        raise ConfigError(f"unknown published value {label!r}")
    return PUBLISHED[label]


class RootConstants:
    """phi(k), f_k(phi) and their logarithms for one k, memoized per precision"""

    def __init__(self, k: int, cache=None):
        if k < 2:
            raise DomainError(f"k must be at least 2, got {k}")
        self.k = k
        self.cache = cache
        self._memo: Dict[int, Dict[str, ApproxReal]] = {}

    def at(self, ctx: PrecisionContext) -> Dict[str, ApproxReal]:
        if ctx.working_bits not in self._memo:
            phi = dominant_root(self.k, ctx, self.cache)
            f_value = f_k_at_root(self.k, phi, ctx)
            with ctx.activated():
                self._memo[ctx.working_bits] = {
                    'phi': phi,
                    'f': f_value,
                    'log_phi': log_of(phi),
                    'log_f': log_of(f_value),
                }
        return self._memo[ctx.working_bits]

    def phi(self) -> RefinableReal:
        return RefinableReal(f"phi({self.k})", lambda ctx: self.at(ctx)['phi'])

    def tau(self) -> RefinableReal:
        """log gamma / log phi"""
        def compute(ctx: PrecisionContext) -> ApproxReal:
            return AlgebraicConstants.at(ctx).log_gamma / self.at(ctx)['log_phi']
        return RefinableReal(f"log(gamma)/log(phi({self.k}))", compute)

    def mu(self, tag: str, stage: int, m: Optional[int] = None) -> RefinableReal:
        """Shift of the first (stage 1) or second (stage 2) reduced inequality"""
        if stage not in (1, 2):
            raise DomainError(f"stage must be 1 or 2, got {stage}")
        if stage == 2 and (m is None or m < 1):
            raise DomainError("stage 2 needs m >= 1")
        fm = kfib(self.k, m) if stage == 2 else None

        def compute(ctx: PrecisionContext) -> ApproxReal:
            values = self.at(ctx)
            log_scale = target_log_scale(tag, ctx)
            if stage == 1:
                return 2 + (-2 * values['log_f'] - log_scale) / values['log_phi']
            log_fm = log_of(ApproxReal.exact(fm))
            return 1 + (-values['log_f'] - log_scale - log_fm) / values['log_phi']

        suffix = '' if stage == 1 else f", m={m}"
        return RefinableReal(f"mu[{tag}, stage {stage}, k={self.k}{suffix}]", compute)


def target_log_scale(tag: str, ctx: PrecisionContext) -> ApproxReal:
    """log(4 sqrt 2) for the balancing equation, log 2 for the Lucas one"""
    consts = AlgebraicConstants.at(ctx)
    if tag == BALANCING:
        return 5 * consts.log2 / 2
    if tag == LUCAS:
        return consts.log2
    raise DomainError(f"unknown theorem tag {tag!r}")


def log_gamma_over_log2() -> RefinableReal:
    return RefinableReal('log(gamma)/log(2)', lambda ctx: AlgebraicConstants.at(ctx).log_gamma / AlgebraicConstants.at(ctx).log2)


def log2_over_log_gamma() -> RefinableReal:
    return RefinableReal('log(2)/log(gamma)', lambda ctx: AlgebraicConstants.at(ctx).log2 / AlgebraicConstants.at(ctx).log_gamma)


def golden_ratio() -> RefinableReal:
    return RefinableReal('(1+sqrt(5))/2', lambda ctx: (1 + ApproxReal(iv.sqrt(5))) / 2)


def _named_log(name: str, ctx: PrecisionContext, k: Optional[int], cache) -> ApproxReal:
    consts = AlgebraicConstants.at(ctx)
    if name == 'gamma':
        return consts.log_gamma
    if name == 'delta':
        return consts.log_delta
    if name == 'sqrt2':
        return consts.log_sqrt2
    if name == 'phi':
        if k is None:
            raise ConfigError("log of phi needs k")
        return log_of(dominant_root(k, ctx, cache))
    try:
        value = Fraction(name)
    except ValueError:
        raise ConfigError(f"unknown constant name {name!r}")
    if value <= 0:
        raise ConfigError(f"log of non-positive constant {name!r}")
    return log_of(ApproxReal.exact(value))


def _as_fraction(value: Union[int, float, str]) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"not a rational number: {value!r} ({e})")


def resolve_spec(spec: Union[Dict[str, Any], int, float, str], cache=None) -> RefinableReal:
    """Build a RefinableReal from a JSON constant spec; bare numbers are exact rationals"""
    if not isinstance(spec, dict):
        return RefinableReal.rational(_as_fraction(spec))
    kind = spec.get('kind')
    k = spec.get('k')
    if k is not None:
        k = int(k)
    if kind == 'rational':
        return RefinableReal.rational(_as_fraction(spec.get('value')))
    if kind == 'sqrt':
        radicand = _as_fraction(spec.get('value'))
        if radicand < 0:
            raise ConfigError(f"square root of negative value {radicand}")
        root = Fraction(math.isqrt(radicand.numerator), math.isqrt(radicand.denominator))
        if root * root == radicand:
            return RefinableReal.rational(root)
        return RefinableReal(f"sqrt({radicand})", lambda ctx: sqrt_of(ApproxReal.exact(radicand)))
    if kind == 'golden_ratio':
        return golden_ratio()
    if kind == 'phi':
        return RootConstants(k, cache).phi()
    if kind == 'log_ratio':
        num, den = str(spec.get('num')), str(spec.get('den'))
        return RefinableReal(
            f"log({num})/log({den})",
            lambda ctx: _named_log(num, ctx, k, cache) / _named_log(den, ctx, k, cache),
        )
    if kind == 'thm_tau':
        return RootConstants(k, cache).tau()
    if kind == 'thm_mu':
        theorem = int(spec.get('theorem', 1))
        if theorem not in THEOREM_TAG:
            raise ConfigError(f"theorem must be 1 or 2, got {theorem}")
        m = spec.get('m')
        return RootConstants(k, cache).mu(THEOREM_TAG[theorem], int(spec.get('stage', 1)),
                                          int(m) if m is not None else None)
    raise ConfigError(f"unknown constant kind {kind!r}")
