#!/usr/bin/env python3
"""Bound calculators: linear forms in logarithms and the bounds derived from them.

The packaged constants (5.1e31 and 3.28e32 for n versus k, 1.1e13 and
8.52e10 for k versus log n) are what the campaigns consume. chain_n_bound()
and large_k_log_coefficient() recompute them from the raw lower bound so the
packaged values can be checked rather than trusted.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

from mpmath import iv, mp

from .errors import DomainError, PreconditionError
from .numerics import ApproxReal, PrecisionContext, decide, with_escalation


BALANCING = 'balancing'
LUCAS = 'lucas'
THEOREM_TAGS = (BALANCING, LUCAS)

BOUND_PREC = 113

# n < c * k^8 * log^5 k
N_BOUND_COEFFICIENT = {
    BALANCING: 51 * 10 ** 30,
    LUCAS: 328 * 10 ** 30,
}
N_BOUND_MIN_K = {BALANCING: 3, LUCAS: 2}

# k < c * log n for solutions with large k
LARGE_K_LOG_COEFFICIENT = {
    BALANCING: Fraction('1.1e13'),
    LUCAS: Fraction('8.52e10'),
}
# log n < c * log k, from the n bound
LOG_N_SLACK = {BALANCING: 75, LUCAS: 114}
LARGE_K_PUBLISHED = {
    BALANCING: {'k': Fraction('5.7e16'), 'n': Fraction('4.86e173')},
    LUCAS: {'k': Fraction('5.82e14'), 'n': Fraction('1.97e158')},
}


def check_tag(tag: str) -> str:
    if tag not in THEOREM_TAGS:
        raise DomainError(f"unknown theorem tag {tag!r}, expected one of {THEOREM_TAGS}")
    return tag


def _mp(value) -> mp.mpf:
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / value.denominator
    return mp.mpf(value)


@dataclass(frozen=True)
class MatveevInstance:
    """s positive real algebraic numbers in a field of degree `degree`"""

    s: int
    degree: int
    b_list: Sequence
    d_cap: object

    def __post_init__(self):
        if self.s < 1 or self.degree < 1:
            raise DomainError(f"s and degree must be positive, got s={self.s}, degree={self.degree}")
        if len(self.b_list) != self.s:
            raise DomainError(f"expected {self.s} B_j values, got {len(self.b_list)}")
        for b in self.b_list:
            if not _mp(b) >= mp.mpf('0.16') - mp.mpf(10) ** -12:
                raise DomainError(f"B_j = {b} is below 0.16")
        if not _mp(self.d_cap) >= 1:
            raise DomainError(f"D must be at least 1, got {self.d_cap}")


def matveev_constant(s: int) -> mp.mpf:
    """1.4 * 30^(s+3) * s^4.5"""
    with mp.workprec(BOUND_PREC):
        return mp.mpf('1.4') * mp.mpf(30) ** (s + 3) * mp.mpf(s) ** mp.mpf('4.5')


def matveev_prefactor(s: int, degree: int, b_list: Sequence) -> mp.mpf:
    """Everything in the lower bound except the (1 + log D) factor"""
    with mp.workprec(BOUND_PREC):
        d = mp.mpf(degree)
        value = matveev_constant(s) * d ** 2 * (1 + mp.log(d))
        for b in b_list:
            value *= _mp(b)
        return value


def matveev_lower_bound(inst: MatveevInstance) -> mp.mpf:
    """Upper bound on -log|Lambda| for a nonzero linear form"""
    with mp.workprec(BOUND_PREC):
        return matveev_prefactor(inst.s, inst.degree, inst.b_list) * (1 + mp.log(_mp(inst.d_cap)))


def l_upper_bound(tag: str, n: int) -> int:
    """Largest l allowed by l < 0.8n + 0.2 (balancing) or l < 0.8n - 0.4 (lucas)"""
    check_tag(tag)
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    offset = Fraction(1, 5) if tag == BALANCING else Fraction(-2, 5)
    return int((Fraction(4, 5) * n + offset) // 1)


def sanchez_bound(m: int, S) -> mp.mpf:
    """If x / (log x)^m < S then x < 2^m S (log S)^m, valid for S >= (4m^2)^m"""
    if m < 1:
        raise DomainError(f"m must be at least 1, got {m}")
    with mp.workprec(BOUND_PREC):
        s_value = _mp(S)
        if s_value < mp.mpf(4 * m * m) ** m:
            raise PreconditionError(f"S = {mp.nstr(s_value, 8)} is below (4m^2)^m = {(4 * m * m) ** m}")
        return mp.mpf(2) ** m * s_value * mp.log(s_value) ** m


def log_smoothing_constant(a) -> mp.mpf:
    """c(a) = -log(1 - a)/a, so |log(1 + x)| < c(a)|x| whenever |x| < a"""
    with mp.workprec(BOUND_PREC):
        a = _mp(a)
        if not 0 < a < 1:
            raise DomainError(f"a must lie in (0, 1), got {a}")
        return -mp.log(1 - a) / a


def exp_smoothing_constant(a) -> mp.mpf:
    """a / (1 - e^-a), so |e^x - 1| < that * |x| whenever |x| < a"""
    with mp.workprec(BOUND_PREC):
        a = _mp(a)
        if not a > 0:
            raise DomainError(f"a must be positive, got {a}")
        return a / (1 - mp.exp(-a))


def derive_n_bound(tag: str, k: int, ctx: Optional[PrecisionContext] = None) -> int:
    """M_k = floor(c * k^8 * log^5 k), with the floor certified"""
    check_tag(tag)
    if k < N_BOUND_MIN_K[tag]:
        raise PreconditionError(f"{tag} n bound is stated for k >= {N_BOUND_MIN_K[tag]}, got {k}")
    coefficient = N_BOUND_COEFFICIENT[tag]

    def compute(c: PrecisionContext) -> int:
        with c.activated():
            log_k = ApproxReal(iv.log(k))
            return (coefficient * k ** 8 * log_k ** 5).floor()

    return with_escalation(compute, ctx or PrecisionContext())


def n_bound_value(tag: str, k) -> mp.mpf:
    """c * k^8 * log^5 k for a real k, used with the large-k caps"""
    with mp.workprec(BOUND_PREC):
        k = _mp(k)
        return mp.mpf(N_BOUND_COEFFICIENT[check_tag(tag)]) * k ** 8 * mp.log(k) ** 5


@dataclass(frozen=True)
class HeightBudget:
    k: int
    h_eta3_bound: mp.mpf
    which_theorem: str


def height_budget(tag: str, k: int) -> HeightBudget:
    """Height bound of the third algebraic number in the first lower-bound application"""
    check_tag(tag)
    with mp.workprec(BOUND_PREC):
        coefficient = mp.mpf('6.7') if tag == BALANCING else mp.mpf('8.2')
        return HeightBudget(k=k, h_eta3_bound=coefficient * mp.log(k), which_theorem=tag)


# Slack facts

def _log(x) -> ApproxReal:
    return ApproxReal(iv.log(iv.mpf(x)))


def _const(text: str) -> ApproxReal:
    return ApproxReal.exact(Fraction(text))


@dataclass(frozen=True)
class SlackFact:
    """lhs(x) < rhs_coef * log x for every integer x >= start.

    lhs grows at most like log_coef * log x + loglog_coef * log log x, which
    lets a single certified evaluation at `start` cover the whole range.
    """

    name: str
    tags: tuple
    start: int
    lhs: Callable[[int], ApproxReal]
    rhs_coef: Fraction
    log_coef: Fraction
    loglog_coef: Fraction = Fraction(0)

    def margin(self, x: int) -> ApproxReal:
        return self.rhs_coef * _log(x) - self.lhs(x)

    def holds_at(self, x: int) -> bool:
        return decide(self.margin(x).gt(0), f"{self.name} at {x}")

    def increasing_from_start(self) -> bool:
        """(rhs_coef - log_coef) log start > loglog_coef makes the margin increasing"""
        return decide(((self.rhs_coef - self.log_coef) * _log(self.start)).gt(self.loglog_coef),
                      f"{self.name} monotonicity")


SLACK_FACTS = (
    SlackFact('1 + log 2k < 2.6 log k', (BALANCING,), 3,
              lambda k: 1 + _log(2 * k), Fraction('2.6'), Fraction(1)),
    SlackFact('1 + log 2n < 2.1 log n', (BALANCING,), 5,
              lambda n: 1 + _log(2 * n), Fraction('2.1'), Fraction(1)),
    SlackFact('1 + log n < 1.7 log n', (BALANCING,), 5,
              lambda n: 1 + _log(n), Fraction('1.7'), Fraction(1)),
    SlackFact('2(log(k+1) + log 4) + log 32 / 2 < 6.7 log k', (BALANCING,), 3,
              lambda k: 2 * (_log(k + 1) + _log(4)) + _log(32) / 2, Fraction('6.7'), Fraction(2)),
    SlackFact('63.23 + 8 log k + 3 log log k < 66 log k', (BALANCING,), 3,
              lambda k: _const('63.23') + 8 * _log(k) + 3 * log_of_interval(_log(k)),
              Fraction(66), Fraction(8), Fraction(3)),
    SlackFact('73.01 + 8 log k + 5 log log k < 75 log k', (BALANCING,), 3,
              lambda k: _const('73.01') + 8 * _log(k) + 5 * log_of_interval(_log(k)),
              Fraction(75), Fraction(8), Fraction(5)),
    SlackFact('1 + log 2k < 3.5 log k', (LUCAS,), 2,
              lambda k: 1 + _log(2 * k), Fraction('3.5'), Fraction(1)),
    SlackFact('1 + log 2n < 2.3 log n', (LUCAS,), 4,
              lambda n: 1 + _log(2 * n), Fraction('2.3'), Fraction(1)),
    SlackFact('1 + log n < 1.8 log n', (LUCAS,), 4,
              lambda n: 1 + _log(n), Fraction('1.8'), Fraction(1)),
    SlackFact('2(log(k+1) + log 4) + log 2 < 8.2 log k', (LUCAS,), 2,
              lambda k: 2 * (_log(k + 1) + _log(4)) + _log(2), Fraction('8.2'), Fraction(2)),
    SlackFact('64.27 + 8 log k + 3 log log k < 100 log k', (LUCAS,), 2,
              lambda k: _const('64.27') + 8 * _log(k) + 3 * log_of_interval(_log(k)),
              Fraction(100), Fraction(8), Fraction(3)),
    SlackFact('74.87 + 8 log k + 5 log log k < 114 log k', (LUCAS,), 2,
              lambda k: _const('74.87') + 8 * _log(k) + 5 * log_of_interval(_log(k)),
              Fraction(114), Fraction(8), Fraction(5)),
)


def log_of_interval(x: ApproxReal) -> ApproxReal:
    """log of a positive interval; log log k for k = 2 is negative, which is fine"""
    return ApproxReal(iv.log(x.interval))


@dataclass
class SlackResult:
    name: str
    start: int
    scanned_to: int
    holds: bool
    first_failure: Optional[int] = None


def verify_slack_facts(tag: str, scan_to: int = 2000, ctx: Optional[PrecisionContext] = None) -> List[SlackResult]:
    """Certify each slack fact at its start, its monotonicity, and scan it up to scan_to"""
    check_tag(tag)
    ctx = ctx or PrecisionContext()
    results = []
    for fact in SLACK_FACTS:
        if tag not in fact.tags:
            continue

        def compute(c: PrecisionContext, fact=fact) -> SlackResult:
            with c.activated():
                result = SlackResult(fact.name, fact.start, scan_to, holds=fact.increasing_from_start())
                for x in range(fact.start, max(scan_to, fact.start) + 1):
                    if not fact.holds_at(x):
                        result.holds = False
                        result.first_failure = x
                        break
                return result

        results.append(with_escalation(compute, ctx))
    return results


# The n-versus-k chain recomputed from raw constants

@dataclass
class NBoundChain:
    tag: str
    k: int
    matveev_constant: mp.mpf
    first_coefficient: mp.mpf
    height_coefficient: mp.mpf
    second_coefficient: mp.mpf
    sanchez_s: mp.mpf
    n_bound: mp.mpf
    packaged_bound: mp.mpf
    steps: Dict[str, str] = field(default_factory=dict)

    @property
    def ratio(self) -> mp.mpf:
        return self.n_bound / self.packaged_bound


_CHAIN_PARAMETERS = {
    # target constant in the first lower form: 4 sqrt 2 for balancing, 2 for lucas
    BALANCING: {
        'log_k_slack': Fraction('2.6'), 'log_2n_slack': Fraction('2.1'),
        'log_n_slack': Fraction('1.7'), 'first_rhs': 6, 'second_rhs': 3, 'n_min': 5,
        'height_extra': lambda k: mp.log(k + 1) + mp.log(4) + mp.log(32) / 2 + mp.log(2),
    },
    LUCAS: {
        'log_k_slack': Fraction('3.5'), 'log_2n_slack': Fraction('2.3'),
        'log_n_slack': Fraction('1.8'), 'first_rhs': 5, 'second_rhs': 2, 'n_min': 4,
        'height_extra': lambda k: mp.log(k + 1) + mp.log(4) + 2 * mp.log(2),
    },
}


def chain_n_bound(tag: str, k: int) -> NBoundChain:
    """Recompute the n < c k^8 log^5 k bound at a given k.

    First application: |Lambda| < rhs / phi^(m-1) against the lower bound with
    B = (k log gamma, 2 log 2, 2k * h3) and D = 2n gives
    (m - 1) log phi < C1 k^4 log^2 k log n. Second application feeds C1 into
    the height of the third number, D = n, and ends at n / log^2 n < S, which
    the Sanchez bound with m = 2 turns into an explicit bound.
    """
    check_tag(tag)
    if k < N_BOUND_MIN_K[tag]:
        raise PreconditionError(f"{tag} chain is stated for k >= {N_BOUND_MIN_K[tag]}, got {k}")
    p = _CHAIN_PARAMETERS[tag]
    with mp.workprec(BOUND_PREC):
        log_gamma = mp.log(3 + 2 * mp.sqrt(2))
        log2 = mp.log(2)
        log_k = mp.log(k)
        h3_coef = height_budget(tag, k).h_eta3_bound / log_k
        n_min = p['n_min']
        # every term absorbed into a coefficient is divided by its smallest cofactor
        k_factor = mp.mpf(k) ** 4 * log_k ** 2 * mp.log(n_min)
        phi_low = 2 * (1 - mp.mpf(2) ** -k)

        constant = matveev_constant(3)
        per_degree = constant * 4  # (2k)^2 / k^2
        first = per_degree * log_gamma * (2 * log2) * (2 * h3_coef)
        first *= _mp(p['log_k_slack']) * _mp(p['log_2n_slack'])
        first += mp.log(p['first_rhs']) / k_factor

        height = first + p['height_extra'](k) / k_factor
        b3 = 2 * height  # B_3 = 2k h(eta_3), the extra k moves into k^5

        second = per_degree * log_gamma * (2 * log2) * b3
        second *= _mp(p['log_k_slack']) * _mp(p['log_n_slack'])
        second_k_factor = mp.mpf(k) ** 8 * log_k ** 3 * mp.log(n_min) ** 2
        second = (second + mp.log(p['second_rhs']) / second_k_factor) / mp.log(phi_low)
        second += 1 / second_k_factor

        s_value = second * mp.mpf(k) ** 8 * log_k ** 3
        n_bound = sanchez_bound(2, s_value)
        packaged = mp.mpf(N_BOUND_COEFFICIENT[tag]) * mp.mpf(k) ** 8 * log_k ** 5
        chain = NBoundChain(
            tag=tag, k=k, matveev_constant=constant, first_coefficient=first,
            height_coefficient=height, second_coefficient=second,
            sanchez_s=s_value, n_bound=n_bound, packaged_bound=packaged,
        )
        chain.steps = {
            'matveev_constant': mp.nstr(constant, 8),
            'm_minus_1_log_phi_coefficient': mp.nstr(first, 8),
            'eta3_height_coefficient': mp.nstr(height, 8),
            'n_over_log2_n_coefficient': mp.nstr(second, 8),
            'S': mp.nstr(s_value, 8),
            'n_bound': mp.nstr(n_bound, 8),
            'packaged_bound': mp.nstr(packaged, 8),
        }
        return chain


def large_k_log_coefficient(tag: str) -> mp.mpf:
    """c with k < c log n when k exceeds the small-k range.

    The form is gamma^l 2^-(m+n-2) sqrt(2)^-1 - 1 (balancing, three numbers)
    or gamma^l 2^-(m+n-3) - 1 (lucas, two numbers) over Q(sqrt 2), bounded
    above by 4 / 2^(k/2).
    """
    check_tag(tag)
    with mp.workprec(BOUND_PREC):
        log_gamma = mp.log(3 + 2 * mp.sqrt(2))
        log2 = mp.log(2)
        if tag == BALANCING:
            b_list = [log_gamma, 2 * log2, log2]
            slack, n_min = mp.mpf('2.1'), 5
        else:
            b_list = [log_gamma, 2 * log2]
            slack, n_min = mp.mpf('2.3'), 4
        # D = 2n contributes (1 + log 2n) < slack * log n
        unit = matveev_prefactor(len(b_list), 2, b_list)
        per_log_n = unit * slack
        # (k/2) log 2 - log 4 < per_log_n log n
        return 2 * (per_log_n + mp.log(4) / mp.log(n_min)) / log2


@dataclass
class LargeKBounds:
    tag: str
    log_coefficient: mp.mpf
    k_over_log_k: mp.mpf
    k_cap: mp.mpf
    n_cap: mp.mpf
    published_k: Fraction
    published_n: Fraction

    @property
    def within_published(self) -> bool:
        return self.k_cap <= _mp(self.published_k) and self.n_cap <= _mp(self.published_n)


def large_k_initial_bounds(tag: str) -> LargeKBounds:
    """k < c log n together with log n < s log k, closed with the Sanchez bound (m = 1)"""
    check_tag(tag)
    with mp.workprec(BOUND_PREC):
        coefficient = _mp(LARGE_K_LOG_COEFFICIENT[tag])
        k_over_log_k = coefficient * LOG_N_SLACK[tag]
        k_cap = sanchez_bound(1, k_over_log_k)
        n_cap = n_bound_value(tag, k_cap)
        return LargeKBounds(
            tag=tag, log_coefficient=coefficient, k_over_log_k=k_over_log_k,
            k_cap=k_cap, n_cap=n_cap,
            published_k=LARGE_K_PUBLISHED[tag]['k'], published_n=LARGE_K_PUBLISHED[tag]['n'],
        )


def n_bound_after_k_cap(tag: str, k_cap: int, ctx: Optional[PrecisionContext] = None) -> int:
    """Certified floor of the n bound once k <= k_cap is known"""
    return derive_n_bound(tag, k_cap, ctx)
