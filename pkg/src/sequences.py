#!/usr/bin/env python3
"""Balancing, Lucas-balancing and k-generalized Fibonacci numbers.

All values are exact Python integers. Real-valued companions (Binet
formulas, growth bounds, the Binet residual of F_n^(k)) are certified with
the interval arithmetic from numerics.
"""

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional

from .errors import DomainError, InvariantViolation
from .numerics import (
    AlgebraicConstants,
    ApproxReal,
    PrecisionContext,
    decide,
    dominant_root,
    f_k_at_root,
    with_escalation,
)


SEQUENCE_KINDS = ('balancing', 'lucas', 'kfib')


def _pell_like(l: int, first: int, second: int) -> int:
    if l < 0:
        raise DomainError(f"index must be non-negative, got {l}")
    previous, current = first, second
    if l == 0:
        return previous
    for _ in range(l - 1):
        previous, current = current, 6 * current - previous
    return current


def balancing(l: int) -> int:
    """B_l with B_0 = 0, B_1 = 1 and B_{l+1} = 6B_l - B_{l-1}"""
    return _pell_like(l, 0, 1)


def lucas_balancing(l: int) -> int:
    """C_l with C_0 = 1, C_1 = 3 and the same recurrence"""
    return _pell_like(l, 1, 3)


def balancing_terms(l_max: int) -> List[int]:
    """[B_0, ..., B_l_max]"""
    terms = [0, 1]
    while len(terms) <= l_max:
        terms.append(6 * terms[-1] - terms[-2])
    return terms[:l_max + 1]


def lucas_balancing_terms(l_max: int) -> List[int]:
    """[C_0, ..., C_l_max]"""
    terms = [1, 3]
    while len(terms) <= l_max:
        terms.append(6 * terms[-1] - terms[-2])
    return terms[:l_max + 1]


class SequenceWindow:
    """Sliding window over the last k terms of the k-Fibonacci sequence.

    Starts from the k-1 initial zeros F_{-(k-2)} .. F_0 followed by F_1 = 1,
    so the first call to advance() yields F_2.
    """

    def __init__(self, k: int):
        if k < 2:
            raise DomainError(f"k must be at least 2, got {k}")
        self.k = k
        self.values = deque([0] * (k - 1) + [1], maxlen=k)
        self.total = 1
        self.next_index = 2

    def advance(self) -> int:
        value = self.total
        self.total += value - self.values[0]
        self.values.append(value)
        self.next_index += 1
        return value


class KFibonacciTable:
    """Growable memo of F_0^(k), F_1^(k), ... for one k"""

    def __init__(self, k: int):
        self.k = k
        self._window = SequenceWindow(k)
        self._terms = [0, 1]

    def term(self, n: int) -> int:
        if n < -(self.k - 2):
            raise DomainError(f"F_{n}^({self.k}) is below the initial zeros")
        if n <= 0:
            return 0
        self.extend(n)
        return self._terms[n]

    def extend(self, n_max: int) -> None:
        while len(self._terms) <= n_max:
            self._terms.append(self._window.advance())

    def terms(self, n_max: int) -> List[int]:
        """[F_0, ..., F_n_max]"""
        self.extend(n_max)
        return self._terms[:n_max + 1]

    def __len__(self) -> int:
        return len(self._terms)


_tables: Dict[int, KFibonacciTable] = {}


def table_for(k: int) -> KFibonacciTable:
    """Process-local memo table for k"""
    if k not in _tables:
        _tables[k] = KFibonacciTable(k)
    return _tables[k]


def kfib(k: int, n: int) -> int:
    """F_n^(k): each term is the sum of the k preceding ones, F_1 = 1"""
    if k < 2:
        raise DomainError(f"k must be at least 2, got {k}")
    return table_for(k).term(n)


def balancing_binet(l: int, ctx: PrecisionContext) -> ApproxReal:
    """(gamma^l - delta^l) / (4 sqrt 2)"""
    consts = AlgebraicConstants.at(ctx)
    with ctx.activated():
        return (consts.gamma ** l - consts.delta ** l) / (4 * consts.sqrt2)


def lucas_balancing_binet(l: int, ctx: PrecisionContext) -> ApproxReal:
    """(gamma^l + delta^l) / 2"""
    consts = AlgebraicConstants.at(ctx)
    with ctx.activated():
        return (consts.gamma ** l + consts.delta ** l) / 2


def _binet_bits(ctx: PrecisionContext, n: int) -> PrecisionContext:
    # phi^(n-1) magnifies the root's error by roughly 2^n.
    return ctx.at_least(ctx.working_bits + n + 64)


def binet_residual(k: int, n: int, ctx: Optional[PrecisionContext] = None,
                   phi: Optional[ApproxReal] = None, f_value: Optional[ApproxReal] = None,
                   cache=None) -> ApproxReal:
    """Certified |F_n^(k) - f_k(phi) phi^(n-1)|, asserted below 1/2.

    phi and f_value may be passed in when evaluating a whole grid; they must
    then be accurate enough for the largest n of the grid.
    """
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    ctx = _binet_bits(ctx or PrecisionContext(), n)
    if phi is None:
        phi = dominant_root(k, ctx, cache)
    if f_value is None:
        f_value = f_k_at_root(k, phi, ctx)
    exact = kfib(k, n)

    def compute(c: PrecisionContext) -> ApproxReal:
        with c.activated():
            residual = abs(exact - f_value * phi ** (n - 1))
        if not decide(residual.lt(Fraction(1, 2)), f"residual for k={k}, n={n} vs 1/2"):
            raise InvariantViolation(f"Binet residual {residual.short()} not below 1/2", instance=f"k={k}, n={n}")
        return residual

    return with_escalation(compute, ctx)


def check_binet_grid(k_values: Iterable[int], n_max: int, ctx: Optional[PrecisionContext] = None,
                     cache=None) -> int:
    """Certify the Binet residual bound for every k in k_values and 1 <= n <= n_max"""
    ctx = _binet_bits(ctx or PrecisionContext(), n_max)
    checked = 0
    for k in k_values:
        phi = dominant_root(k, ctx, cache)
        f_value = f_k_at_root(k, phi, ctx)
        for n in range(1, n_max + 1):
            binet_residual(k, n, ctx, phi=phi, f_value=f_value)
            checked += 1
    return checked


@dataclass
class GrowthReport:
    kind: str
    k: Optional[int]
    checked: int = 0
    violations: List[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_growth_bounds(kind: str, index_range: Iterable[int], k: Optional[int] = None,
                        ctx: Optional[PrecisionContext] = None, cache=None) -> GrowthReport:
    """Certify the exponential sandwich bounds over a range of indices.

    balancing: gamma^(n-1) <= B_n <= gamma^n
    lucas:     gamma^n <= 2 C_n <= gamma^(n+1)
    kfib:      phi^(n-2) <= F_n^(k) <= phi^(n-1)
    """
    if kind not in SEQUENCE_KINDS:
        raise DomainError(f"unknown sequence kind {kind!r}")
    if kind == 'kfib' and (k is None or k < 2):
        raise DomainError("kfib growth bounds need k >= 2")
    indices = list(index_range)
    if any(n < 1 for n in indices):
        raise DomainError("growth bounds are stated for indices >= 1")
    report = GrowthReport(kind=kind, k=k if kind == 'kfib' else None)
    if not indices:
        return report
    base_ctx = (ctx or PrecisionContext()).at_least(max(indices) * 3 + 128)

    def compute(c: PrecisionContext) -> GrowthReport:
        result = GrowthReport(kind=report.kind, k=report.k)
        if kind == 'kfib':
            base = dominant_root(k, c, cache)
            low_shift, high_shift = -2, -1
        else:
            base = AlgebraicConstants.at(c).gamma
            low_shift, high_shift = (-1, 0) if kind == 'balancing' else (0, 1)
        with c.activated():
            for n in indices:
                if kind == 'balancing':
                    value = balancing(n)
                elif kind == 'lucas':
                    value = 2 * lucas_balancing(n)
                else:
                    value = kfib(k, n)
                low = base ** (n + low_shift)
                high = base ** (n + high_shift)
                ok_low = decide(low.le(value), f"{kind} lower bound at n={n}")
                ok_high = decide(high.ge(value), f"{kind} upper bound at n={n}")
                result.checked += 1
                if not (ok_low and ok_high):
                    result.violations.append(n)
        return result

    return with_escalation(compute, base_ctx)


def xi_deviation(k: int, n: int) -> Fraction:
    """Exact |F_n^(k) / 2^(n-2) - 1|, asserted below 2^(-k/2)"""
    if n < k + 2:
        raise DomainError(f"xi deviation needs n >= k + 2, got k={k}, n={n}")
    xi = abs(Fraction(kfib(k, n), 2 ** (n - 2)) - 1)
    # xi < 2^(-k/2)  <=>  xi^2 < 2^(-k)
    if not xi * xi < Fraction(1, 2 ** k):
        raise InvariantViolation(f"|xi| = {xi} not below 2^(-{k}/2)", instance=f"k={k}, n={n}")
    return xi


@dataclass
class IdentityReport:
    checks: Dict[str, int] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, name: str, ok: bool, detail: str) -> None:
        self.checks[name] = self.checks.get(name, 0) + 1
        if not ok:
            self.violations.append(f"{name}: {detail}")


def _classical_fibonacci(n_max: int) -> List[int]:
    values = [0, 1]
    while len(values) <= n_max:
        values.append(values[-1] + values[-2])
    return values


def verify_sequence_identities(l_max: int = 2000, k_max: int = 600, fib_n_max: int = 300,
                               binet_l_max: int = 500, binet_bits: int = 256) -> IdentityReport:
    """Exact identity suite for the three sequences plus the Binet containment check"""
    report = IdentityReport()
    b_terms = balancing_terms(l_max)
    c_terms = lucas_balancing_terms(l_max)

    for l in range(l_max + 1):
        report.record('perfect_square', 8 * b_terms[l] ** 2 + 1 == c_terms[l] ** 2, f"l={l}")
    for l in range(1, l_max):
        report.record('shared_recurrence',
                      b_terms[l + 1] == 6 * b_terms[l] - b_terms[l - 1]
                      and c_terms[l + 1] == 6 * c_terms[l] - c_terms[l - 1],
                      f"l={l}")

    for k in range(2, k_max + 1):
        terms = KFibonacciTable(k).terms(k + 2)
        prefix_ok = all(terms[n] == 2 ** (n - 2) for n in range(2, k + 2))
        report.record('power_of_two_prefix', prefix_ok, f"k={k}")
        report.record('mersenne_term', terms[k + 2] == 2 ** k - 1, f"k={k}")

    fib = _classical_fibonacci(fib_n_max)
    fib2 = KFibonacciTable(2).terms(fib_n_max)
    for n in range(fib_n_max + 1):
        report.record('classical_fibonacci', fib2[n] == fib[n], f"n={n}")

    ctx = PrecisionContext(working_bits=binet_bits)
    for l in range(binet_l_max + 1):
        report.record('balancing_binet', balancing_binet(l, ctx).contains(b_terms[l]), f"l={l}")
        report.record('lucas_binet', lucas_balancing_binet(l, ctx).contains(c_terms[l]), f"l={l}")
    return report
