#!/usr/bin/env python3

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .errors import DomainError, InvariantViolation, PrecisionInsufficient
from .numerics import PrecisionContext, RefinableReal, with_escalation


def rational_to_contfrac(value: Fraction) -> List[int]:
    """Partial quotients [a0, a1, ..., an] of an exact rational (Euclid)"""
    x, y = value.numerator, value.denominator
    quotients = []
    while y:
        a, r = divmod(x, y)
        quotients.append(a)
        x, y = y, r
    return quotients


def convergents_from_quotients(quotients: List[int]) -> List[Tuple[int, int]]:
    """[(p_0, q_0), (p_1, q_1), ...] from p_-1 = 1, q_-1 = 0, p_-2 = 0, q_-2 = 1"""
    p_prev, q_prev = 1, 0
    p_prev2, q_prev2 = 0, 1
    convergents = []
    for a in quotients:
        p, q = a * p_prev + p_prev2, a * q_prev + q_prev2
        convergents.append((p, q))
        p_prev2, q_prev2, p_prev, q_prev = p_prev, q_prev, p, q
    return convergents


def certified_prefix(lower: Fraction, upper: Fraction) -> List[int]:
    """Partial quotients shared by every real in [lower, upper].

    A quotient is accepted only if both endpoint expansions continue past
    it, so neither endpoint sits on the boundary of the cylinder set.
    """
    low_cf = rational_to_contfrac(lower)
    high_cf = rational_to_contfrac(upper)
    prefix = []
    for i, (a, b) in enumerate(zip(low_cf, high_cf)):
        if a != b or i + 1 >= len(low_cf) or i + 1 >= len(high_cf):
            break
        prefix.append(a)
    return prefix


@dataclass
class ContinuedFraction:
    source: str
    partial_quotients: List[int]
    convergents: List[Tuple[int, int]]
    bits: int = 0
    terminated: bool = False

    def __len__(self) -> int:
        return len(self.partial_quotients)

    def first_index_exceeding(self, bound: int) -> Optional[int]:
        """Smallest i with q_i > bound"""
        for i, (_, q) in enumerate(self.convergents):
            if q > bound:
                return i
        return None

    def check_determinant(self) -> bool:
        """p_i q_{i-1} - p_{i-1} q_i = (-1)^(i-1) for every i"""
        previous = (1, 0)
        for i, (p, q) in enumerate(self.convergents):
            if p * previous[1] - previous[0] * q != (-1) ** ((i - 1) % 2):
                return False
            previous = (p, q)
        return True

    def check_structure(self) -> None:
        if not self.check_determinant():
            raise InvariantViolation(f"convergent determinant identity fails for {self.source}")
        for i in range(1, len(self.partial_quotients)):
            if self.partial_quotients[i] < 1:
                raise InvariantViolation(f"a_{i} < 1 in the expansion of {self.source}")
        denominators = [q for _, q in self.convergents[1:]]
        if any(b <= a for a, b in zip(denominators, denominators[1:])):
            raise InvariantViolation(f"denominators not increasing for {self.source}")

    def as_records(self) -> List[dict]:
        return [
            {"index": i, "a": str(a), "p": str(p), "q": str(q)}
            for i, (a, (p, q)) in enumerate(zip(self.partial_quotients, self.convergents))
        ]


def _enough(quotients: List[int], min_denominator: Optional[int], count: Optional[int], extra: int) -> bool:
    if count is not None:
        return len(quotients) >= count
    convergents = convergents_from_quotients(quotients)
    for i, (_, q) in enumerate(convergents):
        if q > min_denominator:
            return len(quotients) >= i + 1 + extra
    return False


def _trim(quotients: List[int], min_denominator: Optional[int], count: Optional[int], extra: int) -> List[int]:
    if count is not None:
        return quotients[:count]
    convergents = convergents_from_quotients(quotients)
    for i, (_, q) in enumerate(convergents):
        if q > min_denominator:
            return quotients[:i + 1 + extra]
    return quotients


def cf_expand(x: RefinableReal, ctx: Optional[PrecisionContext] = None, *,
              min_denominator: Optional[int] = None, count: Optional[int] = None,
              extra: int = 0) -> ContinuedFraction:
    """Certified continued fraction of x.

    Stops once q_i > min_denominator (plus `extra` further terms) or after
    `count` terms. Exact rationals terminate with their full expansion.
    """
    if (min_denominator is None) == (count is None):
        raise DomainError("give exactly one of min_denominator or count")
    if count is not None and count < 1:
        raise DomainError(f"count must be positive, got {count}")
    if min_denominator is not None and min_denominator < 0:
        raise DomainError(f"min_denominator must be non-negative, got {min_denominator}")

    if x.exact is not None:
        quotients = _trim(rational_to_contfrac(x.exact), min_denominator, count, extra)
        expansion = ContinuedFraction(x.name, quotients, convergents_from_quotients(quotients),
                                      terminated=len(quotients) == len(rational_to_contfrac(x.exact)))
        expansion.check_structure()
        return expansion

    ctx = ctx or PrecisionContext()
    if min_denominator is not None:
        # each quotient costs about twice the bit length of its denominator
        ctx = ctx.at_least(2 * min_denominator.bit_length() + 8 * extra + 64)
    else:
        ctx = ctx.at_least(2 * count + 64)

    def compute(c: PrecisionContext) -> ContinuedFraction:
        enclosure = x(c)
        quotients = certified_prefix(enclosure.lower_fraction(), enclosure.upper_fraction())
        if not _enough(quotients, min_denominator, count, extra):
            raise PrecisionInsufficient(f"only {len(quotients)} certified quotients of {x.name}")
        quotients = _trim(quotients, min_denominator, count, extra)
        return ContinuedFraction(x.name, quotients, convergents_from_quotients(quotients), bits=c.working_bits)

    expansion = with_escalation(compute, ctx)
    expansion.check_structure()
    return expansion
