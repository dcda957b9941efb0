#!/usr/bin/env python3
"""Reduction of linear-form bounds with continued fractions.

dujella_petho_reduce() bounds w in 0 < |u tau - v + mu| < A B^-w for u <= M
using a convergent p/q of tau with q > 6M and
eps = ||mu q|| - M ||tau q||. When mu is an integer combination of 1 and
tau, eps cannot be positive and legendre_bound() is used instead.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .continued_fraction import ContinuedFraction, cf_expand
from .errors import DomainError, PrecisionInsufficient
from .numerics import (
    ApproxReal,
    PrecisionContext,
    RefinableReal,
    decide,
    log_of,
    nearest_int_distance,
    with_escalation,
)


REDUCED = 'Reduced'
EPSILON_FAILED = 'EpsilonFailed'
LEGENDRE = 'Legendre'

DEFAULT_RETRIES = 32


def as_refinable(value: Union[RefinableReal, int, Fraction, str]) -> RefinableReal:
    if isinstance(value, RefinableReal):
        return value
    return RefinableReal.rational(Fraction(value))


@dataclass
class ReductionInstance:
    tau: RefinableReal
    mu: RefinableReal
    A: Fraction
    B: RefinableReal
    M: int
    label: str = ''

    def __post_init__(self):
        self.A = Fraction(self.A)
        self.B = as_refinable(self.B)
        self.mu = as_refinable(self.mu)
        if self.A <= 0:
            raise DomainError(f"A must be positive, got {self.A}")
        if self.M < 1:
            raise DomainError(f"M must be at least 1, got {self.M}")


@dataclass
class ReductionOutcome:
    status: str
    q_used: Optional[int] = None
    q_index: Optional[int] = None
    epsilon: Optional[ApproxReal] = None
    w_bound: Optional[int] = None
    value: Optional[ApproxReal] = None
    attempts: int = 0
    degenerate: bool = False
    a_max: Optional[int] = None
    label: str = ''

    @property
    def reduced(self) -> bool:
        return self.status in (REDUCED, LEGENDRE)

    def to_record(self) -> dict:
        record = {
            "status": self.status,
            "q_index": self.q_index,
            "q_digits10": len(str(self.q_used)) if self.q_used is not None else None,
            "epsilon": self.epsilon.to_decimal(12) if self.epsilon is not None else None,
            "bound": self.value.to_decimal(12) if self.value is not None else None,
            "w_bound": self.w_bound,
            "attempts": self.attempts,
        }
        if self.a_max is not None:
            record["a_max"] = str(self.a_max)
        if self.degenerate:
            record["degenerate"] = True
        return record


def _certified_b_log(inst: ReductionInstance, ctx: PrecisionContext) -> ApproxReal:
    b_value = inst.B(ctx)
    if not decide(b_value.gt(1), f"B > 1 for {inst.label or inst.tau.name}"):
        raise DomainError(f"B must exceed 1, got {b_value.short()}")
    with ctx.activated():
        return log_of(b_value)


def epsilon_for(inst: ReductionInstance, q: int, ctx: PrecisionContext) -> tuple:
    """Certified (eps, ||mu q||) for one convergent denominator"""
    tau = inst.tau(ctx)
    mu = inst.mu(ctx)
    with ctx.activated():
        # exact mu: mu q in Z gives ||mu q|| = 0 exactly
        mu_distance = nearest_int_distance(inst.mu.exact * q if inst.mu.exact is not None else mu * q)
        tau_distance = nearest_int_distance(tau * q)
        eps = mu_distance - inst.M * tau_distance
    eps.sign()
    return eps, mu_distance


def _reduction_value(inst: ReductionInstance, q: int, eps: ApproxReal, ctx: PrecisionContext) -> ApproxReal:
    log_b = _certified_b_log(inst, ctx)
    with ctx.activated():
        return log_of(inst.A * q / eps) / log_b


def dujella_petho_reduce(inst: ReductionInstance, ctx: Optional[PrecisionContext] = None,
                         max_retries: int = DEFAULT_RETRIES,
                         expansion: Optional[ContinuedFraction] = None) -> ReductionOutcome:
    """Try the first convergent with q > 6M, then up to max_retries further ones.

    When Reduced, no solution of 0 < |u tau - v + mu| < A B^-w has u <= M
    and w >= w_bound.
    """
    ctx = ctx or PrecisionContext()
    _certified_b_log(inst, ctx)
    six_m = 6 * inst.M
    if expansion is None:
        expansion = cf_expand(inst.tau, ctx, min_denominator=six_m, extra=max_retries)
    first = expansion.first_index_exceeding(six_m)
    if first is None:
        raise PrecisionInsufficient(f"expansion of {inst.tau.name} never exceeds 6M")
    outcome = ReductionOutcome(status=EPSILON_FAILED, label=inst.label)
    last = min(first + max_retries, len(expansion) - 1)
    degenerate_attempts = 0

    for index in range(first, last + 1):
        q = expansion.convergents[index][1]
        # tau * q and mu * q must be resolved well below 1/M
        needed = ctx.at_least(q.bit_length() + inst.M.bit_length() + 96)
        eps, mu_distance = with_escalation(lambda c: epsilon_for(inst, q, c), needed)
        outcome.attempts += 1
        outcome.q_used, outcome.q_index, outcome.epsilon = q, index + 1, eps
        if mu_distance.is_exact and mu_distance.sign() == 0:
            degenerate_attempts += 1
        if eps.sign() <= 0:
            continue

        def compute(c: PrecisionContext, q=q) -> ApproxReal:
            eps_c, _ = epsilon_for(inst, q, c)
            return _reduction_value(inst, q, eps_c, c)

        value = with_escalation(compute, needed)
        outcome.status = REDUCED
        outcome.value = value
        outcome.w_bound = value.ceil_upper()
        return outcome

    outcome.degenerate = outcome.attempts > 0 and degenerate_attempts == outcome.attempts
    return outcome


@dataclass
class LegendreBound:
    """n_index is the 1-based position of the first convergent with q > M; a_max covers the partial quotients up to it"""

    a_max: int
    n_index: int
    q_n: int
    expansion: ContinuedFraction = field(repr=False)

    def lower_bound(self, x: int) -> Fraction:
        """|x tau - y| exceeds this for every integer y and 1 <= x < M"""
        return Fraction(1, (self.a_max + 2) * x)


def legendre_bound(tau: RefinableReal, M: int, ctx: Optional[PrecisionContext] = None) -> LegendreBound:
    """N minimal with q_N > M and a_max = max(a_0, ..., a_N)"""
    if M < 1:
        raise DomainError(f"M must be at least 1, got {M}")
    expansion = cf_expand(tau, ctx, min_denominator=M)
    first = expansion.first_index_exceeding(M)
    if first is None:
        raise DomainError(f"{tau.name} is rational with every q <= {M}")
    a_max = max(expansion.partial_quotients[:first + 1])
    return LegendreBound(a_max=a_max, n_index=first + 1, q_n=expansion.convergents[first][1], expansion=expansion)


def legendre_contract_holds(tau: RefinableReal, bound: LegendreBound, x: int,
                            ctx: Optional[PrecisionContext] = None) -> bool:
    """min over y of |x tau - y| > 1/((a_max + 2) x), certified"""
    ctx = (ctx or PrecisionContext()).at_least(2 * x.bit_length() + 128)

    def compute(c: PrecisionContext) -> bool:
        with c.activated():
            distance = nearest_int_distance(tau(c) * x)
        return decide(distance.gt(bound.lower_bound(x)), f"Legendre bound at x={x}")

    return with_escalation(compute, ctx)


def legendre_w_bound(inst: ReductionInstance, bound: LegendreBound, ctx: PrecisionContext) -> ApproxReal:
    """log(A (a_max + 2) M) / log B: with 1/((a_max+2)M) < A B^-w this bounds w"""
    def compute(c: PrecisionContext) -> ApproxReal:
        log_b = _certified_b_log(inst, c)
        with c.activated():
            return log_of(ApproxReal.exact(inst.A * (bound.a_max + 2) * inst.M)) / log_b

    return with_escalation(compute, ctx)


def reduce_or_route(inst: ReductionInstance, ctx: Optional[PrecisionContext] = None,
                    max_retries: int = DEFAULT_RETRIES) -> ReductionOutcome:
    """Dujella-Petho reduction, falling back to the Legendre bound for a degenerate mu.

    The Legendre route covers mu = 0 (mod 1), where the form is u tau - v'
    and 1/((a_max + 2) u) is a lower bound for 1 <= u < M.
    """
    ctx = ctx or PrecisionContext()
    outcome = dujella_petho_reduce(inst, ctx, max_retries)
    if outcome.status != EPSILON_FAILED or not (outcome.degenerate and inst.mu.is_integer):
        return outcome
    bound = legendre_bound(inst.tau, inst.M, ctx)
    value = legendre_w_bound(inst, bound, ctx)
    return ReductionOutcome(
        status=LEGENDRE, q_used=bound.q_n, q_index=bound.n_index, value=value,
        w_bound=value.ceil_upper(), attempts=outcome.attempts, degenerate=True,
        a_max=bound.a_max, label=inst.label,
    )
