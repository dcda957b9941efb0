#!/usr/bin/env python3
"""Certified arbitrary-precision reals built on mpmath interval arithmetic.

Every real constant used by the reproduction (gamma = 3 + 2*sqrt(2), the
dominant root phi(k) of x^k - x^(k-1) - ... - 1, f_k(phi), logarithms) is an
ApproxReal: a closed interval with outward-rounded endpoints that contains the
exact value. Comparisons that cannot be decided at the current precision
raise PrecisionInsufficient, and with_escalation() reruns the computation at
a higher precision until max_bits is reached.
"""

import math
import numbers
from contextlib import contextmanager
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Optional, TypeVar, Union

from mpmath import iv, libmp, mp

from .errors import DomainError, InvariantViolation, PrecisionExhausted, PrecisionInsufficient


T = TypeVar('T')

DEFAULT_WORKING_BITS = 192
DEFAULT_MAX_BITS = 1_048_576
DEFAULT_ESCALATION_FACTOR = 2


@contextmanager
def interval_precision(bits: int) -> Iterator[None]:
    """Temporarily set the binary precision of the mpmath interval context"""
    saved = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = saved


@dataclass(frozen=True)
class PrecisionContext:
    """Binary working precision plus the escalation policy"""

    working_bits: int = DEFAULT_WORKING_BITS
    max_bits: int = DEFAULT_MAX_BITS
    escalation_factor: int = DEFAULT_ESCALATION_FACTOR

    def __post_init__(self):
        if self.working_bits < 64:
            raise DomainError(f"working_bits must be at least 64, got {self.working_bits}")
        if self.working_bits > self.max_bits:
            raise DomainError(f"working_bits {self.working_bits} exceeds max_bits {self.max_bits}")
        if self.escalation_factor < 2:
            raise DomainError(f"escalation_factor must be at least 2, got {self.escalation_factor}")

    def escalate(self) -> 'PrecisionContext':
        if self.working_bits >= self.max_bits:
            raise PrecisionExhausted(f"precision exhausted at {self.max_bits} bits")
        bits = min(self.working_bits * self.escalation_factor, self.max_bits)
        return replace(self, working_bits=bits)

    def at_least(self, bits: int) -> 'PrecisionContext':
        """Context with at least `bits` of working precision"""
        if bits <= self.working_bits:
            return self
        if bits > self.max_bits:
            raise PrecisionExhausted(f"{bits} bits requested, max_bits is {self.max_bits}")
        return replace(self, working_bits=bits)

    @contextmanager
    def activated(self) -> Iterator['PrecisionContext']:
        with interval_precision(self.working_bits):
            yield self


def with_escalation(compute: Callable[[PrecisionContext], T], ctx: PrecisionContext) -> T:
    """Run compute(ctx), escalating precision whenever a comparison is undecidable"""
    while True:
        try:
            return compute(ctx)
        except PrecisionInsufficient as exc:
            try:
                ctx = ctx.escalate()
            except PrecisionExhausted as exhausted:
                raise PrecisionExhausted(f"{exhausted.message} ({exc})") from exc
            if ctx.working_bits > 65536:
                print(f"  ⚠️ Escalating precision to {ctx.working_bits} bits: {exc}")


def decide(flag: Optional[bool], what: str) -> bool:
    """Turn a three-valued interval comparison into a certified boolean"""
    if flag is None:
        raise PrecisionInsufficient(what)
    return flag


Operand = Union[int, Fraction, 'ApproxReal']


def _to_interval(value: Operand):
    if isinstance(value, ApproxReal):
        return value.interval
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return iv.mpf(value.numerator)
        return iv.mpf(value.numerator) / iv.mpf(value.denominator)
    if isinstance(value, numbers.Integral):
        return iv.mpf(int(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an interval")


def _floor_int(raw) -> int:
    # to_int hands back mpz under the gmpy backend
    return int(libmp.to_int(raw, libmp.round_floor))


def _raw_to_fraction(raw) -> Fraction:
    p, q = libmp.to_rational(raw)
    return Fraction(int(p), int(q))


@dataclass(frozen=True)
class ApproxReal:
    """An exact real known to lie inside a closed interval"""

    interval: object

    @classmethod
    def exact(cls, value: Union[int, Fraction]) -> 'ApproxReal':
        return cls(_to_interval(value))

    @classmethod
    def from_raw_bounds(cls, lower_raw, upper_raw) -> 'ApproxReal':
        if not libmp.mpf_le(lower_raw, upper_raw):
            raise DomainError("interval endpoints out of order")
        return cls(iv.make_mpf((lower_raw, upper_raw)))

    @classmethod
    def from_decimal(cls, midpoint: str, err: str) -> 'ApproxReal':
        """Interval [midpoint - err, midpoint + err] with outward rounding"""
        mid = iv.mpf(midpoint)
        radius = iv.mpf(err)
        if radius.a < 0:
            raise DomainError(f"negative error bound {err}")
        return cls.from_raw_bounds((mid - radius)._mpi_[0], (mid + radius)._mpi_[1])

    # Endpoints and the midpoint/err view

    @property
    def lower_raw(self):
        return self.interval._mpi_[0]

    @property
    def upper_raw(self):
        return self.interval._mpi_[1]

    @property
    def lower(self):
        return mp.make_mpf(self.lower_raw)

    @property
    def upper(self):
        return mp.make_mpf(self.upper_raw)

    @property
    def midpoint(self):
        return mp.make_mpf(libmp.mpf_shift(libmp.mpf_add(self.lower_raw, self.upper_raw), -1))

    @property
    def err(self):
        return mp.make_mpf(libmp.mpf_shift(libmp.mpf_sub(self.upper_raw, self.lower_raw), -1))

    @property
    def is_exact(self) -> bool:
        return self.lower_raw == self.upper_raw

    def lower_fraction(self) -> Fraction:
        return _raw_to_fraction(self.lower_raw)

    def upper_fraction(self) -> Fraction:
        return _raw_to_fraction(self.upper_raw)

    def contains(self, value: Union[int, Fraction]) -> bool:
        """Exact membership test for a rational value"""
        value = Fraction(value)
        return self.lower_fraction() <= value <= self.upper_fraction()

    # Arithmetic (performed at the current mpmath interval precision)

    def __add__(self, other: Operand) -> 'ApproxReal':
        return ApproxReal(self.interval + _to_interval(other))

    def __radd__(self, other: Operand) -> 'ApproxReal':
        return ApproxReal(_to_interval(other) + self.interval)

    def __sub__(self, other: Operand) -> 'ApproxReal':
        return ApproxReal(self.interval - _to_interval(other))

    def __rsub__(self, other: Operand) -> 'ApproxReal':
        return ApproxReal(_to_interval(other) - self.interval)

    def __mul__(self, other: Operand) -> 'ApproxReal':
        return ApproxReal(self.interval * _to_interval(other))

    def __rmul__(self, other: Operand) -> 'ApproxReal':
        return ApproxReal(_to_interval(other) * self.interval)

    def __truediv__(self, other: Operand) -> 'ApproxReal':
        divisor = ApproxReal(_to_interval(other))
        if divisor.touches_zero():
            raise PrecisionInsufficient("division by an interval containing zero")
        return ApproxReal(self.interval / divisor.interval)

    def __rtruediv__(self, other: Operand) -> 'ApproxReal':
        return ApproxReal(_to_interval(other)) / self

    def __neg__(self) -> 'ApproxReal':
        return ApproxReal(-self.interval)

    def __abs__(self) -> 'ApproxReal':
        return ApproxReal(abs(self.interval))

    def __pow__(self, exponent: int) -> 'ApproxReal':
        if not isinstance(exponent, int):
            raise TypeError("only integer powers are supported")
        if exponent == 0:
            return ApproxReal(iv.mpf(1))
        if exponent < 0:
            return 1 / (self ** -exponent)
        return ApproxReal(self.interval ** exponent)

    # Certified comparisons

    def lt(self, other: Operand) -> Optional[bool]:
        return libmp.mpi_lt(self.interval._mpi_, _to_interval(other)._mpi_)

    def le(self, other: Operand) -> Optional[bool]:
        return libmp.mpi_le(self.interval._mpi_, _to_interval(other)._mpi_)

    def gt(self, other: Operand) -> Optional[bool]:
        return libmp.mpi_gt(self.interval._mpi_, _to_interval(other)._mpi_)

    def ge(self, other: Operand) -> Optional[bool]:
        return libmp.mpi_ge(self.interval._mpi_, _to_interval(other)._mpi_)

    def certainly_lt(self, other: Operand) -> bool:
        return decide(self.lt(other), f"{self.short()} < {_describe(other)}")

    def touches_zero(self) -> bool:
        return libmp.mpf_le(self.lower_raw, libmp.fzero) and libmp.mpf_ge(self.upper_raw, libmp.fzero)

    def sign(self) -> int:
        """Certified sign; an exact zero interval has sign 0"""
        if self.lower_raw == libmp.fzero and self.upper_raw == libmp.fzero:
            return 0
        if libmp.mpf_gt(self.lower_raw, libmp.fzero):
            return 1
        if libmp.mpf_lt(self.upper_raw, libmp.fzero):
            return -1
        raise PrecisionInsufficient(f"sign of {self.short()} undecided")

    def floor(self) -> int:
        """Certified floor: both endpoints must share it"""
        low = _floor_int(self.lower_raw)
        high = _floor_int(self.upper_raw)
        if low != high:
            raise PrecisionInsufficient(f"floor of {self.short()} undecided")
        return low

    def ceil_upper(self) -> int:
        """Ceiling of the upper endpoint, a certified integer upper bound"""
        return int(libmp.to_int(self.upper_raw, libmp.round_ceiling))

    # Rendering

    def to_decimal(self, digits: int = 20) -> str:
        return mp.nstr(self.midpoint, digits)

    def err_decimal(self, digits: int = 5) -> str:
        return mp.nstr(self.err, digits)

    def short(self) -> str:
        return f"{mp.nstr(self.midpoint, 12)}±{mp.nstr(self.err, 3)}"

    def describe(self, digits: int = 20) -> dict:
        return {"midpoint": self.to_decimal(digits), "err": self.err_decimal()}

    def __repr__(self) -> str:
        return f"ApproxReal({self.short()})"


def _describe(value: Operand) -> str:
    if isinstance(value, ApproxReal):
        return value.short()
    return str(value)


def log_of(x: ApproxReal, ctx: Optional[PrecisionContext] = None) -> ApproxReal:
    """Interval containing log x; x must be certified positive"""
    if not libmp.mpf_gt(x.lower_raw, libmp.fzero):
        raise DomainError(f"logarithm of an interval touching zero: {x.short()}")
    if ctx is None:
        return ApproxReal(iv.log(x.interval))
    with ctx.activated():
        return ApproxReal(iv.log(x.interval))


def sqrt_of(x: ApproxReal) -> ApproxReal:
    if libmp.mpf_lt(x.lower_raw, libmp.fzero):
        raise DomainError(f"square root of an interval with negative part: {x.short()}")
    return ApproxReal(iv.sqrt(x.interval))


def exact_nearest_int_distance(value: Union[numbers.Rational, Fraction]) -> Fraction:
    value = Fraction(value)
    frac = value - math.floor(value)
    return min(frac, 1 - frac)


def nearest_int_distance(x: Union[ApproxReal, Fraction, int]) -> ApproxReal:
    """Certified ||x||, the distance from x to the nearest integer.

    Rational input (or a point interval) is measured exactly, so an integer
    value gives an exact zero instead of an interval straddling it.
    """
    if isinstance(x, numbers.Rational):
        return ApproxReal.exact(exact_nearest_int_distance(x))
    if x.is_exact:
        return ApproxReal.exact(exact_nearest_int_distance(x.lower_fraction()))
    low = _floor_int(x.lower_raw)
    high = _floor_int(x.upper_raw)
    if low != high:
        raise PrecisionInsufficient(f"||{x.short()}||: interval straddles an integer")
    frac = x - low
    half = Fraction(1, 2)
    if frac.le(half):
        return frac
    if frac.ge(half):
        return 1 - frac
    raise PrecisionInsufficient(f"||{x.short()}||: interval straddles a half-integer")


@dataclass(frozen=True)
class AlgebraicConstants:
    """gamma = 3 + 2*sqrt(2), delta = 3 - 2*sqrt(2) and the logarithms used downstream"""

    gamma: ApproxReal
    delta: ApproxReal
    sqrt2: ApproxReal
    log_gamma: ApproxReal
    log_delta: ApproxReal
    log2: ApproxReal
    log_sqrt2: ApproxReal

    @classmethod
    def at(cls, ctx: PrecisionContext) -> 'AlgebraicConstants':
        return _constants_at(ctx.working_bits)

    def check(self) -> bool:
        """gamma*delta = 1, gamma + delta = 6 and log gamma + log delta = 0 within err"""
        return ((self.gamma * self.delta).contains(1)
                and (self.gamma + self.delta).contains(6)
                and (self.log_gamma + self.log_delta).contains(0))


@lru_cache(maxsize=None)
def _constants_at(bits: int) -> AlgebraicConstants:
    with interval_precision(bits):
        sqrt2 = ApproxReal(iv.sqrt(2))
        gamma = 3 + 2 * sqrt2
        delta = 3 - 2 * sqrt2
        return AlgebraicConstants(
            gamma=gamma,
            delta=delta,
            sqrt2=sqrt2,
            log_gamma=log_of(gamma),
            log_delta=log_of(delta),
            log2=ApproxReal(iv.log(2)),
            log_sqrt2=ApproxReal(iv.log(2) / 2),
        )


def telescoped_polynomial(k: int, x: ApproxReal) -> ApproxReal:
    """x^(k+1) - 2x^k + 1 = (x - 1) * Psi_k(x)"""
    power = x ** k
    return power * x - 2 * power + 1


def psi_residual(k: int, phi: ApproxReal, bits: int) -> ApproxReal:
    """Interval enclosure of Psi_k over phi, evaluated through the telescoped form"""
    with interval_precision(bits):
        return telescoped_polynomial(k, phi) / (phi - 1)


def root_bracket(k: int) -> tuple:
    """Exact (2(1 - 2^-k), 2) bracket of the dominant root"""
    return Fraction(2) * (1 - Fraction(1, 2 ** k)), Fraction(2)


def certify_root_interval(k: int, phi: ApproxReal, bits: int) -> bool:
    """True if phi lies inside the bracket and x^(k+1) - 2x^k + 1 changes sign across it"""
    low_bracket, high_bracket = root_bracket(k)
    if not (phi.lower_fraction() > low_bracket and phi.upper_fraction() < high_bracket):
        return False
    with interval_precision(bits):
        at_lower = telescoped_polynomial(k, ApproxReal.from_raw_bounds(phi.lower_raw, phi.lower_raw))
        at_upper = telescoped_polynomial(k, ApproxReal.from_raw_bounds(phi.upper_raw, phi.upper_raw))
    return at_lower.lt(0) is True and at_upper.gt(0) is True


def _certified_root(k: int, ctx: PrecisionContext) -> ApproxReal:
    bits = ctx.working_bits + k + 64
    with mp.workprec(bits):
        start = mp.mpf(2) - mp.ldexp(1, -k)
        root = mp.findroot(
            lambda x: x ** (k + 1) - 2 * x ** k + 1,
            start,
            solver='newton',
            df=lambda x: (k + 1) * x ** k - 2 * k * x ** (k - 1),
            maxsteps=400,
            verify=False,
        )
    offset = libmp.mpf_shift(libmp.fone, -(ctx.working_bits + k + 32))
    lower = libmp.mpf_sub(root._mpf_, offset, bits, libmp.round_floor)
    upper = libmp.mpf_add(root._mpf_, offset, bits, libmp.round_ceiling)
    phi = ApproxReal.from_raw_bounds(lower, upper)
    if not certify_root_interval(k, phi, bits):
        raise PrecisionInsufficient(f"dominant root of Psi_{k} not bracketed")
    residual = abs(psi_residual(k, phi, bits))
    if residual.lt(ApproxReal.exact(Fraction(1, 2 ** (ctx.working_bits - 10)))) is not True:
        raise PrecisionInsufficient(f"residual of Psi_{k} too wide: {residual.short()}")
    return phi


def dominant_root(k: int, ctx: PrecisionContext, cache=None) -> ApproxReal:
    """Certified dominant root phi(k) of Psi_k(x) = x^k - x^(k-1) - ... - 1.

    Newton iteration on x^(k+1) - 2x^k + 1 starts at 2 - 2^-k, to the right
    of the root where the polynomial is convex, so it converges monotonically
    and never reaches the spurious root x = 1. The result is certified by a
    sign change inside (2(1 - 2^-k), 2).
    """
    if k < 2:
        raise DomainError(f"k must be at least 2, got {k}")
    if cache is not None and (hit := cache.lookup(k, ctx.working_bits)) is not None:
        return hit
    phi = with_escalation(lambda c: _certified_root(k, c), ctx)
    if cache is not None:
        cache.store(k, ctx.working_bits, phi)
    return phi


def f_k_at_root(k: int, phi: ApproxReal, ctx: Optional[PrecisionContext] = None) -> ApproxReal:
    """f_k(phi) = (phi - 1) / (2 + (k + 1)(phi - 2)), certified inside (1/2, 3/4)"""
    ctx = ctx or PrecisionContext()

    def compute(c: PrecisionContext) -> ApproxReal:
        with c.activated():
            value = (phi - 1) / (2 + (k + 1) * (phi - 2))
        above = value.gt(Fraction(1, 2))
        below = value.lt(Fraction(3, 4))
        if above is False or below is False:
            raise InvariantViolation(f"f_{k}(phi) = {value.short()} outside (1/2, 3/4)")
        if above is None or below is None:
            raise PrecisionInsufficient(f"f_{k}(phi) = {value.short()} not separated from (1/2, 3/4) boundary")
        return value

    return with_escalation(compute, ctx)


class RefinableReal:
    """A real that can be re-evaluated at any precision.

    `compute` maps a PrecisionContext to an enclosing ApproxReal; results are
    memoized per working_bits. Exact rationals carry their value so continued
    fraction expansion can terminate.
    """

    def __init__(self, name: str, compute: Callable[[PrecisionContext], ApproxReal],
                 exact: Optional[Fraction] = None):
        self.name = name
        self._compute = compute
        self.exact = exact
        self._memo = {}

    @classmethod
    def rational(cls, value: Union[int, Fraction], name: Optional[str] = None) -> 'RefinableReal':
        value = Fraction(value)
        return cls(name or str(value), lambda ctx: ApproxReal.exact(value), exact=value)

    def __call__(self, ctx: PrecisionContext) -> ApproxReal:
        if ctx.working_bits not in self._memo:
            with ctx.activated():
                self._memo[ctx.working_bits] = self._compute(ctx)
        return self._memo[ctx.working_bits]

    @property
    def is_integer(self) -> bool:
        return self.exact is not None and self.exact.denominator == 1

    def __repr__(self) -> str:
        return f"RefinableReal({self.name})"


def to_fraction(value) -> Fraction:
    """Exact rational for an int, Fraction or mpf; the upper endpoint of an ApproxReal"""
    if isinstance(value, ApproxReal):
        return value.upper_fraction()
    if isinstance(value, numbers.Rational):
        return Fraction(value)
    if hasattr(value, '_mpf_'):
        return _raw_to_fraction(value._mpf_)
    raise TypeError(f"cannot convert {type(value).__name__} to a fraction")
