import unittest
import os
import sys
from fractions import Fraction

from hypothesis import given, settings, strategies as st
from mpmath import iv, mp
from mpmath.libmp.backend import MPZ

# Add src to path to allow direct import
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.errors import DomainError, PrecisionExhausted, PrecisionInsufficient
from src.numerics import (
    AlgebraicConstants,
    ApproxReal,
    PrecisionContext,
    RefinableReal,
    decide,
    dominant_root,
    f_k_at_root,
    interval_precision,
    log_of,
    nearest_int_distance,
    psi_residual,
    to_fraction,
    with_escalation,
)


class TestPrecisionContext(unittest.TestCase):

    def test_rejects_tiny_precision(self):
        with self.assertRaises(DomainError):
            PrecisionContext(working_bits=32)

    def test_rejects_working_above_max(self):
        with self.assertRaises(DomainError):
            PrecisionContext(working_bits=512, max_bits=256)

    def test_escalation_doubles_until_decidable(self):
        """compute is retried at 384 and 768 bits before it succeeds"""
        seen = []

        def compute(ctx):
            seen.append(ctx.working_bits)
            if ctx.working_bits < 768:
                raise PrecisionInsufficient("not yet")
            return ctx.working_bits

        self.assertEqual(with_escalation(compute, PrecisionContext(working_bits=192)), 768)
        self.assertEqual(seen, [192, 384, 768])

    def test_escalation_stops_at_max_bits(self):
        def compute(ctx):
            raise PrecisionInsufficient("never")

        with self.assertRaises(PrecisionExhausted):
            with_escalation(compute, PrecisionContext(working_bits=192, max_bits=256))

    def test_decide(self):
        self.assertTrue(decide(True, 'x'))
        self.assertFalse(decide(False, 'x'))
        with self.assertRaises(PrecisionInsufficient):
            decide(None, 'x')


class TestApproxReal(unittest.TestCase):

    def test_exact_rational_arithmetic(self):
        with interval_precision(128):
            third = ApproxReal.exact(Fraction(1, 3))
            self.assertTrue(third.contains(Fraction(1, 3)))
            self.assertTrue((third * 3).contains(1))

    def test_three_valued_comparisons(self):
        wide = ApproxReal.from_decimal('1', '0.1')
        self.assertIsNone(wide.lt(1))
        self.assertTrue(wide.lt(2))
        self.assertFalse(wide.gt(2))
        with self.assertRaises(PrecisionInsufficient):
            wide.certainly_lt(1)

    def test_sign_and_floor(self):
        self.assertEqual(ApproxReal.exact(0).sign(), 0)
        self.assertEqual(ApproxReal.exact(-3).sign(), -1)
        self.assertEqual(ApproxReal.exact(Fraction(7, 2)).floor(), 3)
        with self.assertRaises(PrecisionInsufficient):
            ApproxReal.from_decimal('1', '0.1').floor()

    def test_division_by_interval_with_zero(self):
        with self.assertRaises(PrecisionInsufficient):
            ApproxReal.exact(1) / ApproxReal.from_decimal('0', '0.5')

    def test_nearest_int_distance(self):
        self.assertTrue(nearest_int_distance(ApproxReal.exact(Fraction(13, 4))).contains(Fraction(1, 4)))
        self.assertTrue(nearest_int_distance(ApproxReal.exact(Fraction(-1, 4))).contains(Fraction(1, 4)))
        # exactly half way still has a defined distance
        self.assertTrue(nearest_int_distance(ApproxReal.exact(Fraction(7, 2))).contains(Fraction(1, 2)))

    def test_nearest_int_distance_of_rationals(self):
        """An integer multiple lands on an exact zero at any precision"""
        zero = nearest_int_distance(Fraction(1, 3) * 13860)
        self.assertTrue(zero.is_exact)
        self.assertEqual(zero.sign(), 0)
        self.assertTrue(nearest_int_distance(Fraction(10, 3)).contains(Fraction(1, 3)))
        self.assertTrue(nearest_int_distance(-7).is_exact)

    def test_backend_integers(self):
        """mpz from the gmpy backend behaves like int"""
        with interval_precision(128):
            total = ApproxReal.exact(MPZ(7)) + MPZ(2)
            distance = nearest_int_distance(ApproxReal(iv.sqrt(2)) * 5)
        self.assertTrue(total.contains(9))
        self.assertIs(type(ApproxReal.exact(Fraction(7, 2)).floor()), int)
        self.assertIs(type(ApproxReal.exact(Fraction(7, 2)).ceil_upper()), int)
        self.assertGreater(distance.lower_fraction(), Fraction('0.0710'))
        self.assertLess(distance.upper_fraction(), Fraction('0.0711'))
        self.assertEqual(to_fraction(MPZ(3)), 3)

    def test_nearest_int_distance_straddling_integer(self):
        with self.assertRaises(PrecisionInsufficient):
            nearest_int_distance(ApproxReal.from_decimal('1', '0.1'))

    @settings(max_examples=200, deadline=None)
    @given(
        a=st.fractions(min_value=-1000, max_value=1000, max_denominator=10 ** 6),
        b=st.fractions(min_value=-1000, max_value=1000, max_denominator=10 ** 6),
        c=st.fractions(min_value=Fraction(1, 1000), max_value=1000, max_denominator=10 ** 6),
        power=st.integers(min_value=0, max_value=5),
    )
    def test_interval_soundness(self, a, b, c, power):
        """The exact rational result lies inside the enclosure"""
        with interval_precision(96):
            x, y, z = ApproxReal.exact(a), ApproxReal.exact(b), ApproxReal.exact(c)
            value = ((x + y) * x - y ** power) / z - (-z) / 3
        exact = ((a + b) * a - b ** power) / c + c / 3
        self.assertTrue(value.contains(exact), f"{exact} not in {value}")

    def test_to_fraction(self):
        self.assertEqual(to_fraction(Fraction(3, 2)), Fraction(3, 2))
        self.assertEqual(to_fraction(7), Fraction(7))
        self.assertEqual(to_fraction(mp.mpf('0.5')), Fraction(1, 2))
        with self.assertRaises(TypeError):
            to_fraction('0.5')


class TestConstants(unittest.TestCase):

    def test_gamma_delta_relations(self):
        self.assertTrue(AlgebraicConstants.at(PrecisionContext()).check())

    def test_log_of(self):
        ctx = PrecisionContext()
        constants = AlgebraicConstants.at(ctx)
        zero = log_of(ApproxReal.exact(1), ctx)
        self.assertTrue(zero.contains(0))
        self.assertLess(zero.upper_fraction() - zero.lower_fraction(), Fraction(1, 2 ** 180))
        log_gamma = log_of(constants.gamma, ctx)
        self.assertGreater(log_gamma.lower_fraction(), Fraction('1.76274717'))
        self.assertLess(log_gamma.upper_fraction(), Fraction('1.76274718'))
        log2 = log_of(ApproxReal.exact(2), ctx)
        self.assertGreater(log2.lower_fraction(), Fraction('0.69314718'))
        self.assertLess(log2.upper_fraction(), Fraction('0.69314719'))

    def test_log_of_rejects_interval_touching_zero(self):
        with self.assertRaises(DomainError):
            log_of(ApproxReal.from_decimal('0', '0.5'))

    def test_refinable_real_memoizes_per_precision(self):
        calls = []

        def compute(ctx):
            calls.append(ctx.working_bits)
            return ApproxReal.exact(2)

        value = RefinableReal('two', compute)
        value(PrecisionContext())
        value(PrecisionContext())
        value(PrecisionContext(working_bits=256))
        self.assertEqual(calls, [192, 256])
        self.assertFalse(value.is_integer)
        self.assertTrue(RefinableReal.rational(3).is_integer)


class TestDominantRoot(unittest.TestCase):

    def test_golden_ratio_for_k2(self):
        ctx = PrecisionContext()
        phi = dominant_root(2, ctx)
        with ctx.activated():
            self.assertTrue((phi * phi - phi - 1).touches_zero())
        self.assertGreater(phi.lower_fraction(), Fraction('1.618'))
        self.assertLess(phi.upper_fraction(), Fraction('1.6181'))

    def test_root_inside_bracket(self):
        """k = 10 lies in (1.998046875, 2)"""
        phi = dominant_root(10, PrecisionContext())
        self.assertGreater(phi.lower_fraction(), Fraction('1.998046875'))
        self.assertLess(phi.upper_fraction(), 2)

    def test_tribonacci_constant(self):
        phi = dominant_root(3, PrecisionContext())
        self.assertGreater(phi.lower_fraction(), Fraction('1.8392867552'))
        self.assertLess(phi.upper_fraction(), Fraction('1.8392867553'))

    def test_roots_increase_with_k(self):
        ctx = PrecisionContext()
        roots = [dominant_root(k, ctx) for k in range(2, 101)]
        for k, (phi, following) in enumerate(zip(roots, roots[1:]), start=2):
            self.assertLess(phi.upper_fraction(), following.lower_fraction(), f"k={k}")

    def test_residual_and_f_k_up_to_600(self):
        """|Psi_k(phi)| < 2^-(bits - 10) and 1/2 < f_k(phi) < 3/4 for every k <= 600"""
        ctx = PrecisionContext()
        tolerance = ApproxReal.exact(Fraction(1, 2 ** (ctx.working_bits - 10)))
        for k in range(2, 601):
            phi = dominant_root(k, ctx)
            residual = abs(psi_residual(k, phi, ctx.working_bits + k + 64))
            self.assertIs(residual.lt(tolerance), True, f"k={k}")
            value = f_k_at_root(k, phi, ctx)
            self.assertGreater(value.lower_fraction(), Fraction(1, 2), f"k={k}")
            self.assertLess(value.upper_fraction(), Fraction(3, 4), f"k={k}")

    def test_rejects_k_below_2(self):
        with self.assertRaises(DomainError):
            dominant_root(1, PrecisionContext())

    def test_f_k_inside_unit_bracket(self):
        ctx = PrecisionContext()
        for k in (2, 3, 10, 100):
            value = f_k_at_root(k, dominant_root(k, ctx), ctx)
            self.assertGreater(value.lower_fraction(), Fraction(1, 2))
            self.assertLess(value.upper_fraction(), Fraction(3, 4))


if __name__ == '__main__':
    unittest.main()
