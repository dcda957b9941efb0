import unittest
import os
import random
import sys
from fractions import Fraction

from hypothesis import given, settings, strategies as st
from mpmath import mp
from mpmath.libmp.backend import BACKEND

# Add src to path to allow direct import
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.constants import log2_over_log_gamma, resolve_spec
from src.errors import DomainError
from src.numerics import PrecisionContext, RefinableReal
from src.reduction import (
    EPSILON_FAILED,
    LEGENDRE,
    REDUCED,
    ReductionInstance,
    dujella_petho_reduce,
    legendre_bound,
    legendre_contract_holds,
    reduce_or_route,
)


NON_SQUARES = [2, 3, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 17, 19, 23, 29]


def _sqrt(d):
    return resolve_spec({'kind': 'sqrt', 'value': d})


def _no_violation(d, mu, A, B, M, w_bound):
    """Every 1 <= u <= M has |u sqrt(d) - v + mu| = 0 or >= A B^-w_bound for the nearest v"""
    with mp.workdps(60):
        tau = mp.sqrt(d)
        mu_value = mp.mpf(mu.numerator) / mu.denominator
        threshold = mp.mpf(A.numerator) / A.denominator * (mp.mpf(B.numerator) / B.denominator) ** (-w_bound)
        for u in range(1, M + 1):
            x = u * tau + mu_value
            distance = abs(x - mp.nint(x))
            if distance != 0 and distance < threshold:
                return False
    return True


class TestDujellaPetho(unittest.TestCase):

    def test_sqrt2_instance_has_no_solution_past_bound(self):
        """tau = sqrt 2, mu = 1/3, A = 10, B = 2, M = 1000"""
        inst = ReductionInstance(_sqrt(2), Fraction(1, 3), Fraction(10), Fraction(2), 1000, 'sqrt2')
        outcome = dujella_petho_reduce(inst)
        self.assertEqual(outcome.status, REDUCED)
        # q = 13860 is the first convergent past 6M, but 3 | q makes ||q/3|| = 0
        self.assertEqual(outcome.q_used, 33461)
        self.assertEqual(outcome.q_index, 13)
        self.assertEqual(outcome.attempts, 2)
        self.assertGreater(outcome.epsilon.lower_fraction(), 0)
        self.assertEqual(outcome.w_bound, outcome.value.ceil_upper())
        self.assertTrue(_no_violation(2, Fraction(1, 3), Fraction(10), Fraction(2), 1000, outcome.w_bound))

    def test_rational_spec_mu_reduces(self):
        """The JSON spec form of the sqrt 2 instance takes the same path"""
        inst = ReductionInstance(_sqrt(2), resolve_spec({'kind': 'rational', 'value': '1/3'}),
                                 Fraction(10), Fraction(2), 1000)
        outcome = dujella_petho_reduce(inst, PrecisionContext(working_bits=192, max_bits=8192))
        self.assertEqual(outcome.status, REDUCED)
        self.assertEqual(outcome.to_record()['q_index'], 13)

    @unittest.skipUnless(BACKEND == 'gmpy', 'needs the gmpy2 backend of mpmath')
    def test_reduction_under_gmpy_backend(self):
        inst = ReductionInstance(_sqrt(2), Fraction(1, 3), Fraction(10), Fraction(2), 1000)
        self.assertEqual(dujella_petho_reduce(inst).status, REDUCED)
        self.assertEqual(reduce_or_route(ReductionInstance(_sqrt(2), 0, Fraction(10), Fraction(2), 1000)).w_bound, 16)

    def test_integer_mu_fails(self):
        """mu = 0 makes ||mu q|| vanish, so eps = -M ||tau q|| < 0"""
        inst = ReductionInstance(_sqrt(2), 0, Fraction(10), Fraction(2), 50)
        outcome = dujella_petho_reduce(inst)
        self.assertEqual(outcome.status, EPSILON_FAILED)
        self.assertTrue(outcome.degenerate)
        self.assertEqual(outcome.attempts, 33)
        self.assertFalse(outcome.reduced)

    def test_route_to_legendre(self):
        """sqrt 2 = [1; 2, 2, ...] gives a_max = 2 and w < log2(10 * 4 * 1000)"""
        inst = ReductionInstance(_sqrt(2), 0, Fraction(10), Fraction(2), 1000)
        outcome = reduce_or_route(inst)
        self.assertEqual(outcome.status, LEGENDRE)
        self.assertEqual(outcome.a_max, 2)
        self.assertEqual(outcome.w_bound, 16)
        self.assertTrue(outcome.reduced)
        self.assertEqual(outcome.to_record()['a_max'], '2')

    def test_instance_validation(self):
        with self.assertRaises(DomainError):
            ReductionInstance(_sqrt(2), Fraction(1, 3), Fraction(0), Fraction(2), 10)
        with self.assertRaises(DomainError):
            ReductionInstance(_sqrt(2), Fraction(1, 3), Fraction(1), Fraction(2), 0)
        with self.assertRaises(DomainError):
            dujella_petho_reduce(ReductionInstance(_sqrt(3), Fraction(1, 3), Fraction(1), Fraction(1), 10))

    @settings(max_examples=100, deadline=None)
    @given(
        d=st.sampled_from(NON_SQUARES),
        den=st.integers(min_value=2, max_value=9),
        num=st.integers(min_value=1, max_value=8),
        A=st.integers(min_value=1, max_value=100),
        B=st.sampled_from([Fraction(3, 2), Fraction(2), Fraction(5, 2), Fraction(3), Fraction(4), Fraction(5)]),
        M=st.integers(min_value=1, max_value=3000),
    )
    def test_reduction_is_sound(self, d, den, num, A, B, M):
        """Exhaustive scan over u <= M finds nothing below A B^-w_bound"""
        mu = Fraction(num % den or 1, den)
        inst = ReductionInstance(_sqrt(d), mu, Fraction(A), B, M)
        outcome = dujella_petho_reduce(inst)
        self.assertIn(outcome.status, (REDUCED, EPSILON_FAILED))
        if outcome.status == REDUCED:
            self.assertTrue(_no_violation(d, mu, Fraction(A), B, M, outcome.w_bound))


class TestLegendre(unittest.TestCase):

    def test_published_partial_quotient(self):
        """log 2 / log gamma up to 3.94e158: a_max = 4008 at N = 302"""
        M = int(Fraction('3.94e158'))
        bound = legendre_bound(log2_over_log_gamma(), M)
        self.assertEqual(bound.a_max, 4008)
        self.assertEqual(bound.n_index, 302)
        self.assertEqual(bound.q_n, bound.expansion.convergents[301][1])
        self.assertLess(bound.expansion.convergents[300][1], M)
        self.assertGreater(bound.q_n, M)

    def test_contract_on_random_points(self):
        tau = log2_over_log_gamma()
        bound = legendre_bound(tau, 10 ** 6)
        rng = random.Random(20240601)
        ctx = PrecisionContext()
        for x in (rng.randrange(1, 10 ** 6) for _ in range(1000)):
            self.assertTrue(legendre_contract_holds(tau, bound, x, ctx), f"x={x}")

    def test_rational_tau_rejected(self):
        with self.assertRaises(DomainError):
            legendre_bound(RefinableReal.rational(Fraction(7, 3)), 100)
        with self.assertRaises(DomainError):
            legendre_bound(log2_over_log_gamma(), 0)


if __name__ == '__main__':
    unittest.main()
