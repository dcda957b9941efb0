import unittest
import os
import sys
from fractions import Fraction

# Add src to path to allow direct import
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.errors import DomainError
from src.numerics import PrecisionContext
from src.sequences import (
    KFibonacciTable,
    balancing,
    balancing_binet,
    balancing_terms,
    binet_residual,
    check_binet_grid,
    check_growth_bounds,
    kfib,
    lucas_balancing,
    lucas_balancing_binet,
    lucas_balancing_terms,
    verify_sequence_identities,
    xi_deviation,
)


class TestBalancing(unittest.TestCase):

    def test_first_terms(self):
        self.assertEqual(balancing_terms(6), [0, 1, 6, 35, 204, 1189, 6930])
        self.assertEqual(lucas_balancing_terms(5), [1, 3, 17, 99, 577, 3363])

    def test_single_terms_match_tables(self):
        b = balancing_terms(40)
        c = lucas_balancing_terms(40)
        for l in (0, 1, 2, 17, 40):
            self.assertEqual(balancing(l), b[l])
            self.assertEqual(lucas_balancing(l), c[l])

    def test_perfect_square_identity(self):
        for b, c in zip(balancing_terms(100), lucas_balancing_terms(100)):
            self.assertEqual(8 * b * b + 1, c * c)

    def test_negative_index(self):
        with self.assertRaises(DomainError):
            balancing(-1)

    def test_binet_contains_exact_values(self):
        ctx = PrecisionContext(working_bits=256)
        self.assertTrue(balancing_binet(6, ctx).contains(6930))
        self.assertTrue(lucas_balancing_binet(5, ctx).contains(3363))


class TestKFibonacci(unittest.TestCase):

    def test_classical_and_tribonacci(self):
        self.assertEqual(KFibonacciTable(2).terms(10), [0, 1, 1, 2, 3, 5, 8, 13, 21, 34, 55])
        self.assertEqual(KFibonacciTable(3).terms(8), [0, 1, 1, 2, 4, 7, 13, 24, 44])

    def test_known_values(self):
        """F_15^(5) = 6930 = B_6 and F_12^(10) = 2^10 - 1"""
        self.assertEqual(kfib(5, 15), 6930)
        self.assertEqual(kfib(10, 12), 1023)
        self.assertEqual(kfib(2, 4), 3)

    def test_power_of_two_prefix(self):
        for k in (2, 3, 7, 20):
            for n in range(2, k + 2):
                self.assertEqual(kfib(k, n), 2 ** (n - 2))
            self.assertEqual(kfib(k, k + 2), 2 ** k - 1)

    def test_initial_zeros(self):
        self.assertEqual(kfib(4, 0), 0)
        self.assertEqual(kfib(4, -2), 0)
        with self.assertRaises(DomainError):
            kfib(4, -3)
        with self.assertRaises(DomainError):
            kfib(1, 5)

    def test_xi_deviation(self):
        """F_5^(3) = 7 = 2^3 (1 - 1/8)"""
        self.assertEqual(xi_deviation(3, 5), Fraction(1, 8))
        with self.assertRaises(DomainError):
            xi_deviation(3, 4)


class TestCertifiedChecks(unittest.TestCase):

    def test_identity_suite_small(self):
        report = verify_sequence_identities(l_max=60, k_max=25, fib_n_max=60, binet_l_max=40)
        self.assertTrue(report.passed, report.violations)
        self.assertEqual(report.checks['perfect_square'], 61)
        self.assertEqual(report.checks['mersenne_term'], 24)

    def test_binet_residual_below_half(self):
        residual = binet_residual(3, 30)
        self.assertLess(residual.upper_fraction(), Fraction(1, 2))

    def test_binet_grid_counts(self):
        self.assertEqual(check_binet_grid(range(2, 6), 60), 240)

    def test_binet_residual_rejects_n_zero(self):
        with self.assertRaises(DomainError):
            binet_residual(3, 0)

    def test_growth_bounds(self):
        for kind, k in (('balancing', None), ('lucas', None), ('kfib', 3), ('kfib', 12)):
            report = check_growth_bounds(kind, range(1, 60), k=k)
            self.assertTrue(report.passed, f"{kind} {k}: {report.violations}")
            self.assertEqual(report.checked, 59)

    def test_growth_bounds_errors(self):
        with self.assertRaises(DomainError):
            check_growth_bounds('tribonacci', range(1, 5))
        with self.assertRaises(DomainError):
            check_growth_bounds('kfib', range(1, 5))


@unittest.skipUnless(os.getenv('REPRO_SLOW_TESTS'), 'full grids run with run_tests.py --slow')
class TestFullGrids(unittest.TestCase):

    def test_binet_grid(self):
        """k in [2, 30], 1 <= n <= 500"""
        self.assertEqual(check_binet_grid(range(2, 31), 500), 29 * 500)

    def test_identity_suite(self):
        report = verify_sequence_identities()
        self.assertTrue(report.passed, report.violations)
        self.assertEqual(report.checks['perfect_square'], 2001)


if __name__ == '__main__':
    unittest.main()
