import unittest
import os
import sys
from fractions import Fraction

from mpmath import mp

# Add src to path to allow direct import
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.errors import DomainError, PreconditionError
from src.linforms import (
    BALANCING,
    LUCAS,
    MatveevInstance,
    chain_n_bound,
    derive_n_bound,
    exp_smoothing_constant,
    height_budget,
    l_upper_bound,
    large_k_initial_bounds,
    large_k_log_coefficient,
    log_smoothing_constant,
    matveev_constant,
    matveev_lower_bound,
    sanchez_bound,
    verify_slack_facts,
)


class TestLowerBoundConstants(unittest.TestCase):

    def test_three_logarithm_constant(self):
        """1.4 * 30^6 * 3^4.5 rounds to 1.432e11"""
        value = matveev_constant(3)
        self.assertGreater(value, mp.mpf('1.431e11'))
        self.assertLess(value, mp.mpf('1.433e11'))

    def test_lower_bound_grows_with_d(self):
        small = matveev_lower_bound(MatveevInstance(2, 2, [2, 2], 10))
        large = matveev_lower_bound(MatveevInstance(2, 2, [2, 2], 1000))
        self.assertLess(small, large)

    def test_lower_bound_monotone_in_heights_and_degree(self):
        base = MatveevInstance(3, 2, [2, 3, 5], 100)
        reference = matveev_lower_bound(base)
        for j in range(3):
            heights = list(base.b_list)
            heights[j] += 1
            self.assertGreater(matveev_lower_bound(MatveevInstance(3, 2, heights, 100)), reference, f"B_{j}")
        for degree in (3, 4, 8):
            self.assertGreater(matveev_lower_bound(MatveevInstance(3, degree, base.b_list, 100)), reference)

    def test_single_logarithm_product(self):
        """s = 1, d = 1, B = 0.16, D = 1 leaves 1.4 * 30^4 * 0.16"""
        value = matveev_lower_bound(MatveevInstance(1, 1, [Fraction('0.16')], 1))
        self.assertAlmostEqual(float(value), 181440.0, places=4)

    def test_instance_validation(self):
        with self.assertRaises(DomainError):
            MatveevInstance(2, 2, [2], 10)
        with self.assertRaises(DomainError):
            MatveevInstance(2, 2, [2, '0.01'], 10)
        with self.assertRaises(DomainError):
            MatveevInstance(0, 2, [], 10)


class TestDerivedBounds(unittest.TestCase):

    def test_l_upper_bound(self):
        self.assertEqual(l_upper_bound(BALANCING, 409), 327)
        self.assertEqual(l_upper_bound(LUCAS, 568), 454)
        with self.assertRaises(DomainError):
            l_upper_bound(BALANCING, 0)
        with self.assertRaises(DomainError):
            l_upper_bound('pell', 10)

    def test_sanchez_bound(self):
        """m = 2, S = 256 gives 4 * 256 * log(256)^2"""
        with mp.workdps(30):
            expected = 4 * 256 * mp.log(256) ** 2
        self.assertAlmostEqual(float(sanchez_bound(2, 256)), float(expected), places=6)
        with self.assertRaises(PreconditionError):
            sanchez_bound(2, 10)

    def test_sanchez_contract(self):
        """Past the returned bound x / (log x)^m stays at or above S"""
        for m in (1, 2, 3):
            threshold = (4 * m * m) ** m
            for S in (threshold, 3 * threshold, 10 ** 6 * threshold):
                bound = int(mp.ceil(sanchez_bound(m, S)))
                with mp.workdps(40):
                    start = range(bound, bound + 2000)
                    decades = (bound * 10 ** e for e in range(1, 25))
                    for x in list(start) + list(decades):
                        self.assertGreaterEqual(mp.mpf(x) / mp.log(x) ** m, S, f"m={m} S={S} x={x}")

    def test_smoothing_constants(self):
        self.assertTrue(mp.mpf('1.596') < log_smoothing_constant(Fraction('0.64')) < mp.mpf('1.597'))
        self.assertTrue(mp.mpf('1.005') < log_smoothing_constant(Fraction('0.01')) < mp.mpf('1.0051'))
        self.assertGreater(exp_smoothing_constant(Fraction('0.5')), 1)
        with self.assertRaises(DomainError):
            log_smoothing_constant(1)
        with self.assertRaises(DomainError):
            exp_smoothing_constant(0)

    def test_derive_n_bound(self):
        n = derive_n_bound(LUCAS, 2)
        with mp.workprec(256):
            expected = mp.mpf(328) * 10 ** 30 * 2 ** 8 * mp.log(2) ** 5
            self.assertLessEqual(n, expected)
            self.assertGreater(n + 1, expected)

    def test_derive_n_bound_below_range(self):
        with self.assertRaises(PreconditionError):
            derive_n_bound(BALANCING, 2)

    def test_chain_stays_below_packaged_constant(self):
        for tag, ks in ((BALANCING, (3, 10, 100, 450)), (LUCAS, (3, 10, 100, 500))):
            for k in ks:
                chain = chain_n_bound(tag, k)
                self.assertLessEqual(chain.ratio, mp.mpf('1.01'), f"{tag} k={k}: {chain.steps}")

    def test_height_budget(self):
        budget = height_budget(BALANCING, 100)
        with mp.workdps(30):
            self.assertAlmostEqual(float(budget.h_eta3_bound), float(mp.mpf('6.7') * mp.log(100)), places=10)
        self.assertEqual(height_budget(LUCAS, 7).which_theorem, LUCAS)
        with self.assertRaises(DomainError):
            height_budget('pell', 7)

    def test_large_k_coefficients(self):
        self.assertLessEqual(large_k_log_coefficient(BALANCING), mp.mpf('1.1e13'))
        self.assertLessEqual(large_k_log_coefficient(LUCAS), mp.mpf('8.52e10'))

    def test_large_k_caps_within_published(self):
        for tag in (BALANCING, LUCAS):
            bounds = large_k_initial_bounds(tag)
            self.assertTrue(bounds.within_published, f"{tag}: k < {bounds.k_cap}, n < {bounds.n_cap}")


class TestSlackFacts(unittest.TestCase):

    def test_all_slack_facts_hold(self):
        for tag in (BALANCING, LUCAS):
            results = verify_slack_facts(tag, scan_to=300)
            self.assertEqual(len(results), 6)
            for result in results:
                self.assertTrue(result.holds, f"{result.name} fails at {result.first_failure}")


if __name__ == '__main__':
    unittest.main()
