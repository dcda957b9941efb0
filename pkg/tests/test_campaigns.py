import unittest
import os
import sys
from fractions import Fraction

# Add src to path to allow direct import
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.campaigns import (
    WIDE_RETRIES,
    campaign_thm1_large_k,
    campaign_thm1_small_k,
    campaign_thm2_large_k,
    campaign_thm2_small_k,
    check_forms_nonvanishing,
    small_k_campaign,
    verify_reduction_constants,
)
from src.errors import DomainError, PreconditionError
from src.linforms import BALANCING, LUCAS
from src.manifest import PASS
from src.reduction import DEFAULT_RETRIES, LEGENDRE, REDUCED
from src.search import theorem_solutions


class TestSmallKCampaign(unittest.TestCase):

    def test_single_k_balancing(self):
        report = campaign_thm1_small_k(k_range=(3, 3), m_limit=12)
        self.assertEqual(report.status, PASS, report.failures)
        self.assertEqual(report.summary['m_searched'], 12)
        self.assertEqual(report.summary['instances'], 13)
        self.assertEqual(len(report.records), 13)
        self.assertEqual([r['stage'] for r in report.records].count(1), 1)
        for record in report.records:
            self.assertEqual(record['status'], REDUCED)
            self.assertEqual(record['k'], 3)
            self.assertIn(record['retry_limit'], (DEFAULT_RETRIES, WIDE_RETRIES))
        widened = sum(1 for r in report.records if r['retry_limit'] == WIDE_RETRIES)
        self.assertEqual(report.summary['widened'], widened)

    def test_single_k_lucas(self):
        """Stage 1 bounds m, stage 2 bounds n for every m up to the limit"""
        report = campaign_thm2_small_k(k_range=(2, 2), m_limit=6)
        self.assertEqual(report.status, PASS, report.failures)
        self.assertEqual(len(report.records), 7)
        self.assertLessEqual(report.summary['m_max'], 554)
        self.assertEqual(sorted(r['m'] for r in report.records if r['stage'] == 2), [1, 2, 3, 4, 5, 6])
        self.assertLessEqual(report.summary['l_max'], 454)

    def test_smoke_subset(self):
        """k in {3, 50, 450} stays within the published m ceiling"""
        report = campaign_thm1_small_k(k_values=(450, 3, 50), m_limit=12)
        self.assertEqual(report.status, PASS, report.failures)
        self.assertEqual(sorted({r['k'] for r in report.records}), [3, 50, 450])
        self.assertLessEqual(report.summary['m_max'], 443)
        self.assertEqual(report.summary['instances'], 3 + 3 * 12)
        with self.assertRaises(DomainError):
            small_k_campaign(BALANCING, k_values=())

    def test_range_below_theorem(self):
        with self.assertRaises(PreconditionError):
            small_k_campaign(BALANCING, k_range=(2, 4))

    def test_reversed_range(self):
        with self.assertRaises(DomainError):
            small_k_campaign(LUCAS, k_range=(9, 4))


@unittest.skipUnless(os.getenv('REPRO_SLOW_TESTS'), 'large-k chains run with run_tests.py --slow')
class TestLargeKCampaigns(unittest.TestCase):

    def test_balancing_large_k(self):
        report = campaign_thm1_large_k()
        self.assertEqual(report.status, PASS, [c.to_record() for c in report.checks if not c.passed])
        self.assertEqual(report.summary['k_max'], 1180)
        self.assertLessEqual(report.summary['k_max_computed'], 1180)
        self.assertEqual(report.summary['k_max_computed'] % 2, 0)
        self.assertEqual(len(report.records), 2)
        self.assertLess(report.summary['second_k_bound'].upper_fraction(), 450)

    def test_lucas_large_k(self):
        """mu = 0 here, so both passes take the Legendre route"""
        report = campaign_thm2_large_k()
        self.assertEqual(report.status, PASS, [c.to_record() for c in report.checks if not c.passed])
        self.assertEqual(report.summary['first_a_max'], 4008)
        self.assertEqual(report.summary['first_n_index'], 302)
        self.assertEqual(report.summary['k_max'], 1082)
        self.assertLessEqual(report.summary['k_max_computed'], 1082)
        self.assertEqual([r['status'] for r in report.records], [LEGENDRE, LEGENDRE])
        self.assertLess(report.summary['second_k_bound'].upper_fraction(), 500)


class TestConstants(unittest.TestCase):

    def test_reduction_constants(self):
        for tag in (BALANCING, LUCAS):
            checks = verify_reduction_constants(tag)
            self.assertEqual(len(checks), 8)
            for check in checks:
                self.assertTrue(check.passed, check.to_record())

    def test_forms_nonvanishing_at_solutions(self):
        solutions = theorem_solutions('B', 5, 5) + theorem_solutions('C', 2, 2)
        records = check_forms_nonvanishing(solutions)
        self.assertEqual(len(records), 3 * len(solutions))
        for record in records:
            self.assertNotEqual(record['sign'], 0, record)

    def test_lucas_form_sign_at_known_solution(self):
        """C_1 = 3 = F_4 F_2 with k = 2: gamma / (2 phi^6 / 5) - 1 < 0"""
        solution = [rec for rec in theorem_solutions('C', 2, 2) if rec.m == 2]
        records = {r['form']: r for r in check_forms_nonvanishing(solution)}
        self.assertEqual(records['stage1']['sign'], -1)
        self.assertLess(Fraction(records['stage1']['value']), 0)


if __name__ == '__main__':
    unittest.main()
