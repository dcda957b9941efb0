import unittest
import os
import sys

# Add src to path to allow direct import
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.errors import DomainError, PreconditionError
from src.linforms import BALANCING, LUCAS
from src.search import (
    SolutionRecord,
    TargetIndex,
    brute_force_box,
    certify_solution,
    diff_solutions,
    format_solution_table,
    prefix_case_check,
    theorem_solutions,
)
from src.sequences import balancing_terms, kfib, lucas_balancing_terms


def naive_solutions(equation, k_lo, k_hi, n_max, l_max):
    """Quadruple loop without any early exit"""
    targets = balancing_terms(l_max) if equation == BALANCING else lucas_balancing_terms(l_max)
    found = []
    for k in range(k_lo, k_hi + 1):
        for n in range(1, n_max + 1):
            for m in range(1, n + 1):
                product = kfib(k, n) * kfib(k, m)
                for l in range(1, l_max + 1):
                    if targets[l] == product:
                        found.append((l, k, n, m))
    return sorted(found, key=lambda t: (t[1], t[2], t[3], t[0]))


class TestBruteForce(unittest.TestCase):

    def test_matches_naive_loop_balancing(self):
        found = brute_force_box('B', 3, 10, 40, 40)
        self.assertEqual([(r.l, r.k, r.n, r.m) for r in found], naive_solutions(BALANCING, 3, 10, 40, 40))

    def test_matches_naive_loop_lucas(self):
        found = brute_force_box('C', 2, 10, 40, 40)
        self.assertEqual([(r.l, r.k, r.n, r.m) for r in found], naive_solutions(LUCAS, 2, 10, 40, 40))

    def test_small_box_equals_theorem_lists(self):
        """Inside n, l <= 60 nothing beyond the listed solutions appears"""
        for equation, k_lo in (('B', 3), ('C', 2)):
            found = brute_force_box(equation, k_lo, 30, 60, 60)
            diff = diff_solutions(found, theorem_solutions(equation, k_lo, 30))
            self.assertEqual(diff, {'missing': [], 'unexpected': []})

    def test_b6_solution(self):
        found = brute_force_box('B', 5, 5, 20, 10)
        self.assertIn(SolutionRecord(BALANCING, 6, 5, 15, 2, 6930), found)
        self.assertIn(SolutionRecord(BALANCING, 6, 5, 15, 1, 6930), found)

    def test_out_of_theorem_k(self):
        with self.assertRaises(PreconditionError):
            brute_force_box('B', 2, 4, 20, 20)
        found = brute_force_box('B', 2, 2, 20, 20, allow_out_of_theorem=True)
        self.assertTrue(found)
        self.assertTrue(all(rec.out_of_theorem for rec in found))
        self.assertIn('out_of_theorem', found[0].to_record())

    def test_reversed_range_is_empty(self):
        self.assertEqual(brute_force_box('C', 9, 4, 20, 20), [])

    def test_argument_errors(self):
        with self.assertRaises(DomainError):
            brute_force_box('P', 3, 4, 20, 20)
        with self.assertRaises(DomainError):
            brute_force_box('C', 3, 4, 0, 20)

    def test_parallel_matches_serial(self):
        self.assertEqual(brute_force_box('C', 2, 6, 30, 30, jobs=2), brute_force_box('C', 2, 6, 30, 30))


@unittest.skipUnless(os.getenv('REPRO_SLOW_TESTS'), 'full boxes run with run_tests.py --slow')
class TestFullBoxes(unittest.TestCase):

    def test_balancing_box(self):
        """k in [3, 450], n <= 409, l <= 327: three B_1 families per k plus the two B_6 products"""
        found = brute_force_box('B', 3, 450, 409, 327, jobs=os.cpu_count() or 1)
        self.assertEqual(diff_solutions(found, theorem_solutions('B', 3, 450)), {'missing': [], 'unexpected': []})
        self.assertEqual(len(found), 3 * 448 + 2)

    def test_lucas_box(self):
        found = brute_force_box('C', 2, 500, 568, 454, jobs=os.cpu_count() or 1)
        self.assertEqual([(r.l, r.k, r.n, r.m) for r in found], [(1, 2, 4, 1), (1, 2, 4, 2)])


class TestTargetIndex(unittest.TestCase):

    def test_lookup(self):
        index = TargetIndex(BALANCING, 10)
        self.assertEqual(len(index), 10)
        self.assertEqual(index.lookup(6930), 6)
        self.assertEqual(index.lookup(1), 1)
        self.assertIsNone(index.lookup(7))
        self.assertIsNone(index.lookup(index.max_value + 1))

    def test_lucas_lookup(self):
        index = TargetIndex(LUCAS, 5)
        self.assertEqual(index.lookup(3363), 5)
        with self.assertRaises(DomainError):
            TargetIndex(LUCAS, 0)


class TestCertification(unittest.TestCase):

    def test_listed_solutions_certify(self):
        for rec in theorem_solutions('B', 3, 12) + theorem_solutions('C', 2, 12):
            self.assertTrue(certify_solution(rec), rec.describe())

    def test_wrong_records_fail(self):
        self.assertFalse(certify_solution(SolutionRecord(BALANCING, 2, 3, 3, 3, 6)))
        self.assertFalse(certify_solution(SolutionRecord(LUCAS, 1, 2, 4, 2, 4)))
        self.assertFalse(certify_solution(SolutionRecord(LUCAS, 1, 2, 2, 4, 3)))

    def test_describe(self):
        rec = SolutionRecord(BALANCING, 6, 5, 15, 2, 6930)
        self.assertEqual(rec.describe(), 'B_6 = F_2^(5) F_15^(5) = 6930')


class TestPrefixCase(unittest.TestCase):

    def test_balancing_prefix(self):
        """Only B_1 = 1 is a power of two, giving F_2 F_2 for every k"""
        report = prefix_case_check('B', 3, 20)
        self.assertEqual(report.powers_of_two, [(1, 1)])
        self.assertTrue(report.only_trivial)
        self.assertIn(SolutionRecord(BALANCING, 1, 5, 2, 2, 1), report.solutions)

    def test_lucas_prefix_is_empty(self):
        report = prefix_case_check('C', 2, 20)
        self.assertEqual(report.powers_of_two, [])
        self.assertTrue(report.only_trivial)

    def test_reversed(self):
        self.assertEqual(prefix_case_check('B', 8, 3).solutions, [])


class TestSolutionTable(unittest.TestCase):

    def test_k_ranges_collapse(self):
        table = format_solution_table(theorem_solutions('B', 3, 9))
        self.assertIn('B_1 = F_1^(k) F_1^(k)', table)
        self.assertIn('3..9', table)
        self.assertIn('6930', table)

    def test_empty(self):
        self.assertEqual(format_solution_table([]), 'no solutions')


if __name__ == '__main__':
    unittest.main()
