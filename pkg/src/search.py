#!/usr/bin/env python3
"""Exhaustive search of F_n^(k) F_m^(k) against balancing and Lucas-balancing numbers.

Membership is decided by exact integer comparison against a sorted table of
targets; products are enumerated with m ascending so each row stops at the
first product beyond the largest target.
"""

from bisect import bisect_left
from dataclasses import asdict, dataclass
from functools import lru_cache
from itertools import groupby
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import DomainError, PreconditionError, SchemaMismatch
from .linforms import BALANCING, LUCAS, check_tag
from .persistence import render_table
from .pool import parallel_map
from .sequences import KFibonacciTable, balancing_terms, lucas_balancing_terms


EQUATION_ALIASES = {'B': BALANCING, 'C': LUCAS, BALANCING: BALANCING, LUCAS: LUCAS}
TARGET_SYMBOL = {BALANCING: 'B', LUCAS: 'C'}
# k = 2 belongs to the balancing equation's earlier literature, not to this theorem
THEOREM_MIN_K = {BALANCING: 3, LUCAS: 2}


def equation_tag(name: str) -> str:
    if name not in EQUATION_ALIASES:
        raise DomainError(f"unknown equation {name!r}, expected B or C")
    return EQUATION_ALIASES[name]


@dataclass(frozen=True)
class SolutionRecord:
    equation: str
    l: int
    k: int
    n: int
    m: int
    value: int
    out_of_theorem: bool = False

    @property
    def sort_key(self) -> Tuple[int, int, int, int]:
        return (self.k, self.n, self.m, self.l)

    def to_record(self) -> Dict:
        record = asdict(self)
        record['value'] = str(self.value)
        if not self.out_of_theorem:
            record.pop('out_of_theorem')
        return record

    @classmethod
    def from_record(cls, record: Dict) -> 'SolutionRecord':
        try:
            return cls(equation=equation_tag(record['equation']), l=int(record['l']), k=int(record['k']),
                       n=int(record['n']), m=int(record['m']), value=int(record['value']),
                       out_of_theorem=bool(record.get('out_of_theorem', False)))
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaMismatch(f"malformed solution record {record!r}: {e}")

    def describe(self) -> str:
        return (f"{TARGET_SYMBOL[self.equation]}_{self.l} = "
                f"F_{self.m}^({self.k}) F_{self.n}^({self.k}) = {self.value}")


class TargetIndex:
    """Sorted B_l or C_l for 1 <= l <= l_max with exact lookup"""

    def __init__(self, equation: str, l_max: int):
        self.equation = check_tag(equation)
        if l_max < 1:
            raise DomainError(f"l_max must be at least 1, got {l_max}")
        self.l_max = l_max
        terms = balancing_terms(l_max) if equation == BALANCING else lucas_balancing_terms(l_max)
        self.values = terms[1:]
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise DomainError(f"{equation} targets are not strictly increasing")

    @property
    def max_value(self) -> int:
        return self.values[-1]

    def lookup(self, value: int) -> Optional[int]:
        """l with target_l == value, or None"""
        pos = bisect_left(self.values, value)
        if pos < len(self.values) and self.values[pos] == value:
            return pos + 1
        return None

    def __len__(self) -> int:
        return len(self.values)


@lru_cache(maxsize=8)
def target_index(equation: str, l_max: int) -> TargetIndex:
    return TargetIndex(equation, l_max)


def _search_k(task: Tuple[str, int, int, int, bool]) -> List[SolutionRecord]:
    equation, k, n_max, l_max, out_of_theorem = task
    index = target_index(equation, l_max)
    terms = KFibonacciTable(k).terms(n_max)
    limit = index.max_value
    found = []
    for n in range(1, n_max + 1):
        for m in range(1, n + 1):
            product = terms[n] * terms[m]
            if product > limit:
                break
            l = index.lookup(product)
            if l is not None:
                found.append(SolutionRecord(equation, l, k, n, m, product, out_of_theorem))
    return found


def brute_force_box(equation: str, k_lo: int, k_hi: int, n_max: int, l_max: int, jobs: int = 1,
                    allow_out_of_theorem: bool = False) -> List[SolutionRecord]:
    """Every (l, k, n, m) with 1 <= m <= n <= n_max, 1 <= l <= l_max solving the equation.

    Sorted by (k, n, m, l). A reversed k range yields no records. Balancing
    with k < 3 needs allow_out_of_theorem and marks those records.
    """
    equation = equation_tag(equation)
    if n_max < 1 or l_max < 1:
        raise DomainError(f"n_max and l_max must be positive, got {n_max}, {l_max}")
    if k_lo > k_hi:
        return []
    if k_lo < 2:
        raise DomainError(f"k must be at least 2, got {k_lo}")
    min_k = THEOREM_MIN_K[equation]
    if k_lo < min_k and not allow_out_of_theorem:
        raise PreconditionError(f"{equation} search below k = {min_k} is outside the theorem; pass allow_out_of_theorem")
    tasks = [(equation, k, n_max, l_max, k < min_k) for k in range(k_lo, k_hi + 1)]
    records = [rec for batch in parallel_map(_search_k, tasks, jobs) for rec in batch]
    return sorted(records, key=lambda rec: rec.sort_key)


# The trivial range 2 <= n <= k + 1, where F_n^(k) = 2^(n-2)

@dataclass
class PrefixReport:
    equation: str
    k_lo: int
    k_hi: int
    powers_of_two: List[Tuple[int, int]]
    solutions: List[SolutionRecord]

    @property
    def only_trivial(self) -> bool:
        """Only B_1 = 1 = F_2 F_2 for balancing, nothing for Lucas-balancing"""
        if self.equation == LUCAS:
            return not self.solutions
        return all(rec.l == 1 and rec.n == rec.m == 2 for rec in self.solutions) and \
            {rec.k for rec in self.solutions} == set(range(self.k_lo, self.k_hi + 1))


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


def prefix_case_check(equation: str, k_lo: int, k_hi: int) -> PrefixReport:
    """Which targets up to 2^(2k-2) are powers of two, and the (n, m) pairs they match"""
    equation = equation_tag(equation)
    report = PrefixReport(equation, k_lo, k_hi, [], [])
    if k_lo > k_hi:
        return report
    if k_lo < 2:
        raise DomainError(f"k must be at least 2, got {k_lo}")
    ceiling = 2 ** (2 * k_hi - 2)
    next_term = balancing_terms if equation == BALANCING else lucas_balancing_terms
    l_max = 1
    while next_term(l_max)[-1] <= ceiling:
        l_max *= 2
    terms = next_term(l_max)
    report.powers_of_two = [(l, v) for l, v in enumerate(terms) if l >= 1 and v <= ceiling and _is_power_of_two(v)]

    for k in range(k_lo, k_hi + 1):
        top = 2 * k - 2
        for l, value in report.powers_of_two:
            exponent = value.bit_length() - 1
            if exponent > top:
                continue
            # 2^(n-2) 2^(m-2) = 2^exponent with 2 <= m <= n <= k + 1
            for n in range(2, k + 2):
                m = exponent + 4 - n
                if 2 <= m <= n:
                    report.solutions.append(SolutionRecord(equation, l, k, n, m, value))
    report.solutions.sort(key=lambda rec: rec.sort_key)
    return report


# Independent recomputation

def _sqrt2_power(l: int) -> Tuple[int, int]:
    """(a, b) with (3 + 2 sqrt 2)^l = a + b sqrt 2"""
    result, base = (1, 0), (3, 2)
    while l:
        if l & 1:
            result = (result[0] * base[0] + 2 * result[1] * base[1], result[0] * base[1] + result[1] * base[0])
        base = (base[0] * base[0] + 2 * base[1] * base[1], 2 * base[0] * base[1])
        l >>= 1
    return result


def _naive_kfib(k: int, n: int) -> int:
    values = [1]
    while len(values) < n:
        values.append(sum(values[-k:]))
    return values[n - 1]


def certify_solution(rec: SolutionRecord) -> bool:
    """Recompute both sides without the memo tables; True iff the record holds"""
    if rec.equation not in (BALANCING, LUCAS) or not 1 <= rec.m <= rec.n or rec.l < 0 or rec.k < 2:
        return False
    a, b = _sqrt2_power(rec.l)
    target = b // 2 if rec.equation == BALANCING else a
    product = _naive_kfib(rec.k, rec.n) * _naive_kfib(rec.k, rec.m)
    return target == product == rec.value


# The published solution lists

def theorem_solutions(equation: str, k_lo: int, k_hi: int) -> List[SolutionRecord]:
    """Solutions the theorems list, restricted to k_lo <= k <= k_hi"""
    equation = equation_tag(equation)
    records = []
    if equation == BALANCING:
        for k in range(max(k_lo, THEOREM_MIN_K[BALANCING]), k_hi + 1):
            records.extend(SolutionRecord(BALANCING, 1, k, n, m, 1) for n, m in ((1, 1), (2, 1), (2, 2)))
        if k_lo <= 5 <= k_hi:
            records.extend(SolutionRecord(BALANCING, 6, 5, 15, m, 6930) for m in (1, 2))
    elif k_lo <= 2 <= k_hi:
        records.extend(SolutionRecord(LUCAS, 1, 2, 4, m, 3) for m in (1, 2))
    return sorted(records, key=lambda rec: rec.sort_key)


def diff_solutions(found: Sequence[SolutionRecord], expected: Sequence[SolutionRecord]) -> Dict[str, List[SolutionRecord]]:
    found_set, expected_set = set(found), set(expected)
    return {
        'missing': sorted(expected_set - found_set, key=lambda rec: rec.sort_key),
        'unexpected': sorted(found_set - expected_set, key=lambda rec: rec.sort_key),
    }


def _k_ranges(ks: List[int]) -> str:
    spans = []
    for _, run in groupby(enumerate(ks), key=lambda pair: pair[1] - pair[0]):
        run = [k for _, k in run]
        spans.append(str(run[0]) if len(run) == 1 else f"{run[0]}..{run[-1]}")
    return ', '.join(spans)


def format_solution_table(records: Sequence[SolutionRecord]) -> str:
    """One row per (equation, l, n, m) family with its k values collapsed into ranges"""
    families: Dict[Tuple, List[int]] = {}
    for rec in sorted(records, key=lambda r: (r.equation, r.l, r.n, r.m, r.k)):
        families.setdefault((rec.equation, rec.l, rec.n, rec.m, rec.value), []).append(rec.k)
    rows = []
    for (equation, l, n, m, value), ks in families.items():
        symbol = TARGET_SYMBOL[equation]
        rows.append({
            'solution': f"{symbol}_{l} = F_{m}^(k) F_{n}^(k)",
            'value': str(value),
            'k': _k_ranges(ks),
        })
    if not rows:
        return 'no solutions'
    return render_table(rows, ('solution', 'value', 'k'))
