#!/usr/bin/env python3

import os
from fractions import Fraction
from pathlib import Path
from typing import Dict, Optional, Tuple

from mpmath import mp

from .errors import CacheInvalid
from .numerics import ApproxReal, certify_root_interval, interval_precision, psi_residual


CACHE_FILE_NAME = 'phi.txt'


class RootCache:
    """On-disk cache of certified dominant roots, one `phi <k> <bits> <midpoint> <err>` line each"""

    def __init__(self, cache_dir: str):
        self.cache_dir = Path(cache_dir)
        self.path = self.cache_dir / CACHE_FILE_NAME
        self._entries: Optional[Dict[Tuple[int, int], ApproxReal]] = None

    def _load(self) -> Dict[Tuple[int, int], ApproxReal]:
        if self._entries is not None:
            return self._entries
        entries = {}
        if self.path.exists():
            try:
                text = self.path.read_text(encoding='utf-8')
            except OSError as e:
                raise CacheInvalid(f"cannot read root cache {self.path}: {e}", stage="cache")
            for line_no, line in enumerate(text.splitlines(), start=1):
                if not line.strip():
                    continue
                k, bits, root = self._parse_line(line, line_no)
                problem = self._revalidate(k, bits, root)
                if problem:
                    raise CacheInvalid(
                        f"cached root for k={k} at {bits} bits fails re-validation: {problem}",
                        stage="cache",
                        instance=f"{self.path}:{line_no}",
                    )
                entries[(k, bits)] = root
        self._entries = entries
        return entries

    @staticmethod
    def _revalidate(k: int, bits: int, root: ApproxReal) -> Optional[str]:
        """Reason the cached interval is not a certified root at `bits`, or None"""
        if not certify_root_interval(k, root, bits + k + 64):
            return "no sign change inside the bracket"
        if root.err > mp.ldexp(1, -bits):
            return f"interval too wide ({root.err_decimal()})"
        tolerance = ApproxReal.exact(Fraction(1, 2 ** (bits - 10)))
        if abs(psi_residual(k, root, bits + k + 64)).lt(tolerance) is not True:
            return "root residual too large"
        return None

    def _parse_line(self, line: str, line_no: int) -> Tuple[int, int, ApproxReal]:
        parts = line.split()
        if len(parts) != 5 or parts[0] != 'phi':
            raise CacheInvalid(f"malformed cache line: {line!r}", stage="cache", instance=f"{self.path}:{line_no}")
        try:
            k, bits = int(parts[1]), int(parts[2])
            with interval_precision(bits + k + 64):
                root = ApproxReal.from_decimal(parts[3], parts[4])
        except (ValueError, ArithmeticError) as e:
            raise CacheInvalid(f"unparsable cache line {line!r}: {e}", stage="cache", instance=f"{self.path}:{line_no}")
        return k, bits, root

    def lookup(self, k: int, bits: int) -> Optional[ApproxReal]:
        return self._load().get((k, bits))

    def store(self, k: int, bits: int, root: ApproxReal) -> None:
        """Record a root and rewrite the cache file atomically, keeping entries other processes wrote"""
        self._entries = None
        entries = self._load()
        entries[(k, bits)] = root
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        lines = [self._format_line(key[0], key[1], value) for key, value in sorted(entries.items())]
        tmp_path = self.path.with_suffix(f'.{os.getpid()}.tmp')
        tmp_path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
        os.replace(tmp_path, self.path)

    @staticmethod
    def _format_line(k: int, bits: int, root: ApproxReal) -> str:
        # Enough digits for the midpoint to resolve the interval; the written
        # err is doubled to absorb decimal rounding of the midpoint.
        digits = int((bits + k + 64) * 0.30103) + 5
        with mp.workprec(bits + k + 96):
            midpoint = mp.nstr(root.midpoint, digits, strip_zeros=False)
            err = mp.nstr(2 * root.err + mp.ldexp(1, -(bits + k + 64)), 8)
        return f"phi {k} {bits} {midpoint} {err}"

    def clear(self) -> None:
        if self.path.exists():
            self.path.unlink()
        self._entries = None
