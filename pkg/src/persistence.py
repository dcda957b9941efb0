#!/usr/bin/env python3

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from mpmath import mp

from .errors import ConfigError
from .numerics import ApproxReal


OUTPUT_FORMATS = ('jsonl', 'csv', 'table')


def decimal_string(value: Any, digits: int = 12) -> Optional[str]:
    """Render a number as a decimal string for reports and manifests"""
    if value is None:
        return None
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value) if abs(value) < 10 ** 18 else mp.nstr(mp.mpf(value), digits)
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return decimal_string(value.numerator, digits)
        return mp.nstr(mp.mpf(value.numerator) / value.denominator, digits)
    if isinstance(value, ApproxReal):
        return value.to_decimal(digits)
    if hasattr(value, '_mpf_'):
        return mp.nstr(value, digits)
    return str(value)


def format_time(seconds: float) -> str:
    """Elapsed seconds as 42.0s, 2m 5s or 1h 2m 5s"""
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes, secs = divmod(int(seconds), 60)
    hours, minutes = divmod(minutes, 60)
    if hours:
        return f"{hours}h {minutes}m {secs}s"
    return f"{minutes}m {secs}s"


def render_table(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    """Fixed-width text table; missing cells render as '-'"""
    cells = [[str(row.get(col)) if row.get(col) is not None else '-' for col in columns] for row in rows]
    widths = [max([len(col)] + [len(line[i]) for line in cells]) for i, col in enumerate(columns)]
    header = '  '.join(col.ljust(widths[i]) for i, col in enumerate(columns))
    rule = '  '.join('-' * w for w in widths)
    body = ['  '.join(value.ljust(widths[i]) for i, value in enumerate(line)) for line in cells]
    return '\n'.join([header, rule] + body)


class ResultWriter:
    """Writes campaign and search records as JSON lines, CSV or a text table"""

    def __init__(self, output_format: str = 'jsonl'):
        if output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output format must be one of {OUTPUT_FORMATS}, got {output_format!r}")
        self.output_format = output_format

    def read_file(self, file_path: str) -> str:
        """Read file content"""
        try:
            return Path(file_path).read_text(encoding='utf-8')
        except Exception as e:
            print(f"Error reading file {file_path}: {e}")
            return ""

    def write_file(self, file_path: str, content: str) -> bool:
        """Write content to file"""
        try:
            path = Path(file_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content, encoding='utf-8')
            return True
        except Exception as e:
            print(f"Error writing to file {file_path}: {e}")
            return False

    def format_records(self, records: List[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> str:
        columns = list(columns or self._columns(records))
        if self.output_format == 'jsonl':
            return ''.join(json.dumps(record, sort_keys=True) + '\n' for record in records)
        if self.output_format == 'csv':
            buffer = io.StringIO()
            writer = csv.DictWriter(buffer, fieldnames=columns, extrasaction='ignore', lineterminator='\n')
            writer.writeheader()
            writer.writerows(records)
            return buffer.getvalue()
        return render_table(records, columns) + '\n'

    def write_records(self, file_path: str, records: List[Dict[str, Any]],
                      columns: Optional[Sequence[str]] = None) -> bool:
        return self.write_file(file_path, self.format_records(records, columns))

    def read_records(self, file_path: str) -> List[Dict[str, Any]]:
        """Parse a JSON lines file written by write_records"""
        records = []
        for line_no, line in enumerate(self.read_file(file_path).splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                print(f"Warning: skipping malformed line {line_no} of {file_path}: {e}")
        return records

    @staticmethod
    def _columns(records: List[Dict[str, Any]]) -> List[str]:
        columns: List[str] = []
        for record in records:
            for key in record:
                if key not in columns:
                    columns.append(key)
        return columns
