#!/usr/bin/env python3
"""Run manifest: every bound a run checked, the published figure it was
checked against, and the final verdict.

Layout (schema_version 1):

    {"schema_version": 1, "config": {...}, "stages": [...],
     "verdict": "PASS" | "FAIL", "failures": [...], "meta": {...}}

Timestamps, host details and timings live in `meta` only, so two runs with
the same config produce identical files outside that block.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from .constants import published
from .errors import SchemaMismatch
from .numerics import to_fraction
from .persistence import decimal_string, format_time, render_table


SCHEMA_VERSION = 1

PASS = 'PASS'
FAIL = 'FAIL'
SKIPPED = 'SKIPPED'

REPORT_COLUMNS = ('stage', 'label', 'published', 'computed', 'tolerance', 'status')


@dataclass
class BoundCheck:
    label: str
    published: Optional[str]
    computed: Optional[str]
    tolerance: str
    status: str

    @classmethod
    def against(cls, label: str, computed: Any, digits: int = 12) -> 'BoundCheck':
        """Compare a computed value with the published figure registered under `label`"""
        target = published(label)
        ok = target.accepts(to_fraction(computed))
        return cls(label=label, published=target.text, computed=decimal_string(computed, digits),
                   tolerance=target.tolerance, status=PASS if ok else FAIL)

    @classmethod
    def skipped(cls, label: str) -> 'BoundCheck':
        target = published(label)
        return cls(label=label, published=target.text, computed=None, tolerance=target.tolerance, status=SKIPPED)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def to_record(self) -> Dict[str, Any]:
        return {
            'label': self.label,
            'published': self.published,
            'computed': self.computed,
            'tolerance': self.tolerance,
            'status': self.status,
        }


@dataclass
class StageResult:
    name: str
    status: str = PASS
    checks: List[BoundCheck] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)

    def settle(self) -> 'StageResult':
        """Derive the status from the checks and failures unless already SKIPPED"""
        if self.status != SKIPPED:
            self.status = FAIL if self.failures or not all(c.passed for c in self.checks) else PASS
        return self

    def to_record(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'status': self.status,
            'checks': [check.to_record() for check in self.checks],
            'summary': {key: decimal_string(value) for key, value in self.summary.items()},
            'failures': self.failures,
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> 'StageResult':
        try:
            return cls(
                name=record['name'],
                status=record['status'],
                checks=[BoundCheck(**check) for check in record['checks']],
                summary=dict(record.get('summary', {})),
                failures=list(record.get('failures', [])),
            )
        except (KeyError, TypeError) as e:
            raise SchemaMismatch(f"malformed stage record: {e}")


@dataclass
class Manifest:
    config: Dict[str, Any]
    stages: List[StageResult] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def verdict(self) -> str:
        return FAIL if any(stage.status == FAIL for stage in self.stages) else PASS

    @property
    def failures(self) -> List[Dict[str, Any]]:
        records = []
        for stage in self.stages:
            for failure in stage.failures:
                records.append({'stage': stage.name, **failure})
            for check in stage.checks:
                if check.status == FAIL:
                    records.append({
                        'stage': stage.name,
                        'instance': check.label,
                        'error': 'ReproductionMismatch',
                        'message': f"computed {check.computed} vs published {check.published} ({check.tolerance})",
                        'exit_code': 1,
                    })
        return records

    @property
    def exit_code(self) -> int:
        if self.verdict == PASS:
            return 0
        return max(int(record.get('exit_code', 1)) for record in self.failures) if self.failures else 1

    def to_record(self) -> Dict[str, Any]:
        return {
            'schema_version': self.schema_version,
            'config': self.config,
            'stages': [stage.to_record() for stage in self.stages],
            'verdict': self.verdict,
            'failures': self.failures,
            'meta': self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_record(), indent=2, sort_keys=True) + '\n'

    def save(self, path: str) -> None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.dumps(), encoding='utf-8')

    @classmethod
    def load(cls, path: str) -> 'Manifest':
        source = Path(path)
        if not source.is_file():
            raise FileNotFoundError(f"manifest not found: {path}")
        text = source.read_text(encoding='utf-8')
        if not text.strip():
            raise SchemaMismatch(f"manifest {path} is empty")
        try:
            record = json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaMismatch(f"manifest {path} is not valid JSON: {e}")
        if not isinstance(record, dict) or record.get('schema_version') != SCHEMA_VERSION:
            raise SchemaMismatch(f"manifest {path} does not have schema_version {SCHEMA_VERSION}")
        for key in ('config', 'stages', 'verdict'):
            if key not in record:
                raise SchemaMismatch(f"manifest {path} lacks {key!r}")
        return cls(
            config=record['config'],
            stages=[StageResult.from_record(stage) for stage in record['stages']],
            meta=record.get('meta', {}),
        )


def render_report(manifest: Manifest) -> str:
    """Published figure vs computed value per check; skipped stages get one row"""
    rows = []
    for stage in manifest.stages:
        for check in stage.checks:
            rows.append({'stage': stage.name, **check.to_record()})
        if not stage.checks:
            rows.append({'stage': stage.name, 'label': '-', 'status': stage.status})
    lines = [render_table(rows, REPORT_COLUMNS), '', f"Verdict: {manifest.verdict}"]
    if 'elapsed' in manifest.meta:
        lines.append(f"Elapsed: {format_time(float(manifest.meta['elapsed']))}")
    for failure in manifest.failures:
        lines.append(f"  ❌ {failure.get('stage')}: {failure.get('instance') or '-'}: {failure.get('message')}")
    return '\n'.join(lines)
