#!/usr/bin/env python3

import argparse
import datetime
import platform
import sys
import time
import traceback
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional


# Version identifier - Update this when code changes
VERSION = "1.0.0"
BUILD_DATE = "2026-10-19:09:00"

from src.commands import (
    bounds_stage,
    certification_stage,
    cmd_bounds,
    cmd_campaign,
    cmd_cf,
    cmd_phi,
    cmd_reduce,
    cmd_report,
    cmd_search,
    cmd_seq,
    large_k_stage,
    parse_range,
    prefix_stage,
    search_stage,
    sequence_stage,
    small_k_stage,
)
from src.config import RunConfig
from src.errors import ReproductionError
from src.manifest import FAIL, Manifest, StageResult, render_report
from src.persistence import ResultWriter, format_time
from src.search import SolutionRecord, format_solution_table


class ReproductionWorkflow:
    """Runs every stage in order and collects the results into a manifest"""

    def __init__(self, config: RunConfig, out_dir: str = 'results'):
        self.config = config
        self.out_dir = Path(out_dir)
        self.writer = ResultWriter('jsonl')
        self.stages: List[StageResult] = []
        self.timings: Dict[str, float] = {}
        self.solutions: List[SolutionRecord] = []
        self.workflow_start_time = time.time()
        self.workflow_start_datetime = datetime.datetime.now()
        self.quiet = bool(getattr(config, 'quiet', False))

    def _progress(self, message: str) -> None:
        if not self.quiet:
            print(message)

    def _run_stage(self, step: str, name: str, build: Callable[[], Any]) -> Optional[Any]:
        """Run one stage builder; errors become failure records instead of aborting the run"""
        self._progress(f"\n🔄 [STEP {step}: {name.upper()}] Running...")
        start_time = time.time()
        try:
            outcome = build()
        except ReproductionError as e:
            print(f"❌ [STEP {step}: {name.upper()}] {type(e).__name__}: {e.message}")
            self.stages.append(StageResult(name=name, failures=[{**e.to_record(), 'stage': name}]).settle())
            return None
        except Exception as e:
            print(f"❌ [STEP {step}: {name.upper()}] Unexpected error: {e}")
            traceback.print_exc()
            self.stages.append(StageResult(name=name, failures=[{
                'stage': name, 'instance': None, 'error': type(e).__name__, 'message': str(e), 'exit_code': 3,
            }]).settle())
            return None
        finally:
            self.timings[name] = round(time.time() - start_time, 3)

        stage, extra = outcome if isinstance(outcome, tuple) else (outcome, None)
        self.stages.append(stage)
        icon = '✅' if stage.status != FAIL else '❌'
        self._progress(f"{icon} [STEP {step}: {name.upper()}] {stage.status} in {format_time(self.timings[name])}")
        for failure in stage.failures[:10]:
            print(f"  ❌ {failure.get('instance')}: {failure.get('message')}")
        if len(stage.failures) > 10:
            print(f"  ... and {len(stage.failures) - 10} more")
        return extra

    def _save_records(self, name: str, records: List[Dict[str, Any]]) -> None:
        if records:
            self.writer.write_records(str(self.out_dir / f"{name}.jsonl"), records)

    def run(self) -> Manifest:
        cfg = self.config
        self.out_dir.mkdir(parents=True, exist_ok=True)

        self._run_stage('2', 'sequences', lambda: sequence_stage(cfg))
        self._run_stage('3', 'bounds', lambda: bounds_stage(cfg))

        for theorem in cfg.theorems:
            records = self._run_stage(f"4.{theorem}", f"thm{theorem}.small", lambda: small_k_stage(cfg, theorem))
            self._save_records(f"thm{theorem}.small", records or [])
        for theorem in cfg.theorems:
            records = self._run_stage(f"5.{theorem}", f"thm{theorem}.large", lambda: large_k_stage(cfg, theorem))
            self._save_records(f"thm{theorem}.large", records or [])

        self._run_stage('6', 'prefix', lambda: prefix_stage(cfg))
        for theorem in cfg.theorems:
            found = self._run_stage(f"7.{theorem}", f"thm{theorem}.search", lambda: search_stage(cfg, theorem))
            self.solutions.extend(found or [])
        self._save_records('solutions', [rec.to_record() for rec in self.solutions])

        self._run_stage('8', 'certification', lambda: certification_stage(cfg, self.solutions))

        total_time = time.time() - self.workflow_start_time
        self._progress(f"\n🎉 [STEP 9: FINALIZING] All stages completed in {format_time(total_time)}")
        if self.solutions:
            self._progress(format_solution_table(self.solutions))

        return Manifest(
            config=cfg.as_record(),
            stages=self.stages,
            meta={
                'version': VERSION,
                'host': platform.node(),
                'python': platform.python_version(),
                'started': self.workflow_start_datetime.isoformat(timespec='seconds'),
                'finished': datetime.datetime.now().isoformat(timespec='seconds'),
                'elapsed': round(total_time, 3),
                'stage_seconds': self.timings,
            },
        )


def cmd_verify_all(cfg: RunConfig, out_dir: str = 'results') -> int:
    """Run the whole reproduction, write the manifest, return the exit code"""
    manifest = ReproductionWorkflow(cfg, out_dir).run()
    manifest_path = Path(out_dir) / 'manifest.json'
    manifest.save(str(manifest_path))
    print(f"\n💾 Manifest written to {manifest_path}")
    print(render_report(manifest))
    return manifest.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='reproduce.py',
        description='Certified reproduction of the solutions of B_l = F_n^(k) F_m^(k) and C_l = F_n^(k) F_m^(k)',
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {VERSION}")
    parser.add_argument('--working-bits', type=int, help='initial interval precision in bits')
    parser.add_argument('--max-bits', type=int, help='precision ceiling before giving up')
    parser.add_argument('--jobs', type=int, help='worker processes')
    parser.add_argument('--cache-dir', help='directory for the dominant-root cache')
    parser.add_argument('--format', dest='output_format', choices=('jsonl', 'csv', 'table'), help='record output format')
    parser.add_argument('--theorems', help='comma separated theorem selection, e.g. 1,2')
    parser.add_argument('--config', dest='config_file', help='YAML file with configuration overrides')
    parser.add_argument('--quiet', action='store_true', default=None, help='do not print the configuration')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('phi', help='dominant roots phi(k) and f_k(phi)')
    p.add_argument('--k', required=True, help='k or a range a..b')
    p.add_argument('--digits', type=int, default=30)
    p.add_argument('--out')

    p = sub.add_parser('seq', help='balancing, Lucas-balancing or k-Fibonacci terms')
    p.add_argument('kind', choices=('balancing', 'lucas', 'kfib'))
    p.add_argument('--count', type=int, default=20, help='largest index to emit')
    p.add_argument('--k', type=int)
    p.add_argument('--out')

    p = sub.add_parser('cf', help='certified continued fraction of a named constant')
    p.add_argument('x', help='JSON constant spec, inline or as a file path')
    group = p.add_mutually_exclusive_group()
    group.add_argument('--count', type=int, default=30)
    group.add_argument('--min-denominator')
    p.add_argument('--out')

    p = sub.add_parser('reduce', help='run one reduction instance')
    p.add_argument('instance', help='JSON {tau_spec, mu_spec, A, B, M}, inline or as a file path')

    p = sub.add_parser('bounds', help='n bounds per k, slack facts and reduction constants')
    p.add_argument('--theorem', type=int, choices=(1, 2), required=True)
    p.add_argument('--k', help='k or a range a..b; without it, print the theorem-wide checks')
    p.add_argument('--out')

    p = sub.add_parser('campaign', help='small-k or large-k reduction campaign')
    p.add_argument('--theorem', type=int, choices=(1, 2), required=True)
    p.add_argument('--stage', choices=('small', 'large'), required=True)
    p.add_argument('--k-range')
    p.add_argument('--m-limit', type=int)
    p.add_argument('--out')

    p = sub.add_parser('search', help='exhaustive search of one box')
    p.add_argument('--equation', choices=('B', 'C'), required=True)
    p.add_argument('--k', required=True, help='range a..b')
    p.add_argument('--n-max', type=int, required=True)
    p.add_argument('--l-max', type=int, required=True)
    p.add_argument('--out')
    p.add_argument('--allow-out-of-theorem', action='store_true')

    p = sub.add_parser('verify-all', help='run every stage and write the manifest')
    p.add_argument('--smoke', action='store_true', help='small k range, capped m, large-k stages skipped')
    p.add_argument('--k-range')
    p.add_argument('--out-dir', default='results')

    p = sub.add_parser('report', help='render a manifest as a comparison table')
    p.add_argument('manifest')
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Environment and YAML first, then command-line flags on top"""
    config = RunConfig()
    for key in ('working_bits', 'max_bits', 'jobs', 'cache_dir', 'output_format', 'quiet'):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    if args.theorems:
        config.theorems = RunConfig._parse_theorems(args.theorems)
    if args.config_file:
        config.config_file = args.config_file
        config._apply_overrides(RunConfig._read_config_file(args.config_file))
    if getattr(args, 'smoke', False):
        config.smoke = True
    if getattr(args, 'k_range', None) and args.command == 'verify-all':
        config.k_range = parse_range(args.k_range)
    config.validate()
    return config


HANDLERS = {
    'phi': cmd_phi,
    'seq': cmd_seq,
    'cf': cmd_cf,
    'reduce': cmd_reduce,
    'bounds': cmd_bounds,
    'campaign': cmd_campaign,
    'search': cmd_search,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        if args.command == 'report':
            print(cmd_report(args.manifest))
            return 0

        config = load_config(args)
        if args.command == 'verify-all':
            print(f"🚀 Starting reproduction workflow v{VERSION} ({BUILD_DATE})...")
            print("🚀 [STEP 1: INITIALIZATION] Loading configuration...")
            if not config.quiet:
                config.print_config()
            code = cmd_verify_all(config, args.out_dir)
            print("✅ Workflow completed successfully." if code == 0 else f"❌ Workflow failed with exit code {code}.")
            return code
        return HANDLERS[args.command](args, config)

    except ReproductionError as e:
        print(f"❌ {type(e).__name__}: {e.message}")
        return e.exit_code
    except FileNotFoundError as e:
        print(f"❌ {e}")
        return 3
    except Exception as e:
        print(f"❌ Fatal error: {e}")
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
