#!/usr/bin/env python3

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .errors import ConfigError
from .numerics import DEFAULT_MAX_BITS, DEFAULT_WORKING_BITS, PrecisionContext
from .persistence import OUTPUT_FORMATS
from .root_cache import RootCache


DEFAULT_CACHE_DIR = '.repro-cache'


@dataclass
class RunConfig:
    """Configuration for a reproduction run, read from REPRO_* environment variables"""

    # Precision
    working_bits: int = field(default_factory=lambda: RunConfig._env_int('REPRO_WORKING_BITS', DEFAULT_WORKING_BITS))
    max_bits: int = field(default_factory=lambda: RunConfig._env_int('REPRO_MAX_BITS', DEFAULT_MAX_BITS))

    # Execution
    jobs: int = field(default_factory=lambda: RunConfig._env_int('REPRO_JOBS', 1))
    cache_dir: str = field(default_factory=lambda: RunConfig._env_optional('REPRO_CACHE_DIR', DEFAULT_CACHE_DIR))
    output_format: str = field(default_factory=lambda: RunConfig._env_optional('REPRO_OUTPUT_FORMAT', 'jsonl').lower())
    theorems: List[int] = field(default_factory=lambda: RunConfig._parse_theorems(RunConfig._env_optional('REPRO_THEOREMS', '1,2')))
    quiet: bool = field(default_factory=lambda: RunConfig._env_optional('REPRO_QUIET', 'false').lower() in ('1', 'true', 'yes'))
    config_file: str = field(default_factory=lambda: RunConfig._env_optional('REPRO_CONFIG', ''))

    # Set per invocation by the command line
    smoke: bool = False
    k_range: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.config_file:
            self._apply_overrides(self._read_config_file(self.config_file))
        self.validate()

    @staticmethod
    def _env_optional(name: str, default: str = '') -> str:
        return os.getenv(name, default).strip() or default

    @staticmethod
    def _env_int(name: str, default: int) -> int:
        raw = os.getenv(name, '').strip()
        if not raw:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{name} must be an integer, got {raw!r}")

    @staticmethod
    def _parse_theorems(text: Any) -> List[int]:
        if isinstance(text, (list, tuple)):
            items = [str(item) for item in text]
        else:
            items = [item.strip() for item in str(text).split(',') if item.strip()]
        try:
            return sorted({int(item) for item in items})
        except ValueError:
            raise ConfigError(f"theorem selection must list 1 and/or 2, got {text!r}")

    @staticmethod
    def _read_config_file(path: str) -> Dict[str, Any]:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(config_path.read_text(encoding='utf-8'))
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"could not read config file {path}: {e}")
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        return data

    def _apply_overrides(self, overrides: Dict[str, Any]) -> None:
        known = {f.name: f for f in fields(self)}
        for key, value in overrides.items():
            if key not in known or key == 'config_file':
                raise ConfigError(f"unknown config key {key!r}")
            if key == 'theorems':
                value = self._parse_theorems(value)
            elif key == 'k_range' and value is not None:
                value = tuple(int(v) for v in value)
            elif key in ('working_bits', 'max_bits', 'jobs'):
                try:
                    value = int(value)
                except (TypeError, ValueError):
                    raise ConfigError(f"{key} must be an integer, got {value!r}")
            elif key in ('quiet', 'smoke'):
                value = bool(value)
            else:
                value = str(value).strip()
            setattr(self, key, value)

    def validate(self) -> None:
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        if self.working_bits < 64:
            raise ConfigError(f"working_bits must be at least 64, got {self.working_bits}")
        if self.working_bits > self.max_bits:
            raise ConfigError(f"working_bits {self.working_bits} exceeds max_bits {self.max_bits}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output format must be one of {OUTPUT_FORMATS}, got {self.output_format!r}")
        if not self.theorems or any(t not in (1, 2) for t in self.theorems):
            raise ConfigError(f"theorem selection must list 1 and/or 2, got {self.theorems}")
        if self.k_range is not None and self.k_range[0] > self.k_range[1]:
            raise ConfigError(f"empty k range {self.k_range[0]}..{self.k_range[1]}")
        try:
            Path(self.cache_dir).mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cache dir {self.cache_dir} cannot be created: {e}")
        if not os.access(self.cache_dir, os.W_OK):
            raise ConfigError(f"cache dir {self.cache_dir} is not writable")

    def precision(self) -> PrecisionContext:
        return PrecisionContext(working_bits=self.working_bits, max_bits=self.max_bits)

    def root_cache(self) -> RootCache:
        return RootCache(self.cache_dir)

    def as_record(self) -> Dict[str, Any]:
        """The fields that determine a run's results, for the manifest"""
        return {
            'working_bits': self.working_bits,
            'max_bits': self.max_bits,
            'jobs': self.jobs,
            'theorems': list(self.theorems),
            'smoke': self.smoke,
            'k_range': list(self.k_range) if self.k_range else None,
        }

    def print_config(self) -> None:
        """Print current configuration"""
        print("\n=== Configuration ===")
        print(f"Working Bits: {self.working_bits}")
        print(f"Max Bits: {self.max_bits}")
        print(f"Jobs: {self.jobs}")
        print(f"Cache Dir: {self.cache_dir}")
        print(f"Output Format: {self.output_format}")
        print(f"Theorems: {', '.join(str(t) for t in self.theorems)}")
        if self.config_file:
            print(f"Config File: {self.config_file}")
        if self.smoke:
            print("Smoke Run: true")
        if self.k_range:
            print(f"K Range: {self.k_range[0]}..{self.k_range[1]}")
        print("====================\n")
