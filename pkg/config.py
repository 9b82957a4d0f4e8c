# config.py — Load configuration from .env and provide pipeline defaults
#
# This module is imported by all other modules. It reads the .env file once
# at startup and exposes settings as simple module-level variables.
# PipelineConfig bundles them for one run; load_config() layers a key=value
# config file and command-line overrides on top of these defaults.

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values, load_dotenv

PROJECT_DIR = Path(__file__).parent
DATA_DIR    = PROJECT_DIR / "data"

# Path to the .env file (same directory as this file)
ENV_FILE = PROJECT_DIR / ".env"

# Load the .env file into environment variables
load_dotenv(ENV_FILE)

# --- Static analysis ---
CATALOG_PATH   = os.getenv("DROIDMARK_CATALOG", str(DATA_DIR / "susi_catalog.tsv"))
ALIAS          = os.getenv("DROIDMARK_ALIAS", "on").lower() in ("on", "true", "1", "yes")
ACCESS_PATH_K  = int(os.getenv("DROIDMARK_ACCESS_PATH_K", "2"))
MAX_ITERATIONS = int(os.getenv("DROIDMARK_MAX_ITERATIONS", "10000"))

# Device processes that are always monitored. The static analysis cannot see
# them, so they are configured rather than discovered.
_raw_system = os.getenv(
    "DROIDMARK_SYSTEM_PROCESSES",
    "com.samsung.ui,com.android.bluetooth,com.sec.imsservice,datapole.rathi.monitor",
)
SYSTEM_PROCESSES = [p.strip() for p in _raw_system.split(",") if p.strip()]

# --- Monitoring ---
WINDOW_MS = int(os.getenv("DROIDMARK_WINDOW_MS", "5000"))

# --- Classifier and evaluation ---
ALPHA       = float(os.getenv("DROIDMARK_ALPHA", "0.5"))
MAX_PARENTS = int(os.getenv("DROIDMARK_MAX_PARENTS", "2"))
FOLDS       = int(os.getenv("DROIDMARK_FOLDS", "10"))
SEED        = int(os.getenv("DROIDMARK_SEED", "1"))


class ConfigError(Exception):
    """Raised for unknown keys or out-of-range values in a config file."""


@dataclass(frozen=True)
class AnalysisConfig:
    """Settings consumed by taint.analyze()."""
    alias: bool = True
    k: int = 2
    max_iterations: int = 10_000


@dataclass(frozen=True)
class PipelineConfig:
    catalog: str = CATALOG_PATH
    system_processes: tuple = tuple(SYSTEM_PROCESSES)
    alias: bool = ALIAS
    k: int = ACCESS_PATH_K
    max_iterations: int = MAX_ITERATIONS
    window_ms: int = WINDOW_MS
    alpha: float = ALPHA
    max_parents: int = MAX_PARENTS
    folds: int = FOLDS
    seed: int = SEED

    def analysis(self) -> AnalysisConfig:
        return AnalysisConfig(alias=self.alias, k=self.k, max_iterations=self.max_iterations)

    def validate(self) -> "PipelineConfig":
        for name in ("k", "max_iterations", "window_ms", "folds"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_parents < 0:
            raise ConfigError(f"max_parents must not be negative, got {self.max_parents}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must not be negative, got {self.alpha}")
        if self.seed < 0:
            raise ConfigError(f"seed must not be negative, got {self.seed}")
        return self


def _convert(name: str, raw):
    """Coerce a raw config value (string from a file or a CLI value) to the field type."""
    if raw is None:
        raise ConfigError(f"{name} has no value")
    try:
        if name == "alias":
            if isinstance(raw, bool):
                return raw
            value = str(raw).strip().lower()
            if value in ("on", "true", "1", "yes"):
                return True
            if value in ("off", "false", "0", "no"):
                return False
            raise ConfigError(f"alias must be on or off, got {raw!r}")
        if name == "system_processes":
            if isinstance(raw, str):
                return tuple(p.strip() for p in raw.split(",") if p.strip())
            return tuple(raw)
        if name == "alpha":
            return float(raw)
        if name == "catalog":
            return str(raw)
        return int(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}")


def load_config(path: Optional[str] = None, **overrides) -> PipelineConfig:
    """
    Build a PipelineConfig from the module defaults, an optional key=value
    file, and keyword overrides (None values are ignored).

    Keys in the file are the PipelineConfig field names, case-insensitive,
    e.g.  window_ms=2000  or  alias=off.
    """
    known  = {f.name for f in fields(PipelineConfig)}
    values = {}

    if path:
        if not Path(path).exists():
            raise ConfigError(f"config file not found: {path}")
        for key, raw in dotenv_values(path).items():
            name = key.strip().lower()
            if name not in known:
                raise ConfigError(f"unknown config key: {key}")
            values[name] = _convert(name, raw)

    for name, raw in overrides.items():
        if raw is None:
            continue
        if name not in known:
            raise ConfigError(f"unknown config key: {name}")
        values[name] = _convert(name, raw)

    return replace(PipelineConfig(), **values).validate()
