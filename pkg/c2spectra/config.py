"""
config.py

Budget settings. Resolution order (later wins):
  1. defaults below
  2. key=value file  → spectra.env in the working directory, or $SPECTRA_CONFIG
  3. environment     → SPECTRA_<KEY>
"""

import os
import dataclasses
import structlog
from dataclasses import dataclass, fields
from typing import Optional

from dotenv import dotenv_values

logger = structlog.get_logger(__name__)

DEFAULT_CONFIG_FILE = "spectra.env"
ENV_PREFIX          = "SPECTRA_"


@dataclass(frozen=True)
class Settings:
    max_types:               int  = 64
    max_free_atoms:          int  = 18
    max_rows:                int  = 1_000_000
    max_rows_per_type:       int  = 4096
    max_vertices:            int  = 100_000
    oracle_structure_cap:    int  = 6
    oracle_unary_cap:        int  = 8
    oracle_graph_cap:        int  = 12
    construction_search_cap: int  = 40
    solver_node_budget:      int  = 200_000
    expansion_budget:        int  = 20_000
    partial_depth_budget:    int  = 8
    oracle_fallback:         bool = True
    compact_types:           bool = True

    def replace(self, **changes) -> "Settings":
        return dataclasses.replace(self, **changes)


def _coerce(raw: str, kind):
    if kind is bool:
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    return kind(str(raw).strip())


def load_settings(path: Optional[str] = None) -> Settings:
    """Build Settings from defaults, an optional key=value file and the environment."""
    path = path or os.getenv("SPECTRA_CONFIG") or DEFAULT_CONFIG_FILE
    file_values = dotenv_values(path) if os.path.exists(path) else {}
    if file_values:
        logger.info("[CONFIG] Loaded budget file", path=path, keys=len(file_values))

    kinds = {f.name: f.type for f in fields(Settings)}
    kinds = {name: (bool if kind in (bool, "bool") else int) for name, kind in kinds.items()}

    values = {}
    for name, kind in kinds.items():
        key = name.upper()
        raw = os.getenv(ENV_PREFIX + key, file_values.get(key))
        if raw is None or raw == "":
            continue
        try:
            values[name] = _coerce(raw, kind)
        except ValueError:
            logger.warning("[CONFIG] Ignoring malformed value", key=key, value=raw)
    return Settings(**values)


_DEFAULT: Optional[Settings] = None


def get_settings() -> Settings:
    """Process-wide settings, loaded once."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_settings()
    return _DEFAULT


def set_settings(settings: Settings):
    global _DEFAULT
    _DEFAULT = settings
