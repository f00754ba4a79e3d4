"""
Configuration defaults and key=value settings files
"""

import os
from dataclasses import dataclass, fields, replace

from logic.errors import MultigramError

# ============================
# CONFIGURATION
# ============================

DEFAULT_MIN_LEN = 2

# class keys: windows with at most this many non-singleton positions
MAX_CLASS_POSITIONS = 3
CLASS_INSTANTIATION_CAP = 4096

EXPANSION_CAP = 1024

NODE_LIMIT = 1_000_000
EXHAUSTIVE_MAX_COLUMNS = 16

# grams whose support a Corpus remembers between calls
SUPPORT_CACHE_LIMIT = 100_000

LP_TOLERANCE = 1e-6
TIE_TOLERANCE = 1e-9

FREE_SELECTIVITY = 0.1
BEST_BENEFIT = "pruned"  # or "matched"


@dataclass(frozen=True)
class Settings:
    min_len: int = DEFAULT_MIN_LEN
    max_class_positions: int = MAX_CLASS_POSITIONS
    class_instantiation_cap: int = CLASS_INSTANTIATION_CAP
    expansion_cap: int = EXPANSION_CAP
    node_limit: int = NODE_LIMIT
    lp_tolerance: float = LP_TOLERANCE
    free_selectivity: float = FREE_SELECTIVITY
    free_max_len: int = 0  # 0 means unbounded
    best_benefit: str = BEST_BENEFIT
    best_top_k: int = 100
    seed: int = 0

    def with_overrides(self, **overrides):
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise MultigramError(f"unknown settings: {', '.join(sorted(unknown))}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def read_key_value_file(path):
    """
    Parse a key=value file

    Blank lines and lines starting with # are ignored.

    Returns:
        dict mapping keys to raw string values
    """
    if not os.path.exists(path):
        raise MultigramError(f"settings file not found: {path}")

    values = {}
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise MultigramError(f"{path}:{number}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _coerce(template, raw):
    if isinstance(template, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    return raw


def load_settings(path=None, **overrides):
    """Build Settings from an optional key=value file plus keyword overrides"""
    settings = Settings()
    if path:
        raw = read_key_value_file(path)
        try:
            parsed = {
                f.name: _coerce(getattr(settings, f.name), raw[f.name])
                for f in fields(settings) if f.name in raw
            }
        except ValueError as e:
            raise MultigramError(f"{path}: {e}") from e
        unknown = set(raw) - {f.name for f in fields(settings)}
        if unknown:
            raise MultigramError(f"{path}: unknown settings {', '.join(sorted(unknown))}")
        settings = settings.with_overrides(**parsed)
    return settings.with_overrides(**overrides)
