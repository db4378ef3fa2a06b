"""Run configuration: an INI-style file plus flag overrides, and the
metadata block every output artifact embeds.

Config keys are addressed as ``section.key`` (e.g. ``trainer.epochs``);
command-line flags always win over the file.  The effective, fully resolved
parameter set of a command is hashed so that artifacts record exactly what
produced them: two runs with equal (config hash, seed, version) triples
yield byte-identical outputs apart from wallclock fields.
"""

from __future__ import annotations

import configparser
import hashlib
from pathlib import Path

from solverank.errors import DataError


class RunConfig:
    """Flat ``section.key -> string`` view of an INI config file."""

    def __init__(self, values: dict[str, str] | None = None):
        self.values = dict(values or {})

    @classmethod
    def load(cls, path: str | None) -> "RunConfig":
        if path is None:
            return cls()
        if not Path(path).exists():
            raise DataError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise DataError(f"cannot parse config {path}: {exc}") from exc
        values = {
            f"{section}.{key}": value
            for section in parser.sections()
            for key, value in parser.items(section)
        }
        return cls(values)

    def get(self, key: str, default=None):
        return self.values.get(key, default)


def resolve(flag_value, config: RunConfig, key: str, default, cast):
    """Flag beats config beats default; config strings are cast."""
    if flag_value is not None:
        return flag_value
    raw = config.get(key)
    if raw is None:
        return default
    try:
        if cast is bool:
            lowered = str(raw).strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise DataError(f"config key {key}={raw!r} is not a valid {cast.__name__}") from exc


def config_hash(effective: dict) -> str:
    """Order-independent hash of the resolved parameters of a command."""
    lines = sorted(f"{k}={effective[k]!r}" for k in effective)
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()[:16]


def artifact_meta(command: str, effective: dict, seed: int) -> dict:
    from solverank import __version__

    return {
        "command": command,
        "config_hash": config_hash(effective),
        "seed": seed,
        "version": __version__,
    }
