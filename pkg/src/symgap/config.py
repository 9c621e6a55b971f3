"""Run configuration files (TOML) and report writers."""
from __future__ import annotations

import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int
    out: Path
    group: dict = field(default_factory=dict)
    phi: dict | None = None
    psi: dict | None = None
    trials: int | None = None
    sections: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    def resolved(self) -> dict:
        """Canonical mapping used for hashing and the sidecar."""
        data = dict(self.raw)
        data.update(command=self.command, seed=self.seed, out=str(self.out))
        if self.trials is not None:
            data["trials"] = self.trials
        return data

    @property
    def hash(self) -> str:
        return config_hash(self.resolved())


def config_hash(data: dict) -> str:
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _positive(name: str, value: Any) -> int:
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {value!r}") from None
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def _check_counts(data: Any, path: str = "") -> None:
    """Every key that names a count must hold positive integers."""
    count_keys = {"trials", "n", "d", "k", "m", "steps", "batch", "mc_sigma", "mc_data", "mc_points",
                  "pair_samples", "quadrature_points", "dim"}
    if isinstance(data, dict):
        for key, val in data.items():
            where = f"{path}.{key}" if path else key
            if key in count_keys:
                for v in (val if isinstance(val, list) else [val]):
                    _positive(where, v)
            else:
                _check_counts(val, where)
    elif isinstance(data, list):
        for i, item in enumerate(data):
            _check_counts(item, f"{path}[{i}]")


def load_config(path: str | Path, command: str, seed: int | None = None, trials: int | None = None,
                out: str | Path | None = None) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if "command" in raw and raw["command"] != command:
        raise ConfigError(f"config is for {raw['command']!r}, not {command!r}")
    if seed is None:
        if "seed" not in raw:
            raise ConfigError("a seed is mandatory (config key 'seed' or --seed)")
        seed = raw["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    if trials is None:
        trials = raw.get("trials")
    if trials is not None:
        trials = _positive("trials", trials)
    _check_counts(raw)
    out = Path(out if out is not None else raw.get("out", "."))
    known = {"command", "seed", "trials", "out", "group", "phi", "psi"}
    sections = {k: v for k, v in raw.items() if k not in known}
    group = raw.get("group", {"name": "trivial"})
    if isinstance(group, str):
        group = {"name": group}
    return RunConfig(command, seed, out, group, raw.get("phi"), raw.get("psi"), trials, sections, raw)


# --------------------------------------------------------------------------
# writers


def write_csv(path: str | Path, columns: Sequence[str], records: Iterable[dict]) -> None:
    """Comma-separated, header row, LF line endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow(rec)


def write_sidecar(path: str | Path, config: RunConfig, **extra) -> None:
    from symgap import __version__

    meta = {"command": config.command, "config_hash": config.hash, "seed": config.seed,
            "library_version": __version__, "config": config.resolved()}
    meta.update(extra)
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    try:
        import numpy as np
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.generic):
            return obj.item()
    except ImportError:  # pragma: no cover
        pass
    return str(obj)
