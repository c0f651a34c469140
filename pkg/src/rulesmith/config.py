"""Pipeline configuration: defaults, key=value files, CLI overrides.

Precedence is CLI flag over file entry over dataclass default. The full
configuration is embedded in every run manifest so a run can be repeated
bit-identically with the offline backends.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .ranker import MEASURES
from .generator import GenerationConfig


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    train: str = ""
    valid: str = ""
    test: str = ""
    out_dir: str = "run"
    max_len: int = 3
    k: int = 50
    d: int = 10
    seed_count: int = 50
    per_seed_cap: int = 100
    rng_seed: int = 0
    backend: str = "echo"
    replay_path: str = ""
    measure: str = "pca"
    top_n: int = 10
    parallelism: int = 1
    model: str = "gpt-3.5-turbo-0613"
    endpoint: str = "https://api.openai.com/v1"
    temperature: float = 0.0
    max_retries: int = 3
    min_request_interval: float = 0.0
    unranked_policy: str = "midpoint"

    def __post_init__(self):
        for name in ("max_len", "k", "d", "seed_count", "per_seed_cap",
                     "top_n", "parallelism"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.measure not in MEASURES:
            raise ConfigError(f"measure must be one of {MEASURES}")
        if self.backend not in ("echo", "replay", "live"):
            raise ConfigError("backend must be echo, replay, or live")

    def generation_config(self) -> GenerationConfig:
        return GenerationConfig(
            k=self.k, d=self.d, max_len=self.max_len, model=self.model,
            endpoint=self.endpoint, temperature=self.temperature,
            max_retries=self.max_retries, rng_seed=self.rng_seed,
            backend=self.backend, replay_path=self.replay_path or None,
            seed_count=self.seed_count, per_seed_cap=self.per_seed_cap,
            parallelism=self.parallelism,
            min_request_interval=self.min_request_interval)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return raw


def read_config_file(path: str | Path) -> dict:
    """key=value lines; blank lines and # comments ignored."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, eq, raw = line.partition("=")
            key = key.strip()
            if not eq or key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown or malformed "
                                  f"entry {line!r}")
            values[key] = _coerce(key, raw.strip())
    return values


def load_config(file_path: str | Path | None = None,
                overrides: dict | None = None) -> PipelineConfig:
    """Merge defaults, an optional config file, and explicit overrides."""
    values: dict = {}
    if file_path:
        values.update(read_config_file(file_path))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = val
    return PipelineConfig(**values)
