"""Run/model configuration with the published defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


@dataclass(frozen=True)
class ModelConfig:
    """Architecture sizes. Defaults: 256-wide type/value embeddings, 5-wide
    position embeddings (so one embedded triple is 256+256+5+5 = 522 wide),
    decoder hidden size 256, coverage weight 1.5."""

    emb_dim: int = 256
    pos_emb_dim: int = 5
    hidden_dim: int = 256
    attn_dim: int = 256
    pos_attn_dim: int = 256
    max_rows: int = 64
    coverage_weight: float = 1.5

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name != "coverage_weight" and v <= 0:
                raise ValueError(f"{f.name} must be positive, got {v}")
        if self.coverage_weight < 0:
            raise ValueError("coverage_weight must be nonnegative")
        if self.hidden_dim % 2 != 0:
            raise ValueError("hidden_dim must be even (two encoder directions concatenate to it)")

    @property
    def triple_width(self) -> int:
        return 2 * self.emb_dim + 2 * self.pos_emb_dim


@dataclass(frozen=True)
class RunConfig:
    """End-to-end run settings; field names double as config-file keys."""

    mode: str = "pointer_type_position"
    emb_dim: int = 256
    pos_emb_dim: int = 5
    hidden_dim: int = 256
    attn_dim: int = 256
    pos_attn_dim: int = 256
    max_rows: int = 64
    coverage_weight: float = 1.5
    learning_rate: float = 0.001
    min_freq: int = 5
    batch_size: int = 8
    epochs: int = 30
    beam: int = 4
    seed: int = 0
    max_len: int = 100
    grad_clip: float = 2.0

    def __post_init__(self):
        for name in ("emb_dim", "pos_emb_dim", "hidden_dim", "attn_dim", "pos_attn_dim",
                     "max_rows", "min_freq", "batch_size", "epochs", "beam", "max_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.learning_rate < 0 or self.grad_clip <= 0 or self.coverage_weight < 0:
            raise ValueError("learning_rate/coverage_weight must be >= 0 and grad_clip > 0")

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            emb_dim=self.emb_dim,
            pos_emb_dim=self.pos_emb_dim,
            hidden_dim=self.hidden_dim,
            attn_dim=self.attn_dim,
            pos_attn_dim=self.pos_attn_dim,
            max_rows=self.max_rows,
            coverage_weight=self.coverage_weight,
        )

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parse_config_file(path) -> dict:
    """Flat ``key = value`` text file; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def build_run_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge config-file values with flag overrides (flags win), coercing
    strings to each field's declared type."""
    by_name = {f.name: f for f in fields(RunConfig)}
    merged: dict = {}
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in by_name:
                raise ValueError(f"unknown config key {key!r}")
            ftype = by_name[key].type
            if isinstance(value, str) and ftype in ("int", "float"):
                value = int(value) if ftype == "int" else float(value)
            merged[key] = value
    return RunConfig(**merged)
