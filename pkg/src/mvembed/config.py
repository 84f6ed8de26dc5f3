"""Training configuration: dataclass defaults, key=value config files, and
command-line overrides (flags win over file values)."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import UsageError
from .model import VIEW_CONFIGS
from .objective import AGREEMENT_KINDS

__all__ = ["TrainConfig", "parse_config_file", "config_from_sources"]

REDUCTIONS = ("sum", "mean")
DTYPES = ("float64", "float32")
LAST_MODES = ("per_direction", "literal")


@dataclass
class TrainConfig:
    corpus: str = ""
    vectors: str = ""
    out: str = "runs/default"
    n: int = 512
    d: int = 1024
    c: int = 3
    lr: float = 5e-4
    max_iters: int = 1000
    grad_clip: float = 5.0
    seed: int = 0
    dtype: str = "float64"
    agreement: str = "cross"
    views: str = "fg"
    include_self: bool = True
    reduction: str = "sum"
    pc_in_training: bool = True
    pc_iters: int = 20
    max_len: int = 64
    word_dim: int = 300
    tau_init: float = 1.0
    fix_tau: bool = False
    f_last_mode: str = "per_direction"
    log_every: int = 10

    def validate(self) -> "TrainConfig":
        if self.n < 2:
            raise UsageError(f"n must be >= 2, got {self.n}")
        if self.d < 1:
            raise UsageError(f"d must be >= 1, got {self.d}")
        if self.c < 1:
            raise UsageError(f"c must be >= 1, got {self.c}")
        if self.lr <= 0:
            raise UsageError(f"lr must be positive, got {self.lr}")
        if self.max_iters < 1:
            raise UsageError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.grad_clip <= 0:
            raise UsageError(f"grad_clip must be positive, got {self.grad_clip}")
        if self.tau_init <= 0:
            raise UsageError(f"tau_init must be positive, got {self.tau_init}")
        if self.log_every < 1:
            raise UsageError(f"log_every must be >= 1, got {self.log_every}")
        if self.max_len < 1:
            raise UsageError(f"max_len must be >= 1, got {self.max_len}")
        if self.word_dim < 1:
            raise UsageError(f"word_dim must be >= 1, got {self.word_dim}")
        if self.pc_iters < 1:
            raise UsageError(f"pc_iters must be >= 1, got {self.pc_iters}")
        if self.agreement not in AGREEMENT_KINDS:
            raise UsageError(f"agreement must be one of {AGREEMENT_KINDS}, got {self.agreement!r}")
        if self.views not in VIEW_CONFIGS:
            raise UsageError(f"views must be one of {tuple(VIEW_CONFIGS)}, got {self.views!r}")
        if self.reduction not in REDUCTIONS:
            raise UsageError(f"reduction must be one of {REDUCTIONS}, got {self.reduction!r}")
        if self.dtype not in DTYPES:
            raise UsageError(f"dtype must be one of {DTYPES}, got {self.dtype!r}")
        if self.f_last_mode not in LAST_MODES:
            raise UsageError(f"f_last_mode must be one of {LAST_MODES}, got {self.f_last_mode!r}")
        return self

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)


_BOOL_TRUE = {"true", "1", "yes", "on"}
_BOOL_FALSE = {"false", "0", "no", "off"}


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in _BOOL_TRUE:
        return True
    if low in _BOOL_FALSE:
        return False
    raise UsageError(f"cannot parse boolean for {key!r}: {raw!r}")


def parse_config_file(path) -> dict[str, str]:
    """Flat key=value lines; blank lines and '#' comments are ignored."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno} is not key=value: {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def config_from_sources(file_values: dict | None = None, overrides: dict | None = None) -> TrainConfig:
    """Build a config from defaults <- file values <- explicit overrides."""
    cfg = TrainConfig()
    typed = {f.name: f.type for f in fields(TrainConfig)}
    merged: dict[str, object] = {}
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in typed:
                raise UsageError(f"unknown config key {key!r}")
            merged[key] = value
    for key, value in merged.items():
        kind = typed[key]
        if isinstance(value, str):
            if kind == "int":
                value = int(value)
            elif kind == "float":
                value = float(value)
            elif kind == "bool":
                value = _parse_bool(value, key)
        setattr(cfg, key, value)
    return cfg.validate()
