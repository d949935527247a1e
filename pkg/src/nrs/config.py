"""Training configuration and its flat ``key = value`` file form."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .layers import EXPANSION_MODES
from .network import ARCHES
from .plan import ConfigError

ALIASES = {
    "nMul": "n_mul", "nmul": "n_mul",
    "nPer": "n_per", "nper": "n_per",
    "nH": "n_h", "nh": "n_h",
    "lr": "lr", "seed": "model_seed",
}


@dataclass(frozen=True)
class TrainConfig:
    dataset: str = ""            # registry id; fills in paths and defaults
    train_path: str = ""
    test_path: str = ""
    format: str = "libsvm"       # libsvm | csv
    label_column: int = 0
    has_header: bool = False
    delimiter: str = ","
    n_features: int = 0          # 0 -> inferred from the training file
    test_fraction: float = 0.0   # hold-out test share when no test file
    task: str = "classify"       # classify | regress
    arch: str = "nrs"            # nrs | mlp2 | mlp3
    n_mul: int = 1
    n_per: int = 1
    n_h: int = 3
    hidden: int = 0              # 0 -> min(1024, 2 * nMul * d)
    expansion: str = "gather"
    optimizer: str = "adam"
    lr: float = 1e-4
    momentum: float = 0.9
    weight_decay: float = 0.0
    lr_decay_every: int = 0      # epochs between step decays, 0 = constant
    lr_decay_factor: float = 0.1
    epochs: int = 30
    batch_size: int = 64
    val_fraction: float = 0.1
    standardize: bool = True
    data_seed: int = 0
    model_seed: int = 0
    shuffle_seed: int = 0
    output_dir: str = ""

    @property
    def task_kind(self) -> str:
        return "classification" if self.task == "classify" else "regression"

    def validate(self) -> TrainConfig:
        if self.format not in ("libsvm", "csv"):
            raise ConfigError(f"format must be libsvm or csv, not {self.format!r}")
        if self.task not in ("classify", "regress"):
            raise ConfigError(f"task must be classify or regress, not {self.task!r}")
        if self.arch not in ARCHES:
            raise ConfigError(f"arch must be one of {ARCHES}")
        if self.expansion != "gather" and self.expansion not in EXPANSION_MODES:
            raise ConfigError(f"unknown expansion {self.expansion!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError("optimizer must be adam or sgd")
        for name in ("n_mul", "n_per", "n_h", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive count")
        for name in ("hidden", "epochs", "n_features", "lr_decay_every",
                     "data_seed", "model_seed", "shuffle_seed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not 0.0 <= self.val_fraction <= 0.5:
            raise ConfigError("val_fraction must lie in [0, 0.5]")
        if not 0.0 <= self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in [0, 1)")
        if self.lr < 0:
            raise ConfigError("lr must be non-negative")
        return self

    def with_overrides(self, overrides: dict) -> TrainConfig:
        return replace(self, **coerce(overrides))

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_render(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Short stable id of the run-defining settings (not output_dir)."""
        text = replace(self, output_dir="").to_text()
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def to_dict(self) -> dict:
        return asdict(self)


_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def canonical_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    key = ALIASES.get(key, key)
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def _convert(key: str, raw):
    kind = _TYPES[key]
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind}") from None
    return raw


def coerce(pairs: dict) -> dict:
    out = {}
    for k, v in pairs.items():
        key = canonical_key(k)
        out[key] = _convert(key, v)
    return out


def parse_config_text(text: str) -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        pairs[key.strip()] = value.strip()
    return coerce(pairs)


def load_config(path=None, overrides: dict | None = None) -> TrainConfig:
    """Config file values, then registry defaults for unset keys, then
    ``overrides`` (flags win)."""
    from .registry import apply_recipe

    pairs = parse_config_text(Path(path).read_text()) if path else {}
    if overrides:
        pairs.update(coerce(overrides))
    cfg = TrainConfig(**pairs)
    if cfg.dataset:
        cfg = apply_recipe(cfg, explicit=set(pairs))
    return cfg.validate()
