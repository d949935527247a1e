"""Hyperparameter sweeps and the expansion ablation grid."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from ..config import TrainConfig, canonical_key, _convert
from ..plan import ConfigError
from ..train import Splits, TrainResult, train

# ablation rows: (sparse init, frozen weight) -> expansion mode
ABLATION_MODES = {
    "a": "dense_trainable",
    "b": "sparse_trainable",
    "c": "dense_frozen",
    "d": "sparse_frozen",
}


@dataclass
class GridPoint:
    settings: dict
    scores: list[float] = field(default_factory=list)
    records: list[dict] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores))

    @property
    def std(self) -> float:
        return float(np.std(self.scores))

    def row(self) -> dict:
        return {**self.settings, "mean": self.mean, "std": self.std,
                "n": len(self.scores), "scores": list(self.scores)}


def final_score(result: TrainResult) -> tuple[str, float]:
    """Last-epoch test metric, falling back to validation."""
    for split in ("test", "val"):
        m = result.final.get(split)
        if m:
            key = "accuracy" if "accuracy" in m else "mse"
            return f"{split}_{key}", m[key]
    raise ValueError("run produced no evaluation split")


def parse_grid(items) -> dict[str, list]:
    """``["nMul=1,2,4", "nPer=1,C"]`` -> ``{"n_mul": [1, 2, 4], ...}``.

    The token ``C`` for ``n_per`` means one group (standard convolution).
    """
    grid = {}
    for item in items:
        key, sep, values = item.partition("=")
        if not sep or not values.strip():
            raise ConfigError(f"grid entry {item!r} is not key=v1,v2,...")
        key = canonical_key(key)
        vals = []
        for v in values.split(","):
            v = v.strip()
            vals.append(v if (key == "n_per" and v == "C") else _convert(key, v))
        grid[key] = vals
    if not grid:
        raise ConfigError("empty sweep grid")
    return grid


def _resolve(cfg: TrainConfig, d: int) -> TrainConfig:
    if cfg.n_per == "C":
        return replace(cfg, n_per=cfg.n_mul * d)
    return cfg


def run_repeats(cfg: TrainConfig, splits: Splits, repeats: int,
                on_record=None) -> GridPoint:
    """Train ``repeats`` times with model/shuffle seeds offset by 0..r-1."""
    point = GridPoint({})
    for r in range(repeats):
        run_cfg = replace(cfg, model_seed=cfg.model_seed + r,
                          shuffle_seed=cfg.shuffle_seed + r).validate()
        res = train(run_cfg, splits, on_record=on_record)
        point.scores.append(final_score(res)[1])
        point.records.extend(res.records)
    return point


def sweep(cfg: TrainConfig, grid: dict[str, list], splits: Splits,
          repeats: int = 5, on_record=None) -> list[GridPoint]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("empty sweep grid")
    keys = list(grid)
    points = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        settings = dict(zip(keys, combo))
        run_cfg = _resolve(replace(cfg, **settings), splits.train.d)
        point = run_repeats(run_cfg, splits, repeats, on_record)
        point.settings = settings
        points.append(point)
    return points


def ablate(cfg: TrainConfig, splits: Splits, repeats: int = 5,
           rows=("a", "b", "c", "d"), on_record=None) -> list[GridPoint]:
    """Train the FC-expansion variant under each (sparse init, frozen) mode."""
    points = []
    for row in rows:
        mode = ABLATION_MODES[row]
        point = run_repeats(replace(cfg, arch="nrs", expansion=mode), splits,
                            repeats, on_record)
        point.settings = {"row": row, "mode": mode,
                          "sparse_init": mode.startswith("sparse"),
                          "frozen": mode.endswith("frozen")}
        points.append(point)
    return points


def render_table(points: list[GridPoint], pct: bool = True) -> str:
    lines = []
    for p in points:
        label = "  ".join(f"{k}={v}" for k, v in p.settings.items())
        scale = 100.0 if pct else 1.0
        lines.append(f"{label:<50} {p.mean * scale:8.2f} +- "
                     f"{p.std * scale:.2f}  (n={len(p.scores)})")
    return "\n".join(lines)
