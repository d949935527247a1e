"""Named dataset recipes.

File names follow the LIBSVM dataset collection; files are looked up in
``$NRS_DATA_DIR`` (default ``./data``) and are never downloaded. Each recipe
carries its standard architecture settings (nMul, nPer, nH) and an
epoch count picked inside the 20-50 range.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

from .plan import ConfigError

DATA_DIR_ENV = "NRS_DATA_DIR"


@dataclass(frozen=True)
class Recipe:
    train_file: str
    test_file: str = ""
    n_features: int = 0
    n_classes: int = 0
    n_mul: int = 1
    n_per: int = 1
    n_h: int = 3
    epochs: int = 30
    test_fraction: float = 0.0
    task: str = "classify"
    format: str = "libsvm"
    label_column: int = 0


RECIPES = {
    "satimage": Recipe("satimage.scale", "satimage.scale.t", 36, 6, n_mul=20,
                       epochs=30),
    "letter": Recipe("letter.scale", "letter.scale.t", 16, 26, n_mul=100,
                     epochs=20),
    "usps": Recipe("usps", "usps.t", 256, 10, n_mul=30),
    "mnist": Recipe("mnist.scale", "mnist.scale.t", 780, 10, n_mul=16, epochs=20),
    "pendigits": Recipe("pendigits", "pendigits.t", 16, 10, n_mul=20),
    "dna": Recipe("dna.scale", "dna.scale.t", 180, 3, n_mul=5),
    "segment": Recipe("segment.scale", "", 19, 7, n_mul=30, test_fraction=0.3),
    "german": Recipe("german.numer_scale", "", 24, 2, n_mul=30, epochs=50,
                     test_fraction=0.3),
    "heart": Recipe("heart_scale", "", 13, 2, n_mul=30, epochs=50,
                    test_fraction=0.3),
    "australian": Recipe("australian_scale", "", 14, 2, n_mul=20, epochs=50,
                         test_fraction=0.3),
    # SARCOS inverse dynamics exported to CSV: 21 inputs, first torque in
    # column 21.
    "sarcos": Recipe("sarcos_inv.csv", "sarcos_inv_test.csv", 21, 1, n_mul=40,
                     task="regress", format="csv", label_column=21),
}


def data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "data"))


def recipe_paths(name: str) -> tuple[Path, Path | None]:
    r = get_recipe(name)
    base = data_dir()
    return base / r.train_file, (base / r.test_file if r.test_file else None)


def get_recipe(name: str) -> Recipe:
    try:
        return RECIPES[name]
    except KeyError:
        raise ConfigError(
            f"unknown dataset {name!r}; known: {', '.join(sorted(RECIPES))}"
        ) from None


def apply_recipe(cfg, explicit: set[str] = frozenset()):
    """Fill settings the user did not set explicitly from the recipe."""
    r = get_recipe(cfg.dataset)
    train, test = recipe_paths(cfg.dataset)
    defaults = {
        "train_path": str(train),
        "test_path": str(test) if test else "",
        "n_features": r.n_features,
        "n_mul": r.n_mul,
        "n_per": r.n_per,
        "n_h": r.n_h,
        "epochs": r.epochs,
        "test_fraction": r.test_fraction,
        "task": r.task,
        "format": r.format,
        "label_column": r.label_column,
    }
    return replace(cfg, **{k: v for k, v in defaults.items()
                           if k not in explicit})
