from dataclasses import replace

import numpy as np
import pytest

from nrs.analysis.experiments import (ABLATION_MODES, ablate, parse_grid,
                                      render_table, sweep)
from nrs.config import TrainConfig
from nrs.plan import ConfigError
from nrs.train import load_splits, train


@pytest.fixture(scope="module")
def setup(small_dataset_file):
    cfg = TrainConfig(train_path=str(small_dataset_file), test_fraction=0.3,
                      n_mul=2, n_h=2, epochs=2, batch_size=32, lr=1e-3)
    return cfg, load_splits(cfg)


def test_parse_grid():
    g = parse_grid(["nMul=1,2,4", "nPer=1,C"])
    assert g == {"n_mul": [1, 2, 4], "n_per": [1, "C"]}
    with pytest.raises(ConfigError):
        parse_grid([])
    with pytest.raises(ConfigError):
        parse_grid(["nMul"])


def test_empty_grid_rejected(setup):
    cfg, splits = setup
    with pytest.raises(ConfigError):
        sweep(cfg, {}, splits)


def test_grid_of_one_equals_single_run(setup):
    cfg, splits = setup
    [point] = sweep(cfg, {"n_mul": [2]}, splits, repeats=1)
    res = train(cfg, splits)
    assert point.scores == [res.final["test"]["accuracy"]]
    assert point.records == res.records


def test_single_group_endpoint(setup):
    cfg, splits = setup
    points = sweep(replace(cfg, epochs=1), {"n_per": [1, "C"]}, splits,
                   repeats=1)
    assert [p.settings["n_per"] for p in points] == [1, "C"]
    assert all(0.0 <= p.mean <= 1.0 for p in points)


def test_ablation_rows_and_equivalence(setup):
    cfg, splits = setup
    points = ablate(cfg, splits, repeats=2)
    assert [p.settings["row"] for p in points] == list("abcd")
    assert [p.settings["mode"] for p in points] == list(ABLATION_MODES.values())
    ref = sweep(cfg, {"expansion": ["gather"]}, splits, repeats=2)[0]
    assert points[3].scores == ref.scores
    assert "+-" in render_table(points)
