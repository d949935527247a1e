"""Data loading, the training loop and evaluation for a :class:`TrainConfig`."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .config import TrainConfig
from .data import (TEST_SPLIT_STREAM, Dataset, apply_standardizer, batches,
                   fit_standardizer, parse_csv, parse_libsvm, train_val_split)
from .network import ArchSpec, Network, build_network
from .optim import make_optimizer

log = logging.getLogger(__name__)


@dataclass
class Splits:
    train: Dataset
    val: Dataset | None
    test: Dataset | None
    norm_stats: tuple | None = None


def _read(cfg: TrainConfig, path: str, classes=None, n_features=None):
    if cfg.format == "libsvm":
        return parse_libsvm(path, n_features=n_features, task=cfg.task_kind,
                            classes=classes)
    ds = parse_csv(path, cfg.label_column, cfg.has_header, cfg.delimiter,
                   task=cfg.task_kind, classes=classes)
    if n_features and ds.d != n_features:
        raise ValueError(f"{path}: {ds.d} features, expected {n_features}")
    return ds


def load_splits(cfg: TrainConfig) -> Splits:
    """Read, split and standardize (statistics from the training part only)."""
    if not cfg.train_path:
        raise ValueError("no training data configured (train_path or dataset)")
    full = _read(cfg, cfg.train_path, n_features=cfg.n_features or None)
    test = None
    if cfg.test_path:
        test = _read(cfg, cfg.test_path, classes=full.classes,
                     n_features=full.d)
    elif cfg.test_fraction > 0:
        full, test = train_val_split(full, cfg.test_fraction, cfg.data_seed,
                                     stream=TEST_SPLIT_STREAM, suffix="test")
    train, val = train_val_split(full, cfg.val_fraction, cfg.data_seed)
    stats = None
    if cfg.standardize:
        stats = fit_standardizer(train)
        train = apply_standardizer(train, stats)
        val = apply_standardizer(val, stats) if val is not None else None
        test = apply_standardizer(test, stats) if test is not None else None
    return Splits(train, val, test, stats)


def arch_spec(cfg: TrainConfig, d: int, n_outputs: int) -> ArchSpec:
    return ArchSpec(d=d, n_outputs=n_outputs, task=cfg.task_kind,
                    arch=cfg.arch, n_mul=cfg.n_mul, n_per=cfg.n_per,
                    n_h=cfg.n_h, hidden=cfg.hidden, seed=cfg.model_seed,
                    expansion=cfg.expansion)


def n_outputs_for(ds: Dataset) -> int:
    return ds.k if ds.task == "classification" else 1


def evaluate(net: Network, ds: Dataset) -> dict[str, float]:
    """Inference-mode metrics: accuracy and loss, or MSE."""
    out = net.predict(ds.features)
    if net.spec.task == "classification":
        rows = np.arange(ds.n)
        p = np.clip(out[rows, ds.labels], 1e-300, None)
        return {"accuracy": float(np.mean(out.argmax(axis=1) == ds.labels)),
                "loss": float(-np.mean(np.log(p)))}
    diff = out - ds.labels
    return {"mse": float(np.mean(diff * diff))}


@dataclass
class TrainResult:
    net: Network
    best_state: dict
    best_epoch: int
    records: list[dict] = field(default_factory=list)
    final: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)


def _score(metrics: dict) -> float:
    """Higher is better."""
    if "accuracy" in metrics:
        return metrics["accuracy"]
    return -metrics["mse"]


def snapshot(net: Network) -> dict:
    return {"params": {k: v.copy() for k, v in net.named_params().items()},
            "buffers": {k: v.copy() for k, v in net.buffers().items()}}


def train(cfg: TrainConfig, splits: Splits, net: Network | None = None,
          on_record=None) -> TrainResult:
    """Run ``cfg.epochs`` epochs of mini-batch training.

    Emits records ``{config, seed, epoch, split, metric, value}``; epoch 0
    holds the metrics of the initial model. The best epoch by validation
    score (training score when there is no validation split) is snapshotted.
    """
    train_ds = splits.train
    if net is None:
        net = build_network(arch_spec(cfg, train_ds.d, n_outputs_for(train_ds)))
    opt = make_optimizer(cfg.optimizer, cfg.lr, frozen=net.frozen(),
                         weight_decay=cfg.weight_decay, momentum=cfg.momentum)
    tag = cfg.digest()
    records: list[dict] = []

    def emit(epoch, split, metric, value):
        rec = {"config": tag, "seed": cfg.model_seed, "epoch": epoch,
               "split": split, "metric": metric, "value": value}
        records.append(rec)
        if on_record is not None:
            on_record(rec)

    def eval_all(epoch):
        scores = {}
        for split, ds in (("val", splits.val), ("test", splits.test)):
            if ds is None:
                continue
            m = evaluate(net, ds)
            scores[split] = m
            for k, v in m.items():
                emit(epoch, split, k, v)
        return scores

    scores = eval_all(0)
    select = "val" if splits.val is not None else None
    best_score = _score(scores[select]) if select else -np.inf
    best_state, best_epoch = snapshot(net), 0

    for epoch in range(1, cfg.epochs + 1):
        if cfg.lr_decay_every:
            opt.lr = cfg.lr * cfg.lr_decay_factor ** (
                (epoch - 1) // cfg.lr_decay_every)
        total, seen = 0.0, 0
        for X, y in batches(train_ds, cfg.batch_size, cfg.shuffle_seed, epoch):
            if len(X) < 2:
                continue  # batch norm needs two rows
            loss = net.loss_and_grads(X, y)
            opt.step(net.named_params(), net.named_grads())
            total += loss * len(X)
            seen += len(X)
        emit(epoch, "train", "loss", total / max(seen, 1))
        scores = eval_all(epoch)
        if select:
            score = _score(scores[select])
        else:
            score = _score(evaluate(net, train_ds))
        if score > best_score:
            best_score, best_state, best_epoch = score, snapshot(net), epoch
        log.info("epoch %d loss %.5f %s", epoch, total / max(seen, 1),
                 {k: round(v.get("accuracy", v.get("mse", 0.0)), 5)
                  for k, v in scores.items()})

    final = {split: m for split, m in scores.items()}
    return TrainResult(net, best_state, best_epoch, records, final,
                       opt.hyperparameters())


def train_config(cfg: TrainConfig, splits: Splits | None = None,
                 **overrides) -> TrainResult:
    """Convenience wrapper: load data (unless given) and train."""
    if overrides:
        cfg = replace(cfg, **overrides)
    if splits is None:
        splits = load_splits(cfg)
    return train(cfg, splits)
