"""``nrs`` command line: train | eval | gradcheck | count | sweep | ablate.

Every command reads an optional flat config file (``--config``) and then
applies ``--key value`` overrides for any config key; flags win. Output
goes to ``output_dir``, else ``$NRS_OUTPUT_DIR``, else ``./runs``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import ablate, count_costs, grad_check, parse_grid, sweep
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import TrainConfig, load_config
from .data import apply_standardizer, parse_csv, parse_libsvm
from .network import ArchSpec, build_network
from .plan import ConfigError, philox
from .registry import get_recipe
from .train import (arch_spec, evaluate, load_splits, n_outputs_for, train)

OUTPUT_ENV = "NRS_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("nrs")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def output_dir(cfg: TrainConfig, default_name: str) -> Path:
    base = cfg.output_dir or os.environ.get(OUTPUT_ENV) or "runs"
    path = Path(base)
    if not cfg.output_dir:
        path = path / default_name
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_name(cfg: TrainConfig, command: str) -> str:
    stem = cfg.dataset or Path(cfg.train_path).stem or "toy"
    return f"{command}-{stem}-{cfg.digest()}"


RECORD_FIELDS = ("config", "seed", "epoch", "split", "metric", "value")


def write_records(records: list[dict], out: Path, stem: str = "metrics"):
    with open(out / f"{stem}.jsonl", "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(RECORD_FIELDS),
                           extrasaction="ignore")
        w.writeheader()
        for rec in records:
            w.writerow({k: (repr(v) if isinstance(v, float) else v)
                        for k, v in rec.items()})


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


def _checkpoint_for(result_net, splits, cfg, hyper, epoch) -> Checkpoint:
    # the run location is not part of the model; leave it out so identical
    # runs give identical files wherever they are written
    run_cfg = replace(cfg, output_dir="").to_dict()
    return Checkpoint(result_net, splits.train.classes, splits.norm_stats,
                      hyper, {"epoch": epoch, "config": run_cfg})


# commands ---------------------------------------------------------------

def cmd_train(cfg: TrainConfig, args) -> int:
    splits = load_splits(cfg)
    out = output_dir(cfg, run_name(cfg, "train"))
    (out / "config.txt").write_text(cfg.to_text())
    result = train(cfg, splits)
    write_records(result.records, out)
    save_checkpoint(out / "final.ckpt", _checkpoint_for(
        result.net, splits, cfg, result.optimizer, cfg.epochs))
    best = build_network(result.net.spec)
    best.load_state(result.best_state["params"], result.best_state["buffers"])
    save_checkpoint(out / "best.ckpt", _checkpoint_for(
        best, splits, cfg, result.optimizer, result.best_epoch))
    summary = {"output_dir": str(out), "epochs": cfg.epochs,
               "best_epoch": result.best_epoch, "final": result.final,
               "params": result.net.num_params()}
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                 indent=2) + "\n")
    _emit(summary)
    return EXIT_OK


def cmd_eval(cfg: TrainConfig, args) -> int:
    if not args.checkpoint:
        raise UsageError("eval needs --checkpoint")
    ckpt = load_checkpoint(args.checkpoint)
    spec = ckpt.net.spec
    path = args.data or cfg.test_path or cfg.train_path
    if not path:
        raise UsageError("eval needs --data (or a config with test_path)")
    if cfg.format == "libsvm":
        ds = parse_libsvm(path, n_features=spec.d, task=spec.task,
                          classes=ckpt.classes)
    else:
        ds = parse_csv(path, cfg.label_column, cfg.has_header, cfg.delimiter,
                       task=spec.task, classes=ckpt.classes)
    if ds.d != spec.d:
        raise ValueError(
            f"dataset has d={ds.d} but checkpoint expects d={spec.d}")
    if ckpt.norm_stats is not None:
        ds = apply_standardizer(ds, ckpt.norm_stats)
    metrics = evaluate(ckpt.net, ds)
    _emit({"checkpoint": str(args.checkpoint), "data": str(path),
           "n": ds.n, **metrics})
    return EXIT_OK


def toy_problem(seed: int = 0, n: int = 16, d: int = 6, k: int = 3):
    rng = philox(seed, 99)
    X = rng.standard_normal((n, d))
    y = np.arange(n) % k
    return X, y


def cmd_gradcheck(cfg: TrainConfig, args) -> int:
    if cfg.train_path:
        splits = load_splits(cfg)
        X = splits.train.features[:16]
        y = splits.train.labels[:16]
        spec = arch_spec(cfg, splits.train.d, n_outputs_for(splits.train))
    else:
        X, y = toy_problem(cfg.model_seed)
        if cfg.task_kind == "regression":
            y = X.sum(axis=1)
            n_out = 1
        else:
            n_out = 3
        spec = ArchSpec(d=X.shape[1], n_outputs=n_out, task=cfg.task_kind,
                        arch=cfg.arch, n_mul=cfg.n_mul, n_per=cfg.n_per,
                        n_h=cfg.n_h, hidden=cfg.hidden, seed=cfg.model_seed,
                        expansion=cfg.expansion)
    net = build_network(spec)
    report = grad_check(net, X, y)
    print(report.render())
    return EXIT_OK if report.ok else EXIT_RUNTIME


def cmd_count(cfg: TrainConfig, args) -> int:
    d = cfg.n_features
    k = args.outputs or 0
    if cfg.dataset and not k:
        k = get_recipe(cfg.dataset).n_classes
    if (not d or not k) and cfg.train_path and Path(cfg.train_path).exists():
        splits = load_splits(replace(cfg, val_fraction=0.0))
        d = d or splits.train.d
        k = k or n_outputs_for(splits.train)
    if cfg.task_kind == "regression":
        k = 1
    if not d or not k:
        raise UsageError("count needs d and the output count: set "
                         "n_features and --outputs, or point at data")
    net = build_network(arch_spec(cfg, d, k))
    report = count_costs(net)
    if args.json:
        _emit(report.as_dict())
    else:
        print(report.render())
    return EXIT_OK


def _write_table(points, out: Path, name: str) -> list[dict]:
    rows = [p.row() for p in points]
    (out / f"{name}.json").write_text(json.dumps(rows, indent=2) + "\n")
    return rows


def cmd_sweep(cfg: TrainConfig, args) -> int:
    grid = parse_grid(args.grid or [])
    splits = load_splits(cfg)
    out = output_dir(cfg, run_name(cfg, "sweep"))
    points = sweep(cfg, grid, splits, repeats=args.repeats)
    write_records([r for p in points for r in p.records], out)
    rows = _write_table(points, out, "sweep")
    _emit({"output_dir": str(out), "rows": rows})
    return EXIT_OK


def cmd_ablate(cfg: TrainConfig, args) -> int:
    rows = tuple(args.rows)
    if not rows or any(r not in "abcd" for r in rows):
        raise UsageError("--rows takes letters from 'abcd'")
    splits = load_splits(cfg)
    out = output_dir(cfg, run_name(cfg, "ablate"))
    points = ablate(cfg, splits, repeats=args.repeats, rows=rows)
    records = [r for p in points for r in p.records]
    table = _write_table(points, out, "ablation")
    result = {"output_dir": str(out), "rows": table}
    if args.reference:
        ref = sweep(replace(cfg, arch="nrs", expansion="gather"),
                    {"expansion": ["gather"]}, splits, repeats=args.repeats)[0]
        records += ref.records
        result["reference"] = ref.row()
        if "d" in rows:
            d_row = points[rows.index("d")]
            result["d_matches_reference"] = d_row.scores == ref.scores
    write_records(records, out)
    _emit(result)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "count": cmd_count,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nrs", description=__doc__.split("\n")[0],
                allow_abbrev=False)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--checkpoint", help="checkpoint to evaluate (eval)")
    p.add_argument("--data", help="dataset file to evaluate (eval)")
    p.add_argument("--outputs", type=int,
                   help="number of network outputs (count)")
    p.add_argument("--json", action="store_true", help="JSON output (count)")
    p.add_argument("--grid", action="append",
                   help="sweep axis, e.g. nMul=1,2,4 (repeatable)")
    p.add_argument("--repeats", type=int, default=5,
                   help="seeded repeats per grid point / ablation row")
    p.add_argument("--rows", default="abcd", help="ablation rows to run")
    p.add_argument("--reference", action="store_true",
                   help="ablate: also run standard NRS and compare with (d)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_overrides(tokens: list[str]) -> dict:
    """``["--n_mul", "20", "--lr=1e-3"]`` -> ``{"n_mul": "20", "lr": "1e-3"}``"""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise UsageError(f"unexpected argument {tok!r}")
        key, sep, value = tok[2:].partition("=")
        if not sep:
            if i + 1 >= len(tokens):
                raise UsageError(f"missing value for --{key}")
            value = tokens[i + 1]
            i += 1
        out[key] = value
        i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args, rest = parser.parse_known_args(argv)
        if args.repeats < 1:
            raise UsageError("--repeats must be >= 1")
        cfg = load_config(args.config, parse_overrides(rest))
    except (UsageError, ConfigError, OSError) as e:
        print(f"nrs: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](cfg, args)
    except (UsageError, ConfigError) as e:
        print(f"nrs: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"nrs: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
