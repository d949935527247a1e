"""Write recipe-named LIBSVM files from the UCI tables bundled in the
keel-ds wheel.

    pip download --no-deps keel-ds -d /tmp/wheels
    python tools/keel_to_libsvm.py /tmp/wheels/keel_ds-*.whl data/

The wheel is read as a zip archive, so keel-ds (which pins an old numpy)
never needs to be installed. Rows are the full UCI tables in KEEL's own
order, which is not the original UCI order, so the standard train/test
partitions cannot be recovered; satimage and letter get a seeded random
split of the standard sizes instead (4435/2000 and 15000/5000). Feature
values stay raw; the training pipeline standardizes them.
"""

from __future__ import annotations

import argparse
import sys
import zipfile
from pathlib import Path

import numpy as np

from nrs.data import Dataset, write_libsvm

# name -> (train file, test file, train rows or None for a single file)
TARGETS = {
    "satimage": ("satimage.scale", "satimage.scale.t", 4435),
    "letter": ("letter.scale", "letter.scale.t", 15000),
    "heart": ("heart_scale", None, None),
    "australian": ("australian_scale", None, None),
    "segment": ("segment.scale", None, None),
}


def read_table(wheel: zipfile.ZipFile, name: str):
    text = wheel.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
    rows = [[c.strip() for c in line.split(",")]
            for line in text.splitlines() if line.strip()
            and not line.startswith("@")]
    X = np.array([[float(c) for c in r[:-1]] for r in rows])
    raw = [r[-1] for r in rows]
    if all(v.lstrip("-").replace(".", "", 1).isdigit() for v in raw):
        values = [float(v) for v in raw]
    else:  # letter: A..Z -> 1..26
        values = [float(ord(v) - ord("A") + 1) for v in raw]
    classes = tuple(sorted(set(values)))
    lookup = {c: i for i, c in enumerate(classes)}
    y = np.array([lookup[v] for v in values], dtype=np.int64)
    return Dataset(X, y, classes=classes, name=name)


def convert(wheel_path, out_dir, seed: int = 0, names=None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with zipfile.ZipFile(wheel_path) as wheel:
        for name in names or TARGETS:
            train_file, test_file, n_train = TARGETS[name]
            ds = read_table(wheel, name)
            if n_train is None:
                write_libsvm(ds, out_dir / train_file)
                written.append(out_dir / train_file)
                continue
            order = np.random.default_rng(seed).permutation(ds.n)
            write_libsvm(ds.subset(np.sort(order[:n_train])),
                         out_dir / train_file)
            write_libsvm(ds.subset(np.sort(order[n_train:])),
                         out_dir / test_file)
            written += [out_dir / train_file, out_dir / test_file]
    return written


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("wheel", help="path to a keel_ds-*.whl file")
    p.add_argument("out_dir", help="directory to write (use as NRS_DATA_DIR)")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--only", nargs="*", choices=sorted(TARGETS))
    args = p.parse_args(argv)
    for path in convert(args.wheel, args.out_dir, args.seed, args.only):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
