"""Checkpoint container.

Layout::

    NRSCKPT <version>\\n
    <header byte length>\\n
    <JSON header, sorted keys>
    <float64 little-endian array payload>

The header records the architecture spec (which regenerates the
permutation plan from its seed), a digest of the plan, label classes,
optimizer hyperparameters and the offset/shape of every array. Arrays are
the network parameters, batch-norm running statistics and, when present,
the standardization statistics.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .network import ArchSpec, Network, build_network

MAGIC = b"NRSCKPT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    net: Network
    classes: tuple | None = None
    norm_stats: tuple | None = None
    optimizer: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def plan_digest(net: Network) -> str | None:
    if net.plan is None:
        return None
    return hashlib.sha256(
        np.ascontiguousarray(net.plan.orders, dtype="<i8").tobytes()).hexdigest()


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    arrays = {}
    for name, v in ckpt.net.named_params().items():
        arrays[f"param/{name}"] = v
    for name, v in ckpt.net.buffers().items():
        arrays[f"buffer/{name}"] = v
    if ckpt.norm_stats is not None:
        arrays["norm/mean"], arrays["norm/std"] = ckpt.norm_stats
    entries, chunks, offset = [], [], 0
    for name in sorted(arrays):
        data = np.ascontiguousarray(arrays[name], dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(np.shape(arrays[name])),
                        "offset": offset})
        chunks.append(data)
        offset += len(data)
    header = {
        "format_version": FORMAT_VERSION,
        "arch": ckpt.net.spec.to_dict(),
        "plan_sha256": plan_digest(ckpt.net),
        "classes": list(ckpt.classes) if ckpt.classes is not None else None,
        "optimizer": ckpt.optimizer,
        "extra": ckpt.extra,
        "arrays": entries,
    }
    head = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC + b" %d\n" % FORMAT_VERSION)
        fh.write(b"%d\n" % len(head))
        fh.write(head)
        for c in chunks:
            fh.write(c)


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    try:
        magic_line, rest = raw.split(b"\n", 1)
        magic, version = magic_line.split(b" ")
        length, rest = rest.split(b"\n", 1)
        head_len = int(length)
    except ValueError:
        raise CheckpointError(f"{path}: not a checkpoint file") from None
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    if int(version) != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {int(version)}")
    header = json.loads(rest[:head_len])
    payload = memoryview(rest)[head_len:]
    arrays = {}
    for e in header["arrays"]:
        count = int(np.prod(e["shape"])) if e["shape"] else 1
        if e["offset"] + 8 * count > len(payload):
            raise CheckpointError(f"{path}: truncated payload at {e['name']}")
        arr = np.frombuffer(payload, dtype="<f8", count=count,
                            offset=e["offset"])
        arrays[e["name"]] = arr.astype(np.float64).reshape(e["shape"])
    net = build_network(ArchSpec(**header["arch"]))
    if plan_digest(net) != header["plan_sha256"]:
        raise CheckpointError(
            f"{path}: permutation plan regenerated from the stored seed does "
            "not match the saved digest")
    params = {k[len("param/"):]: v for k, v in arrays.items()
              if k.startswith("param/")}
    buffers = {k[len("buffer/"):]: v for k, v in arrays.items()
               if k.startswith("buffer/")}
    net.load_state(params, buffers)
    norm = None
    if "norm/mean" in arrays:
        norm = (arrays["norm/mean"], arrays["norm/std"])
    classes = tuple(header["classes"]) if header["classes"] is not None else None
    return Checkpoint(net, classes, norm, header["optimizer"], header["extra"])
