"""Dense float64 arrays and the handful of operations the network needs.

Tensors are plain ``numpy.ndarray`` objects in C (row-major) order with
dtype float64. The helpers here add the shape checks and the fixed
conventions (ReLU tie rule, summation order) that the rest of the package
relies on.
"""

from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    """Raised when operand shapes do not agree."""


def as_tensor(data, shape=None) -> np.ndarray:
    """Return a contiguous float64 copy of ``data``, optionally reshaped."""
    arr = np.array(data, dtype=np.float64, order="C")
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if any(s < 1 for s in shape):
            raise DimensionError(f"dimension sizes must be >= 1, got {shape}")
        if int(np.prod(shape)) != arr.size:
            raise DimensionError(
                f"cannot view {arr.size} values as shape {shape}")
        arr = arr.reshape(shape)
    return arr


def zeros(shape) -> np.ndarray:
    return np.zeros(shape, dtype=np.float64)


def reshape(a: np.ndarray, shape) -> np.ndarray:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != a.size:
        raise DimensionError(f"cannot reshape {a.shape} to {shape}")
    return np.ascontiguousarray(a).reshape(shape)


def _check_matmul(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(
            f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul inner dimensions differ: {a.shape} x {b.shape}")


def matmul(a: np.ndarray, b: np.ndarray, ordered: bool = False) -> np.ndarray:
    """Matrix product of two rank-2 tensors.

    With ``ordered=True`` each output entry is accumulated strictly left to
    right over the inner dimension, starting from 0.0, without fused
    multiply-add. The result is then bit-identical to the textbook triple
    loop. The default path calls BLAS, which is deterministic for a fixed
    machine and thread count but may round differently.
    """
    _check_matmul(a, b)
    if not ordered:
        return a @ b
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float64)
    for k in range(a.shape[1]):
        out += a[:, k:k + 1] * b[k:k + 1, :]
    return out


def _same_shape(op: str, x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise DimensionError(f"{op}: shapes differ, {x.shape} vs {y.shape}")


def add(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    _same_shape("add", x, y)
    return x + y


def sub(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    _same_shape("sub", x, y)
    return x - y


def mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    _same_shape("mul", x, y)
    return x * y


def scale(x: np.ndarray, factor: float) -> np.ndarray:
    if np.ndim(factor) != 0:
        raise DimensionError("scale takes a scalar factor")
    return x * float(factor)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_grad_mask(pre: np.ndarray) -> np.ndarray:
    """1.0 where the pre-activation is >= 0 (ties pass gradient), else 0.0."""
    return (pre >= 0.0).astype(np.float64)


_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "scale": scale,
    "relu": relu,
    "relu_grad_mask": relu_grad_mask,
}


def elementwise(op: str, *operands):
    """Dispatch one of the named elementwise operations."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}") from None
    return fn(*operands)
