"""Layers with explicit forward and hand-written backward passes.

Activations flow as float64 arrays with the batch on axis 0. The expanded
tensor is kept as ``(N, nH*nH, C)``; cell ``(i, j)`` lives at row
``i * nH + j``.
"""

from __future__ import annotations

import numpy as np

from .plan import ConfigError, PermutationPlan
from .tensor import DimensionError, relu_grad_mask


class StateError(RuntimeError):
    """Backward called without a matching forward."""


class BatchSizeError(ValueError):
    pass


class Layer:
    name = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.frozen: set[str] = set()

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray, need_input_grad: bool = True):
        raise NotImplementedError

    def zero_grad(self):
        for k, v in self.params.items():
            g = self.grads.get(k)
            if g is None or g.shape != v.shape:
                self.grads[k] = np.zeros_like(v)
            else:
                g.fill(0.0)

    def _cached(self, attr):
        value = getattr(self, attr, None)
        if value is None:
            raise StateError(f"{self.name}: backward called before forward")
        return value


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Expansion(Layer):
    """Parameter-free gather ``(N, d) -> (N, nH*nH, C)``."""

    def __init__(self, plan: PermutationPlan, name: str = "expand"):
        super().__init__()
        self.plan = plan
        self.name = name
        self._index = plan.source_index

    def forward(self, x, training=True):
        if x.ndim != 2 or x.shape[1] != self.plan.d:
            raise DimensionError(
                f"{self.name}: expected (N, {self.plan.d}), got {x.shape}")
        self._n = x.shape[0]
        return x[:, self._index]

    def backward(self, grad, need_input_grad=True):
        n = self._cached("_n")
        if not need_input_grad:
            return None
        idx = self._index.ravel()
        flat = grad.reshape(n, -1)
        out = np.zeros((n, self.plan.d))
        np.add.at(out, (slice(None), idx), flat)
        return out


EXPANSION_MODES = ("sparse_frozen", "sparse_trainable",
                   "dense_frozen", "dense_trainable")


class LinearExpansion(Layer):
    """The expansion realised as a bias-free FC layer ``W in R^{d x M d}``.

    Sparse modes start from the plan's 0/1 selection matrix, dense modes from
    fan-in uniform noise. Frozen modes mark the matrix as excluded from
    optimizer updates.
    """

    def __init__(self, plan: PermutationPlan, mode: str,
                 rng: np.random.Generator | None = None,
                 name: str = "expand_fc"):
        super().__init__()
        if mode not in EXPANSION_MODES:
            raise ConfigError(f"unknown expansion mode {mode!r}")
        self.plan = plan
        self.mode = mode
        self.name = name
        width = plan.positions * plan.C
        if mode.startswith("sparse"):
            w = selection_matrix(plan)
        else:
            if rng is None:
                raise ConfigError("dense expansion modes need an rng")
            w = uniform_init(rng, (plan.d, width), plan.d)
        self.params["weight"] = w
        if mode.endswith("frozen"):
            self.frozen.add("weight")
        self.zero_grad()

    def forward(self, x, training=True):
        if x.ndim != 2 or x.shape[1] != self.plan.d:
            raise DimensionError(
                f"{self.name}: expected (N, {self.plan.d}), got {x.shape}")
        self._x = x
        y = x @ self.params["weight"]
        return y.reshape(x.shape[0], self.plan.positions, self.plan.C)

    def backward(self, grad, need_input_grad=True):
        x = self._cached("_x")
        g = grad.reshape(x.shape[0], -1)
        if "weight" not in self.frozen:
            self.grads["weight"] += x.T @ g
        return g @ self.params["weight"].T if need_input_grad else None


def selection_matrix(plan: PermutationPlan) -> np.ndarray:
    """0/1 matrix ``(d, nH*nH*C)`` with ``x @ W == expand(x).ravel()``."""
    src = plan.source_index.ravel()
    w = np.zeros((plan.d, src.size))
    w[src, np.arange(src.size)] = 1.0
    return w


class GroupConv(Layer):
    """Grouped convolution whose kernel spans the whole ``nH x nH`` map.

    Kernel layout is ``(nH*nH, nPer, C)``: for output channel ``k`` in group
    ``g = k // nPer`` the weights over the group's input channels
    ``g*nPer .. g*nPer + nPer - 1``. Output is ``(N, C)``; no bias.
    """

    def __init__(self, positions: int, channels: int, n_per: int,
                 rng: np.random.Generator | None = None, name: str = "conv"):
        super().__init__()
        if n_per < 1 or channels % n_per:
            raise ConfigError(
                f"C={channels} is not divisible by nPer={n_per}")
        self.name = name
        self.positions = positions
        self.channels = channels
        self.n_per = n_per
        self.groups = channels // n_per
        shape = (positions, n_per, channels)
        if rng is None:
            self.params["kernel"] = np.zeros(shape)
        else:
            self.params["kernel"] = uniform_init(rng, shape, positions * n_per)
        self.zero_grad()

    def _grouped_input(self, x):
        if x.ndim != 3 or x.shape[1:] != (self.positions, self.channels):
            raise DimensionError(
                f"{self.name}: expected (N, {self.positions}, "
                f"{self.channels}), got {x.shape}")
        return x.reshape(x.shape[0], self.positions, self.groups, self.n_per)

    def _grouped_kernel(self):
        return self.params["kernel"].reshape(
            self.positions, self.n_per, self.groups, self.n_per)

    def forward(self, x, training=True):
        xg = self._grouped_input(x)
        wg = self._grouped_kernel()
        acc = np.zeros((x.shape[0], self.groups, self.n_per))
        # fixed order: spatial cell, then input channel within the group
        for p in range(self.positions):
            for q in range(self.n_per):
                acc += xg[:, p, :, q, None] * wg[p, q]
        self._x = x
        return acc.reshape(x.shape[0], self.channels)

    def backward(self, grad, need_input_grad=True):
        x = self._cached("_x")
        xg = self._grouped_input(x)
        gg = grad.reshape(x.shape[0], self.groups, self.n_per)
        if "kernel" not in self.frozen:
            dk = np.einsum("npgq,ngo->pqgo", xg, gg, optimize=True)
            self.grads["kernel"] += dk.reshape(self.params["kernel"].shape)
        if not need_input_grad:
            return None
        dx = np.einsum("ngo,pqgo->npgq", gg, self._grouped_kernel(),
                       optimize=True)
        return dx.reshape(x.shape)


class BatchNorm(Layer):
    """Per-channel batch normalization over ``(N, C)`` activations.

    Running statistics follow ``running = momentum * running +
    (1 - momentum) * batch``; the running variance uses the unbiased batch
    estimate.
    """

    def __init__(self, channels: int, momentum: float = 0.9,
                 eps: float = 1e-5, name: str = "bn"):
        super().__init__()
        self.name = name
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.zero_grad()

    def forward(self, x, training=True):
        if x.ndim != 2 or x.shape[1] != self.params["gamma"].size:
            raise DimensionError(f"{self.name}: bad input shape {x.shape}")
        if training:
            n = x.shape[0]
            if n < 2:
                raise BatchSizeError(
                    f"{self.name}: training-mode batch norm needs N >= 2")
            mean = x.mean(axis=0)
            centered = x - mean
            var = (centered * centered).mean(axis=0)
            inv_std = 1.0 / np.sqrt(var + self.eps)
            m = self.momentum
            self.running_mean = m * self.running_mean + (1 - m) * mean
            self.running_var = (m * self.running_var
                                + (1 - m) * var * n / (n - 1))
        else:
            centered = x - self.running_mean
            inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
        xhat = centered * inv_std
        self._cache = (xhat, inv_std, training)
        return xhat * self.params["gamma"] + self.params["beta"]

    def backward(self, grad, need_input_grad=True):
        xhat, inv_std, training = self._cached("_cache")
        if "gamma" not in self.frozen:
            self.grads["gamma"] += (grad * xhat).sum(axis=0)
        if "beta" not in self.frozen:
            self.grads["beta"] += grad.sum(axis=0)
        if not need_input_grad:
            return None
        dxhat = grad * self.params["gamma"]
        if not training:
            return dxhat * inv_std
        n = grad.shape[0]
        return (inv_std / n) * (n * dxhat - dxhat.sum(axis=0)
                                - xhat * (dxhat * xhat).sum(axis=0))


class ReLU(Layer):
    def __init__(self, name: str = "relu"):
        super().__init__()
        self.name = name

    def forward(self, x, training=True):
        self._mask = relu_grad_mask(x)
        return np.maximum(x, 0.0)

    def backward(self, grad, need_input_grad=True):
        return grad * self._cached("_mask")


class Dense(Layer):
    """Fully connected layer; ``weight`` is ``(out, in)``."""

    def __init__(self, n_in: int, n_out: int,
                 rng: np.random.Generator | None = None, name: str = "fc"):
        super().__init__()
        self.name = name
        if rng is None:
            self.params["weight"] = np.zeros((n_out, n_in))
            self.params["bias"] = np.zeros(n_out)
        else:
            self.params["weight"] = uniform_init(rng, (n_out, n_in), n_in)
            self.params["bias"] = uniform_init(rng, (n_out,), n_in)
        self.zero_grad()

    def forward(self, x, training=True):
        w = self.params["weight"]
        if x.ndim != 2 or x.shape[1] != w.shape[1]:
            raise DimensionError(
                f"{self.name}: expected (N, {w.shape[1]}), got {x.shape}")
        self._x = x
        return x @ w.T + self.params["bias"]

    def backward(self, grad, need_input_grad=True):
        x = self._cached("_x")
        if "weight" not in self.frozen:
            self.grads["weight"] += grad.T @ x
        if "bias" not in self.frozen:
            self.grads["bias"] += grad.sum(axis=0)
        return grad @ self.params["weight"] if need_input_grad else None

