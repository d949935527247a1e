"""Layer stacks: the NRS network and the MLP baselines used for comparison."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .layers import (EXPANSION_MODES, BatchNorm, Dense, Expansion, GroupConv,
                     Layer, LinearExpansion, ReLU)
from .losses import mse_loss, softmax, softmax_cross_entropy
from .plan import ConfigError, PermutationPlan, build_permutation_plan, philox
from .tensor import DimensionError

INIT_STREAM = 1
EXPANSION_INIT_STREAM = 2

ARCHES = ("nrs", "mlp2", "mlp3")
TASKS = ("classification", "regression")


def default_hidden(d: int, n_mul: int) -> int:
    return min(1024, 2 * n_mul * d)


@dataclass(frozen=True)
class ArchSpec:
    """Everything needed to rebuild a network's structure and initial state."""

    d: int
    n_outputs: int
    task: str = "classification"
    arch: str = "nrs"
    n_mul: int = 1
    n_per: int = 1
    n_h: int = 3
    hidden: int = 0  # 0 -> default_hidden(d, n_mul)
    seed: int = 0
    expansion: str = "gather"  # or one of EXPANSION_MODES
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5

    def resolved_hidden(self) -> int:
        return self.hidden or default_hidden(self.d, self.n_mul)

    def validate(self) -> None:
        if self.arch not in ARCHES:
            raise ConfigError(f"unknown arch {self.arch!r}")
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        for name in ("d", "n_outputs", "n_mul", "n_per", "n_h"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.hidden < 0:
            raise ConfigError("hidden must be >= 0")
        if self.task == "regression" and self.n_outputs != 1:
            raise ConfigError("regression networks have exactly one output")
        if self.expansion != "gather" and self.expansion not in EXPANSION_MODES:
            raise ConfigError(f"unknown expansion mode {self.expansion!r}")
        if self.arch == "nrs" and (self.n_mul * self.d) % self.n_per:
            raise ConfigError(
                f"C = nMul*d = {self.n_mul * self.d} is not divisible by "
                f"nPer = {self.n_per}")

    def to_dict(self) -> dict:
        return asdict(self)


class Network:
    """Sequential stack with a classification or regression head."""

    def __init__(self, spec: ArchSpec, layers: list[Layer],
                 plan: PermutationPlan | None = None):
        self.spec = spec
        self.layers = layers
        self.plan = plan

    # parameters -----------------------------------------------------------

    def named_params(self) -> dict[str, np.ndarray]:
        return {f"{layer.name}.{k}": v
                for layer in self.layers for k, v in layer.params.items()}

    def named_grads(self) -> dict[str, np.ndarray]:
        return {f"{layer.name}.{k}": v
                for layer in self.layers for k, v in layer.grads.items()}

    def frozen(self) -> set[str]:
        return {f"{layer.name}.{k}"
                for layer in self.layers for k in layer.frozen}

    def buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for layer in self.layers:
            if isinstance(layer, BatchNorm):
                out[f"{layer.name}.running_mean"] = layer.running_mean
                out[f"{layer.name}.running_var"] = layer.running_var
        return out

    def load_state(self, params: dict, buffers: dict) -> None:
        own = self.named_params()
        if set(params) != set(own):
            raise DimensionError(
                f"parameter names differ: {sorted(set(params) ^ set(own))}")
        for name, value in params.items():
            if own[name].shape != value.shape:
                raise DimensionError(
                    f"{name}: shape {value.shape} != {own[name].shape}")
            own[name][...] = value
        for layer in self.layers:
            if isinstance(layer, BatchNorm):
                layer.running_mean = np.array(
                    buffers[f"{layer.name}.running_mean"], dtype=np.float64)
                layer.running_var = np.array(
                    buffers[f"{layer.name}.running_var"], dtype=np.float64)

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    def num_params(self) -> int:
        return sum(v.size for v in self.named_params().values())

    # passes ---------------------------------------------------------------

    def forward(self, X: np.ndarray, training: bool = True) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.spec.d:
            raise DimensionError(
                f"network expects (N, {self.spec.d}) input, got {X.shape}")
        h = X
        for layer in self.layers:
            h = layer.forward(h, training)
        return h

    def backward(self, grad_out: np.ndarray, input_grad: bool = False):
        """Accumulate parameter gradients; optionally return d(loss)/d(X)."""
        g = grad_out
        last = len(self.layers) - 1
        for i, layer in enumerate(reversed(self.layers)):
            need = input_grad or i < last
            g = layer.backward(g, need_input_grad=need)
        return g

    def loss(self, outputs: np.ndarray, y) -> tuple[float, np.ndarray]:
        if self.spec.task == "classification":
            return softmax_cross_entropy(outputs, y)
        return mse_loss(outputs, np.asarray(y, dtype=np.float64)[:, None])

    def loss_and_grads(self, X, y, training: bool = True) -> float:
        self.zero_grad()
        out = self.forward(X, training)
        loss, g = self.loss(out, y)
        self.backward(g)
        return loss

    def predict(self, X: np.ndarray, batch_size: int = 1024) -> np.ndarray:
        """Inference-mode outputs: class probabilities or regression values."""
        chunks = []
        for start in range(0, len(X), batch_size):
            out = self.forward(X[start:start + batch_size], training=False)
            chunks.append(softmax(out) if self.spec.task == "classification"
                          else out[:, 0])
        if not chunks:
            width = self.spec.n_outputs
            return np.zeros((0, width) if self.spec.task == "classification"
                            else (0,))
        return np.concatenate(chunks)


def build_network(spec: ArchSpec) -> Network:
    spec.validate()
    rng = philox(spec.seed, INIT_STREAM)
    hidden = spec.resolved_hidden()
    plan = None
    layers: list[Layer] = []
    if spec.arch == "nrs":
        plan = build_permutation_plan(spec.d, spec.n_mul, spec.n_h, spec.seed)
        if spec.expansion == "gather":
            layers.append(Expansion(plan))
        else:
            layers.append(LinearExpansion(
                plan, spec.expansion,
                rng=philox(spec.seed, EXPANSION_INIT_STREAM)))
        C = plan.C
        layers += [
            GroupConv(plan.positions, C, spec.n_per, rng, name="conv"),
            BatchNorm(C, spec.bn_momentum, spec.bn_eps, name="bn0"),
            ReLU(name="relu0"),
        ]
        width = C
        n_fc = 1
    else:
        width = spec.d
        n_fc = 1 if spec.arch == "mlp2" else 2
    for i in range(n_fc):
        layers += [
            Dense(width, hidden, rng, name=f"fc{i + 1}"),
            BatchNorm(hidden, spec.bn_momentum, spec.bn_eps, name=f"bn{i + 1}"),
            ReLU(name=f"relu{i + 1}"),
        ]
        width = hidden
    layers.append(Dense(width, spec.n_outputs, rng, name="head"))
    return Network(spec, layers, plan)
