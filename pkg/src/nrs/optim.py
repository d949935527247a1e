"""SGD with momentum and Adam over named parameter buffers.

Parameters are updated in place. Names listed in ``frozen`` are never
touched, and each parameter is updated only from its own buffers.
"""

from __future__ import annotations

import numpy as np


class NumericError(FloatingPointError):
    pass


class Optimizer:
    def __init__(self, lr: float, weight_decay: float = 0.0,
                 frozen=()):
        if lr < 0:
            raise ValueError("learning rate must be non-negative")
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)
        self.frozen = set(frozen)
        self.t = 0

    def _check(self, params, grads):
        for name, p in params.items():
            if name in self.frozen:
                continue
            g = grads[name]
            if g.shape != p.shape:
                raise ValueError(f"{name}: grad shape {g.shape} != {p.shape}")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for {name}")

    def step(self, params: dict[str, np.ndarray],
             grads: dict[str, np.ndarray]) -> None:
        self._check(params, grads)
        self.t += 1
        for name, p in params.items():
            if name not in self.frozen:
                self._update(name, p, grads[name])

    def _update(self, name, p, g):
        raise NotImplementedError

    def hyperparameters(self) -> dict:
        return {"lr": self.lr, "weight_decay": self.weight_decay}


class SGD(Optimizer):
    def __init__(self, lr: float, momentum: float = 0.0,
                 weight_decay: float = 0.0, frozen=()):
        super().__init__(lr, weight_decay, frozen)
        self.momentum = float(momentum)
        self.velocity: dict[str, np.ndarray] = {}

    def _update(self, name, p, g):
        if self.weight_decay:
            p *= 1.0 - self.lr * self.weight_decay
        if self.momentum:
            if name not in self.velocity:
                self.velocity[name] = np.zeros_like(p)
            v = self.velocity[name]
            v *= self.momentum
            v += g
            g = v
        p -= self.lr * g

    def hyperparameters(self):
        return {"name": "sgd", **super().hyperparameters(),
                "momentum": self.momentum}


class Adam(Optimizer):
    def __init__(self, lr: float = 1e-4, betas=(0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0, frozen=()):
        super().__init__(lr, weight_decay, frozen)
        self.beta1, self.beta2 = (float(b) for b in betas)
        self.eps = float(eps)
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def _update(self, name, p, g):
        if name not in self.m:
            self.m[name] = np.zeros_like(p)
            self.v[name] = np.zeros_like(p)
        m, v = self.m[name], self.v[name]
        buf = np.empty_like(p)
        m *= self.beta1
        np.multiply(g, 1.0 - self.beta1, out=buf)
        m += buf
        v *= self.beta2
        np.multiply(g, g, out=buf)
        buf *= 1.0 - self.beta2
        v += buf
        # bias-corrected update lr * m_hat / (sqrt(v_hat) + eps), computed as
        # m / (sqrt(v) / sqrt(c2) + eps) * (lr / c1)
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        np.sqrt(v, out=buf)
        buf *= 1.0 / np.sqrt(c2)
        buf += self.eps
        np.divide(m, buf, out=buf)
        buf *= self.lr / c1
        if self.weight_decay:
            # decoupled (AdamW-style)
            p *= 1.0 - self.lr * self.weight_decay
        p -= buf

    def hyperparameters(self):
        return {"name": "adam", **super().hyperparameters(),
                "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


def make_optimizer(name: str, lr: float, frozen=(), weight_decay=0.0,
                   momentum=0.9) -> Optimizer:
    if name == "adam":
        return Adam(lr, weight_decay=weight_decay, frozen=frozen)
    if name == "sgd":
        return SGD(lr, momentum=momentum, weight_decay=weight_decay,
                   frozen=frozen)
    raise ValueError(f"unknown optimizer {name!r}")
