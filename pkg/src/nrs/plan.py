"""Seeded permutation plans and the expansion of a feature vector into an
``nH x nH x C`` tensor.

All indices are 0-based. For channel ``k`` and spatial cell ``(i, j)`` the
expanded entry is ``x[orders[t][s]]`` with::

    s = k % d
    t = (k // d) * nH * nH + i * nH + j

Randomness comes from numpy's Philox-4x64 counter-based generator. The
stream for permutation ``t`` is keyed by ``SeedSequence([seed, 0, t])`` so a
plan is reproducible across platforms and any single order can be
regenerated on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import DimensionError


class ConfigError(ValueError):
    """Invalid architecture or training configuration."""


PLAN_STREAM = 0


def philox(*key: int) -> np.random.Generator:
    """Generator for the stream named by ``key`` (non-negative ints)."""
    if any(int(k) < 0 for k in key):
        raise ConfigError(f"seed components must be non-negative, got {key}")
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def fisher_yates(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation of ``range(n)`` (Durstenfeld variant)."""
    perm = np.arange(n, dtype=np.int64)
    if n < 2:
        return perm
    # draw j_i ~ U{0..i} for i = n-1 .. 1 in one call
    js = rng.integers(0, np.arange(n, 1, -1))
    p = perm.tolist()
    for i, j in zip(range(n - 1, 0, -1), js.tolist()):
        p[i], p[j] = p[j], p[i]
    return np.asarray(p, dtype=np.int64)


@dataclass(frozen=True)
class PermutationPlan:
    d: int
    n_mul: int
    n_h: int
    seed: int
    orders: np.ndarray = field(repr=False)  # (M, d) int64

    @property
    def M(self) -> int:
        return self.n_h * self.n_h * self.n_mul

    @property
    def C(self) -> int:
        return self.n_mul * self.d

    @property
    def positions(self) -> int:
        return self.n_h * self.n_h

    @property
    def source_index(self) -> np.ndarray:
        """Feature index feeding each cell, shape ``(nH*nH, C)``.

        Row ``i * nH + j`` holds spatial cell ``(i, j)``.
        """
        return _source_index(self.orders, self.d, self.n_h, self.n_mul)

    @property
    def permutation_index(self) -> np.ndarray:
        """Permutation ``t`` used by each cell, shape ``(nH*nH, C)``."""
        p = np.arange(self.positions)[:, None]
        k = np.arange(self.C)[None, :]
        return (k // self.d) * self.positions + p


def _source_index(orders, d, n_h, n_mul):
    P = n_h * n_h
    C = n_mul * d
    p = np.arange(P)[:, None]
    k = np.arange(C)[None, :]
    t = (k // d) * P + p
    s = k % d
    return np.ascontiguousarray(orders[t, s])


def build_permutation_plan(d: int, n_mul: int, n_h: int,
                           seed: int) -> PermutationPlan:
    for name, v in (("d", d), ("nMul", n_mul), ("nH", n_h)):
        if int(v) != v or v < 1:
            raise ConfigError(f"{name} must be a positive integer, got {v!r}")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    M = n_h * n_h * n_mul
    orders = np.empty((M, d), dtype=np.int64)
    for t in range(M):
        orders[t] = fisher_yates(d, philox(seed, PLAN_STREAM, t))
    orders.setflags(write=False)
    return PermutationPlan(int(d), int(n_mul), int(n_h), int(seed), orders)


def expand(x: np.ndarray, plan: PermutationPlan) -> np.ndarray:
    """Expand a vector ``(d,)`` to ``(nH, nH, C)``, or a batch ``(N, d)`` to
    ``(N, nH, nH, C)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != plan.d or x.ndim not in (1, 2):
        raise DimensionError(
            f"expand expects length-{plan.d} input, got shape {x.shape}")
    out = x[..., plan.source_index]
    return out.reshape(x.shape[:-1] + (plan.n_h, plan.n_h, plan.C))


def expand_backward(grad_I: np.ndarray, plan: PermutationPlan) -> np.ndarray:
    """Adjoint of :func:`expand`: scatter-add cell gradients to features."""
    grad_I = np.asarray(grad_I, dtype=np.float64)
    cell_shape = (plan.n_h, plan.n_h, plan.C)
    if grad_I.shape[-3:] != cell_shape or grad_I.ndim not in (3, 4):
        raise DimensionError(
            f"expand_backward expects (..., {cell_shape}), got {grad_I.shape}")
    lead = grad_I.shape[:-3]
    flat = grad_I.reshape(lead + (-1,))
    idx = plan.source_index.ravel()
    if not lead:
        return np.bincount(idx, weights=flat, minlength=plan.d)
    out = np.zeros(lead + (plan.d,))
    for n in range(lead[0]):
        out[n] = np.bincount(idx, weights=flat[n], minlength=plan.d)
    return out
