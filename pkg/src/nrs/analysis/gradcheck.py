"""Central finite-difference checks of hand-written backward passes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..network import Network


def relative_error(analytic, numeric, floor: float = 1e-12) -> np.ndarray:
    a = np.abs(analytic)
    n = np.abs(numeric)
    return np.abs(analytic - numeric) / np.maximum(np.maximum(a, n), floor)


# Largest central difference accepted for a gradient that is exactly zero.
# At eps=1e-5 roundoff in the loss alone gives differences near 1e-11.
ZERO_ATOL = 1e-8


@dataclass
class BlockResult:
    name: str
    max_rel_err: float
    max_abs_err: float
    tolerance: float
    structural_zero: bool = False

    @property
    def ok(self) -> bool:
        if self.structural_zero:
            return self.max_abs_err < ZERO_ATOL
        return self.max_rel_err < self.tolerance


@dataclass
class GradCheckReport:
    blocks: list[BlockResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(b.ok for b in self.blocks)

    def failures(self) -> list[str]:
        return [b.name for b in self.blocks if not b.ok]

    def render(self) -> str:
        lines = []
        for b in self.blocks:
            status = "PASS" if b.ok else "FAIL"
            if b.structural_zero:
                lines.append(f"{status}  {b.name:<24} zero gradient, max "
                             f"|numeric| {b.max_abs_err:.3e} "
                             f"(atol {ZERO_ATOL:.0e})")
                continue
            lines.append(f"{status}  {b.name:<24} "
                         f"max rel err {b.max_rel_err:.3e} "
                         f"(abs {b.max_abs_err:.3e}, tol {b.tolerance:.0e})")
        lines.append("PASS" if self.ok else
                     "FAIL: " + ", ".join(self.failures()))
        return "\n".join(lines)


def numeric_grad(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central differences of scalar ``f()`` w.r.t. array ``x`` (in place)."""
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        up = f()
        flat[i] = old - eps
        down = f()
        flat[i] = old
        gflat[i] = (up - down) / (2 * eps)
    return g


def _negligible(analytic, numeric) -> bool:
    return (np.abs(analytic).max(initial=0.0) < ZERO_ATOL
            and np.abs(numeric).max(initial=0.0) < ZERO_ATOL)


def default_tolerance(name: str) -> float:
    """Looser bound for blocks whose gradient passes through batch norm."""
    return 1e-4 if name.split(".")[0].startswith("bn") else 1e-5


def grad_check(net: Network, X: np.ndarray, y, eps: float = 1e-5,
               tolerance=None, floor: float = 1e-12,
               training: bool = True) -> GradCheckReport:
    """Compare ``net``'s analytic parameter gradients with central differences
    of its loss on ``(X, y)``.

    ``tolerance`` is a float, a callable ``name -> float`` or None for
    :func:`default_tolerance`. Relative error is undefined for a block whose
    analytic gradient is zero (in training mode an FC bias feeding batch
    norm is cancelled by the mean subtraction), so a block whose analytic
    and numeric gradients both stay below ``ZERO_ATOL`` everywhere is
    reported as a zero block and checked in absolute terms instead.
    Batch-norm running statistics are restored afterwards.
    """
    if tolerance is None:
        tol_of = default_tolerance
    elif callable(tolerance):
        tol_of = tolerance
    else:
        tol_of = lambda name: float(tolerance)  # noqa: E731

    saved = {k: v.copy() for k, v in net.buffers().items()}

    def loss():
        out = net.forward(X, training)
        return net.loss(out, y)[0]

    net.loss_and_grads(X, y, training)
    analytic = {k: v.copy() for k, v in net.named_grads().items()}
    frozen = net.frozen()
    report = GradCheckReport()
    for name, p in net.named_params().items():
        if name in frozen:
            continue
        num = numeric_grad(loss, p, eps)
        rel = relative_error(analytic[name], num, floor)
        report.blocks.append(BlockResult(
            name, float(rel.max()), float(np.abs(analytic[name] - num).max()),
            tol_of(name), structural_zero=_negligible(analytic[name], num)))
    net.load_state(net.named_params(), saved)
    return report


def check_layer(layer, x: np.ndarray, eps: float = 1e-5, seed: int = 0,
                training: bool = True, floor: float = 1e-12) -> dict[str, float]:
    """Max relative error of a single layer's backward under the random
    linear probe ``L = sum(r * layer(x))``. Keys are ``input`` and each
    parameter name."""
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)
    out = layer.forward(x, training)
    r = rng.standard_normal(out.shape)
    layer.zero_grad()
    layer.forward(x, training)
    gx = layer.backward(r)
    analytic = {k: v.copy() for k, v in layer.grads.items()}

    def probe():
        return float(np.sum(r * layer.forward(x, training)))

    errs = {"input": float(relative_error(gx, numeric_grad(probe, x, eps),
                                          floor).max())}
    for name, p in layer.params.items():
        if name in layer.frozen:
            continue
        num = numeric_grad(probe, p, eps)
        errs[name] = float(relative_error(analytic[name], num, floor).max())
    return errs
