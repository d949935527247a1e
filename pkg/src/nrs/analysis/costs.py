"""Parameter and multiply-accumulate accounting.

Counts are per input sample at inference. One MAC is reported as two FLOPs.
For the aggregation convolution the report also evaluates the closed forms
for a standard and a grouped convolution on the same shapes (kernel ``K``,
input side ``H_in``, channels ``C_in``/``C_out``, groups ``G``), with the
standard and grouped layers assumed to keep the spatial size
(``H_out = H_in``) while the NRS layer collapses it to 1x1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..layers import (BatchNorm, Dense, Expansion, GroupConv, LinearExpansion,
                      ReLU)
from ..network import Network


@dataclass
class LayerCost:
    name: str
    kind: str
    params: int
    macs: int

    @property
    def flops(self) -> int:
        return 2 * self.macs


@dataclass
class ConvFormulas:
    K: int
    H_in: int
    C_in: int
    C_out: int
    G: int

    @property
    def standard_params(self) -> int:
        return self.K ** 2 * self.C_in * self.C_out

    @property
    def standard_cost(self) -> int:
        return self.K ** 2 * self.H_in ** 2 * self.C_in * self.C_out

    @property
    def group_params(self) -> int:
        return self.K ** 2 * self.C_in * self.C_out // self.G

    @property
    def group_cost(self) -> int:
        return self.K ** 2 * self.H_in ** 2 * self.C_in * self.C_out // self.G

    @property
    def nrs_params(self) -> int:
        """Depthwise (nPer = 1) NRS layer: ``K^2 * C_out``."""
        return self.K ** 2 * self.C_out

    @property
    def nrs_cost(self) -> int:
        return self.K ** 2 * self.C_out

    def as_dict(self) -> dict:
        keys = ("K", "H_in", "C_in", "C_out", "G", "standard_params",
                "standard_cost", "group_params", "group_cost", "nrs_params",
                "nrs_cost")
        return {k: getattr(self, k) for k in keys}


@dataclass
class CostReport:
    layers: list[LayerCost] = field(default_factory=list)
    conv: ConvFormulas | None = None

    @property
    def total_params(self) -> int:
        return sum(l.params for l in self.layers)

    @property
    def total_macs(self) -> int:
        return sum(l.macs for l in self.layers)

    @property
    def total_flops(self) -> int:
        return 2 * self.total_macs

    def param_reduction(self) -> float | None:
        """Standard-conv parameters over NRS (depthwise) parameters."""
        if self.conv is None:
            return None
        return self.conv.standard_params / self.conv.nrs_params

    def cost_reduction(self) -> float | None:
        if self.conv is None:
            return None
        return self.conv.standard_cost / self.conv.nrs_cost

    def as_dict(self) -> dict:
        return {
            "layers": [{"name": l.name, "kind": l.kind, "params": l.params,
                        "macs": l.macs, "flops": l.flops}
                       for l in self.layers],
            "total_params": self.total_params,
            "total_macs": self.total_macs,
            "total_flops": self.total_flops,
            "conv": self.conv.as_dict() if self.conv else None,
            "param_reduction": self.param_reduction(),
            "cost_reduction": self.cost_reduction(),
        }

    def render(self) -> str:
        lines = [f"{'layer':<12}{'kind':<16}{'params':>12}{'MACs':>14}"
                 f"{'FLOPs':>14}"]
        for l in self.layers:
            lines.append(f"{l.name:<12}{l.kind:<16}{l.params:>12}"
                         f"{l.macs:>14}{l.flops:>14}")
        lines.append(f"{'total':<28}{self.total_params:>12}"
                     f"{self.total_macs:>14}{self.total_flops:>14}")
        if self.conv is not None:
            c = self.conv
            lines += [
                "",
                f"conv shapes: K={c.K} H_in={c.H_in} C_in={c.C_in} "
                f"C_out={c.C_out} G={c.G}",
                f"  standard conv   params {c.standard_params:>14} "
                f"cost {c.standard_cost:>16}",
                f"  group conv      params {c.group_params:>14} "
                f"cost {c.group_cost:>16}",
                f"  NRS depthwise   params {c.nrs_params:>14} "
                f"cost {c.nrs_cost:>16}",
                f"  reduction vs standard: params x{self.param_reduction():g}"
                f", cost x{self.cost_reduction():g}",
            ]
        return "\n".join(lines)


def count_costs(net: Network) -> CostReport:
    report = CostReport()
    for layer in net.layers:
        if isinstance(layer, Expansion):
            report.layers.append(LayerCost(layer.name, "expansion", 0, 0))
        elif isinstance(layer, LinearExpansion):
            d, width = layer.params["weight"].shape
            report.layers.append(
                LayerCost(layer.name, "expansion_fc", d * width, d * width))
        elif isinstance(layer, GroupConv):
            K = net.spec.n_h
            n = K * K * layer.n_per * layer.channels
            report.layers.append(LayerCost(layer.name, "group_conv", n, n))
            report.conv = ConvFormulas(K=K, H_in=K, C_in=layer.channels,
                                       C_out=layer.channels, G=layer.groups)
        elif isinstance(layer, BatchNorm):
            c = layer.params["gamma"].size
            report.layers.append(LayerCost(layer.name, "batchnorm", 2 * c, c))
        elif isinstance(layer, Dense):
            out, inp = layer.params["weight"].shape
            report.layers.append(
                LayerCost(layer.name, "fc", inp * out + out, inp * out))
        elif isinstance(layer, ReLU):
            continue
        else:
            raise TypeError(f"no cost rule for {type(layer).__name__}")
    return report
