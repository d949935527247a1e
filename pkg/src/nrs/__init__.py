"""Neural random subspace (NRS) networks for vectorized inputs."""

from .network import ArchSpec, Network, build_network
from .plan import PermutationPlan, build_permutation_plan, expand, expand_backward

__all__ = ["ArchSpec", "Network", "PermutationPlan", "build_network",
           "build_permutation_plan", "expand", "expand_backward"]
__version__ = "0.1.0"
