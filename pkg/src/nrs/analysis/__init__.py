from .costs import CostReport, count_costs
from .experiments import ABLATION_MODES, ablate, parse_grid, sweep
from .gradcheck import GradCheckReport, check_layer, grad_check

__all__ = ["ABLATION_MODES", "CostReport", "GradCheckReport", "ablate",
           "check_layer", "count_costs", "grad_check", "parse_grid", "sweep"]
