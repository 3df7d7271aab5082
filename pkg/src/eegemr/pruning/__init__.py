"""Dependency-graph structured pruning for the micro LM."""

from .graph import LayerGraph, Node, build_dependency_graph, check_symmetry
from .groups import ParamGroup, channel_importance, group_importance, group_parameters
from .plan import GroupDecision, PruningPlan, apply_plan, head_coupling_chain, make_plan, prune_model
from .shapes import ShapeReport, count_params, count_params_config, forward_flops, published_comparison, shape_plan

__all__ = [
    "LayerGraph", "Node", "build_dependency_graph", "check_symmetry",
    "ParamGroup", "channel_importance", "group_importance", "group_parameters",
    "GroupDecision", "PruningPlan", "apply_plan", "head_coupling_chain", "make_plan", "prune_model",
    "ShapeReport", "count_params", "count_params_config", "forward_flops",
    "published_comparison", "shape_plan",
]
