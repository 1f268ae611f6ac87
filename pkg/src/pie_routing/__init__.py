"""Multi-level tree embedding and greedy geometric routing simulator."""

from .graph import (
    Graph,
    GlpParams,
    WeightMode,
    assign_weights,
    estimate_power_law_exponent,
    generate_glp,
    largest_component,
    load_edge_list,
    shortest_path,
)

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "GlpParams",
    "WeightMode",
    "assign_weights",
    "estimate_power_law_exponent",
    "generate_glp",
    "largest_component",
    "load_edge_list",
    "shortest_path",
    "__version__",
]
