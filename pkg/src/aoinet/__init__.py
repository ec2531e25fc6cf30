"""Average age-of-information toolkit for half-duplex slotted-ALOHA
broadcast networks: closed-form link statistics, convex optimization of
transmit probabilities, and a Monte Carlo simulator that serves as an
independent oracle for the analysis.
"""

from ._kernels import DEFAULT_BACKEND, HAVE_COMPILED
from .analysis import (
    Evaluator,
    InfeasiblePointError,
    LinkMetrics,
    LinkStat,
    NetworkParams,
    ObjectiveKind,
    aggregates,
    avg_aoi_link,
    gradient,
    link_metrics,
    link_success_prob,
    objective,
)
from .graph import (
    DirectedLink,
    EdgeListParseError,
    Topology,
    from_spec,
    make_asym_circle6,
    make_asym_star6,
    make_complete,
    make_grid,
    make_line,
    make_ring,
    make_star,
    make_tree6,
    parse_edge_list,
    serialize,
)
from .optimizer import (
    SolveOptions,
    SolveResult,
    StarSolution,
    brute_force_grid,
    d_regular_closed_form,
    solve_fixed_point,
    solve_projected_gradient,
    star_polynomial_check,
    star_solve,
)
from .simulator import SimConfig, SimResult, estimate_mu, run

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BACKEND",
    "HAVE_COMPILED",
    "DirectedLink",
    "EdgeListParseError",
    "Evaluator",
    "InfeasiblePointError",
    "LinkMetrics",
    "LinkStat",
    "NetworkParams",
    "ObjectiveKind",
    "SimConfig",
    "SimResult",
    "SolveOptions",
    "SolveResult",
    "StarSolution",
    "Topology",
    "aggregates",
    "avg_aoi_link",
    "brute_force_grid",
    "d_regular_closed_form",
    "estimate_mu",
    "from_spec",
    "gradient",
    "link_metrics",
    "link_success_prob",
    "make_asym_circle6",
    "make_asym_star6",
    "make_complete",
    "make_grid",
    "make_line",
    "make_ring",
    "make_star",
    "make_tree6",
    "objective",
    "parse_edge_list",
    "run",
    "serialize",
    "solve_fixed_point",
    "solve_projected_gradient",
    "star_polynomial_check",
    "star_solve",
    "__version__",
]
