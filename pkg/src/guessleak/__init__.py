"""Guessing leakage and exact utility-privacy trade-offs for finite alphabets."""

from .divergence import CHI2, KL, TV, FGenerator, f_divergence, f_information, utility_of_mechanism
from .geometry import (
    RankPartitionSpec,
    VertexSet,
    build_partitions,
    certify_extreme_point,
    enumerate_vertices,
    enumerate_vertices_exact,
    locate_partition,
)
from .oracle import (
    GridSearchConfig,
    exhaustive_strategy_check,
    grid_search_tradeoff,
    simulate_guesser,
    simulate_informed_guesser,
)
from .probability import (
    Channel,
    JointSystem,
    Mechanism,
    ProbVector,
    RankVector,
    conditional_guessing_entropy,
    full_disclosure_leakage,
    full_disclosure_leakage_multiplicative,
    guessing_entropy,
    guessing_entropy_capped,
    guessing_leakage,
    multiplicative_guessing_leakage,
    rank_vector,
)
from .tradeoff import (
    LPInstance,
    TradeoffCurve,
    assemble_lp,
    extract_mechanism,
    guessing_gain_objective,
    solve_lp,
    sweep_curve,
)

__version__ = "0.1.0"

__all__ = [
    "CHI2",
    "Channel",
    "FGenerator",
    "GridSearchConfig",
    "JointSystem",
    "KL",
    "LPInstance",
    "Mechanism",
    "ProbVector",
    "RankPartitionSpec",
    "RankVector",
    "TV",
    "TradeoffCurve",
    "VertexSet",
    "assemble_lp",
    "build_partitions",
    "certify_extreme_point",
    "conditional_guessing_entropy",
    "enumerate_vertices",
    "enumerate_vertices_exact",
    "exhaustive_strategy_check",
    "extract_mechanism",
    "f_divergence",
    "f_information",
    "full_disclosure_leakage",
    "full_disclosure_leakage_multiplicative",
    "grid_search_tradeoff",
    "guessing_entropy",
    "guessing_entropy_capped",
    "guessing_gain_objective",
    "guessing_leakage",
    "locate_partition",
    "multiplicative_guessing_leakage",
    "rank_vector",
    "simulate_guesser",
    "simulate_informed_guesser",
    "solve_lp",
    "sweep_curve",
    "utility_of_mechanism",
    "__version__",
]
