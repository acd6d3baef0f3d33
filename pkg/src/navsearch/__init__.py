"""Content search through comparisons and navigable small-world design
under heterogeneous demand."""

from .demand import Demand, Distribution, entropy, marginals, max_entropy
from .measures import ball_mass, doubling_constant, doubling_constant_bruteforce, rank
from .oracle import ComparisonOracle, OracleAnswer, OracleConfig, TiePolicy
from .policy import (
    ExactRankPolicy,
    NonmetricPolicy,
    TargetOrder,
    UniformPolicy,
    disorder_constant,
    nonmetric_policy,
    nonmetric_rank,
    normalizer,
    shortcut_distribution,
)
from .search import (
    SearchOutcome,
    Terminated,
    default_cap,
    expected_search_cost,
    greedy_content_search,
    proximity_search,
)
from .smallworld import (
    GridSpec,
    NavGraph,
    expected_forwarding_cost,
    greedy_forward,
    grid_space,
    sample_shortcuts,
    validate_local_edges,
)
from .space import MetricSpace, ObjectId, Ordering, validate_metric, validate_ultrametric
from .learning import (
    LearnedPolicy,
    OrderStore,
    TargetCounter,
    estimated_rank,
    learned_distribution,
    run_adaptive,
)
from .instances import (
    HierarchicalSpec,
    build_hierarchical_space,
    line_space,
    random_instance,
    verify_lower_bound_instance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
