"""hetjsq: randomized JSQ load balancing in heterogeneous PS server farms.

Stability regions, mean-field equilibria, delay-optimal routing biases
(static and hybrid SQ(2)), and an exact event-driven simulator.
"""

from . import errors
from .hybrid import (
    HybridSolution,
    hybrid_tails,
    phi,
    phi_inverse,
    proportional_bias,
    psi,
    psi_inverse,
    solve_hybrid,
    sq2_tail_series_sum,
)
from .meanfield import (
    EquilibriumResult,
    MeanFieldState,
    class_join_probabilities,
    class_join_probability,
    consistency_residual,
    drift,
    empty_state,
    fixed_point,
    integrate,
    mean_sojourn_from_tails,
    next_tail_levels,
    state_dependent_rate,
)
from .model import (
    ServerClass,
    SystemConfig,
    TailFamily,
    TailVector,
    config_from_dict,
    load_config_file,
    validate_config,
)
from .simulation import (
    ENGINE,
    HybridScheme,
    SimConfig,
    SimResult,
    SQd,
    StaticScheme,
    run,
)
from .stability import (
    StabilityReport,
    analyze,
    asymptotic_sq2_limit,
    check_subset_condition,
    finite_n_limit,
    n_star,
    static_limit,
)
from .static_routing import StaticRoutingSolution, solve_static

__version__ = "0.1.0"
