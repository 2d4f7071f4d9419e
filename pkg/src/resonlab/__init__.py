"""resonlab: exact lattice counting, constrained multilinear convolution
estimates, and a Galerkin-truncated frequency-side Schrodinger flow."""

from .counting import (
    CountingLemma,
    CountQuery,
    CountReport,
    ScanResult,
    count_constrained,
    divisor_count,
    enumerate_ball,
    fit_loglog_slope,
    lcm_gcd_identity_check,
    naive_count,
    scan_worst_case,
    theoretical_bound,
)
from .errors import (
    ArityError,
    BudgetError,
    ConfigError,
    DegenerateInputError,
    DimensionError,
    DivergenceError,
    ParameterError,
    PreconditionError,
    QueryError,
    ResonlabError,
    UnsupportedCaseError,
)
from .flow import (
    DivergenceRecord,
    FlowParams,
    InteractionTable,
    Splitting,
    build_interaction_table,
    evolve,
    observables,
    read_state,
    rhs,
    trajectory_records,
    uniqueness_experiment,
    write_state,
)
from .lattice import (
    RankProfile,
    SpectralField,
    TupleClass,
    dyadic_project,
    dyadic_shell,
    in_exceptional_set,
    order_compare,
    phi,
    rank_and_classify,
    signed_sum,
    weighted_norm,
)
from .multilinear import (
    CounterexampleFamily,
    EstimateSpec,
    EstimateTag,
    Restriction,
    counterexample_family,
    critical_exponent,
    dyadic_block_check,
    embedding_exponent,
    eps_slack,
    estimate_ratio,
    extremizer_search,
    resonant_levels,
    resonant_sum,
    resonant_sum_by_level,
    signed_convolution,
)

__version__ = "0.1.0"
