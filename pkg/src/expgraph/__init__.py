"""Semilinear elliptic equations with exponential nonlinearities on finite
weighted graphs: solving, solution enumeration, Brouwer degree, vertex
elimination, and existence-threshold scans."""

from .graphs import (
    WeightedGraph,
    GraphFormatError,
    laplacian,
    gamma,
    grad_norm,
    average,
    lp_norm,
    w1p_norm,
    elliptic_constant,
    build_laplacian_matrix,
    two_vertex_graph,
    path_graph,
    star_graph,
    random_connected_graph,
)
from .nonlinearity import (
    ExpNonlinearity,
    ExpOverflowError,
    evaluate,
    residual,
    jacobian,
    degree_sign_matrix,
    jacobian_sign,
    functional,
    functional_gradient,
    leading_profile,
    classify,
    normalize_f0,
    translate,
    predicted_degree,
)
from .reduction import (
    Partition,
    ReducedSystem,
    InvariantError,
    partition,
    schur_reduce,
    lift_solution,
    determinant_identity_gap,
)
from .solver import (
    SolverConfig,
    ConfigError,
    Solution,
    SolutionSet,
    newton_solve,
    multistart_enumerate,
    check_sub,
    check_super,
    check_ordered_pair,
    minimize_boxed,
)
from .degree import (
    DegreeReport,
    HomotopyPath,
    GuardViolation,
    empirical_degree,
    canonical_homotopy,
    track_homotopy,
    two_vertex_analyze,
)
from .existence import (
    build_small_c_supersolution,
    solve_aux_kw,
    kw_source_from_f1,
    kw_source_case_d,
    build_fstar,
    estimate_cn,
    multiplicity_search,
    nonexistence_check,
    with_constant,
)
from .apriori import (
    check_bound_hypothesis,
    classify_trichotomy,
    blowup_family,
    empirical_boundedness_sweep,
)

__version__ = "0.1.0"
