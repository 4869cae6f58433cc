"""Attribute-hierarchy diagnostic modeling and hierarchy testing.

The package fits restricted latent class models whose latent binary
attributes obey a prerequisite DAG, checks whether such a hierarchy is
testable at all under a given Q-matrix, and tests the hierarchy with
bootstrap likelihood-ratio procedures.
"""

__version__ = "0.1.0"

from .em import CdmFit, FitConfig, boundary_score, fit_em, posterior_profiles
from .errors import (
    BaseProfileMissing,
    ColumnCountMismatch,
    CycleError,
    DegenerateDataWarning,
    DimensionMismatch,
    EmptySupport,
    InvalidDf,
    KTooLarge,
    NestingError,
    NotASubset,
    ParseError,
    TooFewItems,
    UnknownMethod,
    WeightError,
)
from .lrt import (
    TestReport,
    chibar_pvalue,
    chibar_test,
    lrt_statistic,
    naive_chisq_pvalue,
    naive_chisq_test,
    nonparametric_bootstrap_test,
    parametric_bootstrap_test,
    single_boundary_chibar_pvalue,
)
from .models import (
    DinaParams,
    GdinaParams,
    ProportionVector,
    item_prob,
    marginal_loglik,
    response_prob_table,
    simulate_responses,
)
from .qmatrix import (
    ConstraintMatrix,
    Hierarchy,
    ProfileSet,
    QMatrix,
    complement_profile_set,
    constraint_matrix,
    densify,
    ideal_response,
    induce_profile_set,
    partial_order_holds,
    partial_orders_equal,
    sparsify,
    transitive_closure,
    validate_hierarchy,
)
from .simulation import (
    ExperimentConfig,
    ExperimentResult,
    generate_q,
    make_truth,
    qq_export,
    run_experiment,
)
from .testability import (
    TestabilityReport,
    check_dina_conditional,
    check_dina_strict,
    check_general_generic,
    check_general_strict,
    profile_separation,
)
