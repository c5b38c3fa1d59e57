"""martlab: an exact laboratory for discrete-time martingale theory.

Finite filtered probability spaces with rational arithmetic end to end:
conditional expectations, compensators, quadratic variation, stochastic
integrals, convex L2 recombination, and dyadic convergence pipelines, all
certified with zero-tolerance checks.
"""

from .errors import (
    ConstructionError,
    MartlabError,
    ModelFormatError,
    PreconditionError,
    SelfCheckError,
)
from .prob import (
    Filtration,
    Partition,
    RandomVariable,
    SampleSpace,
    conditional_expectation,
    expectation,
    is_measurable,
    l2_inner,
    l2_norm_sq,
)
from .processes import (
    NEVER,
    ProcessPath,
    StoppingTime,
    VerificationReport,
    is_adapted,
    is_martingale,
    is_predictable,
    optional_sampling_check,
    stopped_process,
    total_variation,
    value_at,
)
from .compensator import (
    compensator_uniqueness_check,
    discrete_compensator,
    signed_compensator,
    single_jump_process,
)
from .quadratic import (
    covariation,
    decomposition_check,
    integration_by_parts_check,
    lagged,
    n_process,
    predictable_quadratic_variation,
    quadratic_variation,
    stochastic_integral,
)
from .mazur import (
    ConvexWeights,
    MazurCertificate,
    mazur_sequence,
    solve_simplex_qp,
    tail_min_l2,
)
from .refinement import (
    ConvergenceTable,
    DyadicGrid,
    StepFunction,
    coarsen,
    compensator_pipeline,
    lift,
    limsup_at_stopping_time_check,
    qv_pipeline,
    step_sum_convergence_check,
    tail_sup_fatou_check,
    uniform_jump_convergence_check,
)
from .models import (
    RandomizedInstance,
    XorShift64,
    binary_tree_space,
    dyadic_walk_model,
    poisson_skeleton,
    random_walk,
    randomized_instance,
)

__version__ = "0.1.0"
