"""stablab: a desk-scale laboratory for SGD stability on approximately
smooth (including adversarially perturbed) objectives."""

from .bounds import (
    beta2_strongly_concave,
    convergence_bound,
    lb_uas,
    opt_convex,
    opt_strongly_convex,
    tradeoff_fixed,
    ub_convex,
    ub_convex_subopt,
    ub_nonconvex,
    ub_strongly_convex,
    ub_swa,
)
from .engine import (
    FIXED_PERMUTATION,
    FULL_BATCH,
    WITH_REPLACEMENT,
    ScheduleSpec,
    TrajectoryRecord,
    run,
    schedule_alpha,
    tstar,
)
from .errors import RejectedInput, UnsupportedOperation
from .harness import (
    CoupledRun,
    GapEstimate,
    NeighborPair,
    StabilityReport,
    convergence_probe,
    coupled_run,
    estimate_gaps,
    make_neighbors,
    measure_uas,
)
from .objectives import (
    AdversarialConfig,
    ConstantsRecord,
    HardInstance,
    HardInstanceParams,
    LogisticLinear,
    Objective,
    ShiftQuadratic,
    TanhRegression,
    build_objective,
    hard_instance_delta_series,
    make_hard_instance,
)
from .smoothness import (
    PropertyReport,
    SmoothnessCertificate,
    check_cocoercive,
    check_descent,
    check_update_expansiveness,
    estimate_constants,
)

__version__ = "0.1.0"
