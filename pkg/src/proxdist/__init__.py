"""Proximal distance algorithms for fusion-constrained optimization.

Minimize a quadratic loss f(x) subject to D x in S by annealing the
penalized objective f(x) + rho/2 dist(D x, S)^2, with interchangeable
inner solvers (surrogate minimization, steepest descent, ADMM), structured
fusion operators, and exact linear-system inverses where the problem
admits them.
"""

from ._kern import BACKEND as kernel_backend
from .engine import (
    AnnealingSchedule,
    RunTrace,
    SolverState,
    StoppingConfig,
    accelerate,
    admm_step,
    gradient_h,
    mm_step,
    objective_h,
    run_annealing,
    run_inner,
    sd_step,
)
from .errors import ContractViolationError, SolverFailureError
from .linsolve import (
    SpdSystem,
    cg_solve,
    condnum_inverse_apply,
    lsqr_solve,
    metric_inverse_apply,
)
from .metrics import adjusted_rand_index, mse, normalized_mutual_information, psnr
from .operators import (
    ClusteringOperator,
    CondnumOperator,
    DenseOperator,
    FusionOperator,
    IdentityOperator,
    StackedOperator,
    TriangleOperator,
    TvOperator,
    incidence_apply,
    incidence_apply_transpose,
    materialize_dense,
)
from .problems import (
    ClusterPathResult,
    ProblemInstance,
    QuadraticLoss,
    build_clustering,
    build_condnum,
    build_cvxreg,
    build_denoise,
    build_metric,
    cvxclusterpath,
    denoise_path,
    knn_gaussian_weights,
    singular_values,
    trivec,
    tv1_norm,
    untrivec,
)
from .projections import (
    BlockProduct,
    ColumnSparsitySet,
    ConstraintSet,
    FreeSet,
    L1Ball,
    NonnegativeOrthant,
    NonpositiveOrthant,
    SparsitySet,
    project,
    project_column_sparsity,
    project_l1_ball,
    prox_scaled_distance,
)

__version__ = "0.1.0"
