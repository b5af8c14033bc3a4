"""Proximal bundle method for nonsmooth g-convex optimization on Hadamard manifolds."""

from .bundle import (
    BundleState,
    Counters,
    RunConfig,
    RunResult,
    ScheduleParams,
    TraceRecord,
    backtrack_rho,
    candidate_radius,
    constant_A,
    delta_swap,
    descent_test,
    growth_schedule_rho,
    model_prox_gap,
    model_shift,
    null_progress_test,
    prox_gap_lower_bound,
    recurrence_check,
    rho_tilde,
    rpbm_step,
    run,
    transported_subgrad_bound,
)
from .geometry import (
    Euclidean,
    GeometryConstants,
    Manifold,
    Point,
    Tangent,
    check_point,
    check_tangent,
    configure_primitives,
    estimate_primitive_constants,
)
from .hyperboloid import Hyperboloid, ProductManifold, minkowski_inner
from .model import (
    Cut,
    SolveResult,
    ThreeCutModel,
    anchor_model,
    solve_prox_subproblem,
    two_cut_theta,
)
from .problems import (
    DenoiseInstance,
    SubgradOracle,
    add_tangent_noise,
    gen_random_spd,
    gen_square_wave,
    make_denoise_instance,
    median_oracle,
    sharp_toy,
    tv_oracle,
)
from .spd import SpdConfig, SymmetricPositiveDefinite
from .subgradient import SgmConfig, sgm_run, sgm_step

__version__ = "0.1.0"
