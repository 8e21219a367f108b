"""Convexity-preserving nonconvex regularization toolkit.

Builds enhanced (generalized-Moreau) penalties from proximable convex
ones, designs the enhancement matrix so the full least-squares objective
stays convex, certifies that convexity, and solves the resulting models
with a fixed-point proximal splitting iteration. A small experiment
harness reproduces signal-recovery, deblurring, and matrix-completion
benchmarks at desk scale.
"""

from .design import BDesign, MultiBDesign, PenaltyBlock, complete_to_square, design_b, design_b_multi
from .linops import (
    DenseOperator,
    DiagonalMask,
    FirstDifference,
    HorizontalDifference,
    Identity,
    KroneckerProduct,
    LinearOperator,
    VerticalDifference,
    VStack,
    ZeroOperator,
    make_blur,
    make_diff_1d,
    make_diff_2d,
    make_mask,
    op_norm,
    vstack,
)
from .matio import load_matrix, load_vector, save_matrix, save_vector
from .model import (
    ConvexityCertificate,
    InnerSolveConfig,
    Problem,
    certify_convexity,
    check_l1_linear_region,
    gme_value,
    objective,
)
from .penalties import L1Norm, NuclearNorm, Penalty, SeparableSum, soft_threshold
from .solver import (
    FixedPointMap,
    PMetric,
    SolveResult,
    SolverConfig,
    SolverState,
    auto_step_sizes,
    selesnick_solve,
    solve,
    t_step,
)
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    RunReport,
    add_noise_snr,
    block_image,
    gen_scenario,
    noise_for_snr,
    num_rank,
    piecewise_constant_signal,
    run_experiment,
    sweep_mu,
)

__version__ = "0.1.0"
