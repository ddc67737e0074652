"""Nonlinearly preconditioned gradient methods.

Scalar convex kernels and their conjugates generate reference functions
whose dual gradient maps precondition (clip, normalize, or rescale) the
gradient inside first-order methods.  The package ships the base method,
its heavy-ball variant, a stochastic variant, baselines, test problems,
and a certification suite that numerically verifies the descent
inequalities, noise bounds, and convergence-rate formulas the methods
are built on.
"""

from npgm.kernels import (
    DomainError,
    Kernel,
    ReferenceFunction,
    kernel_make,
    make_reference,
)
from npgm.problems import (
    Problem,
    StochasticOracle,
    finite_diff_grad,
    load_movielens,
    make_matrix_factorization,
    make_noise_example,
    make_phase_retrieval,
    make_selfcal_cosh,
)
from npgm.optimizers import (
    DivergenceError,
    OptimizerState,
    RunTrace,
    TraceRecord,
    clipped_step,
    gd_step,
    gdm_step,
    init_state,
    mnpgm_step,
    npgm_step,
    run,
    snpgm_step,
)

__all__ = [
    "DomainError",
    "Kernel",
    "ReferenceFunction",
    "kernel_make",
    "make_reference",
    "Problem",
    "StochasticOracle",
    "finite_diff_grad",
    "load_movielens",
    "make_matrix_factorization",
    "make_noise_example",
    "make_phase_retrieval",
    "make_selfcal_cosh",
    "DivergenceError",
    "OptimizerState",
    "RunTrace",
    "TraceRecord",
    "clipped_step",
    "gd_step",
    "gdm_step",
    "init_state",
    "mnpgm_step",
    "npgm_step",
    "run",
    "snpgm_step",
]
