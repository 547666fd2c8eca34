"""Sparse kernel expansions over neural-network parameters.

Networks with a fixed architecture are treated as kernels in their
parameters; interpolation and regularized fitting over a finite candidate
set reduce to linear programs and lasso problems whose solutions are sparse
combinations of networks.
"""

from .candidates import BoxSpec, CandidateSet, default_box, refine, sample
from .kernel import Dataset, FeatureMatrix, WeightFn, feature_matrix, kernel_eval, rank_check, rho, vec
from .lp import LinearProgram, LpSolution, solve_lp
from .measure import Atom, DiscreteMeasure, f_mu_eval, prune, tv_norm
from .mni import (
    DualCertificate,
    MniOptions,
    MniReport,
    RankDeficientError,
    argmax_set,
    solve_dual,
    solve_mni,
    verify_representer,
)
from .network import (
    Activation,
    NetworkParams,
    NetworkSpec,
    ShapeError,
    forward,
    grad_params,
    merge,
    param_dim,
    random_params,
)
from .regularized import (
    RegOptions,
    RegProblem,
    RegReport,
    kkt_check,
    lambda_max,
    lambda_path,
    mni_consistency,
    solve_regularized,
)
from .trainer import Expansion, TrainConfig, grad_check, train_expansion

__version__ = "0.1.0"

__all__ = [
    "BoxSpec",
    "CandidateSet",
    "default_box",
    "refine",
    "sample",
    "Dataset",
    "FeatureMatrix",
    "WeightFn",
    "feature_matrix",
    "kernel_eval",
    "rank_check",
    "rho",
    "vec",
    "LinearProgram",
    "LpSolution",
    "solve_lp",
    "Atom",
    "DiscreteMeasure",
    "f_mu_eval",
    "prune",
    "tv_norm",
    "DualCertificate",
    "MniOptions",
    "MniReport",
    "RankDeficientError",
    "argmax_set",
    "solve_dual",
    "solve_mni",
    "verify_representer",
    "Activation",
    "NetworkParams",
    "NetworkSpec",
    "ShapeError",
    "forward",
    "grad_params",
    "merge",
    "param_dim",
    "random_params",
    "RegOptions",
    "RegProblem",
    "RegReport",
    "kkt_check",
    "lambda_max",
    "lambda_path",
    "mni_consistency",
    "solve_regularized",
    "Expansion",
    "TrainConfig",
    "grad_check",
    "train_expansion",
]
