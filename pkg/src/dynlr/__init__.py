"""Sparse and low-rank iterative reconstruction for dynamic Cartesian MRI."""

from .core import (
    CasoratiView,
    ConfigError,
    DataError,
    DimensionError,
    DynamicImage,
    DynlrError,
    FormatError,
    KSpaceData,
    NumericError,
    SamplingMask,
    SolverConfig,
    from_casorati,
    to_casorati,
)
from .dataio import read_cplx, read_mask, write_cplx, write_mask
from .metrics import mse, mse_per_element, psnr, ssim
from .operators import data_consistency, encode, encode_adjoint, fft2c, ifft2c
from .prox import (
    SparseTransform,
    casorati_rank,
    ist_svt,
    learned_svt,
    nuclear_norm,
    soft_threshold,
    transform_adjoint,
    transform_forward,
)
from .sim import central_lines, make_phantom, make_vd_mask
from .solvers import (
    IterationRecord,
    ObjectiveBreakdown,
    ReconReport,
    default_config,
    objective_slr,
    run_solver,
    solve_ista_lr,
    solve_ista_sparse,
    solve_slr,
    tune_hyperparams,
)

__version__ = "0.1.0"

__all__ = [
    "CasoratiView",
    "ConfigError",
    "DataError",
    "DimensionError",
    "DynamicImage",
    "DynlrError",
    "FormatError",
    "IterationRecord",
    "KSpaceData",
    "NumericError",
    "ObjectiveBreakdown",
    "ReconReport",
    "SamplingMask",
    "SolverConfig",
    "SparseTransform",
    "casorati_rank",
    "central_lines",
    "data_consistency",
    "default_config",
    "encode",
    "encode_adjoint",
    "fft2c",
    "from_casorati",
    "ifft2c",
    "ist_svt",
    "learned_svt",
    "make_phantom",
    "make_vd_mask",
    "mse",
    "mse_per_element",
    "nuclear_norm",
    "objective_slr",
    "psnr",
    "read_cplx",
    "read_mask",
    "run_solver",
    "soft_threshold",
    "solve_ista_lr",
    "solve_ista_sparse",
    "solve_slr",
    "ssim",
    "to_casorati",
    "transform_adjoint",
    "transform_forward",
    "tune_hyperparams",
    "write_cplx",
    "write_mask",
]
