"""Domain types shared across the package.

All volumes are complex-valued space-time arrays indexed ``[x, y, t]`` with
shape ``(nx, ny, nt)``.  Whenever a volume is flattened (Casorati matrix,
file format), the x index varies fastest, then y, then t.  Types are
immutable after construction: their arrays are copied in and marked
read-only, so instances can be shared freely between threads.
"""

import math
from dataclasses import dataclass, fields, replace

import numpy as np


class DynlrError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DynlrError):
    """Invalid parameter value or parameter combination."""


class DataError(DynlrError):
    """Input data violates a type invariant (non-finite, non-binary, ...)."""


class DimensionError(DataError):
    """Array dimensions are inconsistent with each other or with a contract."""


class FormatError(DataError):
    """A file on disk is missing, corrupt, or inconsistent with its header."""


class NumericError(DynlrError):
    """A numerical failure (NaN/Inf) occurred during an iterative solve."""

    def __init__(self, message, step=None, iteration=None):
        super().__init__(message)
        self.step = step
        self.iteration = iteration


def _as_locked_complex(data, ndim, name):
    arr = np.array(data, dtype=np.complex128)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must have at least one element per axis")
    if not np.isfinite(arr).all():
        raise DataError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DynamicImage:
    """Complex space-time volume, shape ``(nx, ny, nt)``, indexed ``[x, y, t]``."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_locked_complex(self.data, 3, "DynamicImage"))

    @property
    def shape(self):
        return self.data.shape

    @property
    def nx(self):
        return self.data.shape[0]

    @property
    def ny(self):
        return self.data.shape[1]

    @property
    def nt(self):
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class SamplingMask:
    """Binary Cartesian phase-encode mask, shape ``(ny, nt)``.

    The frequency-encode direction (x) is always fully sampled, so the mask
    is defined on phase-encode lines per frame only.  ``acceleration`` is the
    nominal acceleration factor; the achieved factor is derived from the
    entries.
    """

    entries: np.ndarray
    acceleration: float

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.ndim != 2:
            raise DimensionError(f"mask entries must be 2-dimensional (ny, nt), got shape {arr.shape}")
        if arr.size == 0:
            raise DimensionError("mask must have at least one line and one frame")
        if not np.isin(arr, (0, 1)).all():
            raise DataError("mask entries must be 0 or 1")
        if not (math.isfinite(self.acceleration) and self.acceleration > 0):
            raise DataError(f"nominal acceleration must be positive, got {self.acceleration}")
        locked = arr.astype(np.uint8)
        locked.setflags(write=False)
        object.__setattr__(self, "entries", locked)
        object.__setattr__(self, "acceleration", float(self.acceleration))

    @property
    def ny(self):
        return self.entries.shape[0]

    @property
    def nt(self):
        return self.entries.shape[1]

    @property
    def n_sampled(self):
        return int(self.entries.sum())

    @property
    def achieved_acceleration(self):
        n = self.n_sampled
        if n == 0:
            raise DataError("mask samples no lines")
        return self.entries.size / n


@dataclass(frozen=True, eq=False)
class KSpaceData:
    """Measured k-space volume plus the mask it was acquired with."""

    data: np.ndarray
    mask: SamplingMask

    def __post_init__(self):
        object.__setattr__(self, "data", _as_locked_complex(self.data, 3, "KSpaceData"))
        if self.mask.ny != self.data.shape[1] or self.mask.nt != self.data.shape[2]:
            raise DimensionError(
                f"mask shape (ny={self.mask.ny}, nt={self.mask.nt}) does not match "
                f"k-space shape {self.data.shape}"
            )

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class CasoratiView:
    """Space-time matrix of shape ``(nx*ny, nt)``; column j is frame j flattened x-fastest."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_locked_complex(self.matrix, 2, "CasoratiView"))

    @property
    def shape(self):
        return self.matrix.shape


def to_casorati(img: DynamicImage) -> CasoratiView:
    """Reshape a volume into its Casorati matrix.

    Column ``j`` holds frame ``j`` flattened with x varying fastest, so entry
    ``(x + nx*y, t)`` of the matrix equals voxel ``(x, y, t)`` of the volume.
    The mapping is a pure reindexing; the round trip through
    :func:`from_casorati` is bit-exact.
    """
    nx, ny, nt = img.shape
    return CasoratiView(img.data.reshape(nx * ny, nt, order="F"))


def from_casorati(view: CasoratiView, shape) -> DynamicImage:
    """Inverse of :func:`to_casorati` for a volume of the given ``(nx, ny, nt)``."""
    nx, ny, nt = shape
    rows, cols = view.matrix.shape
    if rows != nx * ny or cols != nt:
        raise DimensionError(
            f"matrix of shape {view.matrix.shape} cannot be reshaped to volume {tuple(shape)}"
        )
    return DynamicImage(view.matrix.reshape((nx, ny, nt), order="F"))


PLACEMENTS = ("L1", "L2", "L3")
DC_MODES = ("replace", "weighted")
LR_MODES = ("hard", "soft")
T_STEP_INPUTS = ("x_plus_beta", "x")
TRANSFORM_KINDS = ("temporal_fourier", "temporal_haar")


@dataclass(frozen=True)
class SolverConfig:
    """Hyper-parameters shared by the iterative solvers.

    Attributes
    ----------
    lambda1 : float
        Weight of the sparse (L1) regularizer, >= 0.
    lambda2 : float
        Weight of the low-rank (nuclear norm) regularizer, >= 0.
    rho : float
        Penalty parameter coupling the image to its low-rank surrogate, >= 0.
    eta1 : float
        Multiplier update rate, >= 0.
    eta2 : float
        Gradient step size, > 0.  With the unitary encoding operator used
        here the operator norm is 1, so values near 1 are stable.
    rank_k : int
        Number of singular values retained by the hard-rank thresholding
        step, 1 <= rank_k <= nt.
    p : float
        Exponent of the singular-value shrinkage rule in soft mode, in
        (0, 1].  p = 1 gives the classical constant-threshold shrinkage.
    iterations : int
        Number of outer iterations, >= 1.
    placement : str
        Where the plug-in low-rank module sits in the iteration: "L1"
        before the sparse step, "L2" after it and before data consistency,
        "L3" after data consistency.
    dc_mode : str
        "replace" overwrites sampled k-space coefficients with the acquired
        values; "weighted" blends them as (pred + nu*acq) / (1 + nu).
    dc_nu : float
        Blend weight for weighted data consistency, >= 0.  nu = 0 keeps the
        prediction (data consistency disabled); nu -> inf approaches replace.
    lr_mode : str
        "hard" keeps the top rank_k singular values and zeroes the rest;
        "soft" shrinks each singular value by (lambda2/rho) * sigma^(p-1).
    transform : str
        Unitary temporal sparsifying transform kind.
    t_step_input : str
        Input handed to the singular-value thresholding step of the
        four-step solver: the image plus the scaled multiplier
        ("x_plus_beta", the subproblem form) or the image alone ("x").
    """

    lambda1: float = 1e-3
    lambda2: float = 1e-3
    rho: float = 0.1
    eta1: float = 1.0
    eta2: float = 1.0
    rank_k: int = 4
    p: float = 1.0
    iterations: int = 8
    placement: str = "L2"
    dc_mode: str = "replace"
    dc_nu: float = 1.0
    lr_mode: str = "hard"
    transform: str = "temporal_fourier"
    t_step_input: str = "x_plus_beta"

    def validate(self):
        """Raise ConfigError if any field is outside its allowed range."""
        if not (math.isfinite(self.lambda1) and self.lambda1 >= 0):
            raise ConfigError(f"lambda1 must be >= 0, got {self.lambda1}")
        if not (math.isfinite(self.lambda2) and self.lambda2 >= 0):
            raise ConfigError(f"lambda2 must be >= 0, got {self.lambda2}")
        if not (math.isfinite(self.rho) and self.rho >= 0):
            raise ConfigError(f"rho must be >= 0, got {self.rho}")
        if not (math.isfinite(self.eta1) and self.eta1 >= 0):
            raise ConfigError(f"eta1 must be >= 0, got {self.eta1}")
        if not (math.isfinite(self.eta2) and self.eta2 > 0):
            raise ConfigError(f"eta2 must be > 0, got {self.eta2}")
        if not (isinstance(self.rank_k, (int, np.integer)) and self.rank_k >= 1):
            raise ConfigError(f"rank_k must be a positive integer, got {self.rank_k}")
        if not (0 < self.p <= 1):
            raise ConfigError(f"p must lie in (0, 1], got {self.p}")
        if not (isinstance(self.iterations, (int, np.integer)) and self.iterations >= 1):
            raise ConfigError(f"iterations must be a positive integer, got {self.iterations}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if self.dc_mode not in DC_MODES:
            raise ConfigError(f"dc_mode must be one of {DC_MODES}, got {self.dc_mode!r}")
        if not (math.isfinite(self.dc_nu) and self.dc_nu >= 0):
            raise ConfigError(f"dc_nu must be >= 0, got {self.dc_nu}")
        if self.lr_mode not in LR_MODES:
            raise ConfigError(f"lr_mode must be one of {LR_MODES}, got {self.lr_mode!r}")
        if self.transform not in TRANSFORM_KINDS:
            raise ConfigError(f"transform must be one of {TRANSFORM_KINDS}, got {self.transform!r}")
        if self.t_step_input not in T_STEP_INPUTS:
            raise ConfigError(f"t_step_input must be one of {T_STEP_INPUTS}, got {self.t_step_input!r}")
        return self

    def validate_for(self, nt):
        """Validate, additionally requiring rank_k <= nt for the given data."""
        self.validate()
        if self.rank_k > nt:
            raise ConfigError(f"rank_k = {self.rank_k} exceeds the number of frames nt = {nt}")
        return self

    def replaced(self, **changes) -> "SolverConfig":
        """Return a copy with the given fields changed."""
        return replace(self, **changes)

    @classmethod
    def field_names(cls):
        return tuple(f.name for f in fields(cls))
