"""Linear operators of the measurement model.

The encoding operator is ``A = P F`` where ``F`` is the centered, unitary
2D Fourier transform applied to each temporal frame independently and ``P``
keeps the sampled phase-encode lines.  With the unitary normalization the
operator norm of ``A`` is 1 and the adjoint of ``A`` is ``F^H P``, which
keeps gradient step sizes near 1 stable without spectral estimation.
"""

import numpy as np

from .core import (
    ConfigError,
    DimensionError,
    DynamicImage,
    KSpaceData,
    SamplingMask,
)

_SPATIAL_AXES = (0, 1)


def _fft2c_arr(arr):
    shifted = np.fft.ifftshift(arr, axes=_SPATIAL_AXES)
    k = np.fft.fft2(shifted, axes=_SPATIAL_AXES, norm="ortho")
    return np.fft.fftshift(k, axes=_SPATIAL_AXES)


def _ifft2c_arr(arr):
    shifted = np.fft.ifftshift(arr, axes=_SPATIAL_AXES)
    img = np.fft.ifft2(shifted, axes=_SPATIAL_AXES, norm="ortho")
    return np.fft.fftshift(img, axes=_SPATIAL_AXES)


def fft2c(img: DynamicImage) -> DynamicImage:
    """Centered unitary 2D Fourier transform of every frame.

    The DC component sits at index ``(nx//2, ny//2)`` and the transform is
    scaled by ``1/sqrt(nx*ny)`` so that it preserves the L2 norm.
    """
    return DynamicImage(_fft2c_arr(img.data))


def ifft2c(ksp: DynamicImage) -> DynamicImage:
    """Exact inverse of :func:`fft2c`."""
    return DynamicImage(_ifft2c_arr(ksp.data))


def _check_mask_dims(data_shape, mask: SamplingMask):
    if mask.ny != data_shape[1] or mask.nt != data_shape[2]:
        raise DimensionError(
            f"mask (ny={mask.ny}, nt={mask.nt}) does not match volume shape {tuple(data_shape)}"
        )


def encode(img: DynamicImage, mask: SamplingMask) -> KSpaceData:
    """Forward measurement ``A x``: Fourier transform then zero unsampled lines."""
    _check_mask_dims(img.shape, mask)
    k = _fft2c_arr(img.data) * mask.entries[None, :, :]
    return KSpaceData(k, mask)


def encode_adjoint(ksp: KSpaceData) -> DynamicImage:
    """Adjoint measurement ``A^H y``: mask the k-space, then inverse transform.

    Satisfies ``<A x, y> == <x, A^H y>`` for every image x and k-space y.
    Applied to acquired data this is the zero-filled reconstruction.
    """
    masked = ksp.data * ksp.mask.entries[None, :, :]
    return DynamicImage(_ifft2c_arr(masked))


def _dc_arr(pred_arr, acq_arr, sampled, mode, nu):
    """Data-consistency kernel on raw arrays; ``sampled`` is a (ny, nt) bool mask."""
    k = _fft2c_arr(pred_arr)
    if mode == "replace":
        k[:, sampled] = acq_arr[:, sampled]
    elif mode == "weighted":
        if nu is None:
            raise ConfigError("weighted data consistency requires nu")
        if not nu >= 0:
            raise ConfigError(f"nu must be >= 0, got {nu}")
        k[:, sampled] = (k[:, sampled] + nu * acq_arr[:, sampled]) / (1.0 + nu)
    else:
        raise ConfigError(f"unknown data-consistency mode {mode!r}")
    return _ifft2c_arr(k)


def data_consistency(
    pred: DynamicImage,
    acquired: KSpaceData,
    mode: str = "replace",
    nu: float | None = None,
) -> DynamicImage:
    """Enforce agreement with the acquired k-space samples.

    Unsampled k-space coefficients keep the predicted values.  Sampled
    coefficients are overwritten by the acquired values (``mode="replace"``,
    the noiseless default) or blended as ``(pred + nu*acq) / (1 + nu)``
    (``mode="weighted"``).  ``nu = 0`` leaves the prediction untouched and
    ``nu -> inf`` approaches replace mode.  The result is returned in image
    space.
    """
    if pred.shape != acquired.shape:
        raise DimensionError(
            f"prediction shape {pred.shape} does not match acquired shape {acquired.shape}"
        )
    sampled = acquired.mask.entries.astype(bool)
    return DynamicImage(_dc_arr(pred.data, acquired.data, sampled, mode, nu))
