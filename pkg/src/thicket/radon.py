"""Forward Radon transform, angular band-stop filtering, and filtered back projection.

The sinogram parameterization is chosen so that image structure running
along the motion direction theta (degrees, clockwise from +y, image y down)
concentrates in the sinogram column at angle theta mod 180. Zeroing the
columns in a band around that angle and inverting therefore removes the
streaks that misregistered static occluders leave in an integral image,
while mostly preserving isotropic structure such as the target blob.

Forward projection is pixel-driven: every pixel splats its value onto the
two detector bins nearest its offset, which conserves per-angle mass to
float rounding and keeps the transform exactly linear. Inversion is the
standard Ram-Lak filtered back projection with linear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np

from . import kernels

DEFAULT_ANGLE_STEP_DEG = 1.0

# Each pixel is projected as a 2x2 subgrid of point masses; together with the
# splat-compensated ramp filter this lifts disk-phantom round-trip fidelity
# from ~25 dB to ~32 dB without touching mass conservation or linearity.
SPLAT_SUPERSAMPLE = 2


def default_angles() -> np.ndarray:
    return np.arange(0.0, 180.0, DEFAULT_ANGLE_STEP_DEG)


def detector_count_for(side: int) -> int:
    """Odd detector count covering the diagonal of a side x side image."""
    d = ceil(sqrt(2.0) * side)
    return d if d % 2 == 1 else d + 1


@dataclass(frozen=True)
class Sinogram:
    """Radon transform samples: one row per angle, one column per detector offset."""

    values: np.ndarray
    angles_deg: np.ndarray
    detector_count: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        angles = np.asarray(self.angles_deg, dtype=np.float64)
        if values.ndim != 2 or values.shape != (len(angles), self.detector_count):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(angles)} angles x {self.detector_count} detectors"
            )
        if self.detector_count % 2 == 0:
            raise ValueError("detector_count must be odd")
        if len(angles) < 1:
            raise ValueError("need at least one angle")
        if np.any(np.diff(angles) <= 0):
            raise ValueError("angle grid must be strictly increasing")
        if angles[0] < 0 or angles[-1] >= 180.0:
            raise ValueError("angles must lie in [0, 180)")
        if not np.all(np.isfinite(values)):
            raise ValueError("sinogram values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "angles_deg", angles)


def _pad_square(image):
    """Center the image in a square zero canvas; returns (canvas, oy, ox)."""
    h, w = image.shape
    side = max(h, w)
    if h == w:
        return np.ascontiguousarray(image, dtype=np.float64), 0, 0
    canvas = np.zeros((side, side))
    oy = (side - h) // 2
    ox = (side - w) // 2
    canvas[oy : oy + h, ox : ox + w] = image
    return canvas, oy, ox


def radon(image, angles_deg=None) -> Sinogram:
    """Line-integral projections of the image over the given angle grid (degrees)."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.size == 0:
        raise ValueError(f"image must be a non-empty 2-D raster, got shape {image.shape}")
    angles = default_angles() if angles_deg is None else np.asarray(angles_deg, dtype=np.float64)
    square, _, _ = _pad_square(image)
    det = detector_count_for(square.shape[0])
    values = kernels.radon_project(square, np.ascontiguousarray(np.deg2rad(angles)), det,
                                   SPLAT_SUPERSAMPLE)
    return Sinogram(values, angles, det)


def band_stop(sino: Sinogram, theta_deg: float, uncertainty_deg: float) -> Sinogram:
    """Zero every angle row within wrapped mod-180 distance `uncertainty_deg` of theta."""
    if not (0.0 <= uncertainty_deg <= 90.0):
        raise ValueError(f"uncertainty_deg must lie in [0, 90], got {uncertainty_deg}")
    d = (sino.angles_deg - theta_deg + 90.0) % 180.0 - 90.0
    keep = np.abs(d) > uncertainty_deg
    values = sino.values * keep[:, None]
    return Sinogram(values, sino.angles_deg, sino.detector_count)


def _ramp_filter(size: int) -> np.ndarray:
    """Frequency response of the Ram-Lak filter, built from its real-space taps."""
    n = np.concatenate(
        (np.arange(1, size // 2 + 1, 2), np.arange(size // 2 - 1, 0, -2))
    )
    taps = np.zeros(size)
    taps[0] = 0.25
    taps[1::2] = -1.0 / (np.pi * n) ** 2
    return 2.0 * np.real(np.fft.fft(taps))


def filter_sinogram(sino_values: np.ndarray) -> np.ndarray:
    """Ramp-filter every projection row (frequency domain, zero padded).

    The ramp is divided by the squared-sinc response of the linear splat the
    forward projector uses, compensating its detector-axis blur in band. The
    division is clamped away from zero; in [0, Nyquist] the response never
    falls below sin(pi/2)^2/(pi/2)^2 ~ 0.405, so the clamp is a guard only.
    """
    det = sino_values.shape[1]
    size = max(64, int(2 ** ceil(np.log2(2 * det))))
    splat_response = np.sinc(np.fft.fftfreq(size)) ** 2
    filt = _ramp_filter(size) / np.maximum(splat_response, 0.2)
    padded = np.zeros((sino_values.shape[0], size))
    padded[:, :det] = sino_values
    return np.ascontiguousarray(np.real(np.fft.ifft(np.fft.fft(padded, axis=1) * filt, axis=1))[:, :det])


def fbp(sino: Sinogram, output_size: int):
    """Filtered back projection onto an output_size x output_size raster."""
    if len(sino.angles_deg) < 2:
        raise ValueError("filtered back projection needs at least 2 angles")
    if output_size < 1:
        raise ValueError("output_size must be positive")
    filtered = filter_sinogram(sino.values)
    angles = np.ascontiguousarray(np.deg2rad(sino.angles_deg))
    img = kernels.backproject(filtered, angles, output_size, output_size)
    return img * (np.pi / (2.0 * len(sino.angles_deg)))


def radon_filter_image(image, theta_deg: float, uncertainty_deg: float, angles_deg=None):
    """Remove the angular band around theta from the image via the Radon domain.

    Composition fbp(band_stop(radon(image), theta, u)) on the default 1 degree
    grid, cropped back to the input shape with non-finite values zeroed. The
    image mean is subtracted before projection and restored afterwards: the
    flat component's support edges otherwise dominate the removed band with a
    strongly angle-dependent energy, biasing comparisons across theta.
    """
    image = np.asarray(image, dtype=np.float64)
    mean = float(image.mean())
    square, oy, ox = _pad_square(image - mean)
    sino = radon(square, angles_deg)
    filtered = band_stop(sino, theta_deg, uncertainty_deg)
    out = fbp(filtered, square.shape[0])
    h, w = image.shape
    return np.nan_to_num(out[oy : oy + h, ox : ox + w], copy=False) + mean
