"""Shift-and-average reconstruction of integral images along a motion hypothesis.

Frames are registered by shifting each one onto a common reference frame
with the displacement implied by the motion hypothesis, then averaged
pixelwise. A target that actually moves with the hypothesized direction and
speed adds coherently; everything else (the static occluders in particular)
is smeared along the motion path and suppressed by the averaging.

Out-of-bounds samples are excluded from the mean rather than zero-padded:
each output pixel is the average of the frames that actually cover it, and
the coverage raster records that count. Pixels no frame covers are NaN.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, TimestampOrderError
from .frames import Frame, FrameSequence, MotionParams, MotionTrack, speed_to_px_per_s


def displacement(params: MotionParams, dt: float, gsd_m_per_px: float) -> tuple[float, float]:
    """Pixel displacement of the target over `dt` seconds.

    Angle convention: clockwise with +y = 0 degrees, image y pointing down,
    so theta=0 moves straight down the raster and theta=90 moves right.
    Returns (dx_px, dy_px) in image axes.
    """
    if not math.isfinite(dt):
        raise ValueError(f"dt must be finite, got {dt}")
    v = speed_to_px_per_s(params.speed_mps, gsd_m_per_px)
    rad = math.radians(params.theta_deg)
    return v * dt * math.sin(rad), v * dt * math.cos(rad)


class IntegralImage:
    """Mean of registered frames, with per-pixel contributor counts.

    `pixels` is the coverage-weighted mean in the coordinate system of the
    reference frame chosen when the image was built; it is NaN exactly where
    coverage is 0. Instances are value objects: updates return new images.
    """

    def __init__(self, sum_raster, coverage, n_frames, gsd_m_per_px, last_timestamp,
                 ref_to_latest=(0.0, 0.0)):
        self._sum = sum_raster
        self.coverage = coverage
        self.n_frames = int(n_frames)
        self.gsd_m_per_px = float(gsd_m_per_px)
        self.last_timestamp = float(last_timestamp)
        # Displacement of the target from the reference frame to the newest
        # integrated frame; needed to fold further frames in and to present
        # the integral in current-frame coordinates.
        self.ref_to_latest = (float(ref_to_latest[0]), float(ref_to_latest[1]))
        with np.errstate(invalid="ignore", divide="ignore"):
            pix = self._sum / self.coverage
        pix[self.coverage < 1] = np.nan
        pix.setflags(write=False)
        self.pixels = pix
        self.coverage.setflags(write=False)

    @property
    def shape(self):
        return self._sum.shape

    @classmethod
    def from_frame(cls, frame: Frame, gsd_m_per_px: float) -> "IntegralImage":
        return cls(frame.pixels.copy(), np.ones_like(frame.pixels), 1,
                   gsd_m_per_px, frame.timestamp)

    def updated(self, next_frame: Frame, params: MotionParams) -> "IntegralImage":
        """Fold one more frame in, keeping the original reference frame.

        The new frame is shifted once, directly from its own pixels, by the
        accumulated reference-to-frame displacement, so a chain of updates
        reproduces the batch integration against the same reference to float
        rounding (exactly, for integer displacements).
        """
        if next_frame.pixels.shape != self._sum.shape:
            raise DimensionMismatchError(
                f"frame is {next_frame.pixels.shape}, integral is {self._sum.shape}"
            )
        dt = next_frame.timestamp - self.last_timestamp
        if dt <= 0:
            raise TimestampOrderError(
                f"next frame at {next_frame.timestamp} does not follow {self.last_timestamp}"
            )
        dx, dy = displacement(params, dt, self.gsd_m_per_px)
        cum = (self.ref_to_latest[0] + dx, self.ref_to_latest[1] + dy)
        new_sum = self._sum.copy()
        new_cnt = np.asarray(self.coverage).copy()
        kernels.shift_accumulate(next_frame.pixels, -cum[0], -cum[1], new_sum, new_cnt)
        return IntegralImage(new_sum, new_cnt, self.n_frames + 1, self.gsd_m_per_px,
                             next_frame.timestamp, cum)

    def in_latest_coordinates(self):
        """The mean raster shifted into the newest frame's coordinate system.

        Shifts the running sum and coverage separately and re-divides, which
        is a coverage-weighted interpolation; NaN only where the shifted
        coverage vanishes. Intended for display and for tracking against the
        current recording.
        """
        dx, dy = self.ref_to_latest
        if dx == 0.0 and dy == 0.0:
            return self.pixels
        s = kernels.shift_image(self._sum, dx, dy, fill=0.0)
        c = kernels.shift_image(np.asarray(self.coverage, dtype=np.float64), dx, dy, fill=0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = s / c
        out[c <= 1e-9] = np.nan
        return out


def cumulative_displacements(seq: FrameSequence, track: MotionTrack):
    """Target displacement from frame 0 to each frame, as an (N, 2) array of (dx, dy)."""
    gsd = seq.geometry.gsd_m_per_px
    cum = np.zeros((len(seq), 2))
    for g in range(len(seq) - 1):
        dt = seq[g + 1].timestamp - seq[g].timestamp
        dx, dy = displacement(track.params_at_gap(g), dt, gsd)
        cum[g + 1] = cum[g] + (dx, dy)
    return cum


def integrate(seq: FrameSequence, track: MotionTrack, reference_index: int | None = None) -> IntegralImage:
    """Average all frames registered onto `reference_index` (default: the latest frame)."""
    n = len(seq)
    if track.n_frames != n:
        raise ValueError(f"track covers {track.n_frames} frames, sequence has {n}")
    r = n - 1 if reference_index is None else reference_index
    if not (0 <= r < n):
        raise IndexError(f"reference_index {r} outside [0, {n})")
    cum = cumulative_displacements(seq, track)
    h, w = seq.shape
    acc = np.zeros((h, w))
    cnt = np.zeros((h, w))
    for i in range(n):
        kernels.shift_accumulate(seq[i].pixels, cum[r, 0] - cum[i, 0], cum[r, 1] - cum[i, 1],
                                 acc, cnt)
    return IntegralImage(acc, cnt, n, seq.geometry.gsd_m_per_px, seq[-1].timestamp,
                         (cum[n - 1, 0] - cum[r, 0], cum[n - 1, 1] - cum[r, 1]))


def incremental_update(current: IntegralImage, next_frame: Frame, params: MotionParams) -> IntegralImage:
    """Functional form of IntegralImage.updated for symmetry with integrate()."""
    return current.updated(next_frame, params)
