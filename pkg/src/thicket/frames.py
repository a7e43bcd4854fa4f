"""Core raster types, imaging geometry and the on-disk sequence format.

A sequence on disk is a directory holding ``frame_%06d.pgm`` files (16-bit
binary PGM, maxval 65535) plus a ``manifest.json`` with the fields
``{fps, altitude_m, fov_deg, resolution_px, timestamps?, notes?}``.
Pixel intensities are kept as floats in [0, 1] in memory; the PGM value is
``round(intensity * 65535)``.

Angle convention used everywhere: direction theta is measured in degrees,
clockwise with the +y axis at 0 degrees, and the image +y axis points down
(the raster row direction). Speed is carried in meters per second and
converted to pixels through the ground sample distance.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, SequenceFormatError, TimestampOrderError

PGM_MAXVAL = 65535


def ground_sample_distance(altitude_m: float, fov_deg: float, resolution_px: int) -> float:
    """Meters of ground covered by one pixel for a nadir camera.

    The ground footprint across the field of view is 2 * altitude * tan(fov / 2),
    split over `resolution_px` pixels.
    """
    if not (0.0 < fov_deg < 180.0):
        raise ValueError(f"fov_deg must lie in (0, 180), got {fov_deg}")
    if resolution_px <= 0:
        raise ValueError(f"resolution_px must be positive, got {resolution_px}")
    if altitude_m < 0 or not math.isfinite(altitude_m):
        raise ValueError(f"altitude_m must be finite and non-negative, got {altitude_m}")
    return 2.0 * altitude_m * math.tan(math.radians(fov_deg) / 2.0) / resolution_px


def speed_to_px_per_s(speed_mps: float, gsd_m_per_px: float) -> float:
    """Convert a ground speed in m/s to image speed in px/s."""
    if gsd_m_per_px <= 0 or not math.isfinite(gsd_m_per_px):
        raise ValueError(f"gsd_m_per_px must be positive, got {gsd_m_per_px}")
    return speed_mps / gsd_m_per_px


@dataclass(frozen=True)
class Geometry:
    """Imaging geometry of a hovering nadir camera."""

    altitude_m: float
    fov_deg: float
    resolution_px: int
    gsd_m_per_px: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "gsd_m_per_px",
            ground_sample_distance(self.altitude_m, self.fov_deg, self.resolution_px),
        )


@dataclass(frozen=True)
class MotionParams:
    """Target motion hypothesis: direction in degrees (clockwise, +y = 0) and speed in m/s."""

    theta_deg: float
    speed_mps: float

    def __post_init__(self):
        if not (math.isfinite(self.theta_deg) and math.isfinite(self.speed_mps)):
            raise ValueError("motion parameters must be finite")
        if self.speed_mps < 0:
            raise ValueError(f"speed_mps must be >= 0, got {self.speed_mps}")
        object.__setattr__(self, "theta_deg", self.theta_deg % 360.0)


@dataclass(frozen=True)
class TrackSegment:
    """Constant motion over the inter-frame gaps from frame `start` up to frame `end`."""

    start: int
    end: int
    params: MotionParams

    def covers_gap(self, gap: int) -> bool:
        return self.start <= gap < self.end


class MotionTrack:
    """Piecewise-linear motion hypothesis over a frame index range.

    Segments partition [0, n_frames - 1] contiguously; consecutive segments
    share their boundary frame. The gap between frames g and g+1 takes the
    parameters of the segment with start <= g < end.
    """

    def __init__(self, segments):
        segments = tuple(segments)
        if not segments:
            raise ValueError("a track needs at least one segment")
        if segments[0].start != 0:
            raise ValueError("first segment must start at frame 0")
        for a, b in zip(segments, segments[1:]):
            if b.start != a.end:
                raise ValueError(f"segments must be contiguous, got gap between {a.end} and {b.start}")
        for seg in segments:
            if seg.end < seg.start:
                raise ValueError("segment end before start")
        self.segments = segments

    @property
    def n_frames(self) -> int:
        return self.segments[-1].end + 1

    @classmethod
    def constant(cls, params: MotionParams, n_frames: int) -> "MotionTrack":
        if n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        return cls([TrackSegment(0, max(n_frames - 1, 0), params)])

    def params_at_gap(self, gap: int) -> MotionParams:
        if not (0 <= gap < self.n_frames - 1):
            raise IndexError(f"gap {gap} outside track range")
        for seg in self.segments:
            if seg.covers_gap(gap):
                return seg.params
        raise IndexError(f"gap {gap} not covered")  # unreachable for a valid track

    def __eq__(self, other):
        return isinstance(other, MotionTrack) and self.segments == other.segments

    def __repr__(self):
        return f"MotionTrack({list(self.segments)!r})"


class Frame:
    """One grayscale recording: a float raster in [0, 1] plus its timestamp and index."""

    def __init__(self, pixels, timestamp: float, index: int):
        pixels = np.asarray(pixels, dtype=np.float64)
        if pixels.ndim != 2 or pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError(f"pixels must be a non-empty 2-D raster, got shape {pixels.shape}")
        if not np.all(np.isfinite(pixels)):
            raise ValueError("pixel values must be finite")
        if index < 0:
            raise ValueError(f"index must be >= 0, got {index}")
        pixels = np.ascontiguousarray(pixels)
        pixels.setflags(write=False)
        self.pixels = pixels
        self.timestamp = float(timestamp)
        self.index = int(index)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


class FrameSequence:
    """An ordered stack of same-sized frames with shared geometry."""

    def __init__(self, frames, geometry: Geometry, fps: float):
        frames = list(frames)
        if not frames:
            raise ValueError("a sequence needs at least one frame")
        h, w = frames[0].height, frames[0].width
        for f in frames:
            if (f.height, f.width) != (h, w):
                raise DimensionMismatchError(
                    f"frame {f.index} is {f.height}x{f.width}, expected {h}x{w}"
                )
        for a, b in zip(frames, frames[1:]):
            if b.timestamp <= a.timestamp:
                raise TimestampOrderError(
                    f"timestamps must strictly increase: frame {b.index} at {b.timestamp}"
                    f" follows {a.timestamp}"
                )
        self.frames = frames
        self.geometry = geometry
        self.fps = float(fps)

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, i) -> Frame:
        return self.frames[i]

    @property
    def shape(self):
        return self.frames[0].pixels.shape

    @property
    def timestamps(self):
        return [f.timestamp for f in self.frames]


# --- 16-bit PGM I/O ---------------------------------------------------------

def write_pgm(path, pixels) -> None:
    """Write a [0, 1] float raster as binary 16-bit PGM (big-endian, maxval 65535)."""
    pixels = np.asarray(pixels, dtype=np.float64)
    raw = np.rint(np.clip(pixels, 0.0, 1.0) * PGM_MAXVAL).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n{PGM_MAXVAL}\n".encode("ascii"))
        fh.write(raw.tobytes())


def read_pgm(path):
    """Read a binary PGM into a [0, 1] float raster (value / maxval)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise SequenceFormatError(f"{path}: not a binary PGM (P5) file")
    # Header: magic, width, height, maxval; '#' comments allowed between tokens.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise SequenceFormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise SequenceFormatError(f"{path}: bad PGM header") from exc
    if width <= 0 or height <= 0 or maxval <= 0:
        raise SequenceFormatError(f"{path}: bad PGM dimensions")
    dtype = ">u2" if maxval > 255 else "u1"
    count = width * height
    body = data[pos:]
    raw = np.frombuffer(body, dtype=dtype, count=count) if len(body) >= count * np.dtype(dtype).itemsize else None
    if raw is None:
        raise SequenceFormatError(f"{path}: pixel data truncated")
    return raw.reshape(height, width).astype(np.float64) / maxval


def quantize_intensity(pixels):
    """Snap a [0, 1] raster onto the 16-bit on-disk grid (round trip identity)."""
    pixels = np.asarray(pixels, dtype=np.float64)
    return np.rint(np.clip(pixels, 0.0, 1.0) * PGM_MAXVAL) / PGM_MAXVAL


# --- sequence directory format ---------------------------------------------

_FRAME_NAME = "frame_{:06d}.pgm"
_FRAME_RE = re.compile(r"frame_(\d{6})\.pgm$")


def save_sequence(seq: FrameSequence, outdir, notes: str | None = None) -> Path:
    """Write a sequence as frame_%06d.pgm files plus manifest.json; returns the directory."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        write_pgm(outdir / _FRAME_NAME.format(i), frame.pixels)
    manifest = {
        "fps": seq.fps,
        "altitude_m": seq.geometry.altitude_m,
        "fov_deg": seq.geometry.fov_deg,
        "resolution_px": seq.geometry.resolution_px,
        "timestamps": [f.timestamp for f in seq.frames],
    }
    if notes:
        manifest["notes"] = notes
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return outdir


def load_sequence(path) -> FrameSequence:
    """Load a sequence from a directory (or its manifest.json path).

    Frames are dimension-checked and timestamps validated as strictly
    increasing; timestamps default to index / fps when the manifest omits
    them.
    """
    path = Path(path)
    manifest_path = path / "manifest.json" if path.is_dir() else path
    if not manifest_path.exists():
        raise SequenceFormatError(f"manifest not found: {manifest_path}")
    directory = manifest_path.parent
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SequenceFormatError(f"{manifest_path}: invalid JSON: {exc}") from exc
    for key in ("fps", "altitude_m", "fov_deg", "resolution_px"):
        if key not in manifest:
            raise SequenceFormatError(f"{manifest_path}: missing field {key!r}")
    fps = float(manifest["fps"])
    if fps <= 0:
        raise SequenceFormatError(f"{manifest_path}: fps must be positive")
    geometry = Geometry(
        altitude_m=float(manifest["altitude_m"]),
        fov_deg=float(manifest["fov_deg"]),
        resolution_px=int(manifest["resolution_px"]),
    )
    frame_paths = sorted(
        (p for p in directory.iterdir() if _FRAME_RE.match(p.name)),
        key=lambda p: int(_FRAME_RE.match(p.name).group(1)),
    )
    if not frame_paths:
        raise SequenceFormatError(f"{directory}: no frame_NNNNNN.pgm files found")
    timestamps = manifest.get("timestamps")
    if timestamps is not None:
        if len(timestamps) != len(frame_paths):
            raise SequenceFormatError(
                f"{manifest_path}: {len(timestamps)} timestamps for {len(frame_paths)} frames"
            )
        for a, b in zip(timestamps, timestamps[1:]):
            if b <= a:
                raise TimestampOrderError(f"{manifest_path}: timestamps not strictly increasing")
    else:
        timestamps = [i / fps for i in range(len(frame_paths))]
    frames = []
    for i, p in enumerate(frame_paths):
        pixels = read_pgm(p)
        frames.append(Frame(pixels, timestamp=float(timestamps[i]), index=i))
    return FrameSequence(frames, geometry, fps)
