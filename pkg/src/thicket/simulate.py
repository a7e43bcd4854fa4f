"""Synthetic occluded scenes with ground-truth target motion.

A scene is a static noisy background, a moving Gaussian blob target, and a
field of opaque occluder disks composited on top. The disk field is static
(optionally jittered a little per frame, a stand-in for wind), but each
disk's brightness is redrawn every frame, so single frames show flickering
clutter while the scene behind it stays constant. Pixel values are clipped
to [0, 1] and quantized to the 16-bit storage grid, which makes a simulated
sequence reproduce bit-exactly through a save/load cycle.

The number of disks is derived from the requested occlusion density D: a
disk of radius r centered uniformly over the frame expanded by the maximum
radius covers a fixed image point with probability p1 = pi E[r^2] / A, so
M = ln(1 - D) / ln(1 - p1) independent disks leave it visible with
probability 1 - D. Centers extend beyond the frame so border pixels see the
same coverage statistics as interior ones.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .frames import (
    Frame,
    FrameSequence,
    Geometry,
    MotionParams,
    MotionTrack,
    TrackSegment,
    quantize_intensity,
    save_sequence,
)
from .integrate import displacement


@dataclass(frozen=True)
class TargetSpec:
    radius_px: float
    intensity: float
    start_xy: tuple[float, float]
    track: MotionTrack


@dataclass(frozen=True)
class OccluderSpec:
    density: float
    radius_range_px: tuple[float, float]
    mu: float
    sigma2: float

    def __post_init__(self):
        if not (0.0 <= self.density <= 1.0):
            raise ValueError(f"density must lie in [0, 1], got {self.density}")
        lo, hi = self.radius_range_px
        if lo <= 0 or hi < lo:
            raise ValueError(f"bad radius range {self.radius_range_px}")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")


@dataclass(frozen=True)
class BackgroundSpec:
    mu: float
    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")


@dataclass(frozen=True)
class SceneConfig:
    size_px: int
    altitude_m: float
    fov_deg: float
    duration_s: float
    fps: float
    target: TargetSpec
    occluders: OccluderSpec
    background: BackgroundSpec
    jitter_px: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.size_px < 4:
            raise ValueError("size_px too small")
        if self.fps <= 0 or self.duration_s <= 0:
            raise ValueError("fps and duration_s must be positive")
        if self.target.radius_px >= self.size_px:
            raise ValueError("target radius must be smaller than the image")

    @property
    def n_frames(self) -> int:
        return max(1, round(self.duration_s * self.fps))

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.altitude_m, self.fov_deg, self.size_px)


@dataclass(frozen=True)
class GroundTruth:
    centers_px: list[tuple[float, float]]
    track: MotionTrack
    empirical_D: float

    def to_json(self) -> dict:
        return {
            "per_frame_centers_px": [[float(x), float(y)] for x, y in self.centers_px],
            "track_segments": [
                {"start": s.start, "end": s.end,
                 "theta_deg": s.params.theta_deg, "speed_mps": s.params.speed_mps}
                for s in self.track.segments
            ],
            "empirical_D": self.empirical_D,
        }


def _mean_square_radius(lo: float, hi: float) -> float:
    # E[r^2] for r uniform on [lo, hi]
    return (lo * lo + lo * hi + hi * hi) / 3.0


def disk_count_for_density(density: float, radius_range, size_px: int) -> int:
    """Disks needed so that 1 - (1 - p1)^M hits the requested point coverage."""
    if density <= 0.0:
        return 0
    lo, hi = radius_range
    span = size_px + 2.0 * hi
    p1 = math.pi * _mean_square_radius(lo, hi) / (span * span)
    if density >= 1.0 or p1 >= 1.0:
        raise ValueError("density 1 is not reachable with finitely many disks")
    return max(1, round(math.log(1.0 - density) / math.log(1.0 - p1)))


def _target_centers(cfg: SceneConfig) -> np.ndarray:
    """Ground-truth blob center (x, y) per frame."""
    track = cfg.target.track
    if track.n_frames != cfg.n_frames:
        raise ValueError(
            f"track covers {track.n_frames} frames, scene has {cfg.n_frames}"
        )
    gsd = cfg.geometry.gsd_m_per_px
    dt = 1.0 / cfg.fps
    centers = np.zeros((cfg.n_frames, 2))
    centers[0] = cfg.target.start_xy
    for g in range(cfg.n_frames - 1):
        dx, dy = displacement(track.params_at_gap(g), dt, gsd)
        centers[g + 1] = centers[g] + (dx, dy)
    return centers


def _paint_disks(values, mask, xs, ys, radii, intensities):
    h, w = values.shape
    for cx, cy, r, v in zip(xs, ys, radii, intensities):
        x0 = max(0, int(math.floor(cx - r)))
        x1 = min(w, int(math.ceil(cx + r)) + 1)
        y0 = max(0, int(math.floor(cy - r)))
        y1 = min(h, int(math.ceil(cy + r)) + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        yy = np.arange(y0, y1)[:, None] - cy
        xx = np.arange(x0, x1)[None, :] - cx
        sel = yy * yy + xx * xx <= r * r
        values[y0:y1, x0:x1][sel] = v
        mask[y0:y1, x0:x1][sel] = True


def simulate(cfg: SceneConfig) -> tuple[FrameSequence, GroundTruth]:
    """Render the scene; deterministic for a given config (seed included)."""
    n = cfg.n_frames
    side = cfg.size_px
    centers = _target_centers(cfg)

    in_bounds = np.sum((centers[:, 0] >= 0) & (centers[:, 0] < side)
                       & (centers[:, 1] >= 0) & (centers[:, 1] < side))
    if in_bounds < 0.8 * n:
        warnings.warn(
            f"target inside the frame for only {in_bounds}/{n} frames", stacklevel=2
        )

    root = np.random.SeedSequence(cfg.seed)
    s_layout, s_frames = root.spawn(2)
    layout = np.random.default_rng(s_layout)

    background = layout.normal(cfg.background.mu, math.sqrt(cfg.background.sigma2),
                               (side, side))
    # density 1 cannot be reached with finitely many disks: degenerate to a
    # full-plane occluder with per-pixel intensity noise
    full_plane = cfg.occluders.density >= 1.0
    m_disks = 0 if full_plane else disk_count_for_density(
        cfg.occluders.density, cfg.occluders.radius_range_px, side)
    hi = cfg.occluders.radius_range_px[1]
    disk_x = layout.uniform(-hi, side + hi, m_disks)
    disk_y = layout.uniform(-hi, side + hi, m_disks)
    disk_r = layout.uniform(cfg.occluders.radius_range_px[0], hi, m_disks)

    yy = np.arange(side, dtype=np.float64)[:, None]
    xx = np.arange(side, dtype=np.float64)[None, :]
    sigma = cfg.target.radius_px / 2.0
    sigma_o = math.sqrt(cfg.occluders.sigma2)

    frames = []
    occluded_fraction = np.zeros(n)
    frame_seeds = s_frames.spawn(n)
    for i in range(n):
        rng = np.random.default_rng(frame_seeds[i])
        cx, cy = centers[i]
        blob = cfg.target.intensity * np.exp(
            -((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma * sigma)
        )
        scene = background + blob
        if full_plane:
            scene = rng.normal(cfg.occluders.mu, sigma_o, (side, side))
            occluded_fraction[i] = 1.0
        elif m_disks:
            vals = np.zeros((side, side))
            mask = np.zeros((side, side), dtype=bool)
            intensities = rng.normal(cfg.occluders.mu, sigma_o, m_disks)
            if cfg.jitter_px > 0:
                jx = disk_x + rng.normal(0.0, cfg.jitter_px, m_disks)
                jy = disk_y + rng.normal(0.0, cfg.jitter_px, m_disks)
            else:
                jx, jy = disk_x, disk_y
            _paint_disks(vals, mask, jx, jy, disk_r, intensities)
            scene = np.where(mask, vals, scene)
            occluded_fraction[i] = mask.mean()
        pixels = quantize_intensity(scene)
        frames.append(Frame(pixels, timestamp=i / cfg.fps, index=i))

    seq = FrameSequence(frames, cfg.geometry, cfg.fps)
    truth = GroundTruth(
        centers_px=[(float(x), float(y)) for x, y in centers],
        track=cfg.target.track,
        empirical_D=float(occluded_fraction.mean()),
    )
    return seq, truth


def measure_density(cfg: SceneConfig, probe_points: int = 400, seeds=(0, 1, 2, 3, 4)) -> float:
    """Empirical point-coverage of the disk field, averaged over field realizations."""
    if probe_points < 100:
        raise ValueError("need at least 100 probe points")
    if cfg.occluders.density >= 1.0:
        return 1.0
    if cfg.occluders.density <= 0.0:
        return 0.0
    side = cfg.size_px
    g = int(math.ceil(math.sqrt(probe_points)))
    px = ((np.arange(g) + 0.5) / g * side)
    probe_x, probe_y = np.meshgrid(px, px)
    probe_x = probe_x.ravel()[:probe_points]
    probe_y = probe_y.ravel()[:probe_points]
    covered = []
    m = disk_count_for_density(cfg.occluders.density, cfg.occluders.radius_range_px, side)
    hi = cfg.occluders.radius_range_px[1]
    for seed in seeds:
        layout = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])
        # mirror the draw order of simulate(): background field first
        layout.normal(cfg.background.mu, math.sqrt(cfg.background.sigma2), (side, side))
        dx = layout.uniform(-hi, side + hi, m)
        dy = layout.uniform(-hi, side + hi, m)
        dr = layout.uniform(cfg.occluders.radius_range_px[0], hi, m)
        hit = np.zeros(probe_points, dtype=bool)
        for cx, cy, r in zip(dx, dy, dr):
            hit |= (probe_x - cx) ** 2 + (probe_y - cy) ** 2 <= r * r
        covered.append(hit.mean())
    return float(np.mean(covered))


def save_scene(cfg: SceneConfig, outdir) -> Path:
    """Simulate and write sequence plus ground_truth.json; returns the directory."""
    seq, truth = simulate(cfg)
    outdir = save_sequence(seq, outdir)
    with open(outdir / "ground_truth.json", "w") as fh:
        json.dump(truth.to_json(), fh, indent=2)
    return outdir


# --- config serialization ---------------------------------------------------

def config_to_json(cfg: SceneConfig) -> dict:
    return {
        "size_px": cfg.size_px,
        "altitude_m": cfg.altitude_m,
        "fov_deg": cfg.fov_deg,
        "duration_s": cfg.duration_s,
        "fps": cfg.fps,
        "target": {
            "radius_px": cfg.target.radius_px,
            "intensity": cfg.target.intensity,
            "start_xy": list(cfg.target.start_xy),
            "track": [
                {"start": s.start, "end": s.end,
                 "theta_deg": s.params.theta_deg, "speed_mps": s.params.speed_mps}
                for s in cfg.target.track.segments
            ],
        },
        "occluders": {
            "density": cfg.occluders.density,
            "radius_range_px": list(cfg.occluders.radius_range_px),
            "mu": cfg.occluders.mu,
            "sigma2": cfg.occluders.sigma2,
        },
        "background": {"mu": cfg.background.mu, "sigma2": cfg.background.sigma2},
        "jitter_px": cfg.jitter_px,
        "seed": cfg.seed,
    }


def config_from_json(data: dict) -> SceneConfig:
    t = data["target"]
    track = MotionTrack([
        TrackSegment(int(s["start"]), int(s["end"]),
                     MotionParams(float(s["theta_deg"]), float(s["speed_mps"])))
        for s in t["track"]
    ])
    return SceneConfig(
        size_px=int(data["size_px"]),
        altitude_m=float(data["altitude_m"]),
        fov_deg=float(data["fov_deg"]),
        duration_s=float(data["duration_s"]),
        fps=float(data["fps"]),
        target=TargetSpec(
            radius_px=float(t["radius_px"]),
            intensity=float(t["intensity"]),
            start_xy=(float(t["start_xy"][0]), float(t["start_xy"][1])),
            track=track,
        ),
        occluders=OccluderSpec(
            density=float(data["occluders"]["density"]),
            radius_range_px=(float(data["occluders"]["radius_range_px"][0]),
                             float(data["occluders"]["radius_range_px"][1])),
            mu=float(data["occluders"]["mu"]),
            sigma2=float(data["occluders"]["sigma2"]),
        ),
        background=BackgroundSpec(mu=float(data["background"]["mu"]),
                                  sigma2=float(data["background"]["sigma2"])),
        jitter_px=float(data.get("jitter_px", 0.0)),
        seed=int(data.get("seed", 0)),
    )


def load_config(path) -> SceneConfig:
    with open(path) as fh:
        return config_from_json(json.load(fh))
