"""Moving-target detection and tracking in frame or integral streams.

The pipeline is classical: per-pixel Gaussian-mixture background
subtraction, morphological cleanup of the foreground mask, connected
component detection, and a constant-velocity Kalman filter per target with
greedy gated association. It runs identically on raw frames and on the
integral stream produced by stepwise motion estimation; the integral mode
exists because single occluded frames yield fragmented foreground and
spurious detections, while integrals concentrate the target and suppress
the occluders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy import ndimage

from . import kernels
from .estimate import SearchBounds, estimate_stepwise
from .frames import FrameSequence
from .integrate import IntegralImage


@dataclass(frozen=True)
class TrackerConfig:
    """Knobs for every pipeline stage; per-mode factories give tuned defaults."""

    n_components: int = 3
    learning_rate: float = 0.01
    bg_threshold: float = 0.7
    match_sigma: float = 2.5
    var_init: float = 0.01
    var_floor: float = 1e-4
    open_radius: int = 1
    close_radius: int = 1
    min_blob_area: int = 8
    gate_sigma: float = 3.0
    confirm_hits: int = 3
    confirm_window: int = 5
    max_misses: int = 5
    process_noise: float = 1.0
    measurement_noise: float = 1.0
    warmup_frames: int = 10
    truth_gate_px: float = 12.0

    @classmethod
    def single_frame(cls) -> "TrackerConfig":
        return cls()

    @classmethod
    def integral(cls) -> "TrackerConfig":
        # integrals are heavily averaged: residual noise is far below
        # single-frame level, so the model can afford a tighter variance
        # floor and smaller blobs survive the cleanup. The stream is also
        # motion-compensated already, so deviations from constant velocity
        # are mostly registration noise: a strong CV prior (low process
        # noise, inflated measurement noise) smooths them out
        return cls(var_init=0.002, var_floor=1e-5, min_blob_area=6,
                   process_noise=0.05, measurement_noise=2.0)


class GmmModel:
    """Per-pixel mixture of K Gaussians over intensity (Stauffer-Grimson).

    Arrays are (K, H, W). Weights stay normalized to 1 per pixel; variances
    never drop below the floor.
    """

    def __init__(self, shape: tuple[int, int], config: TrackerConfig):
        k = config.n_components
        self.config = config
        # slots with zero weight are empty: they never match and are the
        # first to be reclaimed when a pixel value fits no component
        self.weight = np.zeros((k,) + shape)
        self.weight[0] = 1.0
        self.mean = np.zeros((k,) + shape)
        self.var = np.full((k,) + shape, config.var_init)
        self._frames_seen = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.weight.shape[1:]


def gmm_update(model: GmmModel, frame: np.ndarray) -> tuple[GmmModel, np.ndarray]:
    """Fold one frame into the background model; returns (model, foreground).

    The model is updated in place. A pixel is foreground when the component
    it matched (or the one that replaced the weakest, when nothing matched)
    is not among the top-weight components that together cover the
    background fraction of the config.
    """
    pixels = np.asarray(frame, dtype=np.float64)
    if pixels.shape != model.shape:
        raise ValueError(f"frame shape {pixels.shape} does not match model {model.shape}")
    cfg = model.config
    w, mu, var = model.weight, model.mean, model.var
    if model._frames_seen == 0:
        mu[0] = pixels
        model._frames_seen = 1
        return model, np.zeros(model.shape, dtype=bool)

    # run at 1/t while young so weights track match frequency; anything the
    # scene showed only briefly (a passing target, settling averages) loses
    # its claim on the background in a few frames instead of ~1/alpha
    model._frames_seen += 1
    alpha = max(cfg.learning_rate, 1.0 / model._frames_seen)

    dist2 = (pixels[None] - mu) ** 2
    matched = (dist2 <= (cfg.match_sigma ** 2) * var) & (w > 0.0)
    # among matching components pick the most believable one
    score = np.where(matched, w / np.sqrt(var), -np.inf)
    best = np.argmax(score, axis=0)
    any_match = matched.any(axis=0)
    k_idx = np.arange(w.shape[0])[:, None, None]
    is_best = (k_idx == best[None]) & any_match[None]

    w *= 1.0 - alpha
    w += alpha * is_best
    rho = alpha
    mu += np.where(is_best, rho * (pixels[None] - mu), 0.0)
    var += np.where(is_best, rho * (dist2 - var), 0.0)

    # no match anywhere: the weakest component restarts on this pixel
    weakest = np.argmin(w, axis=0)
    is_weakest = (k_idx == weakest[None]) & ~any_match[None]
    np.copyto(mu, pixels[None], where=is_weakest)
    np.copyto(var, cfg.var_init, where=is_weakest)
    np.copyto(w, alpha, where=is_weakest)

    np.maximum(var, cfg.var_floor, out=var)
    w /= w.sum(axis=0, keepdims=True)

    # background = heaviest components up to cumulative weight T; the pixel
    # is foreground iff the component it landed in is not one of them
    order = np.argsort(-w, axis=0, kind="stable")
    cum = np.cumsum(np.take_along_axis(w, order, axis=0), axis=0)
    n_bg = 1 + (cum < cfg.bg_threshold).sum(axis=0)
    rank_of = np.empty_like(order)
    np.put_along_axis(rank_of, order, k_idx + np.zeros_like(order), axis=0)
    landed = np.where(any_match, best, weakest)
    landed_rank = np.take_along_axis(rank_of, landed[None], axis=0)[0]
    foreground = (landed_rank >= n_bg) | ~any_match
    return model, foreground


def _disk(radius: int) -> np.ndarray:
    if radius < 1:
        return np.ones((1, 1), dtype=bool)
    yy, xx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    # pixel-center-within-r-plus-half convention: radius 1 is the full 3x3
    # neighborhood, so opening a solid rectangle reproduces it exactly
    return yy * yy + xx * xx <= (radius + 0.5) ** 2


def clean_mask(mask: np.ndarray, open_radius: int, close_radius: int) -> np.ndarray:
    """Binary opening then closing with disk structuring elements."""
    if open_radius < 0 or close_radius < 0:
        raise ValueError("radii must be >= 0")
    out = np.asarray(mask, dtype=bool)
    if open_radius > 0:
        out = ndimage.binary_opening(out, structure=_disk(open_radius))
    if close_radius > 0:
        out = ndimage.binary_closing(out, structure=_disk(close_radius))
    return out


@dataclass(frozen=True)
class Detection:
    centroid_px: tuple[float, float]
    bbox: tuple[int, int, int, int]  # x0, y0, x1, y1 inclusive
    area_px: int
    frame_index: int


EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def detect_blobs(mask: np.ndarray, min_area: int, frame_index: int = 0) -> list[Detection]:
    """8-connected components of the mask with at least min_area pixels."""
    labels, n = ndimage.label(np.asarray(mask, dtype=bool), structure=EIGHT_CONNECTED)
    out = []
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        ys, xs = np.nonzero(labels[sl] == i)
        if ys.size < min_area:
            continue
        y0, x0 = sl[0].start, sl[1].start
        out.append(Detection(
            centroid_px=(float(xs.mean() + x0), float(ys.mean() + y0)),
            bbox=(x0 + int(xs.min()), y0 + int(ys.min()),
                  x0 + int(xs.max()), y0 + int(ys.max())),
            area_px=int(ys.size),
            frame_index=frame_index,
        ))
    return out


def kalman_predict(state: np.ndarray, cov: np.ndarray, dt: float,
                   q: float) -> tuple[np.ndarray, np.ndarray]:
    """Constant-velocity prediction with white-acceleration process noise."""
    f = np.array([[1.0, 0.0, dt, 0.0],
                  [0.0, 1.0, 0.0, dt],
                  [0.0, 0.0, 1.0, 0.0],
                  [0.0, 0.0, 0.0, 1.0]])
    a, b, c = dt ** 4 / 4.0, dt ** 3 / 2.0, dt ** 2
    qm = q * q * np.array([[a, 0.0, b, 0.0],
                           [0.0, a, 0.0, b],
                           [b, 0.0, c, 0.0],
                           [0.0, b, 0.0, c]])
    return f @ state, f @ cov @ f.T + qm


_H = np.array([[1.0, 0.0, 0.0, 0.0],
               [0.0, 1.0, 0.0, 0.0]])


def kalman_update(state: np.ndarray, cov: np.ndarray, z: np.ndarray,
                  r: float) -> tuple[np.ndarray, np.ndarray]:
    """Position measurement update, Joseph form so the covariance stays PSD."""
    rm = r * r * np.eye(2)
    s = _H @ cov @ _H.T + rm
    gain = cov @ _H.T @ np.linalg.inv(s)
    state = state + gain @ (z - _H @ state)
    ikh = np.eye(4) - gain @ _H
    cov = ikh @ cov @ ikh.T + gain @ rm @ gain.T
    return state, 0.5 * (cov + cov.T)


class Track:
    """One tracked target: Kalman state plus bookkeeping for M-of-N logic."""

    def __init__(self, track_id: int, detection: Detection, config: TrackerConfig):
        self.id = track_id
        self.state = np.array([detection.centroid_px[0], detection.centroid_px[1],
                               0.0, 0.0])
        v = config.measurement_noise ** 2
        self.cov = np.diag([v, v, 100.0 * v, 100.0 * v])
        self.age = 1
        self.misses = 0
        self.hits = 1
        self.confirmed = config.confirm_hits <= 1
        self.history: list[tuple[int, float, float]] = [
            (detection.frame_index, *detection.centroid_px)]

    @property
    def position(self) -> tuple[float, float]:
        return float(self.state[0]), float(self.state[1])


def track_step(tracks: list[Track], detections: Sequence[Detection], dt: float,
               config: TrackerConfig, frame_index: int = 0) -> list[Track]:
    """One predict/associate/update cycle; returns the surviving tracks.

    Association is greedy: repeatedly take the lowest Mahalanobis distance
    pair inside the gate, ties broken by lower track id. Unmatched
    detections found new tentative tracks; a track dies after max_misses
    consecutive misses, or when it leaves its confirmation window without
    reaching the required hits.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    for t in tracks:
        t.state, t.cov = kalman_predict(t.state, t.cov, dt, config.process_noise)

    pairs = []
    for ti, t in enumerate(tracks):
        s = _H @ t.cov @ _H.T + config.measurement_noise ** 2 * np.eye(2)
        s_inv = np.linalg.inv(s)
        for di, d in enumerate(detections):
            y = np.asarray(d.centroid_px) - _H @ t.state
            m2 = float(y @ s_inv @ y)
            if m2 <= config.gate_sigma ** 2:
                pairs.append((m2, t.id, ti, di))
    pairs.sort()

    used_tracks: set[int] = set()
    used_dets: set[int] = set()
    for m2, _tid, ti, di in pairs:
        if ti in used_tracks or di in used_dets:
            continue
        used_tracks.add(ti)
        used_dets.add(di)
        t = tracks[ti]
        z = np.asarray(detections[di].centroid_px, dtype=np.float64)
        t.state, t.cov = kalman_update(t.state, t.cov, z, config.measurement_noise)
        t.hits += 1
        t.misses = 0
        t.history.append((frame_index, *t.position))

    survivors = []
    for ti, t in enumerate(tracks):
        t.age += 1
        if ti not in used_tracks:
            t.misses += 1
        if not t.confirmed and t.hits >= config.confirm_hits \
                and t.age <= config.confirm_window:
            t.confirmed = True
        if t.misses >= config.max_misses:
            continue
        if not t.confirmed and t.age > config.confirm_window:
            continue
        survivors.append(t)

    next_id = max((t.id for t in tracks), default=-1) + 1
    for di, d in enumerate(detections):
        if di not in used_dets:
            survivors.append(Track(next_id, d, config))
            next_id += 1
    return survivors


@dataclass(frozen=True)
class TrackingMetrics:
    confirmed_tracks: int
    false_positives: int
    rmse_px: float

    def to_json(self) -> dict:
        return {
            "confirmed_tracks": self.confirmed_tracks,
            "false_positives": self.false_positives,
            "rmse_px": self.rmse_px,
        }


def _integral_stream(seq: FrameSequence, bounds: SearchBounds
                     ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Integrals referenced to the newest frame, following the estimated track.

    Yields (image, valid) pairs. The margin that the shifting reference
    drags in is averaged over too few frames to be comparable with the
    core, so pixels covered by fewer than half the integrated frames are
    marked invalid and painted with the core mean to keep the background
    model from treating the moving margin as a change.
    """
    result = estimate_stepwise(seq, bounds)
    gsd = seq.geometry.gsd_m_per_px
    integral = IntegralImage.from_frame(seq[0], gsd)
    yield seq[0].pixels.copy(), np.ones(seq.shape, dtype=bool)
    for est in result.per_step:
        integral = integral.updated(seq[est.step], est.params)
        img = integral.in_latest_coordinates()
        dx, dy = integral.ref_to_latest
        cov = kernels.shift_image(np.asarray(integral.coverage, dtype=np.float64),
                                  dx, dy, fill=0.0)
        valid = cov >= 0.5 * integral.n_frames
        yield np.where(valid, img, img[valid].mean()), valid


def track_sequence(seq: FrameSequence, config: TrackerConfig | None = None,
                   mode: str = "single",
                   bounds: SearchBounds | None = None,
                   truth_centers: Sequence[tuple[float, float]] | None = None,
                   ) -> tuple[list[Track], TrackingMetrics]:
    """Run the whole pipeline over a sequence; returns (tracks, metrics).

    mode "single" feeds raw frames to the background model; mode "integral"
    first estimates the motion stepwise, builds the running integral in
    latest-frame coordinates, and tracks in that stream, so reported track
    positions line up with the newest frame either way. Detections start
    after the warm-up. Metrics count distinct confirmed tracks, detections
    farther than the truth gate from the true center (when truth is given),
    and the position RMSE of confirmed track updates against truth.
    """
    if mode not in ("single", "integral"):
        raise ValueError(f"mode must be 'single' or 'integral', got {mode!r}")
    if config is None:
        config = (TrackerConfig.single_frame() if mode == "single"
                  else TrackerConfig.integral())
    if len(seq) < config.warmup_frames + 2:
        raise ValueError(
            f"need at least warmup + 2 = {config.warmup_frames + 2} frames, got {len(seq)}")
    if mode == "integral":
        if bounds is None:
            raise ValueError("integral mode needs search bounds for the estimator")
        stream = _integral_stream(seq, bounds)
    else:
        full = np.ones(seq.shape, dtype=bool)
        stream = ((f.pixels, full) for f in seq.frames)

    dt = 1.0 / seq.fps
    model = GmmModel(seq.shape, config)
    tracks: list[Track] = []
    all_tracks: dict[int, Track] = {}
    fp = 0
    sq_err: list[float] = []
    for i, (image, valid) in enumerate(stream):
        model, raw = gmm_update(model, image)
        if i < config.warmup_frames:
            continue
        mask = clean_mask(raw & valid, config.open_radius, config.close_radius)
        detections = detect_blobs(mask, config.min_blob_area, frame_index=i)
        if truth_centers is not None:
            tx, ty = truth_centers[i]
            for d in detections:
                dx = d.centroid_px[0] - tx
                dy = d.centroid_px[1] - ty
                if dx * dx + dy * dy > config.truth_gate_px ** 2:
                    fp += 1
        tracks = track_step(tracks, detections, dt, config, frame_index=i)
        for t in tracks:
            all_tracks[t.id] = t
            if t.confirmed and truth_centers is not None \
                    and t.history and t.history[-1][0] == i:
                tx, ty = truth_centers[i]
                x, y = t.history[-1][1], t.history[-1][2]
                sq_err.append((x - tx) ** 2 + (y - ty) ** 2)

    confirmed = [t for t in all_tracks.values() if t.confirmed]
    rmse = float(np.sqrt(np.mean(sq_err))) if sq_err else float("nan")
    return sorted(all_tracks.values(), key=lambda t: t.id), TrackingMetrics(
        confirmed_tracks=len(confirmed), false_positives=fp, rmse_px=rmse)


def track_lines(tracks: Sequence[Track]) -> Iterator[str]:
    """Track history as JSON lines, one per recorded position."""
    for t in tracks:
        for frame, x, y in t.history:
            yield json.dumps({"frame": frame, "track_id": t.id,
                              "x_px": x, "y_px": y, "confirmed": t.confirmed})
