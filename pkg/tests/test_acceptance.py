"""One test per headline guarantee, each at its advertised tolerance.

Module tests elsewhere cover internals and edge cases; this file states the
user-facing promises of the toolkit and checks them end to end. Every test
is self-contained, so a single line of `pytest -v tests/test_acceptance.py`
output corresponds to one promise.
"""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from thicket.direct import maximize_on_box
from thicket.estimate import (
    SearchBounds,
    circular_mean_deg,
    estimate_constant,
    estimate_stepwise,
    wrapped_angle_error_deg,
)
from thicket.frames import MotionParams, MotionTrack, TrackSegment
from thicket.occlusion import (
    OcclusionModel,
    integral_mean,
    integral_second_moment,
    integral_variance,
    report_grid,
    single_variance,
)
from thicket.radon import band_stop, default_angles, fbp, radon, radon_filter_image
from thicket.simulate import (
    BackgroundSpec,
    OccluderSpec,
    SceneConfig,
    TargetSpec,
    simulate,
)
from thicket.track import track_sequence

CANOPY = OcclusionModel(D=0.5, mu_o=0.8, sigma2_o=0.01, mu_s=0.3, sigma2_s=0.0025, N=10)


def random_model(rng):
    return OcclusionModel(
        D=float(rng.uniform(0, 1)),
        mu_o=float(rng.uniform(-2, 2)),
        sigma2_o=float(rng.uniform(0, 1)),
        mu_s=float(rng.uniform(-2, 2)),
        sigma2_s=float(rng.uniform(0, 1)),
        N=int(rng.integers(1, 100)),
    )


def test_primary_occlusion_grid_matches_monte_carlo():
    """Analytic integral variance within 3 SE of simulation on the full grid."""
    t0 = time.monotonic()
    rows = report_grid(CANOPY, (0.0, 0.25, 0.5, 0.75, 1.0), (1, 2, 10, 100),
                       trials=1_000_000, seed=11)
    elapsed = time.monotonic() - t0
    assert len(rows) == 20
    for row in rows:
        assert abs(row["analytic"] - row["mc_estimate"]) <= 3.0 * row["mc_se"]
    assert integral_variance(CANOPY) == pytest.approx(0.0074375, abs=1e-12)
    assert elapsed < 60.0


def test_primary_integral_variance_identity_and_limits():
    """Closed form equals E[I^2] - E[I]^2 and degenerates correctly."""
    rng = np.random.default_rng(1)
    for _ in range(1000):
        m = random_model(rng)
        lhs = integral_variance(m)
        rhs = integral_second_moment(m) - integral_mean(m) ** 2
        assert abs(lhs - rhs) <= 1e-12
    rng = np.random.default_rng(17)
    for _ in range(100):
        m = random_model(rng)
        m1 = m.with_(N=1)
        assert integral_variance(m1) == single_variance(m1)
        # one final rounding of sigma2_s/N + (1 - 1/N)*sigma2_s, hence 1 ulp
        assert integral_variance(m.with_(D=0.0)) == pytest.approx(m.sigma2_s, abs=1e-15)
        assert integral_variance(m.with_(D=1.0)) == m.sigma2_o / m.N


def test_primary_radon_linearity_and_averaging_commute():
    rng = np.random.default_rng(23)
    angles = default_angles()
    for _ in range(100):
        f = rng.uniform(0, 1, (128, 128))
        g = rng.uniform(0, 1, (128, 128))
        a, b = rng.uniform(-2, 2, size=2)
        combined = radon(a * f + b * g, angles).values
        split = a * radon(f, angles).values + b * radon(g, angles).values
        scale = np.abs(combined).max()
        assert np.abs(combined - split).max() <= 1e-6 * scale
    # corollary: suppressing the band per frame, then averaging, matches
    # averaging first and suppressing once
    frames = [rng.uniform(0, 1, (32, 32)) for _ in range(4)]
    per_frame = np.mean([band_stop(radon(f, angles), 118.0, 15.0).values
                         for f in frames], axis=0)
    of_mean = band_stop(radon(np.mean(frames, axis=0), angles), 118.0, 15.0).values
    assert np.abs(per_frame - of_mean).max() <= 1e-6 * np.abs(of_mean).max()
    rec_per_frame = np.mean([radon_filter_image(f, 60.0, 10.0) for f in frames], axis=0)
    rec_of_mean = radon_filter_image(np.mean(frames, axis=0), 60.0, 10.0)
    assert np.abs(rec_per_frame - rec_of_mean).max() <= 1e-6 * np.abs(rec_of_mean).max()


def test_primary_fbp_disk_round_trip():
    side = 256
    y, x = np.mgrid[0:side, 0:side]
    c = (side - 1) / 2
    r2 = (x - c) ** 2 + (y - c) ** 2
    img = np.zeros((side, side))
    img[r2 <= (side * 0.3) ** 2] = 1.0
    t0 = time.monotonic()
    rec = fbp(radon(img), side)
    elapsed = time.monotonic() - t0
    inside = r2 <= (side / 2 - 2) ** 2
    mse = np.mean((rec - img)[inside] ** 2)
    assert 10 * np.log10(1.0 / mse) >= 30.0
    assert elapsed < 5.0


def test_primary_streak_suppression_preserves_point():
    """Band stop at the streak angle kills the ridge, keeps the target."""
    img = np.zeros((128, 128))
    img[40, :] += 0.5       # streak along +x: motion angle 90
    img[90, 64] += 3.0      # point target well off the streak
    reference = radon_filter_image(img, 90.25, 0.0)   # u=0 roundtrip, nothing zeroed
    filtered = radon_filter_image(img, 90.0, 15.0)
    ridge_ref = np.abs(reference[40, :]).sum()
    ridge_filt = np.abs(filtered[40, :]).sum()
    assert ridge_ref / ridge_filt >= 10.0
    assert filtered[90, 64] >= 0.5 * reference[90, 64]


def test_primary_constant_motion_recovery_512():
    """Half-dense 512 px scene: direction within 3 deg, speed within 10%."""
    truth = MotionParams(118.0, 0.5)
    cfg = SceneConfig(
        size_px=512, altitude_m=35.0, fov_deg=36.0, duration_s=30.0, fps=1.0,
        target=TargetSpec(16.0, 0.7, (110.0, 360.0), MotionTrack.constant(truth, 30)),
        occluders=OccluderSpec(0.5, (8.0, 16.0), 0.32, 0.0064),
        background=BackgroundSpec(0.30, 0.0001), seed=0)
    t0 = time.monotonic()
    seq, _ = simulate(cfg)
    r = estimate_constant(seq, SearchBounds(90.0, 150.0, 1.0), max_evals=400)
    elapsed = time.monotonic() - t0
    assert wrapped_angle_error_deg(r.params.theta_deg, truth.theta_deg) <= 3.0
    assert abs(r.params.speed_mps / truth.speed_mps - 1.0) <= 0.10
    assert r.evaluations <= 400
    assert elapsed < 120.0


def test_primary_stepwise_two_leg_recovery():
    leg1 = MotionParams(309.0, 0.16)
    leg2 = MotionParams(241.0, 0.41)
    track = MotionTrack([TrackSegment(0, 12, leg1), TrackSegment(12, 23, leg2)])
    cfg = SceneConfig(
        size_px=160, altitude_m=35.0, fov_deg=36.0, duration_s=24.0, fps=1.0,
        target=TargetSpec(8.0, 0.7, (120.0, 60.0), track),
        occluders=OccluderSpec(0.3, (2.0, 4.0), 0.30, 0.001),
        background=BackgroundSpec(0.30, 0.0001), seed=0)
    seq, _ = simulate(cfg)
    r = estimate_stepwise(seq, SearchBounds(220.0, 330.0, 0.8))
    for steps, ref in (([s for s in r.per_step if s.step <= 12], leg1),
                       ([s for s in r.per_step if s.step > 12], leg2)):
        theta = circular_mean_deg([s.params.theta_deg for s in steps])
        speed = float(np.mean([s.params.speed_mps for s in steps]))
        assert wrapped_angle_error_deg(theta, ref.theta_deg) <= 10.0
        assert abs(speed / ref.speed_mps - 1.0) <= 0.20


def test_primary_direct_optimum_and_determinism():
    """Two known optima to L_inf 0.01 in 200 evals, bitwise reproducible."""
    quadratic = lambda x, y: -((x - 0.3) ** 2 + (y - 0.7) ** 2)
    ridge = lambda x, y: -(abs(x - 0.62) ** 1.5 + abs(y - 0.41) ** 1.5)
    for f, opt in ((quadratic, (0.3, 0.7)), (ridge, (0.62, 0.41))):
        r = maximize_on_box(f, (0.0, 0.0), (1.0, 1.0), 200)
        assert r.evaluations <= 200
        assert abs(r.point[0] - opt[0]) <= 0.01
        assert abs(r.point[1] - opt[1]) <= 0.01
    runs = []
    for workers in (1, 1, 4):
        calls = []

        def probed(x, y):
            calls.append((x, y))
            return quadratic(x, y)

        r = maximize_on_box(probed, (0.0, 0.0), (1.0, 1.0), 200, workers=workers)
        runs.append((r, sorted(calls)))
    assert runs[0] == runs[1]         # identical runs
    assert runs[0][0] == runs[2][0]   # worker count changes nothing
    assert runs[0][1] == runs[2][1]


def test_primary_tracking_integral_beats_single_frame():
    """At 60% cover the integral stream tracks cleanly, raw frames do not."""
    truth_params = MotionParams(118.0, 0.5)
    cfg = SceneConfig(
        size_px=160, altitude_m=35.0, fov_deg=36.0, duration_s=34.0, fps=1.0,
        target=TargetSpec(8.0, 0.7, (30.0, 110.0),
                          MotionTrack.constant(truth_params, 34)),
        occluders=OccluderSpec(0.6, (2.0, 4.0), 0.30, 0.001),
        background=BackgroundSpec(0.30, 0.0001), seed=13)
    seq, truth = simulate(cfg)
    _, single = track_sequence(seq, mode="single", truth_centers=truth.centers_px)
    _, integral = track_sequence(seq, mode="integral",
                                 bounds=SearchBounds(90.0, 150.0, 1.0),
                                 truth_centers=truth.centers_px)
    assert single.false_positives >= 2 * integral.false_positives
    assert single.false_positives > 0
    assert integral.confirmed_tracks == 1
    assert integral.rmse_px <= 3.0


def test_primary_cli_demo_fast():
    """The whole command-line workflow on the bundled demo in under 10 s."""
    cli_tests = Path(__file__).resolve().with_name("test_cli.py")
    t0 = time.monotonic()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", str(cli_tests), "-q", "-p", "no:cacheprovider"],
        capture_output=True, text=True, cwd=str(cli_tests.parent.parent))
    elapsed = time.monotonic() - t0
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert elapsed < 10.0
