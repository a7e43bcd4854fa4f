import json
import math

import numpy as np
import pytest

from thicket.errors import DimensionMismatchError, SequenceFormatError, TimestampOrderError
from thicket.frames import (
    Frame,
    FrameSequence,
    Geometry,
    MotionParams,
    MotionTrack,
    TrackSegment,
    ground_sample_distance,
    load_sequence,
    quantize_intensity,
    read_pgm,
    save_sequence,
    speed_to_px_per_s,
    write_pgm,
)


def make_sequence(n_frames, height=8, width=8, fps=2.0, seed=0):
    rng = np.random.default_rng(seed)
    geom = Geometry(altitude_m=35.0, fov_deg=36.0, resolution_px=width)
    frames = [
        Frame(quantize_intensity(rng.uniform(0, 1, (height, width))), timestamp=i / fps, index=i)
        for i in range(n_frames)
    ]
    return FrameSequence(frames, geom, fps)


class TestGroundSampleDistance:
    def test_zero_altitude(self):
        assert ground_sample_distance(0, 36, 1024) == 0.0

    def test_reference_camera(self):
        # 2 * 35 * tan(18 deg) / 1024, evaluated independently
        expected = 70.0 * math.tan(math.radians(18.0)) / 1024.0
        got = ground_sample_distance(35, 36, 1024)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(0.022211, abs=5e-7)

    def test_unit_tangent(self):
        # tan(45 deg) = 1, so gsd = 2*35/140 = 0.5
        assert ground_sample_distance(35, 90, 140) == pytest.approx(0.5, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            ground_sample_distance(35, 0, 1024)
        with pytest.raises(ValueError):
            ground_sample_distance(35, 180, 1024)
        with pytest.raises(ValueError):
            ground_sample_distance(35, 36, 0)
        with pytest.raises(ValueError):
            ground_sample_distance(-1, 36, 1024)

    def test_monotonicity(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            alt = rng.uniform(1, 500)
            fov = rng.uniform(1, 179)
            res = rng.integers(16, 4096)
            base = ground_sample_distance(alt, fov, res)
            assert ground_sample_distance(alt * 1.1, fov, res) > base
            assert ground_sample_distance(alt, min(fov * 1.01, 179.9), res) > base
            assert ground_sample_distance(alt, fov, res * 2) < base


class TestSpeedConversion:
    def test_zero_speed(self):
        assert speed_to_px_per_s(0.0, 0.123) == 0.0

    def test_reference_speed(self):
        gsd = ground_sample_distance(35, 36, 1024)
        assert speed_to_px_per_s(0.5, gsd) == pytest.approx(0.5 / gsd, rel=1e-12)
        assert speed_to_px_per_s(0.5, 0.022211) == pytest.approx(22.51, abs=5e-3)

    def test_identity_ratio(self):
        assert speed_to_px_per_s(0.022211, 0.022211) == 1.0

    def test_bad_gsd(self):
        with pytest.raises(ValueError):
            speed_to_px_per_s(1.0, 0.0)
        with pytest.raises(ValueError):
            speed_to_px_per_s(1.0, -0.5)


class TestMotionParams:
    def test_angle_normalized(self):
        assert MotionParams(370.0, 1.0).theta_deg == pytest.approx(10.0)
        assert MotionParams(-90.0, 1.0).theta_deg == pytest.approx(270.0)
        assert MotionParams(118.0, 0.5).theta_deg == 118.0

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            MotionParams(0.0, -0.1)
        with pytest.raises(ValueError):
            MotionParams(float("nan"), 1.0)
        with pytest.raises(ValueError):
            MotionParams(0.0, float("inf"))


class TestMotionTrack:
    def test_constant(self):
        p = MotionParams(118.0, 0.5)
        track = MotionTrack.constant(p, 10)
        assert track.n_frames == 10
        for g in range(9):
            assert track.params_at_gap(g) == p

    def test_single_frame_track(self):
        track = MotionTrack.constant(MotionParams(0, 1), 1)
        assert track.n_frames == 1
        with pytest.raises(IndexError):
            track.params_at_gap(0)

    def test_two_leg(self):
        a = MotionParams(309.0, 0.16)
        b = MotionParams(241.0, 0.41)
        track = MotionTrack([TrackSegment(0, 5, a), TrackSegment(5, 12, b)])
        assert track.n_frames == 13
        assert track.params_at_gap(4) == a
        assert track.params_at_gap(5) == b
        assert track.params_at_gap(11) == b

    def test_rejects_gaps(self):
        a = MotionParams(0, 1)
        with pytest.raises(ValueError):
            MotionTrack([TrackSegment(0, 5, a), TrackSegment(6, 10, a)])
        with pytest.raises(ValueError):
            MotionTrack([TrackSegment(1, 5, a)])
        with pytest.raises(ValueError):
            MotionTrack([])


class TestFrame:
    def test_pixels_read_only(self):
        frame = Frame(np.zeros((4, 4)), 0.0, 0)
        with pytest.raises(ValueError):
            frame.pixels[0, 0] = 1.0

    def test_rejects_bad_rasters(self):
        with pytest.raises(ValueError):
            Frame(np.zeros((0, 4)), 0.0, 0)
        with pytest.raises(ValueError):
            Frame(np.zeros(16), 0.0, 0)
        with pytest.raises(ValueError):
            Frame(np.full((4, 4), np.nan), 0.0, 0)
        with pytest.raises(ValueError):
            Frame(np.zeros((4, 4)), 0.0, -1)


class TestFrameSequence:
    def test_dimension_mismatch(self):
        geom = Geometry(35, 36, 8)
        frames = [Frame(np.zeros((8, 8)), 0.0, 0), Frame(np.zeros((8, 9)), 0.5, 1)]
        with pytest.raises(DimensionMismatchError):
            FrameSequence(frames, geom, 2.0)

    def test_timestamps_must_increase(self):
        geom = Geometry(35, 36, 8)
        frames = [Frame(np.zeros((8, 8)), 0.5, 0), Frame(np.zeros((8, 8)), 0.5, 1)]
        with pytest.raises(TimestampOrderError):
            FrameSequence(frames, geom, 2.0)

    def test_minimum_one_frame(self):
        with pytest.raises(ValueError):
            FrameSequence([], Geometry(35, 36, 8), 2.0)
        seq = make_sequence(1)
        assert len(seq) == 1


class TestPgmIO:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        img = quantize_intensity(rng.uniform(0, 1, (16, 24)))
        path = tmp_path / "x.pgm"
        write_pgm(path, img)
        back = read_pgm(path)
        assert back.shape == (16, 24)
        assert np.array_equal(back, img)

    def test_extremes_preserved(self, tmp_path):
        img = np.array([[0.0, 1.0], [0.5, 1.0]])
        path = tmp_path / "x.pgm"
        write_pgm(path, img)
        back = read_pgm(path)
        assert back[0, 0] == 0.0
        assert back[0, 1] == 1.0

    def test_big_endian_16bit_layout(self, tmp_path):
        path = tmp_path / "x.pgm"
        write_pgm(path, np.array([[1.0]]))
        data = path.read_bytes()
        header_end = data.index(b"65535\n") + 6
        assert data[header_end:] == b"\xff\xff"

    def test_rejects_non_pgm(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P6\n2 2\n255\n" + b"\x00" * 12)
        with pytest.raises(SequenceFormatError):
            read_pgm(path)

    def test_rejects_truncated(self, tmp_path):
        path = tmp_path / "trunc.pgm"
        path.write_bytes(b"P5\n4 4\n65535\n" + b"\x00" * 5)
        with pytest.raises(SequenceFormatError):
            read_pgm(path)


class TestSequenceOnDisk:
    def test_save_load_round_trip(self, tmp_path):
        seq = make_sequence(5, fps=2.5)
        outdir = save_sequence(seq, tmp_path / "seq", notes="demo")
        assert sorted(p.name for p in outdir.glob("*.pgm")) == [
            f"frame_{i:06d}.pgm" for i in range(5)
        ]
        back = load_sequence(outdir)
        assert len(back) == 5
        assert back.fps == 2.5
        assert back.geometry.gsd_m_per_px == pytest.approx(seq.geometry.gsd_m_per_px, rel=1e-15)
        for orig, loaded in zip(seq.frames, back.frames):
            assert np.array_equal(orig.pixels, loaded.pixels)
            assert loaded.timestamp == orig.timestamp

    def test_load_accepts_manifest_path(self, tmp_path):
        seq = make_sequence(2)
        outdir = save_sequence(seq, tmp_path / "seq")
        back = load_sequence(outdir / "manifest.json")
        assert len(back) == 2

    def test_single_frame_sequence(self, tmp_path):
        outdir = save_sequence(make_sequence(1), tmp_path / "seq")
        assert len(load_sequence(outdir)) == 1

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(SequenceFormatError):
            load_sequence(tmp_path / "nowhere")

    def test_missing_manifest_field(self, tmp_path):
        outdir = save_sequence(make_sequence(2), tmp_path / "seq")
        manifest = json.loads((outdir / "manifest.json").read_text())
        del manifest["fov_deg"]
        (outdir / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(SequenceFormatError):
            load_sequence(outdir)

    def test_dimension_mismatch_between_files(self, tmp_path):
        outdir = save_sequence(make_sequence(3), tmp_path / "seq")
        write_pgm(outdir / "frame_000001.pgm", np.zeros((4, 4)))
        with pytest.raises(DimensionMismatchError):
            load_sequence(outdir)

    def test_shuffled_timestamps(self, tmp_path):
        outdir = save_sequence(make_sequence(3), tmp_path / "seq")
        manifest = json.loads((outdir / "manifest.json").read_text())
        manifest["timestamps"] = [0.0, 1.0, 0.5]
        (outdir / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(TimestampOrderError):
            load_sequence(outdir)

    def test_default_timestamps_from_fps(self, tmp_path):
        outdir = save_sequence(make_sequence(4, fps=4.0), tmp_path / "seq")
        manifest = json.loads((outdir / "manifest.json").read_text())
        del manifest["timestamps"]
        (outdir / "manifest.json").write_text(json.dumps(manifest))
        back = load_sequence(outdir)
        assert back.timestamps == [0.0, 0.25, 0.5, 0.75]
