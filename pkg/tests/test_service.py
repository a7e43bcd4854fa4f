"""HTTP session service tests against an in-process app."""

import time
from importlib import resources

import numpy as np
import pytest
from fastapi.testclient import TestClient

from thicket.estimate import wrapped_angle_error_deg
from thicket.service import create_app, render_png
from thicket.simulate import load_config, simulate

TRUTH_THETA, TRUTH_SPEED = 118.0, 0.7


@pytest.fixture(scope="module")
def client():
    cfg = load_config(str(resources.files("thicket") / "configs" / "demo_scene.json"))
    seq, _ = simulate(cfg)
    return TestClient(create_app(seq))


class TestRenderPng:
    def test_deterministic_bytes(self):
        rng = np.random.default_rng(1)
        img = rng.random((32, 32))
        assert render_png(img) == render_png(img.copy())

    def test_constant_image_renders(self):
        png = render_png(np.full((8, 8), 0.5))
        assert png.startswith(b"\x89PNG")

    def test_nan_pixels_render_black(self):
        img = np.full((8, 8), 0.7)
        img[0, 0] = np.nan
        assert render_png(img).startswith(b"\x89PNG")


class TestMeta:
    def test_fields(self, client):
        meta = client.get("/meta").json()
        assert meta["n_frames"] == 8
        assert meta["height"] == meta["width"] == 64
        assert meta["gsd_m_per_px"] > 0
        assert "normalized" in meta["render"]


class TestFrames:
    def test_frame_is_png(self, client):
        resp = client.get("/frame/0")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        assert resp.content.startswith(b"\x89PNG")

    def test_out_of_range_is_404(self, client):
        assert client.get("/frame/8").status_code == 404
        assert client.get("/frame/-1").status_code == 404


class TestIntegral:
    def test_single_frame_window_equals_frame(self, client):
        frame = client.get("/frame/3")
        integral = client.get("/integral", params={
            "theta": 200.0, "speed": 0.3, "from": 3, "to": 3})
        assert integral.content == frame.content

    def test_identical_requests_identical_bytes(self, client):
        params = {"theta": 118.0, "speed": 0.7}
        a = client.get("/integral", params=params)
        b = client.get("/integral", params=params)
        assert a.content == b.content
        assert a.headers["X-GLV"] == b.headers["X-GLV"]

    def test_truth_focuses_better_than_off_angle(self, client):
        at_truth = client.get("/integral", params={"theta": TRUTH_THETA,
                                                   "speed": TRUTH_SPEED})
        off = client.get("/integral", params={"theta": TRUTH_THETA + 30.0,
                                              "speed": TRUTH_SPEED})
        assert float(at_truth.headers["X-GLV"]) > float(off.headers["X-GLV"])

    def test_filter_changes_bytes(self, client):
        plain = client.get("/integral", params={"theta": 118.0, "speed": 0.7})
        filtered = client.get("/integral", params={"theta": 118.0, "speed": 0.7,
                                                   "filter_u": 15.0})
        assert filtered.status_code == 200
        assert plain.content != filtered.content

    def test_malformed_params_are_400(self, client):
        assert client.get("/integral", params={"theta": "abc",
                                               "speed": 0.7}).status_code == 400
        assert client.get("/integral", params={"theta": 118.0, "speed": 0.7,
                                               "filter_u": 95.0}).status_code == 400

    def test_bad_window_is_404(self, client):
        assert client.get("/integral", params={"theta": 118.0, "speed": 0.7,
                                               "from": 5, "to": 2}).status_code == 404
        assert client.get("/integral", params={"theta": 118.0, "speed": 0.7,
                                               "from": 0, "to": 99}).status_code == 404


class TestEstimateJobs:
    def poll(self, client, job_id, timeout=120.0):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            doc = client.get(f"/estimate/{job_id}").json()
            if doc["status"] != "running":
                return doc
            time.sleep(0.1)
        raise AssertionError("estimation job never finished")

    def test_full_job_flow(self, client):
        body = {"mode": "stepwise",
                "bounds": {"theta_lo_deg": 90.0, "theta_hi_deg": 150.0,
                           "speed_max_mps": 1.0}}
        first = client.post("/estimate", json=body)
        assert first.status_code == 202
        job_id = first.json()["job_id"]

        second = client.post("/estimate", json=body)
        assert second.status_code == 409

        doc = self.poll(client, job_id)
        assert doc["status"] == "done"
        assert wrapped_angle_error_deg(doc["theta_deg"], TRUTH_THETA) <= 5.0
        assert len(doc["steps"]) == 7  # frames - 1

        third = client.post("/estimate", json={
            "mode": "constant",
            "bounds": {"theta_lo_deg": 90.0, "theta_hi_deg": 150.0,
                       "speed_max_mps": 1.0}})
        assert third.status_code == 202
        done = self.poll(client, third.json()["job_id"])
        assert done["status"] == "done"
        assert abs(done["speed_mps"] - TRUTH_SPEED) / TRUTH_SPEED <= 0.10

    def test_unknown_job_is_404(self, client):
        assert client.get("/estimate/999").status_code == 404

    def test_bad_mode_and_bounds_are_400(self, client):
        assert client.post("/estimate", json={"mode": "fast"}).status_code == 400
        assert client.post("/estimate", json={
            "mode": "constant", "bounds": {"theta_lo_deg": 90.0}}).status_code == 400
