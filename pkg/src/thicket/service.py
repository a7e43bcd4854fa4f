"""HTTP session service: browse frames, render integrals, run estimations.

One service instance owns one immutable frame sequence. Rendered
integrals are cached by their full parameter tuple, so identical requests
return identical bytes; analysis endpoints keep full precision while the
image endpoints serve 8-bit PNG normalized per image for display.
"""

from __future__ import annotations

import io
import itertools
import threading
from typing import Optional

import numpy as np
from fastapi import FastAPI, Query, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image

from .estimate import SearchBounds, estimate_constant, estimate_stepwise, glv
from .frames import FrameSequence, MotionParams, MotionTrack
from .integrate import integrate
from .radon import radon_filter_image


def render_png(pixels: np.ndarray) -> bytes:
    """Min-max normalize to 8 bits and encode as PNG; NaN renders black."""
    finite = np.isfinite(pixels)
    out = np.zeros(pixels.shape, dtype=np.uint8)
    if finite.any():
        lo = float(pixels[finite].min())
        hi = float(pixels[finite].max())
        if hi > lo:
            scaled = (pixels - lo) / (hi - lo) * 255.0
        else:
            scaled = np.zeros_like(pixels)
        out[finite] = np.rint(scaled[finite]).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(out, mode="L").save(buf, format="PNG")
    return buf.getvalue()


class _EstimationJobs:
    """At most one running estimation; finished jobs stay retrievable."""

    def __init__(self, seq: FrameSequence):
        self._seq = seq
        self._lock = threading.Lock()
        self._ids = itertools.count(1)
        self._jobs: dict[int, dict] = {}
        self._running: Optional[int] = None

    def start(self, mode: str, bounds: SearchBounds) -> Optional[int]:
        with self._lock:
            if self._running is not None:
                return None
            job_id = next(self._ids)
            self._running = job_id
            self._jobs[job_id] = {"status": "running", "mode": mode}
        thread = threading.Thread(target=self._run, args=(job_id, mode, bounds),
                                  daemon=True)
        thread.start()
        return job_id

    def _run(self, job_id: int, mode: str, bounds: SearchBounds) -> None:
        try:
            run = estimate_constant if mode == "constant" else estimate_stepwise
            result = run(self._seq, bounds)
            doc = {
                "status": "done",
                "mode": mode,
                "theta_deg": result.params.theta_deg,
                "speed_mps": result.params.speed_mps,
                "glv": result.objective,
                "evals": result.evaluations,
                "steps": [s.to_json() for s in result.per_step or ()],
            }
        except Exception as exc:
            doc = {"status": "failed", "mode": mode, "error": str(exc)}
        with self._lock:
            self._jobs[job_id] = doc
            self._running = None

    def get(self, job_id: int) -> Optional[dict]:
        with self._lock:
            doc = self._jobs.get(job_id)
            return dict(doc) if doc is not None else None


def create_app(seq: FrameSequence) -> FastAPI:
    app = FastAPI(title="thicket session")
    # browser tuners may be served from a different origin than the API
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       expose_headers=["X-GLV"])
    cache: dict[tuple, tuple[bytes, float]] = {}
    cache_lock = threading.Lock()
    jobs = _EstimationJobs(seq)
    n = len(seq)

    @app.exception_handler(RequestValidationError)
    async def malformed(_request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/meta")
    def meta():
        g = seq.geometry
        return {
            "n_frames": n,
            "height": seq.shape[0],
            "width": seq.shape[1],
            "fps": seq.fps,
            "altitude_m": g.altitude_m,
            "fov_deg": g.fov_deg,
            "resolution_px": g.resolution_px,
            "gsd_m_per_px": g.gsd_m_per_px,
            "render": "8-bit PNG, min-max normalized per image",
        }

    @app.get("/frame/{index}")
    def frame(index: int):
        if not (0 <= index < n):
            return JSONResponse(status_code=404,
                                content={"detail": f"frame {index} outside [0, {n})"})
        return Response(render_png(seq[index].pixels), media_type="image/png")

    @app.get("/integral")
    def integral(theta: float, speed: float,
                 from_index: int = Query(0, alias="from"),
                 to_index: int = Query(n - 1, alias="to"),
                 filter_u: Optional[float] = None):
        if not (0 <= from_index <= to_index < n):
            return JSONResponse(
                status_code=404,
                content={"detail": f"window [{from_index}, {to_index}] outside [0, {n})"})
        if speed < 0 or (filter_u is not None and not 0 <= filter_u < 90):
            return JSONResponse(status_code=400,
                                content={"detail": "speed must be >= 0 and filter_u in [0, 90)"})
        key = (theta, speed, from_index, to_index, filter_u)
        with cache_lock:
            hit = cache.get(key)
        if hit is None:
            window = FrameSequence(seq.frames[from_index:to_index + 1],
                                   seq.geometry, seq.fps)
            params = MotionParams(theta, speed)
            image = integrate(window, MotionTrack.constant(params, len(window))).pixels
            if filter_u is not None:
                finite = np.isfinite(image)
                filled = np.where(finite, image, image[finite].mean())
                image = np.where(finite, radon_filter_image(filled, theta, filter_u),
                                 np.nan)
            hit = (render_png(image), glv(image, np.isfinite(image)))
            with cache_lock:
                cache[key] = hit
        png, focus = hit
        return Response(png, media_type="image/png", headers={"X-GLV": repr(focus)})

    @app.post("/estimate", status_code=202)
    def start_estimate(body: dict):
        mode = body.get("mode")
        if mode not in ("constant", "stepwise"):
            return JSONResponse(status_code=400,
                                content={"detail": "mode must be constant or stepwise"})
        raw = body.get("bounds")
        try:
            bounds = SearchBounds(float(raw["theta_lo_deg"]), float(raw["theta_hi_deg"]),
                                  float(raw["speed_max_mps"]))
        except (TypeError, KeyError, ValueError) as exc:
            return JSONResponse(status_code=400, content={"detail": f"bad bounds: {exc}"})
        job_id = jobs.start(mode, bounds)
        if job_id is None:
            return JSONResponse(status_code=409,
                                content={"detail": "estimation already running"})
        return {"job_id": job_id}

    @app.get("/estimate/{job_id}")
    def estimate_status(job_id: int):
        doc = jobs.get(job_id)
        if doc is None:
            return JSONResponse(status_code=404,
                                content={"detail": f"no job {job_id}"})
        return doc

    return app


def serve(seq: FrameSequence, port: int = 8000, host: str = "127.0.0.1") -> None:
    """Run the session service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(seq), host=host, port=port, log_level="warning")
