"""Command line entry points for simulation, integration, estimation and tracking.

Every subcommand works on the on-disk sequence format (a directory of
16-bit PGM frames plus manifest.json). Domain failures exit 1 with a
one-line diagnostic on stderr; argparse usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ThicketError
from .estimate import (
    SearchBounds,
    estimate_constant,
    estimate_stepwise,
    glv,
    trace_lines,
)
from .frames import FrameSequence, MotionParams, MotionTrack, load_sequence, write_pgm
from .integrate import integrate
from .occlusion import OcclusionModel, report_grid
from .radon import radon_filter_image
from .simulate import load_config, save_scene
from .track import track_lines, track_sequence


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    outdir = save_scene(cfg, args.outdir)
    print(outdir)
    return 0


def _filtered(pixels: np.ndarray, theta_deg: float, u_deg: float) -> np.ndarray:
    finite = np.isfinite(pixels)
    filled = np.where(finite, pixels, pixels[finite].mean())
    return radon_filter_image(filled, theta_deg, u_deg)


def _cmd_integrate(args) -> int:
    seq = load_sequence(args.sequence)
    params = MotionParams(args.theta, args.speed)
    image = integrate(seq, MotionTrack.constant(params, len(seq))).pixels
    if args.filter_u is not None:
        image = _filtered(image, args.theta, args.filter_u)
    mask = np.isfinite(image)
    print(f"glv {glv(image, mask):.10g}")
    write_pgm(args.output, np.where(mask, image, 0.0))
    return 0


def _parse_bounds(text: str) -> SearchBounds:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"bounds must be THETA_LO:THETA_HI:SPEED_MAX, got {text!r}")
    return SearchBounds(float(parts[0]), float(parts[1]), float(parts[2]))


def _cmd_estimate(args) -> int:
    seq = load_sequence(args.sequence)
    bounds = _parse_bounds(args.bounds)
    if args.mode == "constant":
        result = estimate_constant(seq, bounds, max_evals=args.max_evals)
    else:
        result = estimate_stepwise(seq, bounds, max_evals=args.max_evals)
    doc = {
        "mode": args.mode,
        "theta_deg": result.params.theta_deg,
        "speed_mps": result.params.speed_mps,
        "glv": result.objective,
        "evals": result.evaluations,
        "steps": [json.loads(line) for line in trace_lines(result)],
    }
    with open(args.output, "w") as fh:
        json.dump(doc, fh, indent=2)
    print(f"({result.params.theta_deg:.2f} deg, {result.params.speed_mps:.3f} m/s) "
          f"glv {result.objective:.10g}")
    return 0


def _cmd_track(args) -> int:
    from dataclasses import replace

    from .track import TrackerConfig

    seq = load_sequence(args.sequence)
    bounds = _parse_bounds(args.bounds) if args.bounds else None
    config = None
    if args.warmup is not None:
        base = (TrackerConfig.single_frame() if args.mode == "single"
                else TrackerConfig.integral())
        config = replace(base, warmup_frames=args.warmup)
    truth_path = Path(args.sequence) / "ground_truth.json"
    truth_centers = None
    if truth_path.exists():
        with open(truth_path) as fh:
            truth_centers = [tuple(c) for c in json.load(fh)["per_frame_centers_px"]]
    tracks, metrics = track_sequence(seq, config=config, mode=args.mode, bounds=bounds,
                                     truth_centers=truth_centers)
    with open(args.output, "w") as fh:
        for line in track_lines(tracks):
            fh.write(line + "\n")
    print(json.dumps(metrics.to_json()))
    return 0


def _parse_grid(text: str) -> dict[str, list[float]]:
    """Parse 'D=0:0.25:1,N=1,10' into {'D': [...], 'N': [...]}.

    A variable's values are either a comma list or an inclusive
    start:step:stop range; commas both separate variables and list
    entries, so bare tokens extend the preceding variable.
    """
    grid: dict[str, list[float]] = {}
    current: str | None = None
    for token in text.split(","):
        if "=" in token:
            current, spec = token.split("=", 1)
            current = current.strip()
            grid[current] = []
        else:
            spec = token
        if current is None:
            raise ValueError(f"grid token {token!r} precedes any VAR=")
        spec = spec.strip()
        if ":" in spec:
            start, step, stop = (float(p) for p in spec.split(":"))
            if step <= 0:
                raise ValueError(f"grid step must be positive in {token!r}")
            grid[current].extend(np.arange(start, stop + step / 2, step).tolist())
        elif spec:
            grid[current].append(float(spec))
    return grid


def _cmd_stats(args) -> int:
    grid = _parse_grid(args.grid)
    unknown = set(grid) - {"D", "N"}
    if unknown:
        raise ValueError(f"grid variables must be D and N, got {sorted(unknown)}")
    base = OcclusionModel(D=0.0, mu_o=args.mu_o, sigma2_o=args.sigma2_o,
                          mu_s=args.mu_s, sigma2_s=args.sigma2_s)
    rows = report_grid(base, grid.get("D", [0.0]), grid.get("N", [1]),
                       trials=args.trials, seed=args.seed)
    doc = {
        "model": {"mu_o": args.mu_o, "sigma2_o": args.sigma2_o,
                  "mu_s": args.mu_s, "sigma2_s": args.sigma2_s},
        "trials": args.trials,
        "seed": args.seed,
        "rows": rows,
    }
    with open(args.output, "w") as fh:
        json.dump(doc, fh, indent=2)
    print(f"{len(rows)} grid points")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    seq = load_sequence(args.sequence)
    serve(seq, port=args.port, host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thicket",
        description="Occlusion-free integral imaging of moving targets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a synthetic occluded scene")
    p.add_argument("config", help="scene config JSON")
    p.add_argument("outdir", help="output sequence directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("integrate", help="integrate a sequence along one motion hypothesis")
    p.add_argument("sequence", help="sequence directory")
    p.add_argument("--theta", type=float, required=True, help="direction in degrees")
    p.add_argument("--speed", type=float, required=True, help="speed in m/s")
    p.add_argument("--filter-u", type=float, default=None,
                   help="band-stop the occluder direction with this half-width in degrees")
    p.add_argument("-o", "--output", required=True, help="output PGM path")
    p.set_defaults(func=_cmd_integrate)

    p = sub.add_parser("estimate", help="recover motion parameters by focus maximization")
    p.add_argument("sequence", help="sequence directory")
    p.add_argument("--mode", choices=("constant", "stepwise"), default="constant")
    p.add_argument("--bounds", required=True, help="THETA_LO:THETA_HI:SPEED_MAX")
    p.add_argument("--max-evals", type=int, default=200)
    p.add_argument("-o", "--output", required=True, help="result JSON path")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("track", help="detect and track moving targets")
    p.add_argument("sequence", help="sequence directory")
    p.add_argument("--mode", choices=("single", "integral"), default="single")
    p.add_argument("--bounds", default=None,
                   help="THETA_LO:THETA_HI:SPEED_MAX (required for integral mode)")
    p.add_argument("--warmup", type=int, default=None,
                   help="override background model warm-up frame count")
    p.add_argument("-o", "--output", required=True, help="tracks JSONL path")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("stats", help="occlusion statistics over a (D, N) grid")
    p.add_argument("--grid", required=True, help="e.g. D=0:0.25:1,N=1,10")
    p.add_argument("--mu-o", type=float, default=0.8)
    p.add_argument("--sigma2-o", type=float, default=0.01)
    p.add_argument("--mu-s", type=float, default=0.3)
    p.add_argument("--sigma2-s", type=float, default=0.0025)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="report JSON path")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("serve", help="serve a sequence over HTTP for interactive tuning")
    p.add_argument("sequence", help="sequence directory")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ThicketError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
