"""Time the compiled raster kernels against the NumPy fallback.

Runs each hot kernel on a realistic workload with both backends, reports
per-call wall time and the speedup, and cross-checks that the two
implementations agree to float rounding. Run from the repository root:

    python3 benchmarks/bench_kernels.py --size 256 --repeats 5
"""

import argparse
import sys
import time

import numpy as np

from thicket.kernels import _python
from thicket.radon import SPLAT_SUPERSAMPLE, detector_count_for

try:
    from thicket.kernels import _compiled
except ImportError:
    _compiled = None


def build_cases(size, n_angles, seed):
    rng = np.random.default_rng(seed)
    img = rng.uniform(0.0, 1.0, (size, size))
    angles = np.ascontiguousarray(np.deg2rad(np.arange(0.0, 180.0, 180.0 / n_angles)))
    det = detector_count_for(size)
    rows = rng.uniform(0.0, 1.0, (len(angles), det))

    def accumulate(mod):
        out_sum = np.zeros((size, size))
        out_cnt = np.zeros((size, size))
        mod.shift_accumulate(img, 3.7, -2.2, out_sum, out_cnt)
        return out_sum

    return [
        ("shift_image", lambda mod: mod.shift_image(img, 3.7, -2.2, 0.0)),
        ("shift_accumulate", accumulate),
        ("radon_project", lambda mod: mod.radon_project(img, angles, det, SPLAT_SUPERSAMPLE)),
        ("backproject", lambda mod: mod.backproject(rows, angles, size, size)),
    ]


def best_of(fn, mod, repeats):
    fn(mod)   # warmup, excluded
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(mod)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256, help="image side in pixels")
    ap.add_argument("--angles", type=int, default=180, help="projection angle count")
    ap.add_argument("--repeats", type=int, default=5, help="timed repetitions, best kept")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _compiled is None:
        print("compiled extension not importable; nothing to compare", file=sys.stderr)
        return 1

    print(f"size {args.size}x{args.size}, {args.angles} angles, best of {args.repeats}")
    print(f"{'kernel':<18} {'compiled':>12} {'python':>12} {'speedup':>9} {'max |diff|':>12}")
    for name, fn in build_cases(args.size, args.angles, args.seed):
        t_c, out_c = best_of(fn, _compiled, args.repeats)
        t_p, out_p = best_of(fn, _python, args.repeats)
        diff = float(np.nanmax(np.abs(out_c - out_p)))
        print(f"{name:<18} {t_c * 1e3:>10.2f}ms {t_p * 1e3:>10.2f}ms "
              f"{t_p / t_c:>8.1f}x {diff:>12.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
