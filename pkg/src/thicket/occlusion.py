"""Statistical occlusion model: analytic image moments and a Monte Carlo oracle.

Each pixel of a single recording is either occluded (probability D), in
which case it shows an occluder sample O_i ~ (mu_o, sigma2_o), or it shows
the scene signal S ~ (mu_s, sigma2_s). Averaging N registered recordings
gives the integral intensity I = (1/N) sum_i [Z_i O_i + (1 - Z_i) S] with
Z_i ~ Bernoulli(D). The signal S is one draw shared by all N recordings:
the camera is static and the scene patch does not change, and exactly this
correlation keeps the (1-D)^2 (1-1/N) sigma2_s term alive as N grows.

Only the first two moments of O and S matter for the results, so the Monte
Carlo oracle can draw from normal or uniform distributions interchangeably.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

MIN_TRIALS = 1000
_CHUNK_TARGET = 4_000_000  # floats per chunk across the N axis


def worker_count() -> int:
    """Parallelism cap from the IAOS_THREADS environment variable (default 1)."""
    raw = os.environ.get("IAOS_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


@dataclass(frozen=True)
class OcclusionModel:
    """Occlusion probability, occluder and signal moments, and integration count."""

    D: float
    mu_o: float
    sigma2_o: float
    mu_s: float
    sigma2_s: float
    N: int = 1

    def __post_init__(self):
        if not (0.0 <= self.D <= 1.0):
            raise ValueError(f"D must lie in [0, 1], got {self.D}")
        if self.sigma2_o < 0 or self.sigma2_s < 0:
            raise ValueError("variances must be non-negative")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        for name in ("D", "mu_o", "sigma2_o", "mu_s", "sigma2_s"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def with_(self, **changes) -> "OcclusionModel":
        fields = dict(D=self.D, mu_o=self.mu_o, sigma2_o=self.sigma2_o,
                      mu_s=self.mu_s, sigma2_s=self.sigma2_s, N=self.N)
        fields.update(changes)
        return OcclusionModel(**fields)


def single_mean(m: OcclusionModel) -> float:
    return m.D * m.mu_o + (1.0 - m.D) * m.mu_s


def single_variance(m: OcclusionModel) -> float:
    return (m.D * (1.0 - m.D) * (m.mu_o - m.mu_s) ** 2
            + m.D * m.sigma2_o + (1.0 - m.D) * m.sigma2_s)


def integral_mean(m: OcclusionModel) -> float:
    # averaging identically distributed samples leaves the mean unchanged
    return single_mean(m)


def integral_second_moment(m: OcclusionModel) -> float:
    """E[I^2] assembled from the per-sample and cross terms separately.

    The i = j terms contribute the full second moments; the i != j terms see
    independent Z_i, Z_j and O_i, O_j but the shared S, whose second moment
    therefore survives in the cross term.
    """
    D, N = m.D, m.N
    same = D * (m.sigma2_o + m.mu_o ** 2) + (1.0 - D) * (m.sigma2_s + m.mu_s ** 2)
    cross = (D ** 2 * m.mu_o ** 2
             + 2.0 * D * (1.0 - D) * m.mu_o * m.mu_s
             + (1.0 - D) ** 2 * (m.sigma2_s + m.mu_s ** 2))
    return (N * same + N * (N - 1) * cross) / N ** 2


def integral_variance(m: OcclusionModel) -> float:
    """Variance of the N-image integral at one pixel.

    The single-image variance shrinks with 1/N; the shared signal leaves a
    floor of (1-D)^2 sigma2_s that integration cannot remove.
    """
    N = m.N
    return single_variance(m) / N + (1.0 - m.D) ** 2 * (1.0 - 1.0 / N) * m.sigma2_s


def _draw_chunk(m: OcclusionModel, n: int, rng: np.random.Generator, distribution: str):
    """n Monte Carlo realizations of the integral intensity I."""
    so = math.sqrt(m.sigma2_o)
    ss = math.sqrt(m.sigma2_s)
    if distribution == "normal":
        S = rng.normal(m.mu_s, ss, size=n)
        O = rng.normal(m.mu_o, so, size=(m.N, n))
    elif distribution == "uniform":
        # half-width sqrt(3)*sigma matches the first two moments
        S = rng.uniform(m.mu_s - ss * math.sqrt(3), m.mu_s + ss * math.sqrt(3), size=n)
        O = rng.uniform(m.mu_o - so * math.sqrt(3), m.mu_o + so * math.sqrt(3), size=(m.N, n))
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    Z = rng.random(size=(m.N, n)) < m.D
    return np.where(Z, O, S[None, :]).mean(axis=0)


def monte_carlo_variance(m: OcclusionModel, trials: int, seed: int,
                         distribution: str = "normal") -> tuple[float, float]:
    """Sample variance of simulated integral intensities, with jackknife SE.

    Trials are drawn in fixed-size chunks with independent spawned seed
    streams, so the result depends only on (model, trials, seed,
    distribution) and not on how many worker threads ran the chunks.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}, got {trials}")
    chunk = max(MIN_TRIALS, min(50_000, _CHUNK_TARGET // m.N))
    sizes = [chunk] * (trials // chunk)
    if trials % chunk:
        sizes.append(trials % chunk)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    workers = worker_count()

    def run(i: int):
        return _draw_chunk(m, sizes[i], np.random.default_rng(seeds[i]), distribution)

    if workers == 1 or len(sizes) == 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    x = np.concatenate(parts)

    n = trials
    t1 = x.sum()
    t2 = (x * x).sum()
    var = (t2 - t1 * t1 / n) / (n - 1)
    # closed-form leave-one-out: variance of the remaining n-1 samples
    t1_i = t1 - x
    t2_i = t2 - x * x
    v_i = (t2_i - t1_i * t1_i / (n - 1)) / (n - 2)
    se = math.sqrt((n - 1) / n * ((v_i - v_i.mean()) ** 2).sum())
    return float(var), float(se)


def report_grid(base: OcclusionModel, D_values, N_values, trials: int, seed: int):
    """Analytic-vs-Monte-Carlo table over a (D, N) grid, as JSON-ready rows."""
    rows = []
    for D in D_values:
        for N in N_values:
            m = base.with_(D=float(D), N=int(N))
            est, se = monte_carlo_variance(m, trials, seed)
            rows.append({
                "D": float(D),
                "N": int(N),
                "analytic": integral_variance(m),
                "mc_estimate": est,
                "mc_se": se,
            })
    return rows
