"""Deterministic derivative-free maximization over a 2-D box.

DIRECT (DIviding RECTangles) after Jones, Perttunen and Stuckman: the box is
normalized to the unit square, rectangles are sampled at their centers, and
each iteration trisects the potentially optimal rectangles, i.e. those on the
lower envelope of (diagonal, value) for some Lipschitz constant K > 0.  The
implementation minimizes the negated objective, so all internal comparisons
are in min-space.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple, Sequence

EPSILON = 1e-4


class DirectResult(NamedTuple):
    point: tuple[float, float]
    value: float
    evaluations: int


class _Rect:
    __slots__ = ("center", "levels", "g", "idx")

    def __init__(self, center: tuple[float, float], levels: tuple[int, int],
                 g: float, idx: int):
        self.center = center
        self.levels = levels
        self.g = g  # negated objective at center
        self.idx = idx  # insertion order, used as deterministic tie-break

    @property
    def diagonal(self) -> float:
        return math.hypot(3.0 ** -self.levels[0], 3.0 ** -self.levels[1])


def _potentially_optimal(rects: Sequence[_Rect], g_min: float,
                         eps: float = EPSILON) -> list[_Rect]:
    """Rectangles minimizing g - K*diagonal for some K > 0.

    Textbook pairwise test over per-diameter minima rather than an explicit
    convex hull scan; the number of distinct diameters stays small enough
    that the quadratic cost is irrelevant.
    """
    groups: dict[float, _Rect] = {}
    for r in rects:
        d = r.diagonal
        cur = groups.get(d)
        if cur is None or (r.g, r.idx) < (cur.g, cur.idx):
            groups[d] = r
    cands = sorted(groups.values(), key=lambda r: r.diagonal)
    chosen = []
    for j, rj in enumerate(cands):
        dj, gj = rj.diagonal, rj.g
        k_lo = 0.0
        for ri in cands[:j]:
            k_lo = max(k_lo, (gj - ri.g) / (dj - ri.diagonal))
        if j + 1 == len(cands):
            # largest rectangle: feasible for arbitrarily large K
            chosen.append(rj)
            continue
        k_hi = min((ri.g - gj) / (ri.diagonal - dj) for ri in cands[j + 1:])
        if k_hi <= 0.0 or k_hi < k_lo:
            continue
        if gj - k_hi * dj <= g_min - eps * abs(g_min):
            chosen.append(rj)
    return chosen


def maximize_on_box(func: Callable[[float, float], float],
                    lower: tuple[float, float],
                    upper: tuple[float, float],
                    max_evals: int,
                    min_box_diag: float = 1e-3,
                    workers: int = 1) -> DirectResult:
    """Maximize func over [lower[0], upper[0]] x [lower[1], upper[1]].

    Stops once the evaluation budget cannot fund the next trisection or the
    rectangle holding the incumbent has diagonal (in normalized units) below
    min_box_diag.  Returns the best sampled point; with a constant objective
    no sample ever improves on the first, so the box center comes back.
    """
    if max_evals < 3:
        raise ValueError("max_evals must be at least 3")
    if not (upper[0] > lower[0] and upper[1] > lower[1]):
        raise ValueError("degenerate box")
    span = (upper[0] - lower[0], upper[1] - lower[1])

    def geval(unit_xy: tuple[float, float]) -> float:
        x = lower[0] + span[0] * unit_xy[0]
        y = lower[1] + span[1] * unit_xy[1]
        v = func(x, y)
        if not math.isfinite(v):
            raise ValueError(f"objective returned non-finite value at ({x}, {y})")
        return -v

    def geval_batch(points: list[tuple[float, float]]) -> list[float]:
        if workers > 1 and len(points) > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                return list(ex.map(geval, points))
        return [geval(p) for p in points]

    g0 = geval((0.5, 0.5))
    root = _Rect((0.5, 0.5), (0, 0), g0, 0)
    rects: list[_Rect] = [root]
    evals = 1
    next_idx = 1
    best = root
    budget_left = True

    while budget_left and best.diagonal >= min_box_diag:
        progressed = False
        for rect in _potentially_optimal(rects, best.g):
            low = min(rect.levels)
            dims = [i for i in (0, 1) if rect.levels[i] == low]
            if evals + 2 * len(dims) > max_evals:
                budget_left = False
                break
            deltas = {i: 3.0 ** -(rect.levels[i] + 1) for i in dims}
            points = []
            for i in dims:
                for sign in (1.0, -1.0):
                    c = list(rect.center)
                    c[i] += sign * deltas[i]
                    points.append(tuple(c))
            values = geval_batch(points)
            evals += len(points)
            progressed = True

            # split along the best-scoring dimension first; the parent keeps
            # its center and ends up as the fully refined middle rectangle
            by_w = sorted(dims, key=lambda i: min(values[2 * dims.index(i)],
                                                  values[2 * dims.index(i) + 1]))
            levels = list(rect.levels)
            for i in by_w:
                levels[i] += 1
                for sign_ix, sign in enumerate((1.0, -1.0)):
                    c = list(rect.center)
                    c[i] += sign * deltas[i]
                    g = values[2 * dims.index(i) + sign_ix]
                    child = _Rect(tuple(c), tuple(levels), g, next_idx)
                    next_idx += 1
                    rects.append(child)
                    if g < best.g:
                        best = child
            rect.levels = tuple(levels)
        if not progressed:
            break

    return DirectResult(
        point=(lower[0] + span[0] * best.center[0],
               lower[1] + span[1] * best.center[1]),
        value=-best.g,
        evaluations=evals,
    )
