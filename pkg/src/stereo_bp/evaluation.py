"""Disparity-map scoring and exact small-instance oracles.

bad_pixel_rate follows the Middlebury convention: a pixel is bad when its
disparity error exceeds a threshold; unknown ground truth and a left
border band (where windows shifted by the maximum disparity cannot exist)
are excluded. The chain and tiny-grid solvers are exact and serve as
ground truth for the BP engine.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bp_engine import labeling_energy
from .pixmap_io import INVALID, DisparityMap, GrayImage


@dataclass
class EvalReport:
    bad_pixel_rate: float
    threshold: float
    evaluated_count: int
    excluded_count: int
    mean_abs_error: float

    def csv_line(self):
        return (
            f"{self.bad_pixel_rate:.6f},{self.threshold},"
            f"{self.evaluated_count},{self.excluded_count},"
            f"{self.mean_abs_error:.6f}"
        )


def bad_pixel_rate(result, truth, threshold=1.0, border=0):
    """Fraction of evaluated pixels with |d_result - d_truth| > threshold.

    Pixels with INVALID truth or within `border` columns of the left edge
    are excluded from scoring."""
    if result.labels.shape != truth.labels.shape:
        raise ValueError(
            f"dimension mismatch: result {result.width}x{result.height} vs "
            f"truth {truth.width}x{truth.height}"
        )
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    scored = truth.labels != INVALID
    scored[:, :border] = False
    total = result.labels.size
    evaluated = int(np.count_nonzero(scored))
    err = np.abs(result.labels - truth.labels)[scored]
    bad = int(np.count_nonzero(err > threshold))
    rate = bad / evaluated if evaluated else 0.0
    mae = float(err.mean()) if evaluated else 0.0
    return EvalReport(rate, threshold, evaluated, total - evaluated, mae)


def exact_map_chain(costs, params):
    """Exact MAP on a chain by Viterbi dynamic programming.

    costs: (N, L) per-node cost vectors. Minimizes sum of node costs plus
    truncated-linear jump costs between consecutive nodes; ties break
    toward smaller labels at each backtrack step. Returns (labels, energy).
    """
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2 or costs.shape[0] < 1:
        raise ValueError("need a non-empty (N, L) cost array")
    n, levels = costs.shape
    d = np.arange(levels)
    jump = np.minimum(params.slope * np.abs(d[:, None] - d[None, :]),
                      params.truncation)  # (prev, next)
    best = costs[0].copy()
    back = np.zeros((n, levels), dtype=np.int64)
    for i in range(1, n):
        trans = best[:, None] + jump  # (prev, next)
        back[i] = np.argmin(trans, axis=0)  # smallest prev label on ties
        best = trans[back[i], d] + costs[i]
    labels = np.empty(n, dtype=np.int32)
    labels[-1] = int(np.argmin(best))
    energy = float(best[labels[-1]])
    for i in range(n - 1, 0, -1):
        labels[i - 1] = back[i, labels[i]]
    return labels, energy


def exact_map_grid_small(volume, params):
    """Exhaustive MAP over all labelings of a tiny grid; ties resolve to
    the lexicographically smallest labeling (row-major pixel order).
    Guarded to L^(W*H) <= 1e7 instances."""
    h, w, levels = volume.costs.shape
    if levels ** (h * w) > 10**7:
        raise ValueError(f"{w}x{h} grid with {levels} labels is too large to enumerate")
    best_labels = None
    best_energy = np.inf
    for assignment in itertools.product(range(levels), repeat=h * w):
        labels = np.array(assignment, dtype=np.int32).reshape(h, w)
        e = labeling_energy(volume, DisparityMap(labels), params)
        if e < best_energy:
            best_energy = e
            best_labels = labels
    return best_labels, float(best_energy)


def make_stereogram(width, height, shift, seed):
    """Random-dot stereogram fixture: a uniform-noise left image whose
    central rectangle appears shifted left by `shift` in the right image.

    Returns (left, right, truth) with exact integer ground truth: `shift`
    inside the rectangle, 0 elsewhere."""
    if shift < 0 or shift >= width // 4:
        raise ValueError(f"shift {shift} must be in [0, width/4) for width {width}")
    rng = np.random.default_rng(seed)
    left = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
    right = left.copy()
    x0, x1 = width // 4, 3 * width // 4
    y0, y1 = height // 4, 3 * height // 4
    right[y0:y1, x0 - shift : x1 - shift] = left[y0:y1, x0:x1]
    truth = np.zeros((height, width), dtype=np.int32)
    truth[y0:y1, x0:x1] = shift
    return GrayImage(left), GrayImage(right), DisparityMap(truth)
