"""Proximity-analysis defense: distance histograms, radius, label correction."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ClassTooSmall, NoValidBin

DEFAULT_DELTA_R = math.sqrt(2.0)


@dataclass(frozen=True)
class DistanceHistograms:
    delta_r: float
    h_blue: tuple[int, ...]    # blue-blue pair counts per bin
    h_orange: tuple[int, ...]  # orange-orange pair counts
    h_cross: tuple[int, ...]   # blue-orange pair counts

    def to_json(self) -> dict:
        return {"delta_r": repr(self.delta_r),
                "h_blue": list(self.h_blue),
                "h_orange": list(self.h_orange),
                "h_cross": list(self.h_cross)}


def _pair_distances(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    if b is None:
        n = len(a)
        idx = np.triu_indices(n, k=1)
        diff = a[idx[0]] - a[idx[1]]
    else:
        diff = (a[:, None, :] - b[None, :, :]).reshape(-1, 2)
    return np.hypot(diff[:, 0], diff[:, 1])


def _bin(dists: np.ndarray, delta_r: float, n_bins: int) -> tuple[int, ...]:
    k = np.minimum((dists / delta_r).astype(int), n_bins - 1)
    return tuple(np.bincount(k, minlength=n_bins).tolist())


def pairwise_histograms(train, delta_r: float = DEFAULT_DELTA_R) -> DistanceHistograms:
    """Histograms of Euclidean pair distances within and across the classes."""
    if delta_r <= 0:
        raise ValueError("delta_r must be positive")
    blue = np.array([(p.x, p.y) for p in train if p.label == 1])
    orange = np.array([(p.x, p.y) for p in train if p.label == -1])
    if len(blue) < 2 or len(orange) < 2:
        raise ClassTooSmall("need at least 2 points per class")
    d_blue = _pair_distances(blue)
    d_orange = _pair_distances(orange)
    d_cross = _pair_distances(blue, orange)
    max_d = max(d_blue.max(initial=0.0), d_orange.max(initial=0.0),
                d_cross.max(initial=0.0))
    n_bins = max(1, int(max_d / delta_r) + 1)
    return DistanceHistograms(delta_r,
                              _bin(d_blue, delta_r, n_bins),
                              _bin(d_orange, delta_r, n_bins),
                              _bin(d_cross, delta_r, n_bins))


def select_radius(h: DistanceHistograms) -> float:
    """R = delta_r * (0.5 + argmax_k h_blue[k]*h_orange[k]/h_cross[k]).

    Bins with an empty cross histogram are skipped (the ratio is undefined);
    ties go to the smallest zero-based bin index.
    """
    best_k, best_ratio = None, -math.inf
    for k, (p, n, c) in enumerate(zip(h.h_blue, h.h_orange, h.h_cross)):
        if c == 0:
            continue
        ratio = (p * n) / c
        if ratio > best_ratio:
            best_k, best_ratio = k, ratio
    if best_k is None:
        raise NoValidBin("every bin has an empty cross-pair histogram")
    return h.delta_r * (0.5 + best_k)


@dataclass(frozen=True)
class FlipReport:
    radius: float
    flipped: tuple[int, ...]            # indices into the test sequence
    counts: tuple[tuple[int, int], ...]  # (same-label, opposite-label) per point

    def to_json(self) -> dict:
        return {"radius": repr(self.radius),
                "flipped": list(self.flipped),
                "counts": [list(c) for c in self.counts]}


def robustify(train, test, radius: float):
    """Majority-vote label correction of test points inside radius `radius`.

    A test label flips when the opposite-label training count strictly exceeds
    the same-label count within the closed ball; empty neighborhoods leave the
    label unchanged.  Returns (corrected test points, flip report).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    txy = np.array([(p.x, p.y) for p in train])
    tl = np.array([p.label for p in train])
    corrected, flipped, counts = [], [], []
    for i, p in enumerate(test):
        d = np.hypot(txy[:, 0] - p.x, txy[:, 1] - p.y)
        near = d <= radius
        same = int(np.count_nonzero(near & (tl == p.label)))
        opposite = int(np.count_nonzero(near & (tl == -p.label)))
        counts.append((same, opposite))
        if opposite > same:
            corrected.append(replace(p, label=-p.label))
            flipped.append(i)
        else:
            corrected.append(p)
    return tuple(corrected), FlipReport(radius, tuple(flipped), tuple(counts))
