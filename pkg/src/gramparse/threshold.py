"""Automatic estimation of the occurrence threshold separating rare from
frequent n-grams, one threshold per gram order.

The pipeline per order: tally how many distinct grams have each exact
occurrence value, smooth that curve with degree-1 tricube loess, take the
finite-difference derivative, and split the derivative values into two
groups with an exact 1-D 2-means. The largest occurrence value that falls
in the group of the lowest occurrence value becomes the threshold; grams
with a count strictly below it are treated as low-appearing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dictionary import NGramDictionary

# Histogram points: sorted (occurrence value, number of distinct grams).
HistogramPoints = list[tuple[int, int]]


class EmptyDictionaryError(ValueError):
    """Raised when a gram order has no entries to estimate from."""


@dataclass(frozen=True)
class ThresholdPair:
    t2: int
    t3: int

    def __post_init__(self) -> None:
        if self.t2 < 1 or self.t3 < 1:
            raise ValueError(f"thresholds must be >= 1, got t2={self.t2}, t3={self.t3}")


def histogram(d: NGramDictionary, order: int) -> HistogramPoints:
    """Exact tally of the count multiset for one gram order."""
    counts = {2: d.counts2, 3: d.counts3}[order]
    if not counts:
        raise EmptyDictionaryError(f"no {order}-grams in dictionary")
    tally: dict[int, int] = {}
    for c in counts.values():
        tally[c] = tally.get(c, 0) + 1
    return sorted(tally.items())


def loess_smooth(points: HistogramPoints, span: float = 0.75) -> list[tuple[int, float]]:
    """Locally weighted degree-1 regression (tricube weights) at each X.

    The bandwidth at each point is the distance to its ceil(span*n)-th
    nearest neighbor, itself included. Fewer than 3 points pass through
    unchanged.
    """
    if not 0 < span <= 1:
        raise ValueError(f"span must be in (0, 1], got {span}")
    n = len(points)
    if n < 3:
        return [(x, float(y)) for x, y in points]
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    k = math.ceil(span * n)
    out: list[tuple[int, float]] = []
    for i in range(n):
        d = np.abs(x - x[i])
        h = np.partition(d, k - 1)[k - 1]
        if h <= 0.0:
            out.append((points[i][0], float(y[i])))
            continue
        u = d / h
        w = np.where(u < 1.0, (1.0 - u**3) ** 3, 0.0)
        sw = w.sum()
        swx = float(w @ x)
        swy = float(w @ y)
        swxx = float(w @ (x * x))
        swxy = float(w @ (x * y))
        denom = sw * swxx - swx * swx
        if denom <= 1e-12 * max(1.0, abs(sw * swxx)):
            out.append((points[i][0], swy / sw))
        else:
            slope = (sw * swxy - swx * swy) / denom
            intercept = (swy - slope * swx) / sw
            out.append((points[i][0], intercept + slope * x[i]))
    return out


def derivative(points: list[tuple[int, float]]) -> list[tuple[int, float]]:
    """Finite differences over the actual X spacing: forward at the first
    point, backward at the last, central elsewhere."""
    n = len(points)
    if n < 2:
        raise ValueError("derivative needs at least 2 points")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    out: list[tuple[int, float]] = []
    for i in range(n):
        if i == 0:
            d = (ys[1] - ys[0]) / (xs[1] - xs[0])
        elif i == n - 1:
            d = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2])
        else:
            d = (ys[i + 1] - ys[i - 1]) / (xs[i + 1] - xs[i - 1])
        out.append((xs[i], d))
    return out


def split_two_clusters(values: list[float]) -> int:
    """Exact optimal 2-cluster partition of the sorted values.

    Returns k, the size of the lower cluster: sorted(values)[:k] and
    sorted(values)[k:] minimize the total within-cluster sum of squared
    deviations. All-equal input degenerates to k=1.
    """
    n = len(values)
    if n < 2:
        raise ValueError("need at least 2 values to split")
    vals = sorted(float(v) for v in values)
    if vals[0] == vals[-1]:
        return 1
    # prefix sums give each candidate split's cost in O(1); scanning every
    # split is the k=2 row of the usual dynamic program over sorted data
    prefix = [0.0]
    prefix_sq = [0.0]
    for v in vals:
        prefix.append(prefix[-1] + v)
        prefix_sq.append(prefix_sq[-1] + v * v)

    def sse(i: int, j: int) -> float:
        # within-cluster sum of squares for vals[i:j]
        m = j - i
        s = prefix[j] - prefix[i]
        sq = prefix_sq[j] - prefix_sq[i]
        return max(0.0, sq - s * s / m)

    best_k, best_cost = 1, math.inf
    for k in range(1, n):
        cost = sse(0, k) + sse(k, n)
        if cost < best_cost:
            best_k, best_cost = k, cost
    return best_k


def _order_threshold(points: HistogramPoints, span: float, cluster_on: str) -> int:
    if len(points) == 1:
        return 2
    if len(points) == 2:
        return math.ceil((points[0][0] + points[1][0]) / 2)
    smoothed = loess_smooth(points, span)
    series = smoothed if cluster_on == "smoothed" else derivative(smoothed)
    vals = [v for _, v in series]
    k = split_two_clusters(vals)
    svals = sorted(vals)
    # keep the break on a strict value boundary so membership-by-value
    # reproduces the partition
    while k < len(svals) - 1 and svals[k] == svals[k - 1]:
        k += 1
    while k > 1 and svals[k] == svals[k - 1]:
        k -= 1
    boundary = svals[k - 1]
    first_is_low = vals[0] <= boundary
    member_xs = [x for x, v in series if (v <= boundary) == first_is_low]
    return max(1, max(member_xs))


def estimate(
    d: NGramDictionary, span: float = 0.75, cluster_on: str = "derivative"
) -> ThresholdPair:
    """Per-order thresholds from the occurrence histograms.

    ``cluster_on`` selects what the 1-D clustering runs on: the derivative
    series (default) or the smoothed Y values directly. Degenerate
    histograms (fewer than 3 points) fall back to the midpoint of the two
    occurrence values rounded up, or 2 when only one value exists.
    """
    if cluster_on not in ("derivative", "smoothed"):
        raise ValueError(f"cluster_on must be 'derivative' or 'smoothed', got {cluster_on!r}")
    t2 = _order_threshold(histogram(d, 2), span, cluster_on)
    t3 = _order_threshold(histogram(d, 3), span, cluster_on)
    return ThresholdPair(t2=t2, t3=t3)
