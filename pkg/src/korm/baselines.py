"""Distance-based comparison detectors.

``dk_outliers`` ranks points by the distance to their K-th nearest
neighbour and reports the top of the ranking.  ``db_nested_loop`` is the
DB(p, D) test: a point is an outlier when at least a fraction ``p`` of the
other points lie farther than ``D``.  Both are exact and deliberately
index-free.
"""

from __future__ import annotations

import numpy as np

from korm.core import Metric, stack_points
from korm.errors import RangeError


def dk_ranking(points, K: int, metric: Metric = Metric.EUCLIDEAN) -> list[tuple[int, float]]:
    """Every point with its K-th-NN distance, largest first, ties by index."""
    X = stack_points(points)
    n = len(X)
    if not 1 <= K < n:
        raise RangeError("K must satisfy 1 <= K < number of points", K=K, points=n)
    squared = Metric(metric) is Metric.SQUARED_EUCLIDEAN
    dk = np.empty(n)
    for i in range(n):
        diff = X - X[i]
        d = np.einsum("ij,ij->i", diff, diff)
        d[i] = np.inf
        kth = np.partition(d, K - 1)[K - 1]
        dk[i] = kth if squared else np.sqrt(kth)
    order = np.lexsort((np.arange(n), -dk))
    return [(int(i), float(dk[i])) for i in order]


def dk_outliers(points, K: int, n_top: int, metric: Metric = Metric.EUCLIDEAN) -> list[tuple[int, float]]:
    n = len(points)
    if not 1 <= K < n:
        raise RangeError("K must satisfy 1 <= K < number of points", K=K, points=n)
    if not 1 <= n_top <= n:
        raise RangeError("n_top must satisfy 1 <= n_top <= number of points", n_top=n_top, points=n)
    return dk_ranking(points, K, metric)[:n_top]


def db_nested_loop(points, D: float, p: float, metric: Metric = Metric.EUCLIDEAN) -> set[int]:
    if not 0 < p < 1:
        raise RangeError("fraction p must lie in (0, 1)", p=p)
    if not D > 0:
        raise RangeError("radius D must be positive", D=D)
    rows = stack_points(points).tolist()
    n = len(rows)
    # compare in squared space; only the threshold changes with the metric
    radius = D if Metric(metric) is Metric.SQUARED_EUCLIDEAN else D * D
    # outlier iff fewer than (1 - p)(n - 1) other points lie within D
    limit = (1.0 - p) * (n - 1)
    outliers = set()
    for i, a in enumerate(rows):
        near = 0
        for j, b in enumerate(rows):
            if i == j:
                continue
            acc = 0.0
            for x, y in zip(a, b):
                acc += (x - y) * (x - y)
            if acc <= radius:
                near += 1
                if near >= limit:
                    break
        if near < limit:
            outliers.add(i)
    return outliers
