import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from korm.baselines import db_nested_loop, dk_outliers, dk_ranking
from korm.core import Metric
from korm.errors import RangeError

from conftest import planted_stream


def naive_dk(points, K):
    """Sort every distance row; K-th smallest non-self entry."""
    n = len(points)
    scores = []
    for i in range(n):
        row = sorted(float(np.sqrt(((points[i] - points[j]) ** 2).sum())) for j in range(n) if j != i)
        scores.append(row[K - 1])
    return sorted(range(n), key=lambda i: (-scores[i], i)), scores


def naive_db(points, D, p):
    n = len(points)
    out = set()
    for i in range(n):
        far = sum(np.sqrt(((points[i] - points[j]) ** 2).sum()) > D for j in range(n) if j != i)
        near = (n - 1) - far
        if near < (1 - p) * (n - 1):
            out.add(i)
    return out


def test_dk_line_example():
    pts = np.array([[0.0], [1.0], [2.0], [3.0], [10.0]])
    top = dk_outliers(pts, 2, 2)
    assert top[0] == (4, 8.0)
    # points 0 and 3 tie at 2.0; the lower index ranks first
    assert top[1] == (0, 2.0)
    assert [s for _, s in dk_ranking(pts, 2)] == [8.0, 2.0, 2.0, 1.0, 1.0]


def test_dk_squared_metric():
    pts = np.array([[0.0], [1.0], [2.0], [3.0], [10.0]])
    assert dk_outliers(pts, 2, 1, Metric.SQUARED_EUCLIDEAN) == [(4, 64.0)]


def test_dk_errors():
    pts = np.zeros((5, 2))
    with pytest.raises(RangeError):
        dk_outliers(pts, 5, 1)
    with pytest.raises(RangeError):
        dk_outliers(pts, 2, 6)


def test_db_examples():
    pts = np.array([[0.0], [0.1], [0.2], [0.3], [5.0]])
    assert db_nested_loop(pts, 0.5, 0.7) == {4}
    assert db_nested_loop(pts, 10.0, 0.7) == set()


def test_db_errors():
    with pytest.raises(RangeError):
        db_nested_loop(np.zeros((3, 1)), 1.0, 1.0)
    with pytest.raises(RangeError):
        db_nested_loop(np.zeros((3, 1)), 0.0, 0.5)


def test_planted_point_ranks_first_in_dk():
    X, pos, _ = planted_stream(0)
    assert dk_outliers(X, 3, 1)[0][0] == pos


def test_matches_naive_oracles_200_instances():
    for trial in range(200):
        rng = np.random.default_rng(trial)
        n, d = int(rng.integers(3, 30)), int(rng.integers(1, 4))
        pts = rng.integers(0, 6, size=(n, d)).astype(float)  # integer grid: many ties
        K = int(rng.integers(1, n))
        order, scores = naive_dk(pts, K)
        got = dk_ranking(pts, K)
        assert [i for i, _ in got] == order
        assert np.allclose([s for _, s in got], [scores[i] for i in order], rtol=1e-12)
        D, p = float(rng.uniform(0.5, 4)), float(rng.uniform(0.5, 0.99))
        assert db_nested_loop(pts, D, p) == naive_db(pts, D, p)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_db_monotone_in_radius(seed):
    pts = np.random.default_rng(seed).normal(size=(40, 2))
    small, big = db_nested_loop(pts, 0.3, 0.9), db_nested_loop(pts, 0.6, 0.9)
    assert big <= small


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_dk_score_monotone_in_k(seed):
    pts = np.random.default_rng(seed).normal(size=(30, 3))
    s2 = dict(dk_ranking(pts, 2))
    s4 = dict(dk_ranking(pts, 4))
    assert all(s4[i] >= s2[i] for i in s2)
