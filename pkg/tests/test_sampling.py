import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pckhdmr.sampling import (SortedAxisSamples, admissible, build_candidate_grid, converged,
                              entropy_gain, max_entropy_index, max_entropy_select,
                              proportional_insert, relative_error)


def test_sorted_axis_samples_validation():
    with pytest.raises(ValueError):
        SortedAxisSamples([0, 0], [1, 2])
    with pytest.raises(ValueError):
        SortedAxisSamples([0, 1], [1])
    s = SortedAxisSamples.from_unsorted([2, 0, 1], [20, 0, 10])
    np.testing.assert_array_equal(s.values, [0, 1, 2])
    np.testing.assert_array_equal(s.responses, [0, 10, 20])
    s2 = s.insert(0.5, 5)
    np.testing.assert_array_equal(s2.values, [0, 0.5, 1, 2])
    with pytest.raises(ValueError):
        s2.insert(0.5, 1)


def test_proportional_insert_midpoint():
    assert proportional_insert(SortedAxisSamples([0, 1], [0, 10]), 0.5) == 0.5


def test_proportional_insert_largest_jump():
    x = proportional_insert(SortedAxisSamples([0, 1, 2], [0, 5, 100]), 0.3)
    assert x == pytest.approx(0.3 * 1 + 0.7 * 2)


def test_proportional_insert_tie_takes_first_interval():
    x = proportional_insert(SortedAxisSamples([0, 1, 2], [0, 5, 10]), 0.5)
    assert 0 < x < 1


def test_proportional_insert_needs_two_points_and_valid_c():
    with pytest.raises(ValueError):
        proportional_insert(SortedAxisSamples([0], [1]), 0.5)
    with pytest.raises(ValueError):
        proportional_insert(SortedAxisSamples([0, 1], [0, 1]), 1.0)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=12, unique=True),
       st.floats(0.01, 0.99))
@settings(max_examples=100, deadline=None)
def test_proportional_insert_lands_strictly_inside(vals, C):
    v = np.sort(np.array(vals))
    if np.any(np.diff(v) < 1e-6):
        return
    resp = np.sin(v)
    x = proportional_insert(SortedAxisSamples(v, resp), C)
    k = int(np.argmax(np.abs(np.diff(resp))))
    assert v[k] < x < v[k + 1]


def test_converged_examples():
    assert converged(10.0, 10.005, 1e-3)
    assert relative_error(10.0, 10.005) == pytest.approx(5e-4)
    for eps in (1e-12, 1e-3, 1.0):
        assert converged(3.7, 3.7, eps)
    # zero truth falls back on the absolute floor
    assert not converged(0.0, 1e-6, 1e-3)


def test_candidate_grid_examples():
    g = build_candidate_grid([0, 1], [0, 2])
    assert len(g) == 1
    np.testing.assert_allclose(g.candidates, [[0.5, 1.0]])
    g = build_candidate_grid([0, 1, 2], [0, 1])
    np.testing.assert_allclose(g.candidates, [[0.5, 0.5], [1.5, 0.5]])
    g = build_candidate_grid([0, 0.5, 1], [0, 0.5, 1])
    np.testing.assert_allclose(g.candidates,
                               [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])


def test_candidate_grid_unsorted_and_duplicate_values():
    g = build_candidate_grid([1, 0, 1], [2, 0])
    np.testing.assert_allclose(g.candidates, [[0.5, 1.0]])


def test_single_candidate():
    c = max_entropy_select([[0.0, 0.0]], [[0.3, 0.2]], [1.0, 1.0])
    np.testing.assert_array_equal(c, [0.3, 0.2])


def test_far_candidate_preferred():
    c = max_entropy_select([[0.0, 0.0]], [[0.1, 0.1], [5, 5]], [1.0, 1.0])
    np.testing.assert_array_equal(c, [5, 5])


def test_existing_point_skipped():
    ex = np.array([[0.0, 0.0], [1.0, 1.0]])
    k = max_entropy_index(ex, [[1.0, 1.0], [0.5, 0.5]], [1.0, 1.0])
    assert k == 1
    assert not admissible(ex, np.array([[1.0, 1.0]]))[0]
    with pytest.raises(ValueError):
        max_entropy_index(ex, [[0.0, 0.0]], [1.0, 1.0])


def test_sigma2_does_not_change_choice():
    rng = np.random.default_rng(0)
    ex, cand = rng.random((6, 2)), rng.random((30, 2))
    assert max_entropy_index(ex, cand, [3, 3], 1.0) == max_entropy_index(ex, cand, [3, 3], 1e6)
    with pytest.raises(ValueError):
        max_entropy_index(ex, cand, [3, 3], 0.0)


def _oracle(existing, candidates, theta, nugget=1e-10):
    """argmax of log det of the full augmented correlation matrix."""
    best, arg = -np.inf, None
    for k, c in enumerate(candidates):
        Z = np.vstack([existing, c])
        D = ((Z[:, None, :] - Z[None, :, :]) ** 2 * theta).sum(axis=2)
        R = np.exp(-D) + nugget * np.eye(len(Z))
        sign, logdet = np.linalg.slogdet(R)
        val = logdet if sign > 0 else -np.inf
        if val > best:
            best, arg = val, k
    return arg


def test_max_entropy_agrees_with_determinant_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 21))
        d = int(rng.integers(1, 3))
        ex = rng.random((n, d))
        cand = rng.random((int(rng.integers(2, 40)), d))
        theta = rng.uniform(1.0, 30.0, d)
        assert max_entropy_index(ex, cand, theta) == _oracle(ex, cand, theta)


def test_entropy_gain_equals_determinant_ratio():
    rng = np.random.default_rng(4)
    ex, cand = rng.random((5, 2)), rng.random((7, 2))
    theta = np.array([4.0, 9.0])
    g = entropy_gain(ex, cand, theta, nugget=0.0 + 1e-12)

    def corr(Z):
        return np.exp(-(((Z[:, None] - Z[None]) ** 2) * theta).sum(axis=2)) + 1e-12 * np.eye(len(Z))

    base = np.linalg.det(corr(ex))
    for k, c in enumerate(cand):
        assert g[k] == pytest.approx(np.linalg.det(corr(np.vstack([ex, c]))) / base, rel=1e-6)
