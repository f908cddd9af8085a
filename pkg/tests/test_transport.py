import itertools

import numpy as np
import pytest

from wgan_meanfield.model import InitDistribution
from wgan_meanfield.rng import substream
from wgan_meanfield.transport import (
    PointCloud,
    ensemble_d2_squared,
    joint_param_distance,
    wasserstein_1d,
    wasserstein_assignment,
)


def brute(p, xs, ys):
    xs, ys = np.atleast_2d(xs), np.atleast_2d(ys)
    n = len(xs)
    c = np.linalg.norm(xs[:, None] - ys[None], axis=-1) ** p
    return min(sum(c[i, s[i]] for i in range(n)) for s in itertools.permutations(range(n))) ** (1 / p) / n ** (1 / p)


@pytest.mark.parametrize("p", [1, 2, 4])
def test_1d_examples(p):
    x = np.array([0.3, -1.2, 5.0])
    assert wasserstein_1d(p, x, x) == 0
    assert wasserstein_1d(p, [0.0], [1.0]) == 1
    assert wasserstein_assignment(p, [0.0], [1.0]) == 1


def test_1d_two_point_example():
    assert wasserstein_1d(2, [0.0, 2.0], [1.0, 3.0]) == pytest.approx(1.0, abs=1e-15)
    assert brute(2, np.array([[0.0], [2.0]]), np.array([[1.0], [3.0]])) == pytest.approx(1.0)


def test_size_mismatch_and_cap():
    with pytest.raises(ValueError):
        wasserstein_1d(2, [0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        wasserstein_assignment(2, np.zeros((3, 2)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        wasserstein_assignment(2, np.zeros((600, 1)), np.zeros((600, 1)))
    with pytest.raises(ValueError):
        wasserstein_assignment(0.5, [0.0], [1.0])
    with pytest.raises(ValueError):
        PointCloud(np.array([[np.inf]]))


def test_assignment_matches_brute_force():
    gen = substream(0, 70)
    for k in range(300):
        n = 1 + k % 6
        p = (1, 2, 4)[k % 3]
        xs, ys = gen.normal(size=(n, 2)), gen.normal(size=(n, 2))
        assert wasserstein_assignment(p, xs, ys) == pytest.approx(brute(p, xs, ys), rel=1e-13, abs=1e-15)


def test_metric_axioms_and_monotonicity():
    gen = substream(1, 70)
    for _ in range(200):
        x, y, z = (gen.normal(size=(8, 3)) for _ in range(3))
        dxy, dyx = wasserstein_assignment(2, x, y), wasserstein_assignment(2, y, x)
        assert dxy == pytest.approx(dyx, rel=1e-14)
        assert dxy <= wasserstein_assignment(2, x, z) + wasserstein_assignment(2, z, y) + 1e-9
        assert dxy <= wasserstein_assignment(4, x, y) + 1e-12
        assert wasserstein_assignment(2, 3.5 * x, 3.5 * y) == pytest.approx(3.5 * dxy, rel=1e-12)


def test_joint_distance_examples():
    a = InitDistribution().sample_ensemble(0, 5, 5, 2, 1)
    assert joint_param_distance(a, a) == 0
    b = InitDistribution().sample_ensemble(1, 1, 1, 1, 1)
    c = InitDistribution().sample_ensemble(2, 1, 1, 1, 1)
    d = np.sqrt(np.sum((b.theta - c.theta) ** 2) + np.sum((b.omega - c.omega) ** 2))
    assert joint_param_distance(b, c) == pytest.approx(d, rel=1e-15)
    with pytest.raises(ValueError):
        joint_param_distance(a, b)


def test_joint_distance_dominates_optimal():
    for s in range(1000):
        N = 1 + s % 6
        a = InitDistribution().sample_ensemble(2 * s, N, N, 1, 1)
        b = InitDistribution().sample_ensemble(2 * s + 1, N, N, 1, 1)
        flat_a = np.hstack([a.theta.reshape(N, -1), a.omega])
        flat_b = np.hstack([b.theta.reshape(N, -1), b.omega])
        assert joint_param_distance(a, b) >= wasserstein_assignment(2, flat_a, flat_b) - 1e-12
        # separate marginals can only be closer than the joint cloud
        assert ensemble_d2_squared(a, b) <= joint_param_distance(a, b) ** 2 + 1e-12
