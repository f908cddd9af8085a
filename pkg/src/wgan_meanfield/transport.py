"""Exact p-Wasserstein distances between equal-size uniform point clouds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .model import EnsemblePair

ASSIGNMENT_CAP = 512


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (n, d), uniform weights 1/n

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("a point cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud has non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _cloud(x) -> PointCloud:
    return x if isinstance(x, PointCloud) else PointCloud(x)


def _check_p(p):
    if not p >= 1:
        raise ValueError("p must be >= 1")


def wasserstein_1d(p: float, xs, ys) -> float:
    """d_p on the line via the monotone (sorted) coupling."""
    _check_p(p)
    xs, ys = _cloud(xs), _cloud(ys)
    if xs.d != 1 or ys.d != 1:
        raise ValueError("wasserstein_1d needs one-dimensional clouds")
    if xs.n != ys.n:
        raise ValueError(f"size mismatch: {xs.n} vs {ys.n}")
    diff = np.abs(np.sort(xs.points[:, 0]) - np.sort(ys.points[:, 0]))
    return float(np.mean(diff**p) ** (1.0 / p))


def wasserstein_assignment(p: float, xs, ys, cap: int = ASSIGNMENT_CAP) -> float:
    """d_p between uniform clouds, solved exactly as a linear assignment problem."""
    _check_p(p)
    xs, ys = _cloud(xs), _cloud(ys)
    if xs.n != ys.n or xs.d != ys.d:
        raise ValueError(f"shape mismatch: {xs.points.shape} vs {ys.points.shape}")
    if xs.n > cap:
        raise ValueError(f"cloud size {xs.n} exceeds assignment cap {cap}")
    cost = cdist(xs.points, ys.points) ** p
    rows, cols = linear_sum_assignment(cost)
    return float(np.mean(cost[rows, cols]) ** (1.0 / p))


def _flat(e: EnsemblePair):
    return e.theta.reshape(e.N, -1), e.omega


def joint_param_distance(a: EnsemblePair, b: EnsemblePair, p: float = 2) -> float:
    """Index-coupled d_p on the product of generator and critic parameter spaces.

    Pairs particle ``i`` of ``a`` with particle ``i`` of ``b``; it is an upper
    bound for the optimal d_p and, for ``p = 2``, its square is the coupling
    cost ``e``.
    """
    _check_p(p)
    if a.theta.shape != b.theta.shape or a.omega.shape != b.omega.shape:
        raise ValueError("ensembles must have identical shapes")
    if a.N != a.M:
        raise ValueError("joint distance pairs generator i with critic i; needs N == M")
    ta, oa = _flat(a)
    tb, ob = _flat(b)
    sq = np.sum((ta - tb) ** 2, axis=1) + np.sum((oa - ob) ** 2, axis=1)
    return float(np.mean(sq ** (p / 2.0)) ** (1.0 / p))


def ensemble_d2_squared(a: EnsemblePair, b: EnsemblePair, cap: int = ASSIGNMENT_CAP) -> float:
    """d_2^2((mu_a, nu_a), (mu_b, nu_b)) := d_2^2(mu_a, mu_b) + d_2^2(nu_a, nu_b)."""
    ta, oa = _flat(a)
    tb, ob = _flat(b)
    return wasserstein_assignment(2, ta, tb, cap) ** 2 + wasserstein_assignment(2, oa, ob, cap) ** 2
