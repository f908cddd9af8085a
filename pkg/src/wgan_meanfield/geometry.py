"""Projections for axis-aligned boxes.

Boundary membership is tested with exact equality.  Every point handed to the
cone projections has been clamped by :func:`project_box` (or snapped within
``SNAP_TOL``), so active faces hold exactly ``lo`` or ``hi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SNAP_TOL


@dataclass(frozen=True)
class Box:
    """The box ``prod_l [lo_l, hi_l]``; defaults to the unit box ``[-1, 1]^d``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float, ndmin=1)
        hi = np.array(self.hi, dtype=float, ndmin=1)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-d arrays of equal length")
        if not np.all(lo < hi):
            raise ValueError("need lo < hi in every coordinate")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, d: int) -> Box:
        return cls(-np.ones(d), np.ones(d))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def vertices(self) -> np.ndarray:
        """All ``2^d`` corners, shape ``(2^d, d)``."""
        bits = (np.arange(2**self.dim)[:, None] >> np.arange(self.dim)) & 1
        return np.where(bits == 1, self.hi, self.lo)


def project_box(Q: Box, x) -> np.ndarray:
    """Euclidean projection onto ``Q``, i.e. a coordinate-wise clamp.

    Accepts a single point ``(d,)`` or a batch ``(..., d)``.
    """
    return np.clip(np.asarray(x, dtype=float), Q.lo, Q.hi)


def _snap(Q: Box, omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape[-1] != Q.dim:
        raise ValueError(f"point has dimension {omega.shape[-1]}, box has {Q.dim}")
    if np.any(omega < Q.lo - SNAP_TOL) or np.any(omega > Q.hi + SNAP_TOL) or not np.all(np.isfinite(omega)):
        raise ValueError("point lies outside the box; project it before evaluating cone projections")
    return np.clip(omega, Q.lo, Q.hi)


def project_tangent_cone(Q: Box, omega, V) -> np.ndarray:
    """Project ``V`` onto the tangent cone of ``Q`` at ``omega``.

    Interior coordinates pass through.  On an active face the outward part of
    ``V_l`` is dropped and the inward part kept; a zero component stays zero.
    Broadcasts over leading batch dimensions.
    """
    omega = _snap(Q, omega)
    V = np.asarray(V, dtype=float)
    outward = ((omega == Q.hi) & (V > 0)) | ((omega == Q.lo) & (V < 0))
    return np.where(outward, 0.0, V)


def normal_decompose(Q: Box, omega, V) -> tuple[np.ndarray, np.ndarray]:
    """Split ``V = w + n`` with ``w`` in the tangent cone and ``n`` in the normal cone.

    For a box the two parts have disjoint coordinate supports, so the sum is
    exact and ``<w, n> = 0`` holds identically.
    """
    w = project_tangent_cone(Q, omega, V)
    n = np.asarray(V, dtype=float) - w
    return w, n


def pinned_mask(Q: Box, x) -> np.ndarray:
    """Boolean mask of coordinates sitting exactly on a face."""
    x = np.asarray(x, dtype=float)
    return (x == Q.lo) | (x == Q.hi)
