"""Rules for the expectations over z ~ N(0, I_L) and x ~ P_*.

Each rule turns into a set of nodes with weights summing to one.  Monte Carlo
nodes come from keyed substreams, so the same rule, seed and step always give
the same nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite_e

from . import rng as _rng
from .model import AtomicTarget


@dataclass(frozen=True)
class GaussHermite:
    """Probabilists' Gauss-Hermite rule; exact for polynomials of degree < 2 n_nodes."""

    n_nodes: int = 64

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")


@dataclass(frozen=True)
class MonteCarlo:
    seed: int = 0
    n_samples: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class ExactAtomic:
    """Enumerate the atoms of an atomic target with their weights."""


@lru_cache(maxsize=32)
def gauss_hermite_nodes(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for E[f(Z)], Z ~ N(0, 1)."""
    x, w = hermite_e.hermegauss(n_nodes)
    w = w / np.sqrt(2.0 * np.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class Quadrature:
    z_rule: GaussHermite | MonteCarlo = field(default_factory=GaussHermite)
    x_rule: ExactAtomic | MonteCarlo = field(default_factory=ExactAtomic)

    def latent_nodes(self, L: int, step: int = 0) -> tuple[np.ndarray, np.ndarray]:
        rule = self.z_rule
        if isinstance(rule, GaussHermite):
            if L != 1:
                raise ValueError("Gauss-Hermite latent rule is only available for L = 1")
            x, w = gauss_hermite_nodes(rule.n_nodes)
            return x[:, None], w
        gen = _rng.substream(rule.seed, _rng.QUAD_LATENT, step)
        Z = gen.standard_normal((rule.n_samples, L))
        return Z, np.full(rule.n_samples, 1.0 / rule.n_samples)

    def target_nodes(self, target, step: int = 0) -> tuple[np.ndarray, np.ndarray]:
        rule = self.x_rule
        if isinstance(rule, ExactAtomic):
            if not isinstance(target, AtomicTarget):
                raise ValueError("exact atomic rule needs an atomic target")
            return np.asarray(target.atoms), np.asarray(target.weights)
        gen = _rng.substream(rule.seed, _rng.QUAD_TARGET, step)
        X = target.sample(gen, rule.n_samples)
        return X, np.full(rule.n_samples, 1.0 / rule.n_samples)
