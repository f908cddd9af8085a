"""Single-hidden-layer generator and critic networks in mean-field form.

Layouts used throughout the package:

* a generator particle is an array of shape ``(K, L + 2)``; row ``j`` holds
  ``(alpha_j, beta_j[0..L-1], gamma_j)`` and feeds output coordinate ``j``;
* a discriminator particle is an array of shape ``(K + 2,)`` holding
  ``(a, b[0..K-1], c)``;
* an ensemble stacks ``N`` generator particles as ``(N, K, L + 2)`` and ``M``
  discriminator particles as ``(M, K + 2)``, each with uniform weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

from .rng import INIT_OMEGA, INIT_THETA, substream

SNAP_TOL = 1e-12


@dataclass(frozen=True)
class Activation:
    """A bounded C^2 activation with its first two derivatives."""

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    first_derivative: Callable[[np.ndarray], np.ndarray]
    second_derivative: Callable[[np.ndarray], np.ndarray]
    c2_bound: float

    def __call__(self, u):
        return self.evaluate(u)


def _sigmoid_d1(u):
    s = special.expit(u)
    return s * (1.0 - s)


def _sigmoid_d2(u):
    s = special.expit(u)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


SIGMOID = Activation("sigmoid", special.expit, _sigmoid_d1, _sigmoid_d2, c2_bound=1.0)


# ---------------------------------------------------------------------------
# particles and ensembles


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def snap_to_box(omega: np.ndarray, tol: float = SNAP_TOL) -> np.ndarray:
    """Clamp entries lying within ``tol`` outside ``[-1, 1]``; reject the rest."""
    omega = np.asarray(omega, dtype=float)
    excess = np.abs(omega) - 1.0
    if np.any(excess > tol) or not np.all(np.isfinite(omega)):
        raise ValueError(
            f"discriminator parameters leave Q=[-1,1]^d (max |omega| = {np.max(np.abs(omega)):.17g})"
        )
    return np.clip(omega, -1.0, 1.0)


@dataclass(frozen=True)
class GeneratorParticle:
    theta: np.ndarray  # (K, L + 2)

    def __post_init__(self):
        theta = _frozen(self.theta)
        if theta.ndim != 2 or theta.shape[0] < 1 or theta.shape[1] < 3:
            raise ValueError(f"generator particle must have shape (K, L+2) with K, L >= 1, got {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("generator particle has non-finite entries")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_components(cls, alpha, beta, gamma) -> GeneratorParticle:
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
        beta = np.asarray(beta, dtype=float).reshape(alpha.shape[0], -1)
        return cls(np.column_stack([alpha, beta, gamma]))

    @property
    def K(self) -> int:
        return self.theta.shape[0]

    @property
    def L(self) -> int:
        return self.theta.shape[1] - 2

    @property
    def alpha(self) -> np.ndarray:
        return self.theta[:, 0]

    @property
    def beta(self) -> np.ndarray:
        return self.theta[:, 1:-1]

    @property
    def gamma(self) -> np.ndarray:
        return self.theta[:, -1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.theta, dtype=dtype)


@dataclass(frozen=True)
class DiscriminatorParticle:
    omega: np.ndarray  # (K + 2,), inside Q

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        if omega.ndim != 1 or omega.shape[0] < 3:
            raise ValueError(f"discriminator particle must have shape (K+2,) with K >= 1, got {omega.shape}")
        object.__setattr__(self, "omega", _frozen(snap_to_box(omega)))

    @classmethod
    def from_components(cls, a, b, c) -> DiscriminatorParticle:
        return cls(np.concatenate([[a], np.atleast_1d(b), [c]]))

    @property
    def K(self) -> int:
        return self.omega.shape[0] - 2

    @property
    def a(self) -> float:
        return float(self.omega[0])

    @property
    def b(self) -> np.ndarray:
        return self.omega[1:-1]

    @property
    def c(self) -> float:
        return float(self.omega[-1])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.omega, dtype=dtype)


@dataclass(frozen=True)
class EnsemblePair:
    """Empirical measures (mu_N, nu_M) as stacked, read-only particle arrays."""

    theta: np.ndarray  # (N, K, L + 2)
    omega: np.ndarray  # (M, K + 2)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        if theta.ndim != 3 or theta.shape[0] < 1 or theta.shape[1] < 1 or theta.shape[2] < 3:
            raise ValueError(f"theta must have shape (N, K, L+2) with N, K, L >= 1, got {theta.shape}")
        if omega.ndim != 2 or omega.shape[0] < 1 or omega.shape[1] != theta.shape[1] + 2:
            raise ValueError(f"omega must have shape (M, K+2) with K={theta.shape[1]}, got {omega.shape}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta has non-finite entries")
        object.__setattr__(self, "theta", _frozen(theta))
        object.__setattr__(self, "omega", _frozen(snap_to_box(omega)))

    @classmethod
    def from_particles(
        cls, generators: Sequence[GeneratorParticle], discriminators: Sequence[DiscriminatorParticle]
    ) -> EnsemblePair:
        return cls(
            np.stack([np.asarray(g, dtype=float) for g in generators]),
            np.stack([np.asarray(d, dtype=float) for d in discriminators]),
        )

    @property
    def N(self) -> int:
        return self.theta.shape[0]

    @property
    def M(self) -> int:
        return self.omega.shape[0]

    @property
    def K(self) -> int:
        return self.theta.shape[1]

    @property
    def L(self) -> int:
        return self.theta.shape[2] - 2

    @property
    def generators(self) -> list[GeneratorParticle]:
        return [GeneratorParticle(t) for t in self.theta]

    @property
    def discriminators(self) -> list[DiscriminatorParticle]:
        return [DiscriminatorParticle(w) for w in self.omega]

    def replace(self, theta=None, omega=None) -> EnsemblePair:
        return EnsemblePair(self.theta if theta is None else theta, self.omega if omega is None else omega)


# ---------------------------------------------------------------------------
# network evaluation


def generator_eval(ensemble: EnsemblePair, z, activation: Activation = SIGMOID) -> np.ndarray:
    """Evaluate G_mu at latent points.

    ``z`` has shape ``(L,)`` or ``(n, L)``; the result has shape ``(K,)`` or
    ``(n, K)``.  Coordinate ``j`` is the particle average of
    ``alpha_j * sigma(beta_j . z + gamma_j)``.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim <= 1
    Z = z.reshape(1, -1) if single else z
    if Z.shape[1] != ensemble.L:
        raise ValueError(f"latent points must have L={ensemble.L} coordinates, got {Z.shape[1]}")
    th = ensemble.theta
    pre = np.einsum("nl,ikl->nik", Z, th[:, :, 1:-1]) + th[None, :, :, -1]
    out = np.mean(th[None, :, :, 0] * activation(pre), axis=1)
    return out[0] if single else out


def discriminator_eval(ensemble: EnsemblePair, x, activation: Activation = SIGMOID):
    """Evaluate D_nu at data points; ``x`` has shape ``(K,)`` or ``(n, K)``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    X = x.reshape(1, -1) if single else x
    if X.shape[1] != ensemble.K:
        raise ValueError(f"data points must have K={ensemble.K} coordinates, got {X.shape[1]}")
    om = ensemble.omega
    pre = X @ om[:, 1:-1].T + om[None, :, -1]
    out = np.mean(om[None, :, 0] * activation(pre), axis=1)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# latent and target laws


def sample_latent(rng: np.random.Generator, L: int, size: int | None = None) -> np.ndarray:
    """Standard normal latent draws: shape ``(L,)`` or ``(size, L)``."""
    shape = (L,) if size is None else (size, L)
    return rng.standard_normal(shape)


@dataclass(frozen=True)
class AtomicTarget:
    """Finite mixture of point masses in R^K."""

    atoms: np.ndarray  # (n_atoms, K)
    weights: np.ndarray  # (n_atoms,)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        weights = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 2 or weights.shape != (atoms.shape[0],) or atoms.shape[0] < 1:
            raise ValueError("atoms must be (n, K) with one weight per atom")
        _check_weights(weights)
        object.__setattr__(self, "atoms", _frozen(atoms))
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def K(self) -> int:
        return self.atoms.shape[1]

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        n = 1 if size is None else size
        idx = rng.choice(self.atoms.shape[0], size=n, p=self.weights)
        out = self.atoms[idx]
        return out[0] if size is None else out


@dataclass(frozen=True)
class GaussianMixtureTarget:
    means: np.ndarray  # (n_comp, K)
    covariances: np.ndarray  # (n_comp, K, K)
    weights: np.ndarray

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covariances, dtype=float).reshape(means.shape[0], means.shape[1], means.shape[1])
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (means.shape[0],):
            raise ValueError("one weight per mixture component required")
        _check_weights(weights)
        chol = np.linalg.cholesky(covs)  # raises for non-PD covariances
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "covariances", _frozen(covs))
        object.__setattr__(self, "weights", _frozen(weights))
        object.__setattr__(self, "_chol", _frozen(chol))

    @property
    def K(self) -> int:
        return self.means.shape[1]

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        n = 1 if size is None else size
        comp = rng.choice(self.means.shape[0], size=n, p=self.weights)
        eps = rng.standard_normal((n, self.K))
        out = self.means[comp] + np.einsum("nij,nj->ni", self._chol[comp], eps)
        return out[0] if size is None else out


TargetDistribution = AtomicTarget | GaussianMixtureTarget


def _check_weights(w):
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must be nonnegative and sum to 1 (sum = {w.sum():.17g})")


def sample_target(dist: TargetDistribution, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    return dist.sample(rng, size)


def bimodal_target() -> AtomicTarget:
    """Half mass at -1 and half at +1 on the real line."""
    return AtomicTarget(np.array([[-1.0], [1.0]]), np.array([0.5, 0.5]))


# ---------------------------------------------------------------------------
# initialization


@dataclass(frozen=True)
class CoordinateLaw:
    """Uniform or truncated-Gaussian law on the interval ``[low, high]``."""

    kind: str = "uniform"
    low: float = -1.0
    high: float = 1.0
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "truncated_normal"):
            raise ValueError(f"unknown law {self.kind!r}")
        if not (np.isfinite(self.low) and np.isfinite(self.high) and self.low < self.high):
            raise ValueError(f"need finite low < high, got [{self.low}, {self.high}]")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(self.low, self.high, size=shape)
        a = (self.low - self.loc) / self.scale
        b = (self.high - self.loc) / self.scale
        return stats.truncnorm.rvs(a, b, loc=self.loc, scale=self.scale, size=shape, random_state=rng)


@dataclass(frozen=True)
class InitDistribution:
    """Product law mu_in x nu_in, one law per parameter block.

    Every law has bounded support, so the alpha-marginal has all the
    exponential moments the mean-field theory asks for.  The discriminator
    laws must live inside [-1, 1].
    """

    alpha: CoordinateLaw = field(default_factory=CoordinateLaw)
    beta: CoordinateLaw = field(default_factory=CoordinateLaw)
    gamma: CoordinateLaw = field(default_factory=CoordinateLaw)
    a: CoordinateLaw = field(default_factory=CoordinateLaw)
    b: CoordinateLaw = field(default_factory=CoordinateLaw)
    c: CoordinateLaw = field(default_factory=CoordinateLaw)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            law = getattr(self, name)
            if law.low < -1.0 or law.high > 1.0:
                raise ValueError(f"init law for {name!r} must lie inside [-1, 1]")

    def sample_theta(self, rng: np.random.Generator, N: int, K: int, L: int) -> np.ndarray:
        theta = np.empty((N, K, L + 2))
        theta[:, :, 0] = self.alpha.sample(rng, (N, K))
        theta[:, :, 1:-1] = self.beta.sample(rng, (N, K, L))
        theta[:, :, -1] = self.gamma.sample(rng, (N, K))
        return theta

    def sample_omega(self, rng: np.random.Generator, M: int, K: int) -> np.ndarray:
        omega = np.empty((M, K + 2))
        omega[:, 0] = self.a.sample(rng, M)
        omega[:, 1:-1] = self.b.sample(rng, (M, K))
        omega[:, -1] = self.c.sample(rng, M)
        return omega

    def sample_ensemble(self, seed: int, N: int, M: int, K: int, L: int) -> EnsemblePair:
        theta = self.sample_theta(substream(seed, INIT_THETA), N, K, L)
        omega = self.sample_omega(substream(seed, INIT_OMEGA), M, K)
        return EnsemblePair(theta, omega)
