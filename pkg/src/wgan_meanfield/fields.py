"""Energy E[mu, nu] and the particle velocity fields it induces.

``V_theta`` is minus the theta-gradient of the first variation of E in mu
(descent for the generator); ``V_omega`` is the omega-gradient of the first
variation in nu (ascent for the critic).  For an ensemble with uniform
weights, ``V_theta(theta_i) / N == -dE/dtheta_i`` and
``V_omega(omega_i) / M == +dE/domega_i`` under the same quadrature.

The generator field carries ``sigma'(b . G + c)`` from differentiating the
critic, which is what makes the gradient identity above hold.

Particle arguments may be a single particle (``(K, L+2)`` / ``(K+2,)``), a
particle object, or a stacked batch; results keep the input's shape.
"""

from __future__ import annotations

import numpy as np

from .model import SIGMOID, Activation, EnsemblePair, generator_eval
from .quadrature import Quadrature


def critic_gradient(ensemble: EnsemblePair, X: np.ndarray, activation: Activation = SIGMOID) -> np.ndarray:
    """Spatial gradient of D_nu at points ``X`` of shape ``(n, K)``."""
    om = ensemble.omega
    u = X @ om[:, 1:-1].T + om[None, :, -1]  # (n, M)
    return (activation.first_derivative(u) * om[None, :, 0]) @ om[:, 1:-1] / ensemble.M


def _critic_mean(ensemble, X, activation):
    om = ensemble.omega
    u = X @ om[:, 1:-1].T + om[None, :, -1]
    return np.mean(om[None, :, 0] * activation(u), axis=1)


def energy(
    ensemble: EnsemblePair,
    target,
    quad: Quadrature | None = None,
    activation: Activation = SIGMOID,
    step: int = 0,
) -> float:
    """E[mu, nu] = E_z D_nu(G_mu(z)) - E_x D_nu(x)."""
    quad = quad or Quadrature()
    Z, wz = quad.latent_nodes(ensemble.L, step)
    X, wx = quad.target_nodes(target, step)
    G = generator_eval(ensemble, Z, activation)
    return float(wz @ _critic_mean(ensemble, G, activation) - wx @ _critic_mean(ensemble, X, activation))


# ---------------------------------------------------------------------------
# generator field


def _as_theta_batch(theta, ensemble):
    th = np.asarray(theta, dtype=float)
    single = th.ndim == 2
    th = th[None] if single else th
    if th.shape[1:] != ensemble.theta.shape[1:]:
        raise ValueError(f"generator particle shape {th.shape[1:]} does not match ensemble {ensemble.theta.shape[1:]}")
    return th, single


def _theta_field(ensemble, th, Z, wz, activation):
    G = generator_eval(ensemble, Z, activation)  # (n, K)
    W = critic_gradient(ensemble, G, activation) * wz[:, None]  # (n, K), weights folded in
    s = np.einsum("nl,qkl->nqk", Z, th[:, :, 1:-1]) + th[None, :, :, -1]
    sig = activation(s)
    dsig = activation.first_derivative(s)
    alpha = th[:, :, 0]
    out = np.empty_like(th)
    out[:, :, 0] = -np.einsum("nk,nqk->qk", W, sig)
    Wd = W[:, None, :] * dsig  # (n, q, k)
    out[:, :, 1:-1] = -alpha[:, :, None] * np.einsum("nqk,nl->qkl", Wd, Z)
    out[:, :, -1] = -alpha * Wd.sum(axis=0)
    return out


def v_theta(ensemble: EnsemblePair, theta, z, activation: Activation = SIGMOID) -> np.ndarray:
    """Single-sample generator velocity at latent point ``z``."""
    th, single = _as_theta_batch(theta, ensemble)
    Z = np.asarray(z, dtype=float).reshape(1, ensemble.L)
    out = _theta_field(ensemble, th, Z, np.ones(1), activation)
    return out[0] if single else out


def V_theta(
    ensemble: EnsemblePair,
    theta,
    target=None,
    quad: Quadrature | None = None,
    activation: Activation = SIGMOID,
    step: int = 0,
) -> np.ndarray:
    """Quadrature average of :func:`v_theta` over z.  ``target`` is unused but
    accepted so both fields share a signature."""
    quad = quad or Quadrature()
    th, single = _as_theta_batch(theta, ensemble)
    Z, wz = quad.latent_nodes(ensemble.L, step)
    out = _theta_field(ensemble, th, Z, wz, activation)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# critic field


def _as_omega_batch(omega, ensemble):
    om = np.asarray(omega, dtype=float)
    single = om.ndim == 1
    om = om[None] if single else om
    if om.shape[1] != ensemble.K + 2:
        raise ValueError(f"discriminator particle must have {ensemble.K + 2} entries, got {om.shape[1]}")
    return om, single


def _grad_omega_sigma(om, X, w, activation):
    """sum_n w_n * grad_omega [a sigma(b . x_n + c)], shape (q, K + 2)."""
    u = X @ om[:, 1:-1].T + om[None, :, -1]  # (n, q)
    a = om[:, 0]
    dsig = activation.first_derivative(u) * w[:, None]
    out = np.empty_like(om)
    out[:, 0] = w @ activation(u)
    out[:, 1:-1] = a[:, None] * (dsig.T @ X)
    out[:, -1] = a * dsig.sum(axis=0)
    return out


def v_omega(ensemble: EnsemblePair, omega, z, x, activation: Activation = SIGMOID) -> np.ndarray:
    """Single-sample critic velocity for latent ``z`` and data point ``x``."""
    om, single = _as_omega_batch(omega, ensemble)
    G = generator_eval(ensemble, np.asarray(z, dtype=float).reshape(1, ensemble.L), activation)
    X = np.asarray(x, dtype=float).reshape(1, ensemble.K)
    one = np.ones(1)
    out = _grad_omega_sigma(om, G, one, activation) - _grad_omega_sigma(om, X, one, activation)
    return out[0] if single else out


def V_omega(
    ensemble: EnsemblePair,
    omega,
    target,
    quad: Quadrature | None = None,
    activation: Activation = SIGMOID,
    step: int = 0,
) -> np.ndarray:
    """Quadrature average of :func:`v_omega`.  Depends on mu only, not on nu."""
    quad = quad or Quadrature()
    om, single = _as_omega_batch(omega, ensemble)
    Z, wz = quad.latent_nodes(ensemble.L, step)
    X, wx = quad.target_nodes(target, step)
    G = generator_eval(ensemble, Z, activation)
    out = _grad_omega_sigma(om, G, wz, activation) - _grad_omega_sigma(om, X, wx, activation)
    return out[0] if single else out


def ensemble_velocities(
    ensemble: EnsemblePair,
    target,
    quad: Quadrature | None = None,
    activation: Activation = SIGMOID,
    step: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """(V_theta, V_omega) evaluated at every particle of ``ensemble``."""
    return (
        V_theta(ensemble, ensemble.theta, target, quad, activation, step),
        V_omega(ensemble, ensemble.omega, target, quad, activation, step),
    )
