"""Bimodal toy game: threshold generator g against a ReLU critic slope omega.

The generator pushes the logistic prior to ``Phi(g) delta_{-1} + (1 - Phi(g))
delta_{+1}`` and the critic is ``D(x) = (omega x)_+``, which gives the payoff
``Psi(omega, g) = (1/2 - Phi(g)) omega``.  Descent in g and ``gamma_c``-scaled
ascent in omega conserve ``2 cosh g + omega^2 / gamma_c``.

Scalar integrators here use :mod:`math` rather than numpy; the loops are long
and the state is two numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import NumericalError, TrajectoryRecord


def phi(g: float) -> float:
    """Logistic CDF of the toy prior."""
    if g >= 0:
        return 1.0 / (1.0 + math.exp(-g))
    e = math.exp(g)
    return e / (1.0 + e)


@dataclass(frozen=True)
class ToyState:
    g: float
    omega: float
    gamma_c: float = 1.0

    def __post_init__(self):
        if not self.gamma_c > 0:
            raise ValueError("gamma_c must be positive")


def toy_psi(omega: float, g: float) -> float:
    return (0.5 - phi(g)) * omega


def _field(g, omega, gamma_c):
    p = phi(g)
    return p * (1.0 - p) * omega, gamma_c * (0.5 - p)


def toy_field(state: ToyState) -> tuple[float, float]:
    """(dg/dt, domega/dt) = (-dPsi/dg, gamma_c dPsi/domega)."""
    return _field(state.g, state.omega, state.gamma_c)


def toy_energy(state: ToyState) -> float:
    return 2.0 * math.cosh(state.g) + state.omega**2 / state.gamma_c


def energy_star(gamma_c: float) -> float:
    """Energy level whose orbit touches |omega| = 1 tangentially."""
    return 2.0 + 1.0 / gamma_c


def toy_limit_bound(gamma_c: float) -> float:
    """Amplitude of g on the tangent orbit: arccosh(1 + 1/(2 gamma_c))."""
    return math.acosh(1.0 + 0.5 / gamma_c)


def toy_critic_distance(g: float) -> float:
    """max over |omega| <= 1 of Psi(omega, g) = |1/2 - Phi(g)|.

    This is the distance as seen by the ReLU critic family; the true W1
    (:func:`toy_w1`) is twice as large because the atoms are 2 apart.
    """
    return abs(0.5 - phi(g))


def toy_w1(g: float) -> float:
    """Exact 1-Wasserstein distance between the generated law and the target."""
    return 2.0 * abs(0.5 - phi(g))


def sample_generated(g: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw from the threshold generator applied to the logistic prior."""
    z = rng.logistic(size=n)
    return np.where(z < g, -1.0, 1.0)


# ---------------------------------------------------------------------------
# integration


def _rk4_step(g, w, gc, dt):
    k1g, k1w = _field(g, w, gc)
    k2g, k2w = _field(g + 0.5 * dt * k1g, w + 0.5 * dt * k1w, gc)
    k3g, k3w = _field(g + 0.5 * dt * k2g, w + 0.5 * dt * k2w, gc)
    k4g, k4w = _field(g + dt * k3g, w + dt * k3w, gc)
    return (
        g + dt / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g),
        w + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w),
    )


def _euler_step(g, w, gc, dt):
    dg, dw = _field(g, w, gc)
    return g + dt * dg, w + dt * dw


def toy_simulate(
    state0: ToyState,
    dt: float,
    T: float,
    constrained: bool,
    integrator: str | None = None,
    stride: int = 1,
) -> TrajectoryRecord:
    """Integrate the toy game up to time ``T``.

    The default integrator is RK4 without the constraint and projected
    forward Euler (clamp omega to [-1, 1] after each step) with it.
    ``integrator`` overrides the scheme; the clamp is applied whenever
    ``constrained`` is set.  Diagnostics ``g``, ``omega`` and ``energy`` are
    recorded at every step, snapshots ``[g, omega]`` every ``stride`` steps.
    """
    integrator = integrator or ("euler" if constrained else "rk4")
    if integrator not in ("euler", "rk4"):
        raise ValueError(f"unknown integrator {integrator!r}")
    if constrained and abs(state0.omega) > 1.0:
        raise ValueError("constrained run needs |omega_0| <= 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    step = _rk4_step if integrator == "rk4" else _euler_step
    steps = int(round(T / dt))
    gc = state0.gamma_c
    g, w = float(state0.g), float(state0.omega)
    gs = [g]
    ws = [w]
    for _ in range(steps):
        g, w = step(g, w, gc, dt)
        if constrained:
            w = min(1.0, max(-1.0, w))
        gs.append(g)
        ws.append(w)
    G = np.array(gs)
    W = np.array(ws)
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(W))):
        raise NumericalError("toy integration produced non-finite values")
    times = dt * np.arange(steps + 1)
    E = 2.0 * np.cosh(G) + W**2 / gc
    idx = np.arange(0, steps + 1, stride)
    if idx[-1] != steps:
        idx = np.append(idx, steps)
    states = np.column_stack([G, W])
    return TrajectoryRecord(times, times[idx], list(states[idx]), {"g": G, "omega": W, "energy": E})


# ---------------------------------------------------------------------------
# periodicity


@dataclass(frozen=True)
class PeriodEstimate:
    crossing_times: np.ndarray
    returns: np.ndarray  # successive return times

    @property
    def mean(self) -> float:
        return float(np.mean(self.returns))

    @property
    def spread(self) -> float:
        """(max - min) / mean over all recorded returns."""
        return self.tail_spread(len(self.returns))

    def tail_spread(self, k: int) -> float:
        r = self.returns[-k:]
        return float((r.max() - r.min()) / r.mean())


def detect_period(traj: TrajectoryRecord, min_returns: int = 2) -> PeriodEstimate | None:
    """Return times to the Poincare section {omega = 0, omega increasing}.

    Just after such a crossing omega > 0, so dg/dt > 0 there.  Crossing
    times are located by linear interpolation between steps.  Returns
    ``None`` when fewer than ``min_returns`` full returns are found.
    """
    t = traj.times
    w = traj.diagnostics["omega"]
    k = np.nonzero((w[:-1] < 0.0) & (w[1:] >= 0.0))[0]
    if len(k) < min_returns + 1:
        return None
    tc = t[k] + (t[k + 1] - t[k]) * (-w[k]) / (w[k + 1] - w[k])
    return PeriodEstimate(tc, np.diff(tc))


# ---------------------------------------------------------------------------
# plot data


def energy_contour(gamma_c: float, level: float, n: int = 200) -> np.ndarray:
    """Closed level curve {2 cosh g + omega^2/gamma_c = level} as (g, omega) rows."""
    if level <= 2.0:
        raise ValueError("levels must exceed the minimum energy 2")
    gmax = math.acosh(level / 2.0)
    g = gmax * np.cos(np.linspace(0.0, np.pi, n))  # dense near the turning points
    w = np.sqrt(np.maximum(gamma_c * (level - 2.0 * np.cosh(g)), 0.0))
    upper = np.column_stack([g, w])
    lower = np.column_stack([g[::-1], -w[::-1]])
    return np.vstack([upper, lower[1:], upper[:1]])


def write_dat(path, columns: dict[str, np.ndarray]) -> None:
    """Whitespace-separated table with a one-line header."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    with open(path, "w", newline="\n") as f:
        f.write(" ".join(names) + "\n")
        for row in data:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")
