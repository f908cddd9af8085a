"""Time stepping: clipped SGD, the mean-field particle flow, projected Euler.

Time bookkeeping follows the learning-rate scaling ``dt = h / N``: SGD step
``n`` sits at time ``n * h / N`` and is compared with the mean-field flow at
the same time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng as _rng
from .fields import V_omega, V_theta, v_omega, v_theta
from .geometry import Box, pinned_mask, project_box
from .model import SIGMOID, Activation, EnsemblePair, InitDistribution, sample_latent, sample_target
from .quadrature import Quadrature

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """A run produced non-finite values."""


@dataclass(frozen=True)
class SgdConfig:
    h: float
    n_c: int = 1
    steps: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.h >= 0 or not np.isfinite(self.h):
            raise ValueError("h must be a finite non-negative learning rate")
        if self.n_c < 1:
            raise ValueError("n_c must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")

    def dt(self, N: int) -> float:
        return self.h / N


@dataclass(frozen=True)
class MeanFieldConfig:
    dt: float
    T: float = 1.0
    gamma_c: float = 1.0
    quad: Quadrature = field(default_factory=Quadrature)

    def __post_init__(self):
        if not self.dt >= 0 or not np.isfinite(self.dt):
            raise ValueError("dt must be finite and non-negative")
        if not self.T >= 0:
            raise ValueError("T must be non-negative")
        if not (np.isfinite(self.gamma_c) and self.gamma_c >= 0):
            raise ValueError("gamma_c must be finite and >= 0")

    @property
    def steps(self) -> int:
        return 0 if self.dt == 0 else int(round(self.T / self.dt))


@dataclass
class TrajectoryRecord:
    """Time-stamped snapshots plus per-step scalar diagnostics.

    ``times`` holds every step time; ``snapshot_times``/``snapshots`` hold the
    strided subset of states (ensembles or plain vectors).
    """

    times: np.ndarray
    snapshot_times: np.ndarray
    snapshots: list
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.snapshot_times = np.asarray(self.snapshot_times, dtype=float)
        if np.any(np.diff(self.times) <= 0) or np.any(np.diff(self.snapshot_times) <= 0):
            raise ValueError("times must be strictly increasing")
        if len(self.snapshots) != len(self.snapshot_times):
            raise ValueError("one snapshot per snapshot time")

    @property
    def final(self):
        return self.snapshots[-1]

    def states(self) -> np.ndarray:
        """Stack vector snapshots into an array (vector trajectories only)."""
        return np.stack([np.asarray(s) for s in self.snapshots])

    def to_csv(self, path) -> None:
        names = sorted(self.diagnostics)
        with open(path, "w", newline="\n") as f:
            f.write(",".join(["time", *names]) + "\n")
            for k, t in enumerate(self.times):
                row = [repr(float(t))] + [repr(float(self.diagnostics[n][k])) for n in names]
                f.write(",".join(row) + "\n")


class _Recorder:
    def __init__(self, stride: int):
        if stride < 1:
            raise ValueError("snapshot stride must be >= 1")
        self.stride = stride
        self.times: list[float] = []
        self.snap_times: list[float] = []
        self.snaps: list = []
        self.diag: dict[str, list[float]] = {}

    def record(self, k: int, t: float, state, diag: dict[str, float], last: bool = False):
        self.times.append(t)
        for name, value in diag.items():
            self.diag.setdefault(name, []).append(value)
        if k % self.stride == 0 or last:
            self.snap_times.append(t)
            self.snaps.append(state)

    def finish(self) -> TrajectoryRecord:
        return TrajectoryRecord(
            np.array(self.times),
            np.array(self.snap_times),
            self.snaps,
            {k: np.array(v) for k, v in self.diag.items()},
        )


def _check_finite(state: EnsemblePair | np.ndarray, where: str):
    arrays = (state.theta, state.omega) if isinstance(state, EnsemblePair) else (state,)
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise NumericalError(f"non-finite values after {where}")


# ---------------------------------------------------------------------------
# discrete WGAN training


def sgd_step(
    state: EnsemblePair,
    cfg: SgdConfig,
    target,
    rng: np.random.Generator,
    activation: Activation = SIGMOID,
) -> EnsemblePair:
    """One outer iteration of clipped SGD.

    The critic takes ``n_c`` sub-steps, each with a fresh ``(z, x)`` pair
    shared by all particles.  The generator moves simultaneously with the
    first critic sub-step, using that sub-step's ``z`` and the critic at the
    start of the iteration; for ``n_c = 1`` this is exactly the coupled
    per-particle update analysed by the mean-field theory.
    """
    N, M = state.N, state.M
    theta, omega = state.theta, state.omega
    Q = Box.unit(state.K + 2)
    new_theta = theta
    for sub in range(cfg.n_c):
        z = sample_latent(rng, state.L)
        x = sample_target(target, rng)
        current = state if sub == 0 else state.replace(omega=omega)
        if sub == 0:
            new_theta = theta + (cfg.h / N) * v_theta(current, theta, z, activation)
        omega = project_box(Q, omega + (cfg.h / M) * v_omega(current, omega, z, x, activation))
    return EnsemblePair(new_theta, omega)


def sgd_rng(seed: int, step: int) -> np.random.Generator:
    return _rng.substream(seed, _rng.SGD_LATENT, step)


# ---------------------------------------------------------------------------
# mean-field flow


def meanfield_step(
    state: EnsemblePair,
    cfg: MeanFieldConfig,
    target,
    activation: Activation = SIGMOID,
    step: int = 0,
) -> EnsemblePair:
    """Projected forward Euler step of the characteristic system.

    Both fields are evaluated on the frozen ``state``; the critic field is
    scaled by ``gamma_c`` and the critic is clamped back into Q.
    """
    if cfg.dt == 0:
        return state
    Q = Box.unit(state.K + 2)
    vt = V_theta(state, state.theta, target, cfg.quad, activation, step)
    vo = V_omega(state, state.omega, target, cfg.quad, activation, step)
    theta = state.theta + cfg.dt * vt
    omega = project_box(Q, state.omega + cfg.dt * cfg.gamma_c * vo)
    return EnsemblePair(theta, omega)


def ensemble_diagnostics(state: EnsemblePair, alpha0: np.ndarray | None = None) -> dict[str, float]:
    pinned = pinned_mask(Box.unit(state.K + 2), state.omega)
    diag = {
        "pinned_coords": float(pinned.sum()),
        "max_abs_alpha": float(np.max(np.linalg.norm(state.theta[:, :, 0], axis=1))),
    }
    if alpha0 is not None:
        growth = np.linalg.norm(state.theta[:, :, 0], axis=1) - np.linalg.norm(alpha0, axis=1)
        diag["max_alpha_growth"] = float(np.max(growth))
    return diag


def run_sgd(
    state0: EnsemblePair,
    cfg: SgdConfig,
    target,
    stride: int = 10,
    activation: Activation = SIGMOID,
    energy_quad: Quadrature | None = None,
) -> TrajectoryRecord:
    """Run ``cfg.steps`` SGD iterations; step ``n`` draws from substream ``(seed, n)``."""
    from .fields import energy

    dt = cfg.dt(state0.N)
    rec = _Recorder(stride)
    alpha0 = state0.theta[:, :, 0]

    def diag(s):
        d = ensemble_diagnostics(s, alpha0)
        if energy_quad is not None:
            d["energy"] = energy(s, target, energy_quad, activation)
        return d

    state = state0
    rec.record(0, 0.0, state, diag(state), last=cfg.steps == 0)
    for n in range(cfg.steps):
        state = sgd_step(state, cfg, target, sgd_rng(cfg.seed, n), activation)
        _check_finite(state, f"SGD step {n}")
        rec.record(n + 1, (n + 1) * dt, state, diag(state), last=n + 1 == cfg.steps)
        if (n + 1) % 1000 == 0:
            log.info("sgd step %d/%d", n + 1, cfg.steps)
    return rec.finish()


def run_meanfield(
    state0: EnsemblePair,
    cfg: MeanFieldConfig,
    target,
    stride: int = 10,
    activation: Activation = SIGMOID,
    record_energy: bool = True,
) -> TrajectoryRecord:
    from .fields import energy

    rec = _Recorder(stride)
    alpha0 = state0.theta[:, :, 0]

    def diag(s, k):
        d = ensemble_diagnostics(s, alpha0)
        if record_energy:
            d["energy"] = energy(s, target, cfg.quad, activation, step=k)
        return d

    steps = cfg.steps
    state = state0
    rec.record(0, 0.0, state, diag(state, 0), last=steps == 0)
    for n in range(steps):
        state = meanfield_step(state, cfg, target, activation, step=n)
        _check_finite(state, f"mean-field step {n}")
        rec.record(n + 1, (n + 1) * cfg.dt, state, diag(state, n + 1), last=n + 1 == steps)
        if (n + 1) % 1000 == 0:
            log.info("mean-field step %d/%d", n + 1, steps)
    return rec.finish()


# ---------------------------------------------------------------------------
# generic projected Euler


def projected_euler(
    field_fn: Callable[[np.ndarray], np.ndarray],
    Q: Box,
    x0,
    dt: float,
    T: float,
    stride: int = 1,
) -> TrajectoryRecord:
    """Integrate ``x' = Proj_{tangent cone} V(x)`` by ``x <- Proj_Q(x + dt V(x))``.

    ``x0`` may be a point ``(d,)`` or a batch ``(n, d)`` of independent
    starts sharing the field (the field must then accept batches).  The
    ``pinned`` diagnostic counts coordinates sitting on a face.
    """
    x = np.asarray(x0, dtype=float)
    if not Q.contains(x):
        raise ValueError("initial point lies outside the box")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if stride < 1:
        raise ValueError("snapshot stride must be >= 1")
    steps = int(round(T / dt))
    lo, hi = Q.lo, Q.hi
    idx = np.arange(0, steps + 1, stride)
    if idx[-1] != steps:
        idx = np.append(idx, steps)
    snaps = np.empty((len(idx),) + x.shape)
    pinned = np.empty(steps + 1)
    snaps[0] = x
    pinned[0] = np.count_nonzero((x == lo) | (x == hi))
    j = 1
    for n in range(1, steps + 1):
        x = np.minimum(np.maximum(x + dt * field_fn(x), lo), hi)
        pinned[n] = np.count_nonzero((x == lo) | (x == hi))
        if j < len(idx) and idx[j] == n:
            snaps[j] = x
            j += 1
    _check_finite(snaps, "projected Euler")
    times = dt * np.arange(steps + 1)
    return TrajectoryRecord(times, times[idx], list(snaps), {"pinned": pinned})


def interpolate(traj: TrajectoryRecord, t: float):
    """Piecewise-linear (per particle) interpolation between snapshots.

    Between consecutive snapshots ``p_n`` and ``p_{n+1}`` this returns
    ``(1 - s) p_n + s p_{n+1}``, the displacement interpolation of the two
    empirical measures under the index coupling.
    """
    ts = traj.snapshot_times
    if not ts[0] <= t <= ts[-1]:
        raise ValueError(f"t={t} outside recorded horizon [{ts[0]}, {ts[-1]}]")
    n = int(np.searchsorted(ts, t, side="right")) - 1
    if n >= len(ts) - 1 or t == ts[n]:
        return traj.snapshots[min(n, len(ts) - 1)]
    s = (t - ts[n]) / (ts[n + 1] - ts[n])
    a, b = traj.snapshots[n], traj.snapshots[n + 1]
    if isinstance(a, EnsemblePair):
        # convex combination of points in Q stays in Q; clamp rounding only
        return EnsemblePair((1 - s) * a.theta + s * b.theta, np.clip((1 - s) * a.omega + s * b.omega, -1, 1))
    return (1 - s) * np.asarray(a) + s * np.asarray(b)


# ---------------------------------------------------------------------------
# coupled SGD / mean-field runs


@dataclass(frozen=True)
class CoupledResult:
    times: np.ndarray
    coupling_cost: np.ndarray  # e(t_n) = mean_i |theta_i - theta_hat_i|^2 + |omega_i - omega_hat_i|^2
    exact_times: np.ndarray | None = None
    d2_squared: np.ndarray | None = None  # optimal-assignment value at exact_times


def coupling_cost(a: EnsemblePair, b: EnsemblePair) -> float:
    """Index-coupled mean squared parameter distance (requires N == M)."""
    dth = np.sum((a.theta - b.theta) ** 2, axis=(1, 2))
    dom = np.sum((a.omega - b.omega) ** 2, axis=1)
    return float(np.mean(dth + dom))


def coupled_run(
    N: int,
    sgd: SgdConfig,
    T: float,
    target,
    seed: int,
    K: int = 1,
    L: int = 1,
    init: InitDistribution | None = None,
    quad: Quadrature | None = None,
    gamma_c: float | None = None,
    exact_every: int = 0,
    activation: Activation = SIGMOID,
) -> CoupledResult:
    """SGD and the projected-Euler mean-field flow from the same initial draw.

    Both paths use ``dt = h / N`` and ``N = M`` particles.  ``gamma_c`` must
    equal ``n_c`` (the critic speed-up for ``N = M``).  ``exact_every > 0``
    also records the optimal-assignment d_2^2 every that many steps.
    """
    from .transport import ensemble_d2_squared

    gamma_c = float(sgd.n_c) if gamma_c is None else gamma_c
    if abs(gamma_c - sgd.n_c) > 1e-12:
        raise ValueError(f"gamma_c must equal n_c * N / M = {sgd.n_c}, got {gamma_c}")
    init = init or InitDistribution()
    state0 = init.sample_ensemble(seed, N, N, K, L)
    dt = sgd.h / N
    steps = int(round(T / dt)) if dt > 0 else 0
    mf = MeanFieldConfig(dt=dt, T=T, gamma_c=gamma_c, quad=quad or Quadrature())
    sgd_cfg = SgdConfig(h=sgd.h, n_c=sgd.n_c, steps=steps, seed=seed)

    times = [0.0]
    costs = [0.0]
    exact_t = [0.0]
    exact = [0.0] if exact_every else None
    a = b = state0
    for n in range(steps):
        a = sgd_step(a, sgd_cfg, target, sgd_rng(seed, n), activation)
        b = meanfield_step(b, mf, target, activation, step=n)
        _check_finite(a, f"coupled SGD step {n}")
        _check_finite(b, f"coupled mean-field step {n}")
        times.append((n + 1) * dt)
        costs.append(coupling_cost(a, b))
        if exact is not None and ((n + 1) % exact_every == 0 or n + 1 == steps):
            exact_t.append((n + 1) * dt)
            exact.append(ensemble_d2_squared(a, b))
    if exact is None:
        return CoupledResult(np.array(times), np.array(costs))
    return CoupledResult(np.array(times), np.array(costs), np.array(exact_t), np.array(exact))
