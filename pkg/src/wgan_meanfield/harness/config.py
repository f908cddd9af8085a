"""Run configuration: one JSON document, strictly validated.

Unknown keys are rejected so that typos surface immediately.  Every error
names the offending field with a dotted path (``sgd.n_c``).
"""

from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..model import AtomicTarget, CoordinateLaw, GaussianMixtureTarget, InitDistribution
from ..quadrature import ExactAtomic, GaussHermite, MonteCarlo, Quadrature

EXPERIMENTS = ("train", "meanfield", "couple", "toy", "euler-rate", "wasserstein-selftest")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


# ---------------------------------------------------------------------------
# sections


@dataclass
class TargetSpec:
    kind: str = "atomic"
    atoms: list = field(default_factory=lambda: [[-1.0], [1.0]])
    weights: list = field(default_factory=lambda: [0.5, 0.5])
    means: list = field(default_factory=list)
    covariances: list = field(default_factory=list)

    def build(self):
        if self.kind == "atomic":
            return AtomicTarget(np.array(self.atoms, dtype=float), np.array(self.weights, dtype=float))
        if self.kind == "gaussian_mixture":
            return GaussianMixtureTarget(
                np.array(self.means, dtype=float), np.array(self.covariances, dtype=float), np.array(self.weights)
            )
        raise ValueError(f"unknown target kind {self.kind!r}")


@dataclass
class LawSpec:
    kind: str = "uniform"
    low: float = -1.0
    high: float = 1.0
    loc: float = 0.0
    scale: float = 1.0

    def build(self) -> CoordinateLaw:
        return CoordinateLaw(self.kind, self.low, self.high, self.loc, self.scale)


@dataclass
class InitSpec:
    alpha: LawSpec = field(default_factory=LawSpec)
    beta: LawSpec = field(default_factory=LawSpec)
    gamma: LawSpec = field(default_factory=LawSpec)
    a: LawSpec = field(default_factory=LawSpec)
    b: LawSpec = field(default_factory=LawSpec)
    c: LawSpec = field(default_factory=LawSpec)

    def build(self) -> InitDistribution:
        return InitDistribution(**{f.name: getattr(self, f.name).build() for f in dataclasses.fields(self)})


@dataclass
class RuleSpec:
    rule: str = "gauss_hermite"
    n_nodes: int = 64
    n_samples: int = 1
    seed: int = 0


@dataclass
class QuadratureSpec:
    z: RuleSpec = field(default_factory=RuleSpec)
    x: RuleSpec = field(default_factory=lambda: RuleSpec(rule="exact_atomic"))

    def build(self) -> Quadrature:
        z = {
            "gauss_hermite": lambda r: GaussHermite(r.n_nodes),
            "monte_carlo": lambda r: MonteCarlo(r.seed, r.n_samples),
        }
        x = {
            "exact_atomic": lambda r: ExactAtomic(),
            "monte_carlo": lambda r: MonteCarlo(r.seed, r.n_samples),
        }
        if self.z.rule not in z:
            raise ConfigError("meanfield.quadrature.z.rule", f"expected one of {sorted(z)}")
        if self.x.rule not in x:
            raise ConfigError("meanfield.quadrature.x.rule", f"expected one of {sorted(x)}")
        return Quadrature(z[self.z.rule](self.z), x[self.x.rule](self.x))


@dataclass
class SgdSpec:
    h: float = 0.5
    n_c: int = 1
    steps: int = 100


@dataclass
class MeanFieldSpec:
    dt: float = 0.005
    T: float = 1.0
    gamma_c: float = 1.0
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)


@dataclass
class CoupleSpec:
    N_grid: list = field(default_factory=lambda: [25, 50, 100, 200])
    n_seeds: int = 20
    T: float = 1.0
    h: float = 0.5
    n_c: int = 1
    gamma_c: float = 1.0
    exact_every: int = 0
    slope_max: float = -0.7


@dataclass
class ToySpec:
    gamma_c: float = 1.0
    g0: float = 1.0
    omega0: float = 0.5
    dt: float = 1e-3
    T: float = 50.0
    constrained: bool = False
    integrator: str = ""
    transient: float = 0.0
    contour_levels: list = field(default_factory=lambda: [2.1, 2.5, 3.0, 4.0, 5.0, 10.0])
    dat_stride: int = 10


@dataclass
class EulerRateSpec:
    vector_field: str = "rotation"
    x0: list = field(default_factory=lambda: [0.95, 0.6])
    T: float = 6.0
    dts: list = field(default_factory=lambda: [1e-2, 5e-3, 2.5e-3, 1.25e-3])
    ref_factor: int = 100
    slope_min: float = 0.5


@dataclass
class WassersteinSpec:
    n_instances: int = 1000
    max_brute_n: int = 7
    n_1d: int = 50
    dim: int = 2


@dataclass
class RunConfig:
    experiment: str
    seed: int = 0
    output_dir: str = "out"
    snapshot_stride: int = 10
    K: int = 1
    L: int = 1
    N: int = 100
    M: int = 100
    target: TargetSpec = field(default_factory=TargetSpec)
    init: InitSpec = field(default_factory=InitSpec)
    sgd: SgdSpec = field(default_factory=SgdSpec)
    meanfield: MeanFieldSpec = field(default_factory=MeanFieldSpec)
    couple: CoupleSpec = field(default_factory=CoupleSpec)
    toy: ToySpec = field(default_factory=ToySpec)
    euler_rate: EulerRateSpec = field(default_factory=EulerRateSpec)
    wasserstein: WassersteinSpec = field(default_factory=WassersteinSpec)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# parsing


def _coerce(value, tp, path):
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true or false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return value
    if tp is list:
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        return value
    raise TypeError(f"unsupported config type {tp}")


def _build(cls, data: dict, path: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(where, "unknown key")
    kwargs = {}
    for f in dataclasses.fields(cls):
        sub = f"{path}.{f.name}" if path else f.name
        if f.name in data:
            kwargs[f.name] = _coerce(data[f.name], hints[f.name], sub)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(sub, "required key missing")
    return cls(**kwargs)


def _positive(value, path, strict=True):
    ok = value > 0 if strict else value >= 0
    if not (ok and np.isfinite(value)):
        raise ConfigError(path, f"must be {'positive' if strict else 'non-negative'}, got {value}")


def validate(cfg: RunConfig) -> RunConfig:
    """Check cross-field constraints; raises :class:`ConfigError`."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"expected one of {list(EXPERIMENTS)}, got {cfg.experiment!r}")
    if cfg.seed < 0:
        raise ConfigError("seed", "must be non-negative")
    for name in ("snapshot_stride", "K", "L", "N", "M"):
        if getattr(cfg, name) < 1:
            raise ConfigError(name, "must be >= 1")

    try:
        target = cfg.target.build()
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise ConfigError("target", str(exc)) from None
    if target.K != cfg.K:
        raise ConfigError("target", f"target lives in R^{target.K} but K = {cfg.K}")
    for f in dataclasses.fields(cfg.init):
        try:
            getattr(cfg.init, f.name).build()
        except ValueError as exc:
            raise ConfigError(f"init.{f.name}", str(exc)) from None
    for name in ("a", "b", "c"):
        law = getattr(cfg.init, name)
        if law.low < -1.0 or law.high > 1.0:
            raise ConfigError(f"init.{name}", "critic parameters must be drawn inside [-1, 1]")
    try:
        cfg.init.build()
    except ValueError as exc:
        raise ConfigError("init", str(exc)) from None

    s = cfg.sgd
    _positive(s.h, "sgd.h")
    if s.n_c < 1:
        raise ConfigError("sgd.n_c", "must be >= 1")
    if s.steps < 0:
        raise ConfigError("sgd.steps", "must be >= 0")

    m = cfg.meanfield
    _positive(m.dt, "meanfield.dt")
    _positive(m.T, "meanfield.T", strict=False)
    _positive(m.gamma_c, "meanfield.gamma_c", strict=False)
    quad = m.quadrature.build()
    if isinstance(quad.z_rule, GaussHermite) and cfg.L != 1 and cfg.experiment in ("meanfield", "couple", "train"):
        raise ConfigError("meanfield.quadrature.z.rule", "gauss_hermite needs L = 1")
    if isinstance(quad.x_rule, ExactAtomic) and cfg.target.kind != "atomic":
        raise ConfigError("meanfield.quadrature.x.rule", "exact_atomic needs an atomic target")
    for part in ("z", "x"):
        r = getattr(m.quadrature, part)
        if r.n_nodes < 1:
            raise ConfigError(f"meanfield.quadrature.{part}.n_nodes", "must be >= 1")
        if r.n_samples < 1:
            raise ConfigError(f"meanfield.quadrature.{part}.n_samples", "must be >= 1")

    c = cfg.couple
    if len(c.N_grid) < 1 or any(isinstance(n, bool) or not isinstance(n, int) or n < 1 for n in c.N_grid):
        raise ConfigError("couple.N_grid", "must be a non-empty list of positive integers")
    if cfg.experiment == "couple" and len(c.N_grid) < 3:
        raise ConfigError("couple.N_grid", "a rate fit needs at least 3 values")
    if c.n_seeds < 1:
        raise ConfigError("couple.n_seeds", "must be >= 1")
    _positive(c.T, "couple.T")
    _positive(c.h, "couple.h")
    if c.n_c < 1:
        raise ConfigError("couple.n_c", "must be >= 1")
    # N = M in coupled runs, so the critic speed-up is n_c * N / M = n_c
    if abs(c.gamma_c - c.n_c) > 1e-12:
        raise ConfigError("couple.gamma_c", f"must equal n_c * N / M = {c.n_c} for coupled runs")
    if c.exact_every < 0:
        raise ConfigError("couple.exact_every", "must be >= 0")

    t = cfg.toy
    _positive(t.gamma_c, "toy.gamma_c")
    _positive(t.dt, "toy.dt")
    _positive(t.T, "toy.T")
    if t.integrator not in ("", "euler", "rk4"):
        raise ConfigError("toy.integrator", "expected 'euler', 'rk4' or empty for the default")
    if t.constrained and abs(t.omega0) > 1:
        raise ConfigError("toy.omega0", "constrained runs need |omega0| <= 1")
    if not 0 <= t.transient < t.T:
        raise ConfigError("toy.transient", "must lie in [0, T)")
    if any(not isinstance(v, (int, float)) or v <= 2 for v in t.contour_levels):
        raise ConfigError("toy.contour_levels", "levels must be numbers > 2")
    if t.dat_stride < 1:
        raise ConfigError("toy.dat_stride", "must be >= 1")

    e = cfg.euler_rate
    if e.vector_field not in ("rotation",):
        raise ConfigError("euler_rate.vector_field", "only 'rotation' is available")
    if len(e.x0) != 2 or any(abs(v) > 1 for v in e.x0):
        raise ConfigError("euler_rate.x0", "must be a point of [-1, 1]^2")
    if len(e.dts) < 3 or any(v <= 0 for v in e.dts):
        raise ConfigError("euler_rate.dts", "need at least 3 positive step sizes")
    _positive(e.T, "euler_rate.T")
    if e.ref_factor < 2:
        raise ConfigError("euler_rate.ref_factor", "must be >= 2")

    w = cfg.wasserstein
    if w.n_instances < 1:
        raise ConfigError("wasserstein.n_instances", "must be >= 1")
    if not 1 <= w.max_brute_n <= 8:
        raise ConfigError("wasserstein.max_brute_n", "must be between 1 and 8")
    if w.n_1d < 1 or w.dim < 1:
        raise ConfigError("wasserstein", "n_1d and dim must be >= 1")
    return cfg


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a JSON object")
    return validate(_build(RunConfig, data))


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}") from None
    return parse_config(data)
