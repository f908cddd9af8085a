"""Experiment drivers behind the CLI.

Each driver writes its artifacts into the output directory and returns the
file names it produced.  :func:`run` adds the resolved config and a manifest
with SHA-256 hashes.  Outputs depend only on the config and seed: parallel
work is mapped in a fixed order and every random draw comes from a keyed
substream.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import rng as _rng
from ..dynamics import MeanFieldConfig, SgdConfig, coupled_run, projected_euler, run_meanfield, run_sgd
from ..geometry import Box
from ..model import SIGMOID, EnsemblePair
from ..toy import (
    ToyState,
    detect_period,
    energy_contour,
    energy_star,
    toy_limit_bound,
    toy_simulate,
    write_dat,
)
from ..transport import wasserstein_1d, wasserstein_assignment
from .config import RunConfig
from .fit import fit_rate

log = logging.getLogger(__name__)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(v if isinstance(v, str) else repr(v) for v in row) + "\n")


def _write_snapshots(out: Path, traj) -> list[str]:
    K = traj.snapshots[0].K
    L = traj.snapshots[0].L
    th_rows, om_rows = [], []
    for t, s in zip(traj.snapshot_times, traj.snapshots):
        for i, particle in enumerate(s.theta):
            for j, slot in enumerate(particle):
                th_rows.append([float(t), i, j, *map(float, slot)])
        for i, w in enumerate(s.omega):
            om_rows.append([float(t), i, *map(float, w)])
    _write_csv(
        out / "snapshots_theta.csv",
        ["time", "particle", "slot", "alpha", *[f"beta_{l}" for l in range(L)], "gamma"],
        th_rows,
    )
    _write_csv(out / "snapshots_omega.csv", ["time", "particle", "a", *[f"b_{k}" for k in range(K)], "c"], om_rows)
    return ["snapshots_theta.csv", "snapshots_omega.csv"]


def _initial_ensemble(cfg: RunConfig) -> EnsemblePair:
    return cfg.init.build().sample_ensemble(cfg.seed, cfg.N, cfg.M, cfg.K, cfg.L)


def _energy_quad(cfg: RunConfig):
    quad = cfg.meanfield.quadrature.build()
    if cfg.meanfield.quadrature.z.rule == "gauss_hermite" and cfg.L != 1:
        return None
    return quad


# ---------------------------------------------------------------------------
# drivers


def run_train(cfg: RunConfig, out: Path, threads: int = 1) -> list[str]:
    target = cfg.target.build()
    sgd = SgdConfig(h=cfg.sgd.h, n_c=cfg.sgd.n_c, steps=cfg.sgd.steps, seed=cfg.seed)
    traj = run_sgd(_initial_ensemble(cfg), sgd, target, stride=cfg.snapshot_stride, energy_quad=_energy_quad(cfg))
    traj.to_csv(out / "trajectory.csv")
    files = ["trajectory.csv", *_write_snapshots(out, traj)]
    summary = {
        "dt": sgd.dt(cfg.N),
        "steps": sgd.steps,
        "final_time": float(traj.times[-1]),
        "gamma_c": sgd.n_c * cfg.N / cfg.M,
        "final": {k: float(v[-1]) for k, v in traj.diagnostics.items()},
    }
    _write_json(out / "summary.json", summary)
    return files + ["summary.json"]


def run_meanfield_experiment(cfg: RunConfig, out: Path, threads: int = 1) -> list[str]:
    target = cfg.target.build()
    m = cfg.meanfield
    mf = MeanFieldConfig(dt=m.dt, T=m.T, gamma_c=m.gamma_c, quad=m.quadrature.build())
    traj = run_meanfield(_initial_ensemble(cfg), mf, target, stride=cfg.snapshot_stride)
    traj.to_csv(out / "trajectory.csv")
    files = ["trajectory.csv", *_write_snapshots(out, traj)]
    # |d alpha_j / dt| <= sup|a| sup|b_j| sup|sigma| sup|sigma'| <= c2^2 per slot
    c = SIGMOID.c2_bound**2 * math.sqrt(cfg.K)
    growth = traj.diagnostics["max_alpha_growth"]
    summary = {
        "steps": mf.steps,
        "final_time": float(traj.times[-1]),
        "alpha_growth_constant": c,
        "alpha_growth_within_bound": bool(np.all(growth <= c * traj.times + 1e-12)),
        "final": {k: float(v[-1]) for k, v in traj.diagnostics.items()},
    }
    _write_json(out / "summary.json", summary)
    return files + ["summary.json"]


def _run_seed(master: int, N: int, rep: int) -> int:
    return int(np.random.SeedSequence([master, N, rep]).generate_state(1, dtype=np.uint32)[0])


def run_couple(cfg: RunConfig, out: Path, threads: int = 1) -> list[str]:
    c = cfg.couple
    target = cfg.target.build()
    init = cfg.init.build()
    quad = cfg.meanfield.quadrature.build()
    sgd = SgdConfig(h=c.h, n_c=c.n_c)
    tasks = [(N, rep, _run_seed(cfg.seed, N, rep)) for N in c.N_grid for rep in range(c.n_seeds)]

    def work(task):
        N, rep, seed = task
        res = coupled_run(
            N, sgd, c.T, target, seed, K=cfg.K, L=cfg.L, init=init, quad=quad, gamma_c=c.gamma_c,
            exact_every=c.exact_every,
        )
        log.info("couple N=%d rep=%d e(T)=%.3e", N, rep, res.coupling_cost[-1])
        return res

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(work, tasks))

    grid_t = np.linspace(0.0, c.T, 11)
    seed_rows, summary_rows, series = [], [], {}
    means = []
    for N in c.N_grid:
        idx = [k for k, t in enumerate(tasks) if t[0] == N]
        eT = np.array([results[k].coupling_cost[-1] for k in idx])
        for k in idx:
            row = [N, tasks[k][1], tasks[k][2], float(results[k].coupling_cost[-1])]
            if c.exact_every:
                row.append(float(results[k].d2_squared[-1]))
            seed_rows.append(row)
        mean = float(eT.mean())
        stderr = float(eT.std(ddof=1) / math.sqrt(len(eT))) if len(eT) > 1 else 0.0
        means.append(mean)
        summary_rows.append([N, mean, stderr, len(eT)])
        series[N] = np.mean([np.interp(grid_t, results[k].times, results[k].coupling_cost) for k in idx], axis=0)

    header = ["N", "rep", "seed", "e_T"] + (["d2sq_T"] if c.exact_every else [])
    _write_csv(out / "couple_seeds.csv", header, seed_rows)
    _write_csv(out / "couple.csv", ["N", "mean_e_T", "stderr", "n_seeds"], summary_rows)
    _write_csv(
        out / "couple_timeseries.csv",
        ["time", *[f"mean_e_N{N}" for N in c.N_grid]],
        [[float(t), *[float(series[N][k]) for N in c.N_grid]] for k, t in enumerate(grid_t)],
    )
    fit = fit_rate(c.N_grid, means)
    _write_json(
        out / "rate_fit.json",
        {**fit.to_dict(), "slope_max": c.slope_max, "passed": bool(fit.slope <= c.slope_max), "theory_slope": -1.0},
    )
    return ["couple_seeds.csv", "couple.csv", "couple_timeseries.csv", "rate_fit.json"]


def run_toy(cfg: RunConfig, out: Path, threads: int = 1) -> list[str]:
    t = cfg.toy
    state0 = ToyState(t.g0, t.omega0, t.gamma_c)
    traj = toy_simulate(state0, t.dt, t.T, t.constrained, t.integrator or None)
    d = traj.diagnostics
    keep = np.arange(0, len(traj.times), t.dat_stride)
    write_dat(
        out / "trajectory.dat",
        {"t": traj.times[keep], "g": d["g"][keep], "omega": d["omega"][keep], "E": d["energy"][keep]},
    )
    files = ["trajectory.dat"]
    for level in t.contour_levels:
        name = f"contour_gc{t.gamma_c:g}_E{level:g}.dat"
        curve = energy_contour(t.gamma_c, float(level))
        write_dat(out / name, {"g": curve[:, 0], "omega": curve[:, 1]})
        files.append(name)

    E = d["energy"]
    after = traj.times >= t.transient
    period = detect_period(traj)
    summary = {
        "E0": float(E[0]),
        "E_star": energy_star(t.gamma_c),
        "energy_rel_drift": float(np.max(np.abs(E - E[0])) / E[0]),
        "touched_boundary": bool(np.any(np.abs(d["omega"]) == 1.0)),
        "sup_abs_g_after_transient": float(np.max(np.abs(d["g"][after]))),
        "limit_bound": toy_limit_bound(t.gamma_c),
        "period_mean": None if period is None else period.mean,
        "period_spread_last5": None if period is None or len(period.returns) < 5 else period.tail_spread(5),
        "n_returns": 0 if period is None else int(len(period.returns)),
    }
    _write_json(out / "summary.json", summary)
    return files + ["summary.json"]


def _rotation(x):
    return np.array([-x[1], x[0]])


def run_euler_rate(cfg: RunConfig, out: Path, threads: int = 1) -> list[str]:
    e = cfg.euler_rate
    Q = Box.unit(2)
    x0 = np.array(e.x0, dtype=float)

    def work(dt):
        coarse = projected_euler(_rotation, Q, x0, dt, e.T)
        ref = projected_euler(_rotation, Q, x0, dt / e.ref_factor, e.T, stride=e.ref_factor)
        err = np.linalg.norm(coarse.states() - ref.states(), axis=1)
        return float(err.max()), bool(coarse.diagnostics["pinned"].max() > 0)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(work, e.dts))
    # rotation field on [-1,1]^2: |V| <= sqrt(2), |grad V| = 1
    vmax, lip = math.sqrt(2.0), 1.0
    rows = []
    for dt, (err, contact) in zip(e.dts, results):
        bound = math.exp((1 + lip) * e.T) * (2 * math.sqrt(dt) * vmax + dt * vmax * lip)
        rows.append([float(dt), err, bound, str(contact).lower()])
    _write_csv(out / "euler_rate.csv", ["dt", "error", "theory_bound", "boundary_contact"], rows)
    fit = fit_rate(e.dts, [r[0] for r in results])
    _write_json(
        out / "rate_fit.json",
        {**fit.to_dict(), "slope_min": e.slope_min, "passed": bool(fit.slope >= e.slope_min)},
    )
    return ["euler_rate.csv", "rate_fit.json"]


def brute_force_wasserstein(p: float, xs: np.ndarray, ys: np.ndarray) -> float:
    """Minimum over all n! matchings; only for tiny clouds."""
    n = xs.shape[0]
    cost = np.linalg.norm(xs[:, None, :] - ys[None, :, :], axis=-1) ** p
    best = min(sum(cost[i, s[i]] for i in range(n)) for s in itertools.permutations(range(n)))
    return float((best / n) ** (1.0 / p))


def run_wasserstein_selftest(cfg: RunConfig, out: Path, threads: int = 1) -> list[str]:
    w = cfg.wasserstein
    gen = _rng.substream(cfg.seed, _rng.SAMPLING)
    brute_err = 0.0
    sort_err = 0.0
    for k in range(w.n_instances):
        n = 1 + k % w.max_brute_n
        p = (1, 2, 4)[k % 3]
        xs = gen.normal(size=(n, w.dim))
        ys = gen.normal(size=(n, w.dim))
        brute_err = max(brute_err, abs(wasserstein_assignment(p, xs, ys) - brute_force_wasserstein(p, xs, ys)))
        a = gen.normal(size=w.n_1d)
        b = gen.normal(size=w.n_1d) + 0.5
        sort_err = max(sort_err, abs(wasserstein_assignment(p, a, b) - wasserstein_1d(p, a, b)))
    summary = {
        "n_instances": w.n_instances,
        "max_abs_error_vs_brute_force": brute_err,
        "max_abs_error_vs_sorting": sort_err,
        "passed": bool(brute_err <= 1e-12 and sort_err <= 1e-12),
    }
    _write_json(out / "summary.json", summary)
    return ["summary.json"]


DRIVERS = {
    "train": run_train,
    "meanfield": run_meanfield_experiment,
    "couple": run_couple,
    "toy": run_toy,
    "euler-rate": run_euler_rate,
    "wasserstein-selftest": run_wasserstein_selftest,
}


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: RunConfig, out_dir=None, threads: int = 1) -> list[Path]:
    """Execute ``cfg`` and return the paths of all emitted files."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = DRIVERS[cfg.experiment](cfg, out, threads)
    _write_json(out / "config.json", cfg.to_dict())
    files.append("config.json")
    manifest = {"experiment": cfg.experiment, "files": [{"name": f, "sha256": sha256(out / f)} for f in sorted(files)]}
    _write_json(out / "manifest.json", manifest)
    return [out / f for f in files] + [out / "manifest.json"]
