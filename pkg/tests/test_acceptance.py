"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test prints one ``[PASS]``/``[FAIL]`` line; the lines are collected
again in the terminal summary.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from wgan_meanfield.dynamics import projected_euler
from wgan_meanfield.fields import ensemble_velocities, energy
from wgan_meanfield.geometry import Box, normal_decompose, project_box, project_tangent_cone
from wgan_meanfield.harness import experiments
from wgan_meanfield.harness.config import load_config
from wgan_meanfield.model import EnsemblePair, InitDistribution, bimodal_target
from wgan_meanfield.quadrature import ExactAtomic, GaussHermite, Quadrature
from wgan_meanfield.rng import SAMPLING, substream
from wgan_meanfield.toy import sample_generated, toy_limit_bound, toy_w1
from wgan_meanfield.transport import wasserstein_1d

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run_config(name, out, threads=1):
    cfg = load_config(CONFIGS / name)
    t0 = time.perf_counter()
    experiments.run(cfg, out, threads)
    return time.perf_counter() - t0


def read_json(path):
    return json.loads(Path(path).read_text())


@pytest.fixture(scope="module")
def couple_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("couple")
    t1 = run_config("couple.json", base / "t1", threads=1)
    t8 = run_config("couple.json", base / "t8", threads=8)
    return base, t1, t8


@pytest.fixture(scope="module")
def constrained_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("toy")
    out = {}
    for gc, name in ((1.0, "toy_constrained_gc1.json"), (10.0, "toy_constrained_gc10.json")):
        secs = run_config(name, base / name)
        out[gc] = (read_json(base / name / "summary.json"), secs)
    return out


def test_01_toy_energy_conservation(tmp_path, report):
    secs = run_config("toy_energy.json", tmp_path)
    drift = read_json(tmp_path / "summary.json")["energy_rel_drift"]
    ok = drift <= 1e-4 and secs < 1.0
    assert report(1, "toy energy conservation", ok, f"relative drift {drift:.2e} <= 1e-4, {secs:.2f}s < 1s")


def test_02_toy_oscillation_bound(constrained_runs, report):
    parts, ok = [], True
    for gc, (s, secs) in constrained_runs.items():
        limit = {1.0: 0.9624, 10.0: 0.3149}[gc] + 0.01
        assert abs(s["limit_bound"] - toy_limit_bound(gc)) < 1e-15
        ok &= s["E0"] > s["E_star"] and s["sup_abs_g_after_transient"] <= limit and secs < 5.0
        parts.append(f"gamma_c={gc:g}: sup|g|={s['sup_abs_g_after_transient']:.5f} <= {limit:.4f} ({secs:.2f}s)")
    assert report(2, "toy long-time oscillation bound", ok, "; ".join(parts))


def test_03_toy_periodicity(constrained_runs, report):
    parts, ok = [], True
    for gc, (s, secs) in constrained_runs.items():
        spread = s["period_spread_last5"]
        ok &= spread is not None and spread < 0.01 and secs < 5.0
        parts.append(f"gamma_c={gc:g}: period {s['period_mean']:.4f}, last-5 spread {spread:.1e}")
    assert report(3, "toy periodicity", ok, "; ".join(parts))


def test_04_projected_euler_rate(tmp_path, report):
    secs = run_config("euler_rate.json", tmp_path)
    fit = read_json(tmp_path / "rate_fit.json")
    rows = (tmp_path / "euler_rate.csv").read_text().splitlines()[1:]
    contact = all(r.split(",")[-1] == "true" for r in rows)
    ok = fit["slope"] >= 0.5 and contact and secs < 10.0
    assert report(4, "projected Euler rate", ok, f"slope {fit['slope']:.3f} >= 0.5, boundary contact={contact}, {secs:.2f}s")


def test_05_gradient_consistency(report):
    t0 = time.perf_counter()
    target = bimodal_target()
    quad = Quadrature(GaussHermite(64), ExactAtomic())
    gen = substream(0, 100)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        theta = gen.uniform(-2, 2, size=(2, 1, 3))
        omega = gen.uniform(-0.99, 0.99, size=(2, 3))
        e = EnsemblePair(theta, omega)
        Vt, Vo = ensemble_velocities(e, target, quad)
        for arr, V, sign, n in ((theta, Vt, -1.0, e.N), (omega, Vo, 1.0, e.M)):
            fd = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                p, m = arr.copy(), arr.copy()
                p[idx] += h
                m[idx] -= h
                ep = energy(e.replace(**{"theta" if arr is theta else "omega": p}), target, quad)
                em = energy(e.replace(**{"theta" if arr is theta else "omega": m}), target, quad)
                fd[idx] = (ep - em) / (2 * h)
            rel = np.max(np.abs(V / n - sign * fd)) / max(np.max(np.abs(fd)), 1e-12)
            worst = max(worst, rel)
    secs = time.perf_counter() - t0
    ok = worst <= 1e-5 and secs < 10.0
    assert report(5, "gradient consistency", ok, f"max relative error {worst:.2e} <= 1e-5 over 100 instances, {secs:.2f}s")


def test_06_projection_suite(report):
    t0 = time.perf_counter()
    gen = substream(1, 100)
    d, n = 5, 10**5
    Q = Box.unit(d)
    x = gen.normal(scale=2, size=(n, d))
    y = gen.normal(scale=2, size=(n, d))
    px, py = project_box(Q, x), project_box(Q, y)
    nonexp = np.max(np.linalg.norm(px - py, axis=1) - np.linalg.norm(x - y, axis=1))
    idem = np.max(np.abs(project_box(Q, px) - px))
    w = gen.uniform(-1, 1, size=(n, d))
    on = gen.random((n, d)) < 0.4
    w[on] = gen.choice([-1.0, 1.0], size=on.sum())
    V = gen.normal(size=(n, d))
    P = project_tangent_cone(Q, w, V)
    cone = np.max(np.abs(P - np.where(np.abs(w) == 1, V * (1 - np.sign(V * w)) / 2, V)))
    tw, nn = normal_decompose(Q, w, V)
    split = np.max(np.abs(tw + nn - V))
    orth = np.max(np.abs(np.sum(tw * nn, axis=1)))
    normal = np.max(np.sum(np.abs(nn), axis=1) - np.sum(nn * w, axis=1))  # max over vertices of <n, q - w>
    secs = time.perf_counter() - t0
    ok = nonexp <= 1e-12 and idem == 0 and cone <= 1e-12 and split <= 1e-12 and orth <= 1e-12 and normal <= 1e-12
    ok &= secs < 5.0
    detail = f"nonexp {nonexp:.1e}, idem {idem:.0e}, cone {cone:.0e}, split {split:.0e}, orth {orth:.0e}, normal {normal:.0e}; {secs:.2f}s"
    assert report(6, "projection property suite", ok, detail)


def test_07_ode_contraction(report):
    t0 = time.perf_counter()
    Q = Box.unit(2)
    gen = substream(2, 100)
    worst = 0.0
    for _ in range(20):
        a0 = gen.uniform(-1, 1, size=2)
        b0 = project_box(Q, a0 + gen.normal(scale=1e-2, size=2))
        d0 = np.linalg.norm(a0 - b0)
        if d0 == 0:
            continue
        a = projected_euler(lambda x: np.array([-x[1], x[0]]), Q, a0, 1e-3, 5.0)
        b = projected_euler(lambda x: np.array([-x[1], x[0]]), Q, b0, 1e-3, 5.0)
        ratio = np.linalg.norm(a.states() - b.states(), axis=1) / (np.exp(a.snapshot_times) * d0)
        worst = max(worst, ratio.max())
    secs = time.perf_counter() - t0
    ok = worst <= 1.05 and secs < 5.0
    assert report(7, "ODE contraction", ok, f"max |x1-x2| / (e^t |x1(0)-x2(0)|) = {worst:.4f} <= 1.05, {secs:.2f}s")


@pytest.mark.slow
def test_08_coupling_rate(couple_runs, report):
    base, t1, _ = couple_runs
    fit = read_json(base / "t1" / "rate_fit.json")
    ok = fit["slope"] <= -0.7 and t1 < 300
    detail = f"slope {fit['slope']:.3f} (+/- {fit['slope_stderr']:.3f}) <= -0.7, {t1:.1f}s < 300s"
    assert report(8, "coupling rate", ok, detail)


def test_09_wasserstein_exactness(tmp_path, report):
    secs = run_config("wasserstein_selftest.json", tmp_path)
    s = read_json(tmp_path / "summary.json")
    ok = s["max_abs_error_vs_brute_force"] == 0.0 and s["max_abs_error_vs_sorting"] <= 1e-12 and secs < 30
    detail = (
        f"vs brute force {s['max_abs_error_vs_brute_force']:.1e} (exact), "
        f"vs sorting {s['max_abs_error_vs_sorting']:.1e} <= 1e-12, {s['n_instances']} instances, {secs:.2f}s"
    )
    assert report(9, "Wasserstein solver exactness", ok, detail)


def test_10_support_flattening(report):
    t0 = time.perf_counter()
    K = 2
    Q = Box.unit(K + 2)
    omega0 = InitDistribution().sample_ensemble(0, 1, 500, K, 1).omega
    V = np.array([0.5, 0.0, -0.25, 0.0])  # pushes a up and b_2 down, leaves b_1 and c alone
    T_hit = 2 * Q.diameter / np.linalg.norm(V)
    tr = projected_euler(lambda w: np.broadcast_to(V, w.shape), Q, omega0, 0.01, 3 * T_hit)
    snaps = np.stack(tr.snapshots)
    after = snaps[tr.snapshot_times >= T_hit]
    pinned = np.all(after[:, :, 0] == 1.0) and np.all(after[:, :, 2] == -1.0)
    untouched = np.array_equal(snaps[:, :, [1, 3]], np.broadcast_to(omega0[:, [1, 3]], snaps[:, :, [1, 3]].shape))
    secs = time.perf_counter() - t0
    ok = pinned and untouched and secs < 5.0
    assert report(10, "support flattening", ok, f"all pinned after t={T_hit:.2f} and until T={3 * T_hit:.2f}: {pinned}, {secs:.2f}s")


def test_11_toy_w1_formula(report):
    n = 10**4
    tol = 2 / math.sqrt(n)
    errs = []
    for k, g in enumerate((-2.0, -1.0, 0.0, 1.0, 2.0)):
        x = sample_generated(g, substream(0, SAMPLING, k, 0), n)
        y = bimodal_target().sample(substream(0, SAMPLING, k, 1), n)[:, 0]
        errs.append(abs(wasserstein_1d(1, x, y) - toy_w1(g)))
    ok = max(errs) <= tol
    assert report(11, "toy 1-Wasserstein formula", ok, f"max |empirical - formula| {max(errs):.4f} <= {tol:.3f}")


@pytest.mark.slow
def test_12_determinism(couple_runs, report):
    base, _, t8 = couple_runs
    names = sorted(p.name for p in (base / "t1").iterdir())
    same = names == sorted(p.name for p in (base / "t8").iterdir()) and all(
        (base / "t1" / f).read_bytes() == (base / "t8" / f).read_bytes() for f in names
    )
    assert report(12, "determinism across thread counts", same, f"{len(names)} files byte-identical (1 vs 8 threads, {t8:.1f}s)")
