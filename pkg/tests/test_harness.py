import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from wgan_meanfield import rng
from wgan_meanfield.dynamics import NumericalError
from wgan_meanfield.harness import cli, experiments
from wgan_meanfield.harness.config import ConfigError, load_config, parse_config
from wgan_meanfield.harness.fit import fit_rate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


# --- rng ---


def test_substreams_are_keyed():
    a = rng.substream(5, 1, 2).random(4)
    np.testing.assert_array_equal(a, rng.substream(5, 1, 2).random(4))
    assert not np.array_equal(a, rng.substream(5, 2, 1).random(4))
    with pytest.raises(ValueError):
        rng.substream(-1)


# --- fit_rate ---


def test_fit_exact_power_laws():
    xs = np.array([25.0, 50.0, 100.0, 200.0])
    f = fit_rate(xs, 3.0 / xs)
    assert abs(f.slope + 1) <= 1e-12 and f.r_squared == pytest.approx(1.0)
    assert abs(fit_rate(xs, 0.2 / np.sqrt(xs)).slope + 0.5) <= 1e-12


def test_fit_noisy_slope_within_ci():
    gen = rng.substream(0, 90)
    xs = np.geomspace(1, 1000, 20)
    ys = 2.0 * xs**-0.8 * np.exp(gen.normal(scale=0.1, size=xs.size))
    f = fit_rate(xs, ys)
    t = stats.t.ppf(0.995, xs.size - 2)
    assert abs(f.slope + 0.8) <= t * f.slope_stderr
    ref = stats.linregress(np.log(xs), np.log(ys))
    assert f.slope == pytest.approx(ref.slope, rel=1e-12)
    assert f.slope_stderr == pytest.approx(ref.stderr, rel=1e-10)


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_rate([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_rate([1, 2, 3], [1, 0, 2])
    with pytest.raises(ValueError):
        fit_rate([-1, 2, 3], [1, 1, 2])


# --- config ---


def test_all_checked_in_configs_parse():
    names = sorted(p.name for p in CONFIGS.glob("*.json"))
    assert len(names) >= 8
    for p in CONFIGS.glob("*.json"):
        load_config(p)


def test_config_rejects_zero_critic_steps():
    with pytest.raises(ConfigError) as exc:
        parse_config({"experiment": "train", "sgd": {"n_c": 0}})
    assert exc.value.path == "sgd.n_c"


@pytest.mark.parametrize(
    "data,path",
    [
        ({"experiment": "toy", "toy": {"dtt": 1}}, "toy.dtt"),
        ({"experiment": "toy", "seeed": 1}, "seeed"),
        ({"experiment": "toy", "toy": {"dt": "fast"}}, "toy.dt"),
        ({"experiment": "toy", "N": 2.5}, "N"),
        ({"experiment": "bogus"}, "experiment"),
        ({"experiment": "couple", "couple": {"n_c": 2, "gamma_c": 1.0}}, "couple.gamma_c"),
        ({"experiment": "couple", "couple": {"N_grid": [10, 20]}}, "couple.N_grid"),
        ({"experiment": "toy", "toy": {"constrained": True, "omega0": 2.0}}, "toy.omega0"),
        ({"experiment": "train", "K": 2}, "target"),
        ({"experiment": "train", "init": {"a": {"low": -2.0}}}, "init.a"),
        ({"experiment": "euler-rate", "euler_rate": {"x0": [1.5, 0.0]}}, "euler_rate.x0"),
        ({"seed": 1}, "experiment"),
    ],
)
def test_config_errors_name_the_field(data, path):
    with pytest.raises(ConfigError) as exc:
        parse_config(data)
    assert exc.value.path == path
    assert path in str(exc.value)


def test_config_defaults_round_trip():
    cfg = parse_config({"experiment": "toy"})
    again = parse_config(cfg.to_dict())
    assert again == cfg


# --- experiments and CLI ---


def toy_cfg(tmp_path, **toy):
    data = {"experiment": "toy", "toy": {"T": 5.0, "dat_stride": 100, "contour_levels": [2.5], **toy}}
    p = tmp_path / "toy.json"
    p.write_text(json.dumps(data))
    return p


def test_run_writes_manifest(tmp_path):
    cfg = parse_config({"experiment": "toy", "toy": {"T": 5.0, "contour_levels": [2.5, 3.0]}})
    files = experiments.run(cfg, tmp_path / "out")
    out = tmp_path / "out"
    manifest = json.loads((out / "manifest.json").read_text())
    listed = {f["name"]: f["sha256"] for f in manifest["files"]}
    assert set(listed) == {p.name for p in files} - {"manifest.json"}
    for name, digest in listed.items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    summary = json.loads((out / "summary.json").read_text())
    assert summary["energy_rel_drift"] < 1e-10
    header = (out / "trajectory.dat").read_text().splitlines()[0]
    assert header == "t g omega E"


def test_cli_toy_success(tmp_path, capsys):
    rc = cli.main(["toy", "--config", str(toy_cfg(tmp_path)), "--out-dir", str(tmp_path / "o")])
    assert rc == 0
    assert (tmp_path / "o" / "manifest.json").exists()


def test_cli_config_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"experiment": "train", "sgd": {"n_c": 0}}))
    assert cli.main(["train", "--config", str(p), "--out-dir", str(tmp_path / "o")]) == 2
    assert "sgd.n_c" in capsys.readouterr().err
    p.write_text("{not json")
    assert cli.main(["train", "--config", str(p)]) == 2
    # subcommand and config disagree
    assert cli.main(["train", "--config", str(toy_cfg(tmp_path))]) == 2


def test_cli_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["toy", "--config", str(toy_cfg(tmp_path)), "--out-dir", str(blocker / "sub")]) == 4
    assert cli.main(["toy", "--config", str(tmp_path / "missing.json")]) == 4


def test_cli_numerical_error_exit_code(tmp_path, monkeypatch):
    def boom(cfg, out, threads=1):
        raise NumericalError("non-finite values after SGD step 3")

    monkeypatch.setitem(experiments.DRIVERS, "toy", boom)
    assert cli.main(["toy", "--config", str(toy_cfg(tmp_path)), "--out-dir", str(tmp_path / "o")]) == 3


def test_cli_seed_override_and_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.default_threads() == 3
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    assert cli.main(["toy", "--config", str(toy_cfg(tmp_path))]) == 2
    monkeypatch.delenv(cli.THREADS_ENV)
    assert cli.default_threads() == 1
    out = tmp_path / "s"
    assert cli.main(["wasserstein-selftest", "--seed", "17", "--out-dir", str(out), "--threads", "2"]) == 0
    assert json.loads((out / "config.json").read_text())["seed"] == 17


def test_small_couple_is_thread_independent(tmp_path):
    data = {
        "experiment": "couple",
        "couple": {"N_grid": [4, 8, 16], "n_seeds": 3, "T": 0.25},
    }
    cfg = parse_config(data)
    experiments.run(cfg, tmp_path / "a", threads=1)
    experiments.run(cfg, tmp_path / "b", threads=4)
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    rows = (tmp_path / "a" / "couple.csv").read_text().splitlines()
    assert rows[0] == "N,mean_e_T,stderr,n_seeds" and len(rows) == 4


@pytest.mark.parametrize("kind", ["train", "meanfield"])
def test_training_experiments(tmp_path, kind):
    data = {"experiment": kind, "N": 6, "M": 6, "snapshot_stride": 5, "sgd": {"steps": 12}, "meanfield": {"dt": 0.05, "T": 0.6}}
    files = experiments.run(parse_config(data), tmp_path)
    names = {p.name for p in files}
    assert {"trajectory.csv", "snapshots_theta.csv", "snapshots_omega.csv", "summary.json"} <= names
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "time" and "energy" in header and "pinned_coords" in header
    theta_rows = (tmp_path / "snapshots_theta.csv").read_text().splitlines()
    assert theta_rows[0] == "time,particle,slot,alpha,beta_0,gamma"
    assert len(theta_rows) == 1 + 6 * 4  # snapshots at steps 0, 5, 10, 12


def test_brute_force_oracle_itself():
    xs = np.array([[0.0, 0.0], [1.0, 0.0]])
    ys = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert experiments.brute_force_wasserstein(2, xs, ys) == 0.0
