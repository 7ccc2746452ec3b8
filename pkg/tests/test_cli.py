import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from physid.cli import default_manifest_path, load_manifest, run
from physid.cli.main import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, ordering_holds
from physid.dynamics import load_robot, motor_torque, surrogate_robot
from physid.evaluation import GeneratorModel, ranking, rmse_per_joint
from physid.excitation import load_csv, lowpass_zero_phase
from physid.excitation.dataset import Samples
from physid.excitation.trajectory import fourier_eval, load_trajectory
from physid.nets import RneaLqModel
from physid.training import ConfigError

DATA = default_manifest_path().parent


def write_manifest(tmp_path, **changes):
    traj = json.loads((DATA / "surrogate_trajectory.json").read_text())
    traj["period"], traj["dt"] = 2.5, 0.02
    traj["a"] = [[0.0, 0.2, 0.0], [0.0, 0.1, 0.0], [0.0, 0.15, 0.0]]
    traj.pop("limits")
    (tmp_path / "traj.json").write_text(json.dumps(traj))
    m = {
        "robot": str(DATA / "surrogate_robot.json"),
        "trajectory": "traj.json",
        "target": "tau_u",
        "cutoff_hz": 5.0,
        "seed": 7,
        "n_seeds": 1,
        "output": str(tmp_path / "out"),
        "variants": ["rnea_lq", "mlp", "rnea_mlp"],
        "train": {"defaults": {"epochs": 3, "hidden": [8]}},
    }
    m.update(changes)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(m))
    return path


class TestSynth:
    def test_default_manifest_row_count_and_determinism(self, tmp_path, capsys):
        assert run(["synth", "--out", str(tmp_path / "a")]) == EXIT_OK
        assert run(["synth", "--out", str(tmp_path / "b")]) == EXIT_OK
        traj = load_trajectory(DATA / "surrogate_trajectory.json")
        a = (tmp_path / "a" / "dataset.csv").read_bytes()
        assert len(a.splitlines()) == int(np.floor(traj.period / traj.dt + 1e-9)) + 1 + 1
        assert a == (tmp_path / "b" / "dataset.csv").read_bytes()
        assert (tmp_path / "a" / "dataset.json").read_bytes() == (tmp_path / "b" / "dataset.json").read_bytes()
        out = capsys.readouterr().out
        assert "samples 1251" in out and "train 875" in out and "test 376" in out

    def test_seed_changes_noise(self, tmp_path):
        run(["synth", "--out", str(tmp_path / "a"), "--seed", "1"])
        run(["synth", "--out", str(tmp_path / "b"), "--seed", "2"])
        assert (tmp_path / "a" / "dataset.csv").read_bytes() != (tmp_path / "b" / "dataset.csv").read_bytes()

    def test_target_kinds_differ_by_motor_side_terms(self, tmp_path):
        path = write_manifest(tmp_path, noise={"current_rel": 0.0, "velocity_std": 0.0})
        assert run(["synth", "--manifest", str(path), "--out", str(tmp_path / "u")]) == EXIT_OK
        assert run(["synth", "--manifest", str(path), "--out", str(tmp_path / "j"), "--target", "tau"]) == EXIT_OK
        u, j = load_csv(tmp_path / "u" / "dataset.csv"), load_csv(tmp_path / "j" / "dataset.csv")
        assert j.target == "tau" and u.target == "tau_u"
        robot = load_robot(DATA / "surrogate_robot.json")
        traj = load_trajectory(tmp_path / "traj.json")
        q, qd, qdd = fourier_eval(traj, traj.times())
        psi = robot.gear_ratios
        extra = robot.motor_inertias * psi * qdd + robot.friction.torque(qd)
        np.testing.assert_allclose(u.y - j.y / psi, lowpass_zero_phase(extra, 5.0, traj.dt), atol=1e-9)


class TestTrainCompare:
    def test_round_trip(self, tmp_path, capsys):
        path = write_manifest(tmp_path)
        out = tmp_path / "out"
        assert run(["train", "--manifest", str(path), "--all"]) == EXIT_OK
        seed = load_manifest(path).train_config("mlp").seeds[0]
        for v in ("rnea_lq", "mlp", "rnea_mlp"):
            assert (out / "checkpoints" / f"{v}_seed{seed}.json").exists()
            assert (out / "reports" / f"{v}_seed{seed}.json").exists()
        first = (out / "checkpoints" / f"mlp_seed{seed}.json").read_bytes()
        lines = (out / "results.csv").read_text().splitlines()
        assert lines[0] == "variant,seed,joint,rmse,seconds" and len(lines) == 1 + 3 * 3

        assert run(["train", "--manifest", str(path), "--variant", "mlp"]) == EXIT_OK
        assert (out / "checkpoints" / f"mlp_seed{seed}.json").read_bytes() == first
        assert len((out / "results.csv").read_text().splitlines()) == 1 + 3 * 3

        assert run(["compare", "--manifest", str(path)]) == EXIT_OK
        for name in ("rmse.csv", "boxplot.csv", "dissipative.csv", "decomposition.csv", "ranking.txt", "rmse.gp"):
            assert (out / name).exists()
        ranked = (out / "ranking.txt").read_text().splitlines()
        assert len(ranked) == 3 and ranked[0].startswith("1 ")
        rmse = (out / "rmse.csv").read_bytes()
        assert run(["compare", "--manifest", str(path)]) == EXIT_OK
        assert (out / "rmse.csv").read_bytes() == rmse
        assert run(["compare", "--manifest", str(path), "--units", "physical"]) == EXIT_OK
        assert (out / "rmse.csv").read_bytes() != rmse

    def test_missing_checkpoint_names_variant(self, tmp_path, capsys):
        path = write_manifest(tmp_path)
        assert run(["compare", "--manifest", str(path), "--variant", "lnn"]) == EXIT_CONFIG
        assert "'lnn'" in capsys.readouterr().err

    def test_divergence_exit_code(self, tmp_path):
        path = write_manifest(tmp_path, train={"defaults": {"epochs": 3, "hidden": [8], "lr": 1e200}})
        with np.errstate(all="ignore"):
            assert run(["train", "--manifest", str(path), "--variant", "mlp"]) == EXIT_DIVERGED

    def test_grid_sweep(self, tmp_path):
        path = write_manifest(tmp_path)
        assert run(["train", "--manifest", str(path), "--variant", "mlp", "--grid", "lr=0.001,0.01"]) == EXIT_OK
        assert (tmp_path / "out" / "sweep" / "lr0.001" / "results.csv").exists()
        assert (tmp_path / "out" / "sweep" / "lr0.01" / "results.csv").exists()

    def test_assert_ordering_needs_variants(self, tmp_path, capsys):
        path = write_manifest(tmp_path)
        run(["train", "--manifest", str(path), "--variant", "mlp"])
        assert run(["compare", "--manifest", str(path), "--variant", "mlp", "--assert-ordering"]) == EXIT_CONFIG


class TestConfigErrors:
    def test_missing_file_field(self, tmp_path, capsys):
        path = write_manifest(tmp_path, robot=str(tmp_path / "nope.json"))
        assert run(["synth", "--manifest", str(path)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "'robot'" in err and str(path) in err

    @pytest.mark.parametrize(
        "changes,needle",
        [
            ({"variants": ["cnn"]}, "variants"),
            ({"target": "force"}, "target"),
            ({"seed": -1}, "seed"),
            ({"cutoff_hz": 100.0}, "cutoff_hz"),
            ({"train": {"defaults": {"lr": -1.0}}}, "lr"),
            ({"train": {"defaults": {"momentum": 0.9}}}, "momentum"),
        ],
    )
    def test_invalid_fields(self, tmp_path, capsys, changes, needle):
        path = write_manifest(tmp_path, **changes)
        assert run(["synth", "--manifest", str(path)]) == EXIT_CONFIG
        assert needle in capsys.readouterr().err

    def test_bad_json(self, tmp_path, capsys):
        path = tmp_path / "m.json"
        path.write_text("{")
        assert run(["synth", "--manifest", str(path)]) == EXIT_CONFIG
        assert "not valid JSON" in capsys.readouterr().err

    def test_train_without_variant(self, tmp_path):
        assert run(["train", "--manifest", str(write_manifest(tmp_path))]) == EXIT_CONFIG

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        path = write_manifest(tmp_path, output=str(blocker / "out"))
        assert run(["synth", "--manifest", str(path)]) == EXIT_CONFIG


def test_version(capsys):
    assert run(["--version"]) == EXIT_OK
    assert surrogate_robot().config_hash() in capsys.readouterr().out


def test_console_entry_point():
    exe = shutil.which("physid")
    cmd = [exe] if exe else [sys.executable, "-m", "physid"]
    res = subprocess.run(cmd + ["--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("physid ")


def test_ordering_rule():
    ok, _ = ordering_holds({"rnea_mlp": 0.1, "lnn_mlp": 0.2, "lnn": 0.5, "delan": 0.3})
    assert ok
    ok, _ = ordering_holds({"rnea_mlp": 0.1, "lnn_mlp": 0.2, "lnn": 0.15, "delan": 0.3})
    assert not ok
    ok, _ = ordering_holds({"rnea_mlp": 0.1, "lnn_mlp": 0.15, "lnn": 0.18, "delan": 0.3})
    assert not ok
    with pytest.raises(ConfigError):
        ordering_holds({"rnea_mlp": 0.1})


def test_generator_ranks_first():
    robot = surrogate_robot()
    traj = load_trajectory(DATA / "surrogate_trajectory.json")
    q, qd, qdd = fourier_eval(traj, traj.times())
    test = Samples(q, qd, qdd, motor_torque(robot, q, qd, qdd))
    scores = {"rnea_lq": rmse_per_joint(RneaLqModel(3, None, robot), test), "generator": rmse_per_joint(GeneratorModel(robot), test)}
    ranked = ranking(scores)
    assert ranked[0] == ("generator", 0.0)
    assert ranking({"generator": scores["generator"]}) == [("generator", 0.0)]
