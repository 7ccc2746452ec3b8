import json
import math
from dataclasses import replace

import numpy as np
import pytest

import physid.training.trainer as trainer
from physid.dynamics import FrictionCoefficients, pendulum, surrogate_robot
from physid.excitation import ConstantChannelWarning, Dataset, FourierTrajectory, NoiseConfig, normalize_split, synthesize_dataset
from physid.excitation.dataset import Samples
from physid.nets import VARIANTS, build_model
from physid.training import (
    AdamState,
    CheckpointError,
    ConfigError,
    RESULTS_HEADER,
    TrainConfig,
    TrainReport,
    adam_step,
    append_results,
    epoch_order,
    fit,
    load_checkpoint,
    mse_loss,
    save_checkpoint,
    train,
)


def small_dataset(robot=None, seed=0, n_periods_t=5.0, dt=0.02, noise=None):
    robot = robot or surrogate_robot()
    n = robot.dof
    sin = np.zeros((n, 3))
    sin[:, 1] = np.linspace(1.0, 0.6, n)
    traj = FourierTrajectory(np.zeros(n), sin, np.zeros((n, 3)), n_periods_t, dt)
    return normalize_split(synthesize_dataset(robot, traj, noise or NoiseConfig.off(), seed))


class TestAdam:
    def test_zero_gradient_is_fixed_point(self):
        params = np.array([1.0, -2.0, 3.0])
        state = AdamState(np.array([0.1, 0.2, -0.3]), np.array([0.01, 0.02, 0.03]), 4)
        cfg = TrainConfig()
        new, st = adam_step(params, np.zeros(3), AdamState.zeros(3), cfg)
        np.testing.assert_array_equal(new, params)
        _, st = adam_step(params, np.zeros(3), state, cfg)
        np.testing.assert_allclose(st.m, 0.9 * state.m)
        np.testing.assert_allclose(st.v, 0.999 * state.v)
        assert st.step == 5

    def test_first_step_magnitude(self, rng):
        cfg = TrainConfig(lr=1e-3)
        params = rng.normal(size=50)
        g = rng.normal(size=50)
        new, _ = adam_step(params, g, AdamState.zeros(50), cfg)
        delta = new - params
        assert np.all(np.abs(delta) >= 0.9 * cfg.lr)
        assert np.all(np.abs(delta) <= cfg.lr)
        np.testing.assert_array_equal(np.sign(delta), -np.sign(g))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            adam_step(np.zeros(3), np.zeros(2), AdamState.zeros(3), TrainConfig())

    def test_deterministic_training(self):
        ds = small_dataset()
        cfg = TrainConfig(variant="mlp", epochs=5, hidden=(8,), batch_size=32)
        a, ra = train("mlp", ds, None, cfg, 3)
        b, rb = train("mlp", ds, None, cfg, 3)
        np.testing.assert_array_equal(a.params, b.params)
        assert ra.loss_history == rb.loss_history

    def test_epoch_order_is_pure(self):
        np.testing.assert_array_equal(epoch_order(1, 2, 10), epoch_order(1, 2, 10))
        assert sorted(epoch_order(1, 2, 10)) == list(range(10))
        assert not np.array_equal(epoch_order(1, 2, 100), epoch_order(1, 3, 100))


class _Constant:
    """Stand-in model predicting a fixed value, for loss arithmetic."""

    stats = None

    def __init__(self, value, dof=1):
        self.value, self.dof = value, dof
        self.params = np.zeros(1)

    def torque(self, params, q, qd, qdd):
        return params[0] * 0.0 + np.full((len(q), self.dof), self.value)


def samples(y):
    y = np.asarray(y, float).reshape(len(y), -1)
    z = np.zeros_like(y)
    return Samples(z, z, z, y)


class TestLoss:
    def test_perfect_prediction(self):
        assert mse_loss(_Constant(3.0), samples([3.0, 3.0])) == 0.0

    def test_hand_value(self):
        assert mse_loss(_Constant(1.0), samples([2.0])) == 1.0

    def test_duplication_invariance(self, rng):
        y = rng.normal(size=(7, 2))
        once = mse_loss(_Constant(0.5, 2), samples(y))
        twice = mse_loss(_Constant(0.5, 2), samples(np.vstack([y, y])))
        assert twice == pytest.approx(once, rel=1e-15)

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            mse_loss(_Constant(0.0), samples(np.zeros((0, 1))))


class TestTrain:
    def test_rnea_lq_single_epoch(self):
        ds = small_dataset()
        model, report = train("rnea_lq", ds, surrogate_robot(), TrainConfig(variant="rnea_lq", epochs=50))
        assert report.epochs_run == 1
        assert model.friction.viscous.shape == (3,)

    def test_mlp_fits_zero_target(self):
        raw = small_dataset()
        raw = replace(raw, y=np.zeros_like(raw.y), split=None, stats=None)
        with pytest.warns(ConstantChannelWarning):
            ds = normalize_split(raw)
        cfg = TrainConfig(variant="mlp", epochs=200)
        _, report = train("mlp", ds, None, cfg, 0)
        assert report.loss_history[-1] <= 1e-6
        assert report.epochs_run == 200

    def test_rnea_mlp_learns_viscous_residual(self):
        robot = pendulum().with_friction(FrictionCoefficients([0.5], [0.0]))
        ds = small_dataset(robot, dt=0.01)
        cfg = TrainConfig(variant="rnea_mlp", epochs=2000)
        model, report = train("rnea_mlp", ds, robot, cfg, 0)
        test = ds.test_slice()
        rmse_phys = np.sqrt(np.mean((model.predict_samples(test) - test.y) ** 2))
        assert rmse_phys <= 0.01 * np.std(test.y)
        q = np.linspace(-0.8, 0.8, 9)[:, None]
        h = model.residual(model.params, q, np.ones_like(q)).value
        np.testing.assert_allclose(h, -0.5, atol=0.05)

    def test_best_parameters_kept(self):
        ds = small_dataset()
        cfg = TrainConfig(variant="mlp", epochs=30, hidden=(8,), lr=0.05)
        model, report = train("mlp", ds, None, cfg, 0)
        best = min(report.loss_history)
        assert report.loss_history[report.best_epoch] == best
        assert report.epochs_run == 30

    def test_patience_stops_early(self):
        ds = small_dataset()
        ds.y[:] = 0.0
        cfg = TrainConfig(variant="mlp", epochs=5000, hidden=(4,), lr=0.5, patience=3)
        _, report = train("mlp", ds, None, cfg, 0)
        assert report.epochs_run < 5000

    def test_divergence_is_reported(self):
        ds = small_dataset()
        ds.y[3, 0] = np.nan
        model, report = train("mlp", ds, None, TrainConfig(variant="mlp", epochs=5, hidden=(4,)), 0)
        assert report.diverged and not report.converged
        assert math.isnan(report.loss_history[-1])
        assert np.all(np.isfinite(model.params))

    def test_overflow_is_reported(self):
        ds = small_dataset()
        with np.errstate(all="ignore"):
            _, report = train("mlp", ds, None, TrainConfig(variant="mlp", epochs=20, hidden=(4,), lr=1e200), 0)
        assert report.diverged

    def test_requires_split(self):
        raw = Dataset(np.arange(20.0), *np.zeros((4, 20, 3)))
        with pytest.raises(ValueError):
            train("mlp", raw, None, TrainConfig(epochs=1))


class _Tracked(Dataset):
    reads = 0

    def test_slice(self):
        type(self).reads += 1
        return super().test_slice()


def test_training_never_reads_test_slice(monkeypatch):
    base = small_dataset()
    ds = _Tracked(**{k: getattr(base, k) for k in ("t", "q", "qd", "qdd", "y", "target", "split", "stats", "meta")})
    real_fit = trainer.fit

    def guarded(*args, **kwargs):
        before = _Tracked.reads
        out = real_fit(*args, **kwargs)
        assert _Tracked.reads == before
        return out

    monkeypatch.setattr(trainer, "fit", guarded)
    cfg = TrainConfig(variant="rnea_mlp", epochs=3, hidden=(8,))
    model, _ = trainer.train("rnea_mlp", ds, surrogate_robot(), cfg, 0)
    assert _Tracked.reads == 1

    poisoned = small_dataset()
    poisoned.y[poisoned.split :] = np.nan
    poisoned.qd[poisoned.split :] = np.nan
    other, report = train("rnea_mlp", poisoned, surrogate_robot(), cfg, 0)
    np.testing.assert_array_equal(model.params, other.params)
    assert not report.diverged


@pytest.mark.parametrize("variant", [v for v in VARIANTS if v != "rnea_lq"])
def test_single_sample_step_decreases_loss(variant):
    robot = surrogate_robot()
    ds = small_dataset()
    one = ds.train_slice().take(np.array([17]))
    model = build_model(variant, 3, ds.stats, robot, ds.target, hidden=(8, 8)).initialize(0)
    before = mse_loss(model, one)
    fit(model, one, TrainConfig(variant=variant, lr=1e-6, epochs=1, batch_size=1), 0)
    assert mse_loss(model, one) < before


class TestConfig:
    @pytest.mark.parametrize(
        "field,value",
        [("lr", 0.0), ("beta1", 1.0), ("beta2", -0.1), ("batch_size", 0), ("epochs", 0), ("seeds", ()), ("variant", "cnn")],
    )
    def test_invalid_values_name_field(self, field, value):
        with pytest.raises(ConfigError, match=field):
            TrainConfig(**{field: value})

    def test_json_round_trip(self):
        cfg = TrainConfig(variant="lnn", lr=3e-4, seeds=(4, 5), hidden=(16, 16), patience=10)
        assert TrainConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="momentum"):
            TrainConfig.from_dict({"momentum": 0.9})

    def test_report_round_trip(self):
        rep = TrainReport("mlp", 2, [1.0, 0.5], [0.1, 0.2], 1.5, best_epoch=1)
        assert TrainReport.from_dict(json.loads(rep.to_json())) == rep
        assert rep.epochs_run == 2
        assert rep.mean_rmse == pytest.approx(0.15)


class TestCheckpoint:
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_round_trip(self, variant, tmp_path):
        robot = surrogate_robot()
        ds = small_dataset()
        model, _ = train(variant, ds, robot, TrainConfig(variant=variant, epochs=2, hidden=(8,)), 0)
        save_checkpoint(tmp_path / "c.json", model, 0)
        back = load_checkpoint(tmp_path / "c.json", robot)
        test = ds.test_slice()
        np.testing.assert_array_equal(back.predict_samples(test), model.predict_samples(test))

    def test_robot_mismatch_names_variant(self, tmp_path):
        robot = surrogate_robot()
        model, _ = train("rnea_mlp", small_dataset(), robot, TrainConfig(variant="rnea_mlp", epochs=1, hidden=(4,)), 0)
        save_checkpoint(tmp_path / "c.json", model)
        with pytest.raises(CheckpointError, match="rnea_mlp"):
            load_checkpoint(tmp_path / "c.json", surrogate_robot(friction=False))
        with pytest.raises(CheckpointError, match="rnea_mlp"):
            load_checkpoint(tmp_path / "c.json", None)

    def test_unreadable(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "missing.json")


def test_results_csv(tmp_path):
    path = tmp_path / "results.csv"
    append_results(path, [TrainReport("mlp", 0, [1.0], [0.1, 0.2], 2.0)])
    append_results(path, [TrainReport("lnn", 1, [1.0], [0.3, 0.4], 3.0)])
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(RESULTS_HEADER)
    assert len(lines) == 5
    assert lines[3].startswith("lnn,1,1,0.3,")
