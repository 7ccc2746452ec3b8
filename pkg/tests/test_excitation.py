import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from physid.dynamics import motor_torque, rnea, surrogate_robot
from physid.dynamics.robot import Link, MotorSpec, RobotModel
from physid.excitation import (
    ConstantChannelWarning,
    Dataset,
    DatasetFormatError,
    FourierTrajectory,
    NoiseConfig,
    csv_header,
    differentiate,
    filter_targets,
    fourier_eval,
    load_csv,
    lowpass_zero_phase,
    normalize_split,
    save_csv,
    split_index,
    synthesize_dataset,
)
from physid.excitation.trajectory import load_trajectory

Z3 = np.zeros((1, 3))


def single(a0=0.0, a=(0, 0, 0), b=(0, 0, 0), period=2 * np.pi, dt=0.01):
    return FourierTrajectory([a0 / 2], [a], [b], period, dt)


def default_traj():
    return load_trajectory(__import__("physid.cli", fromlist=["x"]).default_manifest_path().parent / "surrogate_trajectory.json")


class TestFourier:
    def test_constant(self):
        q, qd, qdd = fourier_eval(single(a0=2.0), np.linspace(0, 1, 5))
        np.testing.assert_array_equal(q, 1.0)
        np.testing.assert_array_equal(qd, 0.0)
        np.testing.assert_array_equal(qdd, 0.0)

    def test_first_harmonic(self):
        t = np.linspace(0, 2 * np.pi, 50)
        q, qd, qdd = fourier_eval(single(a=(1, 0, 0)), t)
        np.testing.assert_allclose(q[:, 0], np.sin(t), atol=1e-14)
        np.testing.assert_allclose(qd[:, 0], np.cos(t), atol=1e-14)
        np.testing.assert_allclose(qdd[:, 0], -np.sin(t), atol=1e-14)

    @given(arrays(float, (2, 3), elements=st.floats(-1, 1)), arrays(float, (2, 3), elements=st.floats(-1, 1)))
    def test_derivatives_match_finite_differences(self, a, b):
        traj = FourierTrajectory([0.1, -0.2], a, b, 4.0, 0.01)

        def worst(h):
            t = np.linspace(h, 4.0 - h, 200)
            qp, qdp, _ = fourier_eval(traj, t + h)
            qm, qdm, _ = fourier_eval(traj, t - h)
            _, qd, qdd = fourier_eval(traj, t)
            return max(np.max(np.abs((qp - qm) / (2 * h) - qd)), np.max(np.abs((qdp - qdm) / (2 * h) - qdd)))

        e1, e2 = worst(1e-3), worst(5e-4)
        omega = 2 * np.pi / 4.0
        bound = 1e-6 * (3 * omega) ** 4 * (np.abs(a).sum() + np.abs(b).sum())
        assert e1 <= bound + 1e-9
        if e1 > 1e-8:
            assert e1 / e2 == pytest.approx(4.0, rel=0.05)

    @given(arrays(float, (3, 3), elements=st.floats(-1, 1)), arrays(float, (3, 3), elements=st.floats(-1, 1)))
    def test_periodic_endpoints(self, a, b):
        traj = FourierTrajectory(np.zeros(3), a, b, 7.0, 0.01)
        start, end = fourier_eval(traj, 0.0), fourier_eval(traj, 7.0)
        for s, e in zip(start[1:], end[1:]):
            np.testing.assert_allclose(s, e, atol=1e-12)

    def test_sample_count(self):
        traj = FourierTrajectory([0.0], [[1, 0, 0]], [[0, 0, 0]], 10.0, 0.008)
        assert traj.n_samples == 1251 == len(traj.times())

    def test_invalid(self):
        with pytest.raises(ValueError):
            FourierTrajectory([0.0], [[1, 0, 0]], [[0, 0, 0]], 1.0, 0.1)
        with pytest.raises(ValueError):
            FourierTrajectory([0.0], [[1, 0, 0]], [[0, 0, 0]], 1.0, 0.01, {"q": [0.5]})
        with pytest.raises(ValueError):
            fourier_eval(single(), 7.0)

    def test_default_trajectory_respects_limits(self):
        traj = default_traj()
        assert traj.limits
        assert traj.dof == 3

    def test_json_round_trip(self):
        traj = default_traj()
        back = FourierTrajectory.from_dict(traj.to_dict())
        t = traj.times()
        for x, y in zip(fourier_eval(traj, t), fourier_eval(back, t)):
            np.testing.assert_array_equal(x, y)


class TestSynthesis:
    def test_noiseless_motor_torque(self):
        robot, traj = surrogate_robot(), default_traj()
        ds = synthesize_dataset(robot, traj, NoiseConfig.off(), seed=1)
        q, qd, qdd = fourier_eval(traj, traj.times())
        np.testing.assert_allclose(ds.y, motor_torque(robot, q, qd, qdd), rtol=1e-12, atol=1e-14)
        np.testing.assert_array_equal(ds.qd, qd)
        np.testing.assert_allclose(ds.qdd, differentiate(qd, traj.dt))

    def test_noiseless_joint_torque_unit_motor(self):
        base = surrogate_robot(friction=False)
        robot = RobotModel(tuple(Link(l.joint, l.inertia, MotorSpec()) for l in base.links), base.gravity)
        traj = default_traj()
        ds = synthesize_dataset(robot, traj, NoiseConfig.off(), seed=0, target="tau")
        q, qd, qdd = fourier_eval(traj, traj.times())
        np.testing.assert_array_equal(ds.y, rnea(robot, q, qd, qdd))

    def test_targets_differ_by_motor_side_terms(self):
        robot, traj = surrogate_robot(), default_traj()
        u = synthesize_dataset(robot, traj, NoiseConfig.off(), 0, "tau_u")
        j = synthesize_dataset(robot, traj, NoiseConfig.off(), 0, "tau")
        q, qd, qdd = fourier_eval(traj, traj.times())
        psi = robot.gear_ratios
        extra = robot.motor_inertias * psi * qdd + robot.friction.torque(qd)
        np.testing.assert_allclose(u.y - j.y / psi, extra, atol=1e-12)

    def test_deterministic(self):
        robot, traj = surrogate_robot(), default_traj()
        a = synthesize_dataset(robot, traj, NoiseConfig(), seed=5)
        b = synthesize_dataset(robot, traj, NoiseConfig(), seed=5)
        c = synthesize_dataset(robot, traj, NoiseConfig(), seed=6)
        for ch in ("q", "qd", "qdd", "y"):
            np.testing.assert_array_equal(getattr(a, ch), getattr(b, ch))
        assert not np.array_equal(a.y, c.y)

    def test_noise_level(self):
        robot, traj = surrogate_robot(), default_traj()
        clean = synthesize_dataset(robot, traj, NoiseConfig.off(), seed=0)
        noisy = synthesize_dataset(robot, traj, NoiseConfig(velocity_std=2e-3), seed=0)
        assert np.std(noisy.qd - clean.qd) == pytest.approx(2e-3, rel=0.1)
        rel = np.std(noisy.y - clean.y, axis=0) / np.max(np.abs(clean.y), axis=0)
        np.testing.assert_allclose(rel, 0.01, rtol=0.15)

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError):
            synthesize_dataset(surrogate_robot(), default_traj(), NoiseConfig(velocity_std=-1.0))


class TestFilter:
    def test_constant_unchanged(self):
        np.testing.assert_allclose(lowpass_zero_phase(np.full(100, 3.3), 2.0, 0.01), 3.3, rtol=1e-14)

    def test_slow_sinusoid_passes_without_lag(self):
        dt, fc = 0.001, 5.0
        t = np.arange(0, 40.0, dt)
        x = np.sin(2 * np.pi * (fc / 20) * t)
        y = lowpass_zero_phase(x, fc, dt)
        mid = slice(len(t) // 4, 3 * len(t) // 4)
        assert np.max(np.abs(y[mid])) == pytest.approx(1.0, abs=0.01)
        lags = np.arange(-50, 51)
        corr = [np.dot(x[mid], np.roll(y, -k)[mid]) for k in lags]
        assert lags[int(np.argmax(corr))] == 0

    def test_attenuates_above_cutoff(self):
        dt = 0.001
        t = np.arange(0, 10.0, dt)
        y = lowpass_zero_phase(np.sin(2 * np.pi * 50 * t), 2.0, dt)
        assert np.max(np.abs(y[1000:-1000])) < 0.01

    @given(arrays(float, (40, 2), elements=st.floats(-10, 10)))
    def test_time_reversal(self, x):
        a = lowpass_zero_phase(x[::-1], [1.0, 3.0], 0.01)
        b = lowpass_zero_phase(x, [1.0, 3.0], 0.01)[::-1]
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            lowpass_zero_phase(np.zeros(10), 50.0, 0.01)
        with pytest.raises(ValueError):
            lowpass_zero_phase(np.zeros(10), 0.0, 0.01)
        with pytest.raises(ValueError):
            lowpass_zero_phase(np.zeros(2), 1.0, 0.01)


class TestDifferentiate:
    def test_ramp(self):
        t = np.arange(0, 1, 0.01)
        np.testing.assert_allclose(differentiate(3 * t, 0.01), 3.0, rtol=1e-12)

    def test_cosine(self):
        dt = 1e-3
        t = np.arange(0, 3, dt)
        err = differentiate(np.cos(t), dt) + np.sin(t)
        assert np.max(np.abs(err[1:-1])) <= 1e-6

    def test_constant(self):
        np.testing.assert_array_equal(differentiate(np.full((20, 2), 4.0), 0.1), 0.0)

    def test_too_short(self):
        with pytest.raises(ValueError):
            differentiate([1.0, 2.0], 0.1)


def make_dataset(n=10, dof=2, seed=0):
    rng = np.random.default_rng(seed)
    t = 0.1 * np.arange(n)
    return Dataset(t, *rng.normal(size=(4, n, dof)))


class TestNormalizeSplit:
    def test_split_sizes(self):
        ds = normalize_split(make_dataset(10))
        assert ds.split == 7 and len(ds.test_slice()) == 3
        assert split_index(1251) == 875

    def test_training_extremes_map_to_unit(self):
        ds = normalize_split(make_dataset(200, 3))
        for c, x in ds.normalized().items():
            train = x[: ds.split]
            np.testing.assert_array_equal(train.min(axis=0), -1.0)
            np.testing.assert_array_equal(train.max(axis=0), 1.0)

    @given(st.integers(10, 60), st.integers(0, 1000))
    def test_round_trip(self, n, seed):
        ds = normalize_split(make_dataset(n, 2, seed))
        nz = ds.normalized()
        for c in ("q", "y"):
            np.testing.assert_allclose(ds.stats.denormalize(c, nz[c]), getattr(ds, c), atol=1e-12)

    def test_test_slice_does_not_leak(self):
        a = make_dataset(50)
        b = make_dataset(50)
        b.y[40:] *= 100.0
        sa, sb = normalize_split(a).stats, normalize_split(b).stats
        for c in ("q", "qd", "qdd", "y"):
            np.testing.assert_array_equal(sa.minimum[c], sb.minimum[c])
            np.testing.assert_array_equal(sa.maximum[c], sb.maximum[c])

    def test_constant_channel(self):
        ds = make_dataset(20)
        ds.q[:, 1] = 2.5
        with pytest.warns(ConstantChannelWarning):
            out = normalize_split(ds)
        np.testing.assert_array_equal(out.normalized()["q"][:, 1], 0.0)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            normalize_split(make_dataset(9))


class TestCsv:
    def test_header(self):
        assert ",".join(csv_header(2)) == "t,q_1,q_2,qd_1,qd_2,qdd_1,qdd_2,y_1,y_2"

    def test_round_trip_exact(self, tmp_path):
        ds = normalize_split(synthesize_dataset(surrogate_robot(), default_traj(), NoiseConfig(), seed=3))
        save_csv(tmp_path / "d.csv", ds)
        back = load_csv(tmp_path / "d.csv")
        for c in ("t", "q", "qd", "qdd", "y"):
            np.testing.assert_array_equal(getattr(back, c), getattr(ds, c))
        assert back.split == ds.split and back.target == ds.target
        for c in ("q", "y"):
            np.testing.assert_array_equal(back.stats.minimum[c], ds.stats.minimum[c])
        assert back.meta["seed"] == 3
        raw = (tmp_path / "d.csv").read_bytes()
        assert b"\r\n" not in raw

    def test_missing_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("t,q_1,qd_1,y_1\n0,0,0,0\n")
        with pytest.raises(DatasetFormatError, match="qdd_1"):
            load_csv(path)

    def test_bad_value_names_row_and_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("t,q_1,qd_1,qdd_1,y_1\n0,0,0,0,0\n0.1,0,abc,0,0\n")
        with pytest.raises(DatasetFormatError, match=r"row 3, column 'qd_1'"):
            load_csv(path)

    def test_non_finite_and_short_rows(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("t,q_1,qd_1,qdd_1,y_1\n0,0,0,nan,0\n")
        with pytest.raises(DatasetFormatError, match="non-finite"):
            load_csv(path)
        path.write_text("t,q_1,qd_1,qdd_1,y_1\n0,0,0,0\n")
        with pytest.raises(DatasetFormatError, match="row 2"):
            load_csv(path)


def test_filter_targets_only_touches_y():
    ds = synthesize_dataset(surrogate_robot(), default_traj(), NoiseConfig(), seed=0)
    out = filter_targets(ds, 5.0, 0.008)
    np.testing.assert_array_equal(out.qd, ds.qd)
    np.testing.assert_array_equal(out.qdd, ds.qdd)
    assert not np.array_equal(out.y, ds.y)
    assert out.meta["cutoffs"] == [5.0, 5.0, 5.0]
