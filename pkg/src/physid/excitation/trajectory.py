"""Third-order Fourier excitation and synthetic measurement generation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import RobotModel, current_to_torque, motor_torque, rnea, torque_to_current
from .dataset import Dataset
from .signals import differentiate, lowpass_zero_phase

ORDER = 3
DEFAULT_DT = 0.008


@dataclass(frozen=True, eq=False)
class FourierTrajectory:
    """Per joint ``q(t) = a0/2 + sum_k a_k sin(k w t) + b_k cos(k w t)``, ``w = 2 pi / T``.

    ``sin_coeffs`` has columns a1..a3, ``cos_coeffs`` b1..b3. Optional limits
    bound |q|, |qd|, |qdd| per joint over one period.
    """

    offset: np.ndarray
    sin_coeffs: np.ndarray
    cos_coeffs: np.ndarray
    period: float
    dt: float = DEFAULT_DT
    limits: dict = field(default_factory=dict)

    def __post_init__(self):
        offset = np.atleast_1d(np.asarray(self.offset, dtype=float))
        a = np.atleast_2d(np.asarray(self.sin_coeffs, dtype=float))
        b = np.atleast_2d(np.asarray(self.cos_coeffs, dtype=float))
        n = offset.shape[0]
        if a.shape != (n, ORDER) or b.shape != (n, ORDER):
            raise ValueError(f"need {ORDER} sine and cosine coefficients per joint")
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "sin_coeffs", a)
        object.__setattr__(self, "cos_coeffs", b)
        if not (self.period > 0 and self.dt > 0):
            raise ValueError("period and sample interval must be positive")
        if self.dt > self.period / 20:
            raise ValueError(f"sample interval {self.dt} s is coarser than period/20")
        self._check_limits()

    @property
    def dof(self) -> int:
        return self.offset.shape[0]

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def n_samples(self) -> int:
        return math.floor(self.period / self.dt + 1e-9) + 1

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_samples)

    def _check_limits(self):
        if not self.limits:
            return
        dense = np.linspace(0.0, self.period, 2001)
        values = dict(zip(("q", "qd", "qdd"), fourier_eval(self, dense)))
        for key, bound in self.limits.items():
            if key not in values:
                raise ValueError(f"unknown limit {key!r}")
            peak = np.max(np.abs(values[key]), axis=0)
            over = np.flatnonzero(peak > np.asarray(bound, dtype=float))
            if over.size:
                raise ValueError(f"trajectory exceeds {key} limits on joints {(over + 1).tolist()}: {peak[over].tolist()}")

    def to_dict(self) -> dict:
        return {
            "a0": (2 * self.offset).tolist(),
            "a": self.sin_coeffs.tolist(),
            "b": self.cos_coeffs.tolist(),
            "period": self.period,
            "dt": self.dt,
            "limits": {k: np.asarray(v, dtype=float).tolist() for k, v in self.limits.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> FourierTrajectory:
        return cls(
            0.5 * np.asarray(d["a0"], dtype=float),
            d["a"],
            d["b"],
            float(d["period"]),
            float(d.get("dt", DEFAULT_DT)),
            d.get("limits", {}),
        )


def load_trajectory(path) -> FourierTrajectory:
    with open(path, encoding="utf-8") as fh:
        return FourierTrajectory.from_dict(json.load(fh))


def fourier_eval(traj: FourierTrajectory, t):
    """Positions, velocities and accelerations at time(s) ``t`` in [0, T]."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < -1e-12) or np.any(t_arr > traj.period * (1 + 1e-12)):
        raise ValueError("evaluation time outside [0, T]")
    tt = np.atleast_1d(t_arr)[:, None, None]
    k = np.arange(1, ORDER + 1)
    kw = k * traj.omega
    s, c = np.sin(kw * tt), np.cos(kw * tt)
    a, b = traj.sin_coeffs, traj.cos_coeffs
    q = traj.offset + np.sum(a * s + b * c, axis=-1)
    qd = np.sum(kw * (a * c - b * s), axis=-1)
    qdd = -np.sum(kw**2 * (a * s + b * c), axis=-1)
    if t_arr.ndim == 0:
        return q[0], qd[0], qdd[0]
    return q, qd, qdd


@dataclass(frozen=True)
class NoiseConfig:
    """Gaussian measurement noise.

    ``current_std`` is absolute (A) per joint; if omitted it is
    ``current_rel`` times the peak |current| of each joint.
    """

    current_std: tuple[float, ...] | None = None
    current_rel: float = 0.01
    velocity_std: float | tuple[float, ...] = 1e-3

    @classmethod
    def off(cls) -> NoiseConfig:
        return cls(current_std=None, current_rel=0.0, velocity_std=0.0)

    @classmethod
    def from_dict(cls, d: dict) -> NoiseConfig:
        std = d.get("current_std")
        vel = d.get("velocity_std", 1e-3)
        return cls(
            tuple(std) if std is not None else None,
            float(d.get("current_rel", 0.01)),
            tuple(vel) if isinstance(vel, list) else float(vel),
        )

    def to_dict(self) -> dict:
        return {
            "current_std": list(self.current_std) if self.current_std is not None else None,
            "current_rel": self.current_rel,
            "velocity_std": list(self.velocity_std) if isinstance(self.velocity_std, tuple) else self.velocity_std,
        }


def synthesize_dataset(
    robot: RobotModel,
    traj: FourierTrajectory,
    noise: NoiseConfig | None = None,
    seed: int = 0,
    target: str = "tau_u",
) -> Dataset:
    """Sample the trajectory and produce noisy torque estimates through motor currents.

    Torques are computed from the exact trajectory, converted to currents,
    perturbed, and converted back. Velocities get their own noise and the
    acceleration channel is replaced by differentiating the noisy velocities.
    """
    if traj.dof != robot.dof:
        raise ValueError(f"trajectory has {traj.dof} joints, robot has {robot.dof}")
    noise = NoiseConfig() if noise is None else noise
    t = traj.times()
    q, qd, qdd = fourier_eval(traj, t)
    if target == "tau_u":
        y_true = motor_torque(robot, q, qd, qdd)
    elif target == "tau":
        y_true = rnea(robot, q, qd, qdd)
    else:
        raise ValueError(f"unknown target kind {target!r}")

    rng = np.random.Generator(np.random.Philox(seed))
    currents = torque_to_current(robot, y_true)
    if noise.current_std is not None:
        sigma_i = np.broadcast_to(np.asarray(noise.current_std, dtype=float), (robot.dof,))
    else:
        sigma_i = noise.current_rel * np.max(np.abs(currents), axis=0)
    sigma_v = np.broadcast_to(np.asarray(noise.velocity_std, dtype=float), (robot.dof,))
    if np.any(sigma_i < 0) or np.any(sigma_v < 0):
        raise ValueError("noise standard deviations must be non-negative")
    currents = currents + sigma_i * rng.standard_normal(currents.shape)
    qd_meas = qd + sigma_v * rng.standard_normal(qd.shape)
    y = current_to_torque(robot, currents)

    meta = {"seed": seed, "dt": traj.dt, "noise": noise.to_dict(), "robot_hash": robot.config_hash()}
    return Dataset(t, q, qd_meas, differentiate(qd_meas, traj.dt), y, target=target, meta=meta)


def filter_targets(raw: Dataset, cutoffs, dt: float) -> Dataset:
    """Smooth the torque channel with the zero-phase low-pass filter."""
    out = raw.with_targets(lowpass_zero_phase(raw.y, cutoffs, dt))
    out.meta = {**raw.meta, "cutoffs": np.broadcast_to(np.asarray(cutoffs, float), (raw.dof,)).tolist()}
    return out
