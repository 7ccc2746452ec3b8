"""Test-set error metrics, torque decomposition and dissipative-torque estimates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor
from ..dynamics import RobotModel, frictionless_motor_torque, motor_torque, rnea
from ..nets.models import IdModel


class GeneratorModel(IdModel):
    """The ground-truth robot wrapped in the model interface."""

    variant = "generator"

    def __init__(self, robot: RobotModel, target: str = "tau_u", stats=None):
        super().__init__(robot.dof, stats, robot, target)

    def torque(self, params, q, qd, qdd, baseline=None):
        if self.target == "tau":
            return Tensor(rnea(self.robot, q, qd, qdd))
        return Tensor(motor_torque(self.robot, q, qd, qdd))


def _states(trajectory):
    """(q, qd, qdd) from a samples-like object or a tuple."""
    if hasattr(trajectory, "qdd"):
        return trajectory.q, trajectory.qd, trajectory.qdd
    q, qd, qdd = trajectory[:3]
    return q, qd, qdd


def _residuals(model: IdModel, test, physical: bool) -> np.ndarray:
    if len(test) == 0:
        raise ValueError("empty test slice")
    r = model.predict_samples(test) - test.y
    if physical or model.stats is None:
        return r
    half = model.stats.half_range("y")
    return r / np.where(half > 0, half, 1.0)


def rmse_per_joint(model: IdModel, test, physical: bool = False) -> np.ndarray:
    """Root mean squared test residual per joint, normalized units unless ``physical``."""
    r = _residuals(model, test, physical)
    return np.sqrt(np.mean(r * r, axis=0))


@dataclass
class ErrorSummary:
    """Per-joint statistics of absolute residuals.

    Quartiles interpolate linearly between order statistics (sample k of
    N sits at quantile k/(N-1)). Whiskers end at the most extreme samples
    within 1.5 IQR of the box.
    """

    rmse: np.ndarray
    mean_abs: np.ndarray
    q25: np.ndarray
    median: np.ndarray
    q75: np.ndarray
    whisker_low: np.ndarray
    whisker_high: np.ndarray
    outliers: np.ndarray

    FIELDS = ("rmse", "mean_abs", "q25", "median", "q75", "whisker_low", "whisker_high", "outliers")

    @classmethod
    def from_residuals(cls, residuals) -> ErrorSummary:
        r = np.asarray(residuals, dtype=float)
        if r.ndim == 1:
            r = r[:, None]
        if r.shape[0] == 0:
            raise ValueError("empty residual set")
        a = np.abs(r)
        q25, med, q75 = np.quantile(a, [0.25, 0.5, 0.75], axis=0, method="linear")
        iqr = q75 - q25
        lo_fence, hi_fence = q25 - 1.5 * iqr, q75 + 1.5 * iqr
        inside = (a >= lo_fence) & (a <= hi_fence)
        low = np.where(inside, a, np.inf).min(axis=0)
        high = np.where(inside, a, -np.inf).max(axis=0)
        return cls(
            np.sqrt(np.mean(r * r, axis=0)),
            a.mean(axis=0),
            q25,
            med,
            q75,
            low,
            high,
            np.sum(~inside, axis=0),
        )

    def rows(self):
        """One dict per joint."""
        return [{f: getattr(self, f)[j].item() for f in self.FIELDS} for j in range(self.rmse.shape[0])]


def abs_error_distribution(model: IdModel, test, physical: bool = False) -> ErrorSummary:
    return ErrorSummary.from_residuals(_residuals(model, test, physical))


@dataclass
class Decomposition:
    """Per-sample, per-joint split of a motor-side torque signal."""

    mass_term: np.ndarray
    inertia_term: np.ndarray
    motor_inertia_term: np.ndarray
    friction_residual: np.ndarray
    total: np.ndarray

    TERMS = ("mass_term", "inertia_term", "motor_inertia_term", "friction_residual")

    def reconstruction(self) -> np.ndarray:
        return self.mass_term + self.inertia_term + self.motor_inertia_term + self.friction_residual


def decompose_contributions(robot: RobotModel, trajectory, y) -> Decomposition:
    """Split ``y`` into point-mass, rotational-inertia, motor-inertia and friction parts.

    The point-mass robot keeps every link mass at its centre of mass and drops
    the rotational inertia; the friction part is whatever the analytic terms
    leave of ``y``.
    """
    q, qd, qdd = (np.asarray(x, dtype=float) for x in _states(trajectory))
    y = np.asarray(y, dtype=float)
    if y.shape != q.shape:
        raise ValueError(f"targets {y.shape} do not align with trajectory {q.shape}")
    psi = robot.gear_ratios
    full = rnea(robot, q, qd, qdd) / psi
    mass = rnea(robot.with_point_masses(), q, qd, qdd) / psi
    motor = robot.motor_inertias * psi * qdd
    return Decomposition(mass, full - mass, motor, y - full - motor, y)


def dissipative_estimate(model: IdModel, trajectory, robot: RobotModel) -> np.ndarray:
    """Predicted motor torque minus the frictionless analytic motor torque."""
    q, qd, qdd = _states(trajectory)
    return model.predict(q, qd, qdd) - frictionless_motor_torque(robot, q, qd, qdd)
