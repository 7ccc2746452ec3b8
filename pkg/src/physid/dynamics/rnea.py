"""Rigid-body inverse dynamics of serial chains.

All functions accept either single states (shape ``(n,)``) or batches
(shape ``(B, n)``) and return arrays of matching leading shape.

Sign convention: ``tau = M(q) qdd - C(q, qd) - G(q)`` with ``G = -grad V``.
Gravity enters through a fictitious base acceleration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .robot import FrictionCoefficients, RobotModel

FD_STEP = 1e-6


@dataclass(frozen=True, eq=False)
class JointState:
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray

    def __post_init__(self):
        for name in ("q", "qd", "qdd"):
            value = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(value)):
                raise ValueError(f"non-finite entries in {name}")
            object.__setattr__(self, name, value)
        if not (self.q.shape == self.qd.shape == self.qdd.shape):
            raise ValueError(f"q, qd, qdd shapes differ: {self.q.shape}, {self.qd.shape}, {self.qdd.shape}")

    @property
    def dof(self) -> int:
        return self.q.shape[-1]

    def __len__(self):
        return 1 if self.q.ndim == 1 else self.q.shape[0]

    def __getitem__(self, index) -> JointState:
        return JointState(self.q[index], self.qd[index], self.qdd[index])


def _check(robot: RobotModel, *arrays) -> None:
    for a in arrays:
        if a.shape[-1] != robot.dof:
            raise ValueError(f"expected {robot.dof} joint values, got shape {a.shape}")


def _batch(x) -> tuple[np.ndarray, bool]:
    a = np.asarray(x, dtype=float)
    return (a[None, :], True) if a.ndim == 1 else (a, False)


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _axis_rotation(axis: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """Rotation matrices (B, 3, 3) about a fixed unit axis."""
    k = _skew(axis)
    s, c = np.sin(angle)[:, None, None], np.cos(angle)[:, None, None]
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def _body_transforms(robot: RobotModel, q: np.ndarray):
    """Per joint: (E, r, s) with E mapping parent coordinates to body coordinates,
    r the body origin in parent coordinates and s the joint axis in body coordinates."""
    out = []
    for i, link in enumerate(robot.links):
        axis = link.joint.local_axis
        rot = link.joint.rotation @ _axis_rotation(axis, q[:, i])  # body -> parent
        out.append((np.swapaxes(rot, -1, -2), link.joint.translation, axis))
    return out


def _apply(mat, vec):
    return np.einsum("bij,bj->bi", mat, vec)


def _apply_t(mat, vec):
    return np.einsum("bji,bj->bi", mat, vec)


def rnea(robot: RobotModel, q, qd, qdd, gravity: bool = True) -> np.ndarray:
    """Joint torques from the recursive Newton-Euler algorithm.

    Spatial vectors are kept as separate angular/linear 3-vectors in body
    coordinates about the body-frame origin.
    """
    (q, single), (qd, _), (qdd, _) = _batch(q), _batch(qd), _batch(qdd)
    _check(robot, q, qd, qdd)
    bsz = q.shape[0]
    frames = _body_transforms(robot, q)

    w = np.zeros((bsz, 3))
    v = np.zeros((bsz, 3))
    dw = np.zeros((bsz, 3))
    dv = np.zeros((bsz, 3)) - (robot.gravity if gravity else 0.0)
    forces = []
    for i, (link, (E, r, s)) in enumerate(zip(robot.links, frames)):
        # parent -> body motion transform, then joint contribution
        w_p = _apply(E, w)
        v_p = _apply(E, v - np.cross(r, w))
        dw_p = _apply(E, dw)
        dv_p = _apply(E, dv - np.cross(r, dw))
        sq = s * qd[:, i : i + 1]
        w = w_p + sq
        v = v_p
        # velocity-product term v x (s qd) for a pure rotation subspace
        dw = dw_p + s * qdd[:, i : i + 1] + np.cross(w, sq)
        dv = dv_p + np.cross(v, sq)

        m, c, inertia = link.inertia.mass, link.inertia.center_of_mass, link.inertia.rotational_inertia
        # I * a
        n_ia = dw @ inertia.T + m * np.cross(c, dv)
        f_ia = m * dv - m * np.cross(c, dw)
        # v x* (I v)
        n_iv = w @ inertia.T + m * np.cross(c, v)
        f_iv = m * v - m * np.cross(c, w)
        n = n_ia + np.cross(w, n_iv) + np.cross(v, f_iv)
        f = f_ia + np.cross(w, f_iv)
        forces.append([n, f])

    tau = np.zeros((bsz, robot.dof))
    for i in range(robot.dof - 1, -1, -1):
        E, r, s = frames[i]
        n, f = forces[i]
        tau[:, i] = n @ s
        if i > 0:
            f_parent = _apply_t(E, f)
            n_parent = _apply_t(E, n) + np.cross(r, f_parent)
            forces[i - 1][0] = forces[i - 1][0] + n_parent
            forces[i - 1][1] = forces[i - 1][1] + f_parent
    return tau[0] if single else tau


def mass_matrix(robot: RobotModel, q) -> np.ndarray:
    """Columns from unit accelerations with zero velocity, gravity subtracted out."""
    q, single = _batch(q)
    _check(robot, q)
    n, bsz = robot.dof, q.shape[0]
    qs = np.repeat(q, n + 1, axis=0)
    accel = np.tile(np.vstack([np.zeros(n), np.eye(n)]), (bsz, 1))
    tau = rnea(robot, qs, np.zeros_like(qs), accel).reshape(bsz, n + 1, n)
    mass = np.swapaxes(tau[:, 1:, :] - tau[:, :1, :], -1, -2)
    return mass[0] if single else mass


def forward_kinematics(robot: RobotModel, q):
    """World rotations (B, n, 3, 3) and origins (B, n, 3) of each body frame."""
    q, _ = _batch(q)
    frames = _body_transforms(robot, q)
    bsz = q.shape[0]
    rot = np.broadcast_to(np.eye(3), (bsz, 3, 3))
    origin = np.zeros((bsz, 3))
    rots, origins = [], []
    for E, r, _ in frames:
        origin = origin + _apply(rot, np.broadcast_to(r, (bsz, 3)))
        rot = rot @ np.swapaxes(E, -1, -2)
        rots.append(rot)
        origins.append(origin)
    return np.stack(rots, axis=1), np.stack(origins, axis=1)


def potential_energy(robot: RobotModel, q) -> np.ndarray | float:
    """V = -sum m_i g . p_i with p_i the world-frame center of mass."""
    q, single = _batch(q)
    _check(robot, q)
    rots, origins = forward_kinematics(robot, q)
    energy = np.zeros(q.shape[0])
    for i, link in enumerate(robot.links):
        com = origins[:, i] + _apply(rots[:, i], np.broadcast_to(link.inertia.center_of_mass, origins[:, i].shape))
        energy -= link.inertia.mass * (com @ robot.gravity)
    return float(energy[0]) if single else energy


def kinetic_energy(robot: RobotModel, q, qd) -> np.ndarray | float:
    (q, single), (qd, _) = _batch(q), _batch(qd)
    _check(robot, q, qd)
    energy = 0.5 * np.einsum("bi,bij,bj->b", qd, mass_matrix(robot, q), qd)
    return float(energy[0]) if single else energy


def euler_lagrange_oracle(robot: RobotModel, q, qd, qdd, step: float = FD_STEP) -> np.ndarray:
    """Inverse dynamics assembled from the Lagrangian by central differences.

    tau = M qdd + (dM/dt) qd - 1/2 grad_q(qd' M qd) + grad_q V. Independent of
    :func:`rnea` except that the mass matrix is obtained from it.
    """
    (q, single), (qd, _), (qdd, _) = _batch(q), _batch(qd), _batch(qdd)
    _check(robot, q, qd, qdd)
    n = robot.dof
    mass = mass_matrix(robot, q)
    tau = np.einsum("bij,bj->bi", mass, qdd)
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        dm = (mass_matrix(robot, q + e) - mass_matrix(robot, q - e)) / (2 * step)
        dv = (potential_energy(robot, q + e) - potential_energy(robot, q - e)) / (2 * step)
        tau += np.einsum("bij,bj->bi", dm, qd) * qd[:, k : k + 1]
        tau[:, k] += -0.5 * np.einsum("bi,bij,bj->b", qd, dm, qd) + dv
    return tau[0] if single else tau


def motor_torque(robot: RobotModel, q, qd, qdd, friction: FrictionCoefficients | None = None) -> np.ndarray:
    """Motor-side torque per joint: tau_rbd/psi + I_M psi qdd + tau_D(qd)."""
    friction = robot.friction if friction is None else friction
    psi = robot.gear_ratios
    return rnea(robot, q, qd, qdd) / psi + robot.motor_inertias * psi * np.asarray(qdd) + friction.torque(qd)


def frictionless_motor_torque(robot: RobotModel, q, qd, qdd) -> np.ndarray:
    psi = robot.gear_ratios
    return rnea(robot, q, qd, qdd) / psi + robot.motor_inertias * psi * np.asarray(qdd)


def current_to_torque(robot: RobotModel, currents) -> np.ndarray:
    return robot.gear_ratios * robot.torque_constants * np.asarray(currents, dtype=float)


def torque_to_current(robot: RobotModel, torque) -> np.ndarray:
    return np.asarray(torque, dtype=float) / (robot.gear_ratios * robot.torque_constants)


def power_balance_residual(robot: RobotModel, q, qd, qdd, dt: float) -> np.ndarray:
    """qd . tau - d(T + V)/dt at interior samples of a uniformly sampled trajectory."""
    q, qd, qdd = (np.asarray(x, dtype=float) for x in (q, qd, qdd))
    if q.ndim != 2 or q.shape[0] < 3:
        raise ValueError("power balance needs at least 3 samples")
    energy = kinetic_energy(robot, q, qd) + potential_energy(robot, q)
    power = np.einsum("bi,bi->b", qd, rnea(robot, q, qd, qdd))
    return power[1:-1] - (energy[2:] - energy[:-2]) / (2 * dt)
