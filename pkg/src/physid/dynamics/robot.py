"""Serial-chain robot description: joints, link inertias, motors, friction."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

MAX_DOF = 12


class RobotConfigError(ValueError):
    pass


def _frozen(x, shape=None) -> np.ndarray:
    a = np.array(x, dtype=float)
    if shape is not None and a.shape != shape:
        raise RobotConfigError(f"expected shape {shape}, got {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpatialInertia:
    """Rigid-body inertia; ``rotational_inertia`` is taken about the body-frame origin."""

    mass: float
    center_of_mass: np.ndarray
    rotational_inertia: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center_of_mass", _frozen(self.center_of_mass, (3,)))
        object.__setattr__(self, "rotational_inertia", _frozen(self.rotational_inertia, (3, 3)))
        if not self.mass > 0:
            raise RobotConfigError(f"mass must be positive, got {self.mass}")
        inertia = self.rotational_inertia
        if np.max(np.abs(inertia - inertia.T)) > 1e-12 * max(1.0, np.max(np.abs(inertia))):
            raise RobotConfigError("rotational inertia must be symmetric")
        principal = np.linalg.eigvalsh(self.com_inertia())
        tol = 1e-9 * max(1.0, float(np.max(np.abs(principal))))
        if principal.min() < -tol:
            raise RobotConfigError("rotational inertia has a negative principal moment")
        a, b, c = principal
        if a + b < c - tol:
            raise RobotConfigError("principal moments violate the triangle inequality")

    def com_inertia(self) -> np.ndarray:
        """Rotational inertia shifted to the center of mass."""
        c = self.center_of_mass
        return self.rotational_inertia - self.mass * (np.dot(c, c) * np.eye(3) - np.outer(c, c))

    @classmethod
    def from_com_inertia(cls, mass, center_of_mass, com_inertia) -> SpatialInertia:
        c = np.asarray(center_of_mass, dtype=float)
        shifted = np.asarray(com_inertia, dtype=float) + mass * (np.dot(c, c) * np.eye(3) - np.outer(c, c))
        return cls(mass, c, shifted)

    def point_mass(self) -> SpatialInertia:
        """Same mass and center of mass with the inertia tensor about the CoM zeroed."""
        return SpatialInertia.from_com_inertia(self.mass, self.center_of_mass, np.zeros((3, 3)))


@dataclass(frozen=True, eq=False)
class JointSpec:
    """Revolute joint.

    ``rotation``/``translation`` place the joint frame in the parent body frame
    (columns of ``rotation`` are the joint-frame axes in parent coordinates).
    ``axis`` is given in parent coordinates.
    """

    axis: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    joint_type: str = "revolute"

    def __post_init__(self):
        object.__setattr__(self, "axis", _frozen(self.axis, (3,)))
        object.__setattr__(self, "rotation", _frozen(self.rotation, (3, 3)))
        object.__setattr__(self, "translation", _frozen(self.translation, (3,)))
        if self.joint_type != "revolute":
            raise RobotConfigError(f"unsupported joint type {self.joint_type!r}")
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-12:
            raise RobotConfigError("joint axis must be a unit vector")
        if np.max(np.abs(self.rotation.T @ self.rotation - np.eye(3))) > 1e-12:
            raise RobotConfigError("joint rotation must be orthonormal")

    @property
    def local_axis(self) -> np.ndarray:
        return self.rotation.T @ self.axis


@dataclass(frozen=True)
class MotorSpec:
    gear_ratio: float = 1.0
    torque_constant: float = 1.0
    motor_inertia: float = 0.0

    def __post_init__(self):
        if not (self.gear_ratio > 0 and self.torque_constant > 0 and self.motor_inertia >= 0):
            raise RobotConfigError(f"invalid motor constants {self}")


@dataclass(frozen=True, eq=False)
class FrictionCoefficients:
    viscous: np.ndarray
    coulomb: np.ndarray
    coulomb_smoothing_velocity: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "viscous", _frozen(self.viscous))
        object.__setattr__(self, "coulomb", _frozen(self.coulomb))
        if self.viscous.shape != self.coulomb.shape or self.viscous.ndim != 1:
            raise RobotConfigError("viscous and coulomb vectors must have equal length")
        if np.any(self.viscous < 0) or np.any(self.coulomb < 0):
            raise RobotConfigError("friction coefficients must be non-negative")
        if not self.coulomb_smoothing_velocity > 0:
            raise RobotConfigError("coulomb smoothing velocity must be positive")

    @classmethod
    def zeros(cls, n: int) -> FrictionCoefficients:
        return cls(np.zeros(n), np.zeros(n))

    def torque(self, qd) -> np.ndarray:
        """Dissipative torque ``-viscous*qd - coulomb*tanh(qd/v0)``."""
        qd = np.asarray(qd, dtype=float)
        return -self.viscous * qd - self.coulomb * np.tanh(qd / self.coulomb_smoothing_velocity)


@dataclass(frozen=True, eq=False)
class Link:
    joint: JointSpec
    inertia: SpatialInertia
    motor: MotorSpec = MotorSpec()


@dataclass(frozen=True, eq=False)
class RobotModel:
    links: tuple[Link, ...]
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    friction: FrictionCoefficients | None = None

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "gravity", _frozen(self.gravity, (3,)))
        if not 1 <= len(self.links) <= MAX_DOF:
            raise RobotConfigError(f"need 1..{MAX_DOF} joints, got {len(self.links)}")
        if self.friction is None:
            object.__setattr__(self, "friction", FrictionCoefficients.zeros(self.dof))
        elif self.friction.viscous.shape != (self.dof,):
            raise RobotConfigError("friction vectors must have one entry per joint")

    @property
    def dof(self) -> int:
        return len(self.links)

    @property
    def gear_ratios(self) -> np.ndarray:
        return np.array([l.motor.gear_ratio for l in self.links])

    @property
    def torque_constants(self) -> np.ndarray:
        return np.array([l.motor.torque_constant for l in self.links])

    @property
    def motor_inertias(self) -> np.ndarray:
        return np.array([l.motor.motor_inertia for l in self.links])

    def with_friction(self, friction: FrictionCoefficients) -> RobotModel:
        return replace(self, friction=friction)

    def with_point_masses(self) -> RobotModel:
        return replace(self, links=tuple(replace(l, inertia=l.inertia.point_mass()) for l in self.links))

    def to_dict(self) -> dict:
        return {
            "gravity": self.gravity.tolist(),
            "links": [
                {
                    "joint": {
                        "axis": l.joint.axis.tolist(),
                        "rotation": l.joint.rotation.tolist(),
                        "translation": l.joint.translation.tolist(),
                        "type": l.joint.joint_type,
                    },
                    "inertia": {
                        "mass": l.inertia.mass,
                        "center_of_mass": l.inertia.center_of_mass.tolist(),
                        "rotational_inertia": l.inertia.rotational_inertia.tolist(),
                    },
                    "motor": {
                        "gear_ratio": l.motor.gear_ratio,
                        "torque_constant": l.motor.torque_constant,
                        "motor_inertia": l.motor.motor_inertia,
                    },
                }
                for l in self.links
            ],
            "friction": {
                "viscous": self.friction.viscous.tolist(),
                "coulomb": self.friction.coulomb.tolist(),
                "coulomb_smoothing_velocity": self.friction.coulomb_smoothing_velocity,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> RobotModel:
        try:
            links = []
            for i, entry in enumerate(data["links"]):
                j, b = entry["joint"], entry["inertia"]
                m = entry.get("motor", {})
                links.append(
                    Link(
                        JointSpec(
                            j["axis"],
                            j.get("rotation", np.eye(3)),
                            j.get("translation", np.zeros(3)),
                            j.get("type", "revolute"),
                        ),
                        SpatialInertia(float(b["mass"]), b["center_of_mass"], b["rotational_inertia"]),
                        MotorSpec(
                            float(m.get("gear_ratio", 1.0)),
                            float(m.get("torque_constant", 1.0)),
                            float(m.get("motor_inertia", 0.0)),
                        ),
                    )
                )
            friction = None
            if "friction" in data:
                f = data["friction"]
                friction = FrictionCoefficients(
                    f.get("viscous", [0.0] * len(links)),
                    f.get("coulomb", [0.0] * len(links)),
                    float(f.get("coulomb_smoothing_velocity", 0.01)),
                )
            return cls(tuple(links), data.get("gravity", [0.0, 0.0, -9.81]), friction)
        except KeyError as exc:
            raise RobotConfigError(f"robot description is missing field {exc.args[0]!r}") from None

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def load_robot(path) -> RobotModel:
    with open(path, encoding="utf-8") as fh:
        return RobotModel.from_dict(json.load(fh))


def save_robot(robot: RobotModel, path) -> None:
    Path(path).write_text(json.dumps(robot.to_dict(), indent=2) + "\n", encoding="utf-8")


def _rod(mass: float, length: float, direction: int, radius: float = 0.05) -> SpatialInertia:
    """Uniform cylinder along body axis ``direction`` starting at the frame origin."""
    com = np.zeros(3)
    com[direction] = 0.5 * length
    perp = mass * (3 * radius**2 + length**2) / 12.0
    diag = np.full(3, perp)
    diag[direction] = 0.5 * mass * radius**2
    return SpatialInertia.from_com_inertia(mass, com, np.diag(diag))


def surrogate_robot(friction: bool = True) -> RobotModel:
    """The default desk-scale 3-DOF arm (axes z, y, y).

    Link 1 stands vertically; links 2 and 3 extend along their local x axes.
    """
    lengths = [0.4, 0.3, 0.2]
    masses = [10.0, 5.0, 2.0]
    axes = [(0, 0, 1), (0, 1, 0), (0, 1, 0)]
    offsets = [(0, 0, 0), (0, 0, lengths[0]), (lengths[1], 0, 0)]
    directions = [2, 0, 0]
    motors = [MotorSpec(100.0, 0.1, 1e-4), MotorSpec(100.0, 0.1, 1e-4), MotorSpec(50.0, 0.05, 5e-5)]
    links = tuple(
        Link(JointSpec(axes[i], np.eye(3), offsets[i]), _rod(masses[i], lengths[i], directions[i]), motors[i])
        for i in range(3)
    )
    fr = FrictionCoefficients([8.0, 5.0, 2.0], [3.0, 2.0, 1.0], 0.01)
    return RobotModel(links, np.array([0.0, 0.0, -9.81]), fr if friction else FrictionCoefficients.zeros(3))


def pendulum(mass: float = 1.0, length: float = 1.0, gravity: float = 9.81) -> RobotModel:
    """Point-mass pendulum swinging about y; q = 0 hangs straight down."""
    inertia = SpatialInertia.from_com_inertia(mass, [0.0, 0.0, -length], np.zeros((3, 3)))
    return RobotModel((Link(JointSpec([0.0, 1.0, 0.0]), inertia),), np.array([0.0, 0.0, -gravity]))


def planar_two_link(m1=1.0, m2=1.0, l1=1.0, l2=1.0, gravity: float = 9.81) -> RobotModel:
    """Two point masses at the link tips in the x-z plane, both joints about y.

    With q = 0 the arm points along +x; gravity acts along -z.
    """
    b1 = SpatialInertia.from_com_inertia(m1, [l1, 0.0, 0.0], np.zeros((3, 3)))
    b2 = SpatialInertia.from_com_inertia(m2, [l2, 0.0, 0.0], np.zeros((3, 3)))
    return RobotModel(
        (Link(JointSpec([0.0, 1.0, 0.0]), b1), Link(JointSpec([0.0, 1.0, 0.0], translation=[l1, 0.0, 0.0]), b2)),
        np.array([0.0, 0.0, -gravity]),
    )


def random_robot(rng: np.random.Generator, dof: int) -> RobotModel:
    """Random serial chain with physically consistent inertias, for property tests."""
    links = []
    for _ in range(dof):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        qmat, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(qmat) < 0:
            qmat[:, 0] = -qmat[:, 0]
        axis = axis / np.linalg.norm(axis)
        mass = rng.uniform(0.5, 5.0)
        com = rng.uniform(-0.3, 0.3, size=3)
        # second-moment construction guarantees the triangle inequality
        spread = rng.normal(size=(3, 3)) * 0.1
        sigma = mass * spread @ spread.T
        com_inertia = np.trace(sigma) * np.eye(3) - sigma + 1e-3 * np.eye(3)
        links.append(
            Link(
                JointSpec(axis, qmat, rng.uniform(-0.5, 0.5, size=3)),
                SpatialInertia.from_com_inertia(mass, com, com_inertia),
            )
        )
    return RobotModel(tuple(links), np.array([0.0, 0.0, -9.81]))
