from .rnea import (
    JointState,
    current_to_torque,
    euler_lagrange_oracle,
    forward_kinematics,
    frictionless_motor_torque,
    kinetic_energy,
    mass_matrix,
    motor_torque,
    potential_energy,
    power_balance_residual,
    rnea,
    torque_to_current,
)
from .robot import (
    FrictionCoefficients,
    JointSpec,
    Link,
    MotorSpec,
    RobotConfigError,
    RobotModel,
    SpatialInertia,
    load_robot,
    pendulum,
    planar_two_link,
    random_robot,
    save_robot,
    surrogate_robot,
)

__all__ = [
    "FrictionCoefficients",
    "JointSpec",
    "JointState",
    "Link",
    "MotorSpec",
    "RobotConfigError",
    "RobotModel",
    "SpatialInertia",
    "current_to_torque",
    "euler_lagrange_oracle",
    "forward_kinematics",
    "frictionless_motor_torque",
    "kinetic_energy",
    "load_robot",
    "mass_matrix",
    "motor_torque",
    "pendulum",
    "planar_two_link",
    "potential_energy",
    "power_balance_residual",
    "random_robot",
    "rnea",
    "save_robot",
    "surrogate_robot",
    "torque_to_current",
]
