from .mlp import PD_EPSILON, SCHEMES, MlpSpec, NetworkParams, delan_dof, init_params, mlp_forward
from .models import (
    LAGRANGIAN_VARIANTS,
    MODEL_CLASSES,
    VARIANTS,
    DegenerateRegressorWarning,
    DelanModel,
    IdModel,
    LnnMlpModel,
    LnnModel,
    MlpModel,
    RneaLqModel,
    RneaMlpModel,
    build_model,
    delan_torque,
    lagrangian_torque,
)

__all__ = [
    "DegenerateRegressorWarning",
    "DelanModel",
    "IdModel",
    "LAGRANGIAN_VARIANTS",
    "LnnMlpModel",
    "LnnModel",
    "MODEL_CLASSES",
    "MlpModel",
    "MlpSpec",
    "NetworkParams",
    "PD_EPSILON",
    "RneaLqModel",
    "RneaMlpModel",
    "SCHEMES",
    "VARIANTS",
    "build_model",
    "delan_dof",
    "delan_torque",
    "init_params",
    "lagrangian_torque",
    "mlp_forward",
]
