from .api import grad, hessian, mixed_jacobian, param_gradient
from .tensor import (
    Tensor,
    UnsupportedPrimitiveError,
    as_tensor,
    backprop,
    concat,
    cos,
    exp,
    getitem,
    log,
    matmul,
    no_record,
    reshape,
    sigmoid,
    sin,
    softplus,
    stack,
    swap_last,
    tanh,
    transpose,
    tsum,
)

__all__ = [
    "Tensor",
    "UnsupportedPrimitiveError",
    "as_tensor",
    "backprop",
    "concat",
    "cos",
    "exp",
    "getitem",
    "grad",
    "hessian",
    "log",
    "matmul",
    "mixed_jacobian",
    "no_record",
    "param_gradient",
    "reshape",
    "sigmoid",
    "sin",
    "softplus",
    "stack",
    "swap_last",
    "tanh",
    "transpose",
    "tsum",
]
