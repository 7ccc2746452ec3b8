"""Derivatives of plain functions of vectors.

The callables passed in receive :class:`Tensor` arguments and must be built
from the tape's primitives: ``+ - * /``, ``@``, ``tanh``, ``softplus``,
``sin``, ``cos``, ``exp``, ``log`` and the structural helpers. Applying
anything else raises :class:`UnsupportedPrimitiveError` while the function
is being traced.
"""
from __future__ import annotations

import numpy as np

from .tensor import Tensor, backprop

SYMMETRY_TOLERANCE = 1e-10


def _scalar(y) -> Tensor:
    if not isinstance(y, Tensor):
        y = Tensor(y)
    if y.value.size != 1:
        raise ValueError(f"expected a scalar-valued function, got shape {y.shape}")
    return y.reshape(())


def grad(f, x) -> np.ndarray:
    xt = Tensor(np.array(x, dtype=float), requires_grad=True)
    (g,) = backprop(_scalar(f(xt)), [xt])
    return g.value


def _second_derivatives(rows: Tensor, cols: Tensor, y: Tensor) -> np.ndarray:
    (g,) = backprop(y, [cols], create_graph=True)
    out = np.zeros((rows.value.size, cols.value.size))
    for j in range(cols.value.size):
        gj = g[j]
        if not gj.requires_grad:
            continue
        (col,) = backprop(gj, [rows])
        out[:, j] = col.value
    return out


def hessian(f, x) -> np.ndarray:
    """Exact Hessian; raises if the computed matrix is not symmetric to 1e-10."""
    xt = Tensor(np.array(x, dtype=float), requires_grad=True)
    h = _second_derivatives(xt, xt, _scalar(f(xt)))
    asym = np.max(np.abs(h - h.T), initial=0.0)
    scale = max(1.0, np.max(np.abs(h), initial=0.0))
    if asym > SYMMETRY_TOLERANCE * scale:
        raise ArithmeticError(f"Hessian asymmetry {asym:.3e} exceeds tolerance")
    return 0.5 * (h + h.T)


def mixed_jacobian(f, a, b) -> np.ndarray:
    """Matrix of ``d^2 f / (da_i db_j)`` for ``f(a, b)`` scalar."""
    at = Tensor(np.array(a, dtype=float), requires_grad=True)
    bt = Tensor(np.array(b, dtype=float), requires_grad=True)
    return _second_derivatives(at, bt, _scalar(f(at, bt)))


def param_gradient(loss, params) -> np.ndarray:
    """Gradient of ``loss(params)`` with respect to a flat parameter vector.

    ``params`` is either an array or anything with a ``values`` array
    (e.g. :class:`physid.nets.NetworkParams`).
    """
    values = getattr(params, "values", params)
    pt = Tensor(np.array(values, dtype=float), requires_grad=True)
    (g,) = backprop(_scalar(loss(pt)), [pt])
    return g.value
