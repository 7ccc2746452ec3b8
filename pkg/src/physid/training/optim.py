"""Loss and the Adam update."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor
from ..excitation.dataset import Samples


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> AdamState:
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, config) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns new parameters and moments."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError(f"shape mismatch: params {params.shape}, grads {grads.shape}, moments {state.m.shape}")
    t = state.step + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grads
    v = config.beta2 * state.v + (1.0 - config.beta2) * grads * grads
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    return params - config.lr * m_hat / (np.sqrt(v_hat) + config.eps), AdamState(m, v, t)


def target_scale(model) -> np.ndarray:
    """Per-joint divisor turning torque residuals into normalized units."""
    if model.stats is None:
        return np.ones(model.dof)
    half = model.stats.half_range("y")
    return np.where(half > 0, half, 1.0)


def mse_loss(model, batch: Samples, params=None, baseline=None):
    """Mean squared residual over samples and joints, in normalized target units.

    With tape parameters the result is a scalar :class:`Tensor`; otherwise a float.
    """
    if len(batch) == 0:
        raise ValueError("loss of an empty batch")
    taped = isinstance(params, Tensor)
    p = params if taped else Tensor(model.params if params is None else np.asarray(params, dtype=float))
    kw = {"baseline": baseline} if baseline is not None else {}
    pred = model.torque(p, batch.q, batch.qd, batch.qdd, **kw)
    r = (pred - batch.y) / target_scale(model)
    loss = (r * r).sum() / r.value.size
    return loss if taped else float(loss.value)
