"""Multilayer perceptrons over a flat parameter vector."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Tensor, as_tensor, softplus, tanh
from ..autodiff.tensor import affine, view

ACTIVATIONS = {"tanh": tanh, "softplus": softplus}
SCHEMES = ("uniform_fan", "lagrangian", "delan")
PD_EPSILON = 1e-4


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    output_dim: int
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("an MLP needs at least one hidden layer of width >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input and output dimensions must be positive")

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    @property
    def n_params(self) -> int:
        return sum(i * o + o for i, o in self.layer_shapes)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "hidden": list(self.hidden),
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MlpSpec:
        return cls(int(d["input_dim"]), int(d["output_dim"]), tuple(d["hidden"]), d.get("activation", "tanh"))


@dataclass
class NetworkParams:
    """Flat parameters; per layer a weight block (in x out) followed by a bias."""

    values: np.ndarray
    shapes: list[tuple[int, int]]
    activations: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = sum(i * o + o for i, o in self.shapes)
        if self.values.shape != (expected,):
            raise ValueError(f"parameter vector has {self.values.size} entries, layers need {expected}")

    @classmethod
    def for_spec(cls, spec: MlpSpec, values) -> NetworkParams:
        acts = [spec.activation] * len(spec.hidden) + ["identity"]
        return cls(values, spec.layer_shapes, acts)

    def layer(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        w, b = _slices(self.shapes)[k]
        i, o = self.shapes[k]
        return self.values[w].reshape(i, o), self.values[b]


def _slices(shapes):
    out, offset = [], 0
    for i, o in shapes:
        w = slice(offset, offset + i * o)
        b = slice(w.stop, w.stop + o)
        out.append((w, b))
        offset = b.stop
    return out


def mlp_forward(spec: MlpSpec, params, x):
    """Affine/activation stack with an affine output layer.

    ``params`` may be a :class:`NetworkParams`, an array, or a tape tensor;
    ``x`` may be ``(input_dim,)`` or ``(B, input_dim)``. Plain inputs give a
    plain array back.
    """
    plain = not isinstance(params, Tensor) and not isinstance(x, Tensor)
    values = params.values if isinstance(params, NetworkParams) else params
    if isinstance(values, Tensor):
        if values.shape != (spec.n_params,):
            raise ValueError(f"expected {spec.n_params} parameters, got {values.shape}")
    elif np.shape(values) != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} parameters, got {np.shape(values)}")
    if np.shape(x.value if isinstance(x, Tensor) else x)[-1] != spec.input_dim:
        raise ValueError(f"input has wrong dimension, expected {spec.input_dim}")
    values = as_tensor(values)
    h = as_tensor(x)
    act = ACTIVATIONS[spec.activation]
    layers = list(zip(spec.layer_shapes, _slices(spec.layer_shapes)))
    if h.ndim == 1:
        h = h.reshape(1, spec.input_dim)
        squeeze = True
    else:
        squeeze = False
    for k, ((i, o), (w, b)) in enumerate(layers):
        h = affine(h, view(values, w, (i, o)), values[b])
        if k < len(layers) - 1:
            h = act(h)
    if squeeze:
        h = h.reshape(spec.output_dim)
    return h.value if plain else h


def delan_dof(output_dim: int) -> int:
    """Degrees of freedom for a DeLaN head of n(n+1)/2 + n outputs."""
    n = int(round((math.sqrt(9 + 8 * output_dim) - 3) / 2))
    if n < 1 or n * (n + 3) // 2 != output_dim:
        raise ValueError(f"{output_dim} outputs do not form a DeLaN head")
    return n


def inverse_softplus(y: float) -> float:
    return float(y + np.log(-np.expm1(-y)))


def init_params(spec: MlpSpec, scheme: str = "uniform_fan", seed: int = 0) -> NetworkParams:
    """Deterministic initialization.

    ``uniform_fan`` draws weights from U(+-sqrt(6/(fan_in+fan_out))) with zero
    biases. ``lagrangian`` additionally shrinks the output layer by 0.1.
    ``delan`` does the same and biases the inertia-factor diagonal so that the
    assembled inertia starts near the identity.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown initialization scheme {scheme!r}; choose from {SCHEMES}")
    rng = np.random.default_rng(seed)
    values = np.zeros(spec.n_params)
    slices = _slices(spec.layer_shapes)
    for (i, o), (w, _) in zip(spec.layer_shapes, slices):
        bound = math.sqrt(6.0 / (i + o))
        values[w] = rng.uniform(-bound, bound, size=i * o)
    if scheme in ("lagrangian", "delan"):
        w, _ = slices[-1]
        values[w] *= 0.1
    if scheme == "delan":
        n = delan_dof(spec.output_dim)
        _, b = slices[-1]
        values[b.start : b.start + n] = inverse_softplus(1.0 - PD_EPSILON)
    return NetworkParams.for_spec(spec, values)
