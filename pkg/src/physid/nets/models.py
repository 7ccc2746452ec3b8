"""Inverse-dynamics models sharing one ``predict(q, qd, qdd)`` interface.

Every model maps physical joint states to physical torques. Networks see
normalized inputs; output scales come from the training statistics so that
the networks work with O(1) quantities.
"""
from __future__ import annotations

import warnings

import numpy as np

from ..autodiff import Tensor, as_tensor, backprop, concat, reshape, softplus
from ..dynamics import FrictionCoefficients, RobotModel, frictionless_motor_torque, rnea
from ..excitation.dataset import NormalizationStats, Samples
from .mlp import PD_EPSILON, MlpSpec, NetworkParams, init_params, mlp_forward

VARIANTS = ("mlp", "delan", "lnn", "lnn_mlp", "rnea_mlp", "rnea_lq")
LAGRANGIAN_VARIANTS = ("delan", "lnn", "lnn_mlp")
DEFAULT_HIDDEN = (64, 64)


class DegenerateRegressorWarning(UserWarning):
    pass


def _tensor_input(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    return a[None, :] if a.ndim == 1 else a


def lagrangian_torque(lagrangian, q, qd, qdd):
    """Euler-Lagrange inverse dynamics of a scalar function ``L(q, qd)``.

    ``tau = (d2L/dqd dqd) qdd + (d2L/dqd dq) qd - dL/dq``, obtained from one
    gradient and one Hessian-vector product along ``(qd, qdd)``; no matrix is
    formed or inverted. ``lagrangian(q, qd)`` returns per-sample values
    ``(B,)``, optionally paired with an auxiliary output that is passed back.
    """
    q, qd, qdd = _tensor_input(q), _tensor_input(qd), _tensor_input(qdd)
    qt = Tensor(q, requires_grad=True)
    qdt = Tensor(qd, requires_grad=True)
    out = lagrangian(qt, qdt)
    value, aux = out if isinstance(out, tuple) else (out, None)
    dl_dq, dl_dqd = backprop(value.sum(), [qt, qdt], create_graph=True)
    directional = (dl_dq * qd + dl_dqd * qdd).sum()
    _, hv = backprop(directional, [qt, qdt], create_graph=True)
    tau = hv - dl_dq
    return (tau, aux) if aux is not None else tau


def affine_lagrangian_torque(lagrangian, x, xdot, scale, n: int):
    """Euler-Lagrange torque of ``L(x)`` where ``x = scale * (q, qd) + shift``.

    ``x`` and its time derivative ``xdot`` are plain arrays (B, 2n); only the
    map from ``x`` onwards is taped, and the chain rule through the affine map
    is applied by hand: ``tau = s_qd (d/dt dL/dx_qd) - s_q dL/dx_q``.
    """
    xt = Tensor(x, requires_grad=True)
    (g,) = backprop(lagrangian(xt).sum(), [xt], create_graph=True)
    (hv,) = backprop((g * xdot).sum(), [xt], create_graph=True)
    return hv[:, n:] * scale[n:] - g[:, :n] * scale[:n]


def lower_triangular_placement(n: int) -> tuple[np.ndarray, np.ndarray]:
    """0/1 matrices scattering diagonal and strictly-lower entries into a flat n x n."""
    diag = np.zeros((n, n * n))
    for i in range(n):
        diag[i, i * n + i] = 1.0
    rows, cols = np.tril_indices(n, -1)
    lower = np.zeros((len(rows), n * n))
    for k, (i, j) in enumerate(zip(rows, cols)):
        lower[k, i * n + j] = 1.0
    return diag, lower


def delan_torque(components, q, qd, qdd):
    """DeLaN inverse dynamics with ``M(q) = L(q)^T L(q)``.

    ``components(q)`` returns the lower-triangular factor ``(B, n, n)`` and the
    direct gravity term ``G(q)`` ``(B, n)``; ``tau = EL(1/2 qd^T M qd) - G``.
    """

    def kinetic(qt, qdt):
        lmat, g = components(qt)
        # qd^T L^T L qd = |L qd|^2
        lqd = lmat @ reshape(qdt, qdt.shape + (1,))
        return 0.5 * (lqd * lqd).sum(axis=(1, 2)), g

    tau, g = lagrangian_torque(kinetic, q, qd, qdd)
    return tau - g


class IdModel:
    """Base class. Subclasses implement :meth:`torque` on tape tensors."""

    variant = ""

    def __init__(self, dof: int, stats: NormalizationStats | None = None, robot: RobotModel | None = None,
                 target: str = "tau_u"):
        self.dof = dof
        self.stats = stats
        self.robot = robot
        self.target = target
        self.networks: dict[str, MlpSpec] = {}
        self.params = np.zeros(0)

    # parameters ---------------------------------------------------------
    def _add_network(self, name: str, spec: MlpSpec):
        self.networks[name] = spec
        self.params = np.zeros(sum(s.n_params for s in self.networks.values()))

    def _offsets(self) -> dict[str, slice]:
        out, offset = {}, 0
        for name, spec in self.networks.items():
            out[name] = slice(offset, offset + spec.n_params)
            offset += spec.n_params
        return out

    def split(self, params):
        """Per-network views of a flat parameter vector (array or tensor)."""
        return {name: params[sl] for name, sl in self._offsets().items()}

    def network_params(self, name: str) -> NetworkParams:
        return NetworkParams.for_spec(self.networks[name], self.params[self._offsets()[name]])

    def init_scheme(self, name: str) -> str:
        return "uniform_fan"

    def initialize(self, seed: int) -> IdModel:
        seeds = np.random.SeedSequence(seed).spawn(max(1, len(self.networks)))
        chunks = [
            init_params(spec, self.init_scheme(name), int(s.generate_state(1)[0])).values
            for (name, spec), s in zip(self.networks.items(), seeds)
        ]
        self.params = np.concatenate(chunks) if chunks else np.zeros(0)
        return self

    # normalization helpers ------------------------------------------------
    def _norm(self, channel: str, x):
        return x if self.stats is None else self.stats.normalize(channel, x)

    def _half(self, channel: str) -> np.ndarray:
        return np.ones(self.dof) if self.stats is None else np.where(
            self.stats.half_range(channel) > 0, self.stats.half_range(channel), 1.0)

    def _center(self, channel: str) -> np.ndarray:
        return np.zeros(self.dof) if self.stats is None else self.stats.center(channel)

    def baseline(self, q, qd, qdd) -> np.ndarray:
        """Analytic rigid-body model matching the target kind (no friction)."""
        if self.robot is None:
            raise ValueError(f"{self.variant} needs a robot model")
        if self.target == "tau":
            return rnea(self.robot, q, qd, qdd)
        return frictionless_motor_torque(self.robot, q, qd, qdd)

    # prediction -----------------------------------------------------------
    uses_baseline = False

    def torque(self, params: Tensor, q, qd, qdd) -> Tensor:
        raise NotImplementedError

    def predict(self, q, qd, qdd) -> np.ndarray:
        single = np.ndim(q) == 1
        q, qd, qdd = (_tensor_input(x) for x in (q, qd, qdd))
        out = self.torque(Tensor(self.params), q, qd, qdd).value
        return out[0] if single else out

    def predict_samples(self, samples: Samples) -> np.ndarray:
        return self.predict(samples.q, samples.qd, samples.qdd)

    def describe(self) -> dict:
        return {}


class MlpModel(IdModel):
    """Black-box regression from normalized (q, qd, qdd) to normalized torque."""

    variant = "mlp"

    def __init__(self, dof, stats=None, robot=None, target="tau_u", hidden=DEFAULT_HIDDEN):
        super().__init__(dof, stats, robot, target)
        self._add_network("mlp", MlpSpec(3 * dof, dof, tuple(hidden)))

    def torque(self, params, q, qd, qdd):
        x = concat([self._norm("q", q), self._norm("qd", qd), self._norm("qdd", qdd)], axis=1)
        out = mlp_forward(self.networks["mlp"], self.split(params)["mlp"], x)
        return out * self._half("y") + self._center("y")


class LnnModel(IdModel):
    """A scalar network plays the Lagrangian of normalized (q, qd)."""

    variant = "lnn"

    def __init__(self, dof, stats=None, robot=None, target="tau_u", hidden=DEFAULT_HIDDEN):
        super().__init__(dof, stats, robot, target)
        self._add_network("lagrangian", MlpSpec(2 * dof, 1, tuple(hidden)))

    def init_scheme(self, name):
        return "lagrangian"

    @property
    def energy_scale(self) -> float:
        if self.stats is None:
            return 1.0
        return float(np.mean(self._half("y") * self._half("q")))

    def energy(self, params, x):
        """Network Lagrangian of normalized inputs x = (q, qd), shape (B, 2n)."""
        out = mlp_forward(self.networks["lagrangian"], self.split(params)["lagrangian"], x)
        return reshape(out, (out.shape[0],)) * self.energy_scale

    def lagrangian(self, params, qt, qdt):
        return self.energy(params, concat([self._norm("q", qt), self._norm("qd", qdt)], axis=1))

    def _rate_scale(self, channel: str) -> np.ndarray:
        """d(normalized)/d(physical) per dimension; constant channels give 0."""
        if self.stats is None:
            return np.ones(self.dof)
        half = self.stats.half_range(channel)
        return np.where(half > 0, 1.0 / np.where(half > 0, half, 1.0), 0.0)

    def torque(self, params, q, qd, qdd):
        q, qd, qdd = _tensor_input(q), _tensor_input(qd), _tensor_input(qdd)
        x = np.concatenate([self._norm("q", q), self._norm("qd", qd)], axis=1)
        scale = np.concatenate([self._rate_scale("q"), self._rate_scale("qd")])
        xdot = np.concatenate([qd, qdd], axis=1) * scale
        return affine_lagrangian_torque(lambda xt: self.energy(params, xt), x, xdot, scale, self.dof)


class LnnMlpModel(LnnModel):
    """LNN plus an additive network h(q, qd) for dissipative torques."""

    variant = "lnn_mlp"

    def __init__(self, dof, stats=None, robot=None, target="tau_u", hidden=DEFAULT_HIDDEN):
        super().__init__(dof, stats, robot, target, hidden)
        self._add_network("residual", MlpSpec(2 * dof, dof, tuple(hidden)))

    def init_scheme(self, name):
        return "lagrangian" if name == "lagrangian" else "uniform_fan"

    def residual(self, params, q, qd):
        x = concat([self._norm("q", q), self._norm("qd", qd)], axis=1)
        return mlp_forward(self.networks["residual"], self.split(params)["residual"], x) * self._half("y")

    def torque(self, params, q, qd, qdd):
        return super().torque(params, q, qd, qdd) + self.residual(params, q, qd)


class DelanModel(IdModel):
    """Network of normalized q giving an inertia factor and a direct G(q)."""

    variant = "delan"

    def __init__(self, dof, stats=None, robot=None, target="tau_u", hidden=DEFAULT_HIDDEN):
        super().__init__(dof, stats, robot, target)
        self._add_network("delan", MlpSpec(dof, dof * (dof + 3) // 2, tuple(hidden)))
        self._diag, self._lower = lower_triangular_placement(dof)

    def init_scheme(self, name):
        return "delan"

    @property
    def inertia_scale(self) -> float:
        if self.stats is None:
            return 1.0
        return float(np.mean(self._half("y") / self._half("qdd")))

    def components(self, params, qt):
        """Inertia factor L (B, n, n) and G (B, n) in physical units."""
        n = self.dof
        n_low = n * (n - 1) // 2
        out = mlp_forward(self.networks["delan"], self.split(params)["delan"], self._norm("q", qt))
        diag = softplus(out[:, :n]) + PD_EPSILON
        flat = diag @ self._diag
        if n_low:
            flat = flat + out[:, n : n + n_low] @ self._lower
        lmat = reshape(flat, (out.shape[0], n, n)) * np.sqrt(self.inertia_scale)
        return lmat, out[:, n + n_low :] * self._half("y")

    def inertia(self, q) -> np.ndarray:
        lmat, _ = self.components(Tensor(self.params), as_tensor(_tensor_input(q)))
        m = np.swapaxes(lmat.value, -1, -2) @ lmat.value
        return m[0] if np.ndim(q) == 1 else m

    def torque(self, params, q, qd, qdd):
        return delan_torque(lambda qt: self.components(params, qt), q, qd, qdd)


class RneaMlpModel(IdModel):
    """Fixed rigid-body baseline plus a network h(q, qd) for the residual."""

    variant = "rnea_mlp"
    uses_baseline = True

    def __init__(self, dof, stats=None, robot=None, target="tau_u", hidden=DEFAULT_HIDDEN):
        if robot is None:
            raise ValueError("RNEA+MLP needs a robot model")
        super().__init__(dof, stats, robot, target)
        self._add_network("residual", MlpSpec(2 * dof, dof, tuple(hidden)))

    def residual(self, params, q, qd):
        x = concat([self._norm("q", q), self._norm("qd", qd)], axis=1)
        return mlp_forward(self.networks["residual"], self.split(params)["residual"], x) * self._half("y")

    def torque(self, params, q, qd, qdd, baseline=None):
        if baseline is None:
            baseline = self.baseline(q, qd, qdd)
        return self.residual(params, q, qd) + baseline


class RneaLqModel(IdModel):
    """Rigid-body baseline plus viscous friction fitted by least squares."""

    variant = "rnea_lq"
    uses_baseline = True

    def __init__(self, dof, stats=None, robot=None, target="tau_u", hidden=None):
        if robot is None:
            raise ValueError("RNEA+LQ needs a robot model")
        super().__init__(dof, stats, robot, target)
        self.friction = FrictionCoefficients.zeros(dof)

    def fit(self, train: Samples) -> FrictionCoefficients:
        """Per joint, minimize sum (y - baseline + theta qd)^2 subject to theta >= 0.

        The scalar problem is convex, so clipping the normal-equation solution
        at zero gives the constrained optimum.
        """
        residual = train.y - self.baseline(train.q, train.qd, train.qdd)
        denom = np.sum(train.qd**2, axis=0)
        theta = np.zeros(self.dof)
        live = denom > 0
        theta[live] = -np.sum(residual * train.qd, axis=0)[live] / denom[live]
        if not np.all(live):
            warnings.warn(
                f"joints {(np.flatnonzero(~live) + 1).tolist()} never move; viscous coefficient set to 0",
                DegenerateRegressorWarning,
                stacklevel=2,
            )
        if np.any(theta < 0):
            warnings.warn(f"negative viscous estimates {theta.tolist()} clipped to 0", stacklevel=2)
        self.friction = FrictionCoefficients(np.maximum(theta, 0.0), np.zeros(self.dof))
        return self.friction

    def torque(self, params, q, qd, qdd, baseline=None):
        if baseline is None:
            baseline = self.baseline(q, qd, qdd)
        return Tensor(baseline + self.friction.torque(qd))

    def describe(self):
        return {"viscous": self.friction.viscous.tolist()}


MODEL_CLASSES = {cls.variant: cls for cls in (MlpModel, DelanModel, LnnModel, LnnMlpModel, RneaMlpModel, RneaLqModel)}


def build_model(variant: str, dof: int, stats=None, robot=None, target="tau_u", hidden=DEFAULT_HIDDEN) -> IdModel:
    try:
        cls = MODEL_CLASSES[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}") from None
    return cls(dof, stats=stats, robot=robot, target=target, hidden=hidden)
