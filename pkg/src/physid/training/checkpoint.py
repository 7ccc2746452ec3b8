"""JSON checkpoints of trained models."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..dynamics import FrictionCoefficients, RobotModel
from ..excitation.dataset import NormalizationStats
from ..nets.models import IdModel, RneaLqModel, build_model
from .config import ConfigError

FORMAT = 1


class CheckpointError(ConfigError):
    pass


def checkpoint_dict(model: IdModel, seed: int | None = None) -> dict:
    hidden = next(iter(model.networks.values())).hidden if model.networks else None
    d = {
        "format": FORMAT,
        "variant": model.variant,
        "dof": model.dof,
        "target": model.target,
        "seed": seed,
        "hidden": list(hidden) if hidden else None,
        "networks": {name: spec.to_dict() for name, spec in model.networks.items()},
        "params": [repr(float(v)) for v in model.params],
        "stats": model.stats.to_dict() if model.stats is not None else None,
        "robot_hash": model.robot.config_hash() if model.robot is not None else None,
    }
    if isinstance(model, RneaLqModel):
        d["viscous"] = model.friction.viscous.tolist()
    return d


def save_checkpoint(path, model: IdModel, seed: int | None = None) -> None:
    Path(path).write_text(json.dumps(checkpoint_dict(model, seed), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def model_from_checkpoint(d: dict, robot: RobotModel | None) -> IdModel:
    if d.get("format") != FORMAT:
        raise CheckpointError(f"unsupported checkpoint format {d.get('format')!r}")
    want = d.get("robot_hash")
    if want is not None:
        if robot is None:
            raise CheckpointError(f"{d['variant']} checkpoint needs the robot it was trained with")
        if robot.config_hash() != want:
            raise CheckpointError(
                f"{d['variant']} checkpoint was trained on robot {want}, not {robot.config_hash()}"
            )
    stats = NormalizationStats.from_dict(d["stats"]) if d.get("stats") else None
    hidden = tuple(d["hidden"]) if d.get("hidden") else None
    kwargs = {"hidden": hidden} if hidden else {}
    model = build_model(d["variant"], int(d["dof"]), stats, robot if want else None, d["target"], **kwargs)
    params = np.array([float(v) for v in d["params"]])
    if params.shape != model.params.shape:
        raise CheckpointError(f"{d['variant']} checkpoint has {params.size} parameters, model needs {model.params.size}")
    model.params = params
    if isinstance(model, RneaLqModel):
        model.friction = FrictionCoefficients(np.asarray(d["viscous"], float), np.zeros(model.dof))
    return model


def load_checkpoint(path, robot: RobotModel | None = None) -> IdModel:
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint ({exc})") from None
    return model_from_checkpoint(d, robot)
