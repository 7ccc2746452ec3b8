"""Experiment manifests: one JSON file tying robot, excitation, noise and training together."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from ..dynamics import RobotConfigError, RobotModel, load_robot
from ..excitation import FourierTrajectory, NoiseConfig, load_trajectory
from ..excitation.dataset import TARGET_KINDS
from ..nets.models import VARIANTS
from ..training import ConfigError, TrainConfig

DEFAULT_MANIFEST = "default_manifest.json"


def default_manifest_path() -> Path:
    return Path(str(resources.files("physid") / "data" / DEFAULT_MANIFEST))


def derive_seeds(seed: int, count: int) -> tuple[int, ...]:
    """Training seeds drawn deterministically from the manifest seed."""
    return tuple(int(s) for s in np.random.SeedSequence(seed).generate_state(count, dtype=np.uint32))


@dataclass
class ExperimentManifest:
    path: Path
    robot_path: Path
    trajectory_path: Path
    noise: NoiseConfig
    target: str
    cutoff_hz: list[float]
    seed: int
    n_seeds: int
    output: Path
    variants: list[str]
    train_defaults: dict = field(default_factory=dict)
    train_overrides: dict = field(default_factory=dict)

    def robot(self) -> RobotModel:
        try:
            return load_robot(self.robot_path)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, RobotConfigError) as exc:
            raise ConfigError(f"{self.robot_path}: invalid robot config ({exc})") from None

    def trajectory(self) -> FourierTrajectory:
        try:
            return load_trajectory(self.trajectory_path)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{self.trajectory_path}: invalid trajectory config ({exc})") from None

    def train_config(self, variant: str) -> TrainConfig:
        fields = {**self.train_defaults, **self.train_overrides.get(variant, {})}
        fields.setdefault("seeds", derive_seeds(self.seed, self.n_seeds))
        try:
            return TrainConfig.from_dict({**fields, "variant": variant})
        except ConfigError as exc:
            raise ConfigError(f"{self.path}: train.{variant}: {exc}") from None

    def with_overrides(self, seed=None, output=None, target=None) -> ExperimentManifest:
        out = self
        if seed is not None:
            out = replace(out, seed=int(seed))
        if output is not None:
            out = replace(out, output=Path(output))
        if target is not None:
            if target not in TARGET_KINDS:
                raise ConfigError(f"target: must be one of {TARGET_KINDS}, got {target!r}")
            out = replace(out, target=target)
        return out


def _require(d: dict, key: str, path):
    if key not in d:
        raise ConfigError(f"{path}: missing field {key!r}")
    return d[key]


def load_manifest(path=None) -> ExperimentManifest:
    path = Path(path) if path is not None else default_manifest_path()
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read manifest ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    base = path.parent

    def resolve(key):
        p = Path(_require(d, key, path))
        p = p if p.is_absolute() else base / p
        if not p.exists():
            raise ConfigError(f"{path}: field {key!r} points to missing file {p}")
        return p

    target = d.get("target", "tau_u")
    if target not in TARGET_KINDS:
        raise ConfigError(f"{path}: field 'target' must be one of {TARGET_KINDS}, got {target!r}")
    variants = list(d.get("variants", VARIANTS))
    bad = [v for v in variants if v not in VARIANTS]
    if bad:
        raise ConfigError(f"{path}: field 'variants' has unknown tags {bad}")
    seed = d.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"{path}: field 'seed' must be a non-negative integer")
    n_seeds = d.get("n_seeds", 3)
    if not isinstance(n_seeds, int) or n_seeds < 1:
        raise ConfigError(f"{path}: field 'n_seeds' must be a positive integer")
    cutoff = d.get("cutoff_hz", 5.0)
    cutoff = [float(c) for c in np.atleast_1d(cutoff)]
    try:
        noise = NoiseConfig.from_dict(d.get("noise", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: field 'noise' is invalid ({exc})") from None
    train = d.get("train", {})
    output = Path(d.get("output", "runs/default"))
    manifest = ExperimentManifest(
        path=path,
        robot_path=resolve("robot"),
        trajectory_path=resolve("trajectory"),
        noise=noise,
        target=target,
        cutoff_hz=cutoff,
        seed=seed,
        n_seeds=n_seeds,
        output=output,
        variants=variants,
        train_defaults=dict(train.get("defaults", {})),
        train_overrides={k: dict(v) for k, v in train.get("variants", {}).items()},
    )
    for v in variants:
        manifest.train_config(v)
    return manifest
