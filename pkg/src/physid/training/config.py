"""Training hyperparameters and per-run reports."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from ..nets.models import DEFAULT_HIDDEN, VARIANTS


class ConfigError(ValueError):
    """A configuration value is missing or out of range."""


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "mlp"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 128
    epochs: int = 2000
    seeds: tuple[int, ...] = (0, 1, 2)
    hidden: tuple[int, ...] = DEFAULT_HIDDEN
    patience: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant: unknown tag {self.variant!r}; choose from {VARIANTS}")
        if not self.lr > 0:
            raise ConfigError(f"lr: must be positive, got {self.lr}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0 <= b < 1:
                raise ConfigError(f"{name}: must lie in [0, 1), got {b}")
        if not self.eps > 0:
            raise ConfigError(f"eps: must be positive, got {self.eps}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size: must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs: must be >= 1, got {self.epochs}")
        if not self.seeds:
            raise ConfigError("seeds: need at least one seed")
        if not self.hidden or min(self.hidden) < 1:
            raise ConfigError(f"hidden: need at least one layer of width >= 1, got {list(self.hidden)}")
        if self.patience is not None and self.patience < 1:
            raise ConfigError(f"patience: must be >= 1 when given, got {self.patience}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> TrainConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown training fields {sorted(unknown)}")
        merged = {**d, **{k: v for k, v in overrides.items() if v is not None}}
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> TrainConfig:
        return cls.from_dict(json.loads(text))


@dataclass
class TrainReport:
    variant: str
    seed: int
    loss_history: list[float] = field(default_factory=list)
    test_rmse: list[float] = field(default_factory=list)
    seconds: float = 0.0
    converged: bool = True
    diverged: bool = False
    best_epoch: int = 0

    @property
    def epochs_run(self) -> int:
        return len(self.loss_history)

    @property
    def mean_rmse(self) -> float:
        return float(sum(self.test_rmse) / len(self.test_rmse)) if self.test_rmse else float("nan")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TrainReport:
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
