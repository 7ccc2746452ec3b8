"""Trajectory datasets: chronological split, per-channel normalization, CSV I/O."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

CHANNELS = ("q", "qd", "qdd", "y")
TARGET_KINDS = ("tau", "tau_u")
TRAIN_FRACTION = 0.7
UNITS = {"t": "s", "q": "rad", "qd": "rad/s", "qdd": "rad/s^2", "y": "N m"}


class DatasetFormatError(ValueError):
    pass


class ConstantChannelWarning(UserWarning):
    pass


class TrajectorySample(NamedTuple):
    t: float
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    y: np.ndarray


class Samples(NamedTuple):
    """A contiguous block of samples in physical units."""

    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    y: np.ndarray

    def __len__(self):
        return self.q.shape[0]

    def take(self, index) -> Samples:
        return Samples(self.q[index], self.qd[index], self.qdd[index], self.y[index])


@dataclass
class NormalizationStats:
    """Per-channel minima and maxima; ``x -> 2 (x - min) / (max - min) - 1``.

    Channels with ``max == min`` map to 0.
    """

    minimum: dict[str, np.ndarray]
    maximum: dict[str, np.ndarray]

    @classmethod
    def from_samples(cls, samples: Samples) -> NormalizationStats:
        lo = {c: np.min(getattr(samples, c), axis=0) for c in CHANNELS}
        hi = {c: np.max(getattr(samples, c), axis=0) for c in CHANNELS}
        for c in CHANNELS:
            flat = np.flatnonzero(hi[c] == lo[c])
            if flat.size:
                warnings.warn(
                    f"channel {c} is constant in dimensions {flat.tolist()}; mapped to 0",
                    ConstantChannelWarning,
                    stacklevel=3,
                )
        return cls(lo, hi)

    def center(self, channel: str) -> np.ndarray:
        return 0.5 * (self.maximum[channel] + self.minimum[channel])

    def half_range(self, channel: str) -> np.ndarray:
        return 0.5 * (self.maximum[channel] - self.minimum[channel])

    def normalize(self, channel: str, x):
        """Works on arrays and tape tensors alike."""
        half = self.half_range(channel)
        live = half > 0
        # dividing (not multiplying by 1/half) keeps the training extremes at exactly +-1
        return (x - self.minimum[channel]) / np.where(live, half, np.inf) - live.astype(float)

    def denormalize(self, channel: str, x):
        return x * self.half_range(channel) + self.center(channel)

    def to_dict(self) -> dict:
        return {c: {"min": self.minimum[c].tolist(), "max": self.maximum[c].tolist()} for c in CHANNELS}

    @classmethod
    def from_dict(cls, d: dict) -> NormalizationStats:
        return cls({c: np.asarray(d[c]["min"], float) for c in CHANNELS}, {c: np.asarray(d[c]["max"], float) for c in CHANNELS})


@dataclass
class Dataset:
    """Samples in physical units plus split marker and training statistics.

    Arrays keep physical units; :meth:`normalized` gives the mapped copies.
    """

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    y: np.ndarray
    target: str = "tau_u"
    split: int | None = None
    stats: NormalizationStats | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        for c in CHANNELS:
            setattr(self, c, np.asarray(getattr(self, c), dtype=float))
        if self.target not in TARGET_KINDS:
            raise ValueError(f"target kind must be one of {TARGET_KINDS}, got {self.target!r}")
        shapes = {getattr(self, c).shape for c in CHANNELS}
        if len(shapes) != 1 or self.q.ndim != 2 or self.t.shape != (self.q.shape[0],):
            raise ValueError("dataset channels must be (N, n) arrays aligned with t")

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, k: int) -> TrajectorySample:
        return TrajectorySample(float(self.t[k]), self.q[k], self.qd[k], self.qdd[k], self.y[k])

    @property
    def dof(self) -> int:
        return self.q.shape[1]

    def samples(self) -> Samples:
        return Samples(self.q, self.qd, self.qdd, self.y)

    def _require_split(self):
        if self.split is None:
            raise ValueError("dataset has not been split; call normalize_split first")

    def train_slice(self) -> Samples:
        self._require_split()
        return self.samples().take(slice(0, self.split))

    def test_slice(self) -> Samples:
        self._require_split()
        return self.samples().take(slice(self.split, None))

    def normalized(self) -> dict[str, np.ndarray]:
        if self.stats is None:
            raise ValueError("dataset has no normalization statistics")
        return {c: self.stats.normalize(c, getattr(self, c)) for c in CHANNELS}

    def with_targets(self, y) -> Dataset:
        return replace(self, y=np.asarray(y, dtype=float))


def split_index(n_samples: int) -> int:
    return math.floor(TRAIN_FRACTION * n_samples)


def normalize_split(raw: Dataset) -> Dataset:
    """Chronological 70/30 split; statistics come from the training part only."""
    if len(raw) < 10:
        raise ValueError(f"need at least 10 samples to split, got {len(raw)}")
    split = split_index(len(raw))
    out = replace(raw, split=split, stats=None)
    out.stats = NormalizationStats.from_samples(out.train_slice())
    return out


# --- CSV ---------------------------------------------------------------------

def csv_header(n: int) -> list[str]:
    cols = ["t"]
    for c in CHANNELS:
        cols += [f"{c}_{i + 1}" for i in range(n)]
    return cols


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def save_csv(path, dataset: Dataset) -> None:
    path = Path(path)
    header = csv_header(dataset.dof)
    block = np.column_stack([dataset.t] + [getattr(dataset, c) for c in CHANNELS])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in block:
            writer.writerow([repr(float(v)) for v in row])
    meta = {
        "units": UNITS,
        "target": dataset.target,
        "dof": dataset.dof,
        "split": dataset.split,
        "stats": dataset.stats.to_dict() if dataset.stats else None,
        **{k: v for k, v in dataset.meta.items() if k not in ("units", "target", "dof", "split", "stats")},
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_csv(path) -> Dataset:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetFormatError(f"{path}: empty file")
    header = rows[0]
    n = sum(1 for h in header if h.startswith("q_"))
    if n == 0 or header[0] != "t":
        raise DatasetFormatError(f"{path}: malformed header {header}")
    expected = csv_header(n)
    for col in expected:
        if col not in header:
            raise DatasetFormatError(f"{path}: missing column {col!r}")
    if header != expected:
        raise DatasetFormatError(f"{path}: header columns out of order, expected {expected}")
    values = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetFormatError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        for c, text in enumerate(row):
            try:
                v = float(text)
            except ValueError:
                raise DatasetFormatError(f"{path}: row {r}, column {header[c]!r}: not a number {text!r}") from None
            if not math.isfinite(v):
                raise DatasetFormatError(f"{path}: row {r}, column {header[c]!r}: non-finite value")
            values[r - 2, c] = v

    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
    blocks = [values[:, 1 + k * n : 1 + (k + 1) * n] for k in range(4)]
    stats = NormalizationStats.from_dict(meta["stats"]) if meta.get("stats") else None
    extra = {k: v for k, v in meta.items() if k not in ("units", "target", "dof", "split", "stats")}
    return Dataset(values[:, 0], *blocks, target=meta.get("target", "tau_u"), split=meta.get("split"), stats=stats, meta=extra)
