"""Minibatch training of every model variant."""
from __future__ import annotations

import csv
import logging
import math
import time
from pathlib import Path

import numpy as np

from ..autodiff import Tensor, backprop
from ..excitation.dataset import Dataset, Samples
from ..nets.models import IdModel, RneaLqModel, build_model
from .config import TrainConfig, TrainReport
from .optim import AdamState, adam_step, mse_loss, target_scale

log = logging.getLogger(__name__)

RESULTS_HEADER = ["variant", "seed", "joint", "rmse", "seconds"]


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    """Shuffled sample order for one epoch, a pure function of (seed, epoch)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, epoch])))
    return rng.permutation(n)


def _test_rmse(model: IdModel, test: Samples) -> list[float]:
    if len(test) == 0:
        return []
    r = (model.predict_samples(test) - test.y) / target_scale(model)
    return np.sqrt(np.mean(r * r, axis=0)).tolist()


def fit(model: IdModel, train: Samples, config: TrainConfig, seed: int) -> TrainReport:
    """Optimize ``model.params`` in place on ``train``; keeps the best epoch's parameters."""
    report = TrainReport(model.variant, seed)
    if isinstance(model, RneaLqModel):
        model.fit(train)
        report.loss_history.append(mse_loss(model, train))
        return report

    n = len(train)
    baseline = model.baseline(train.q, train.qd, train.qdd) if model.uses_baseline else None
    params = model.params.copy()
    state = AdamState.zeros(params.size)
    best_loss, best_params, stale = math.inf, params.copy(), 0
    for epoch in range(config.epochs):
        order = epoch_order(seed, epoch, n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            p = Tensor(params, requires_grad=True)
            loss = mse_loss(model, train.take(idx), p, None if baseline is None else baseline[idx])
            value = float(loss.value)
            if not math.isfinite(value):
                break
            (g,) = backprop(loss, [p])
            if not np.all(np.isfinite(g.value)):
                value = math.nan
                break
            total += value * idx.size
            params, state = adam_step(params, g.value, state, config)
        else:
            epoch_loss = total / n
            report.loss_history.append(epoch_loss)
            if epoch_loss < best_loss:
                best_loss, best_params, stale = epoch_loss, params.copy(), 0
                report.best_epoch = epoch
            else:
                stale += 1
                if config.patience is not None and stale >= config.patience:
                    break
            continue
        report.loss_history.append(math.nan)
        report.diverged = True
        report.converged = False
        log.warning("%s seed %d diverged in epoch %d", model.variant, seed, epoch)
        break
    model.params = best_params
    return report


def train(variant: str, dataset: Dataset, robot, config: TrainConfig, seed: int | None = None) -> tuple[IdModel, TrainReport]:
    """Train one variant with one seed; the test slice is read only after optimization."""
    if dataset.stats is None or dataset.split is None:
        raise ValueError("dataset must be normalized and split before training")
    seed = config.seeds[0] if seed is None else int(seed)
    model = build_model(variant, dataset.dof, dataset.stats, robot, dataset.target, config.hidden)
    model.initialize(seed)
    tic = time.perf_counter()
    report = fit(model, dataset.train_slice(), config, seed)
    report.test_rmse = _test_rmse(model, dataset.test_slice())
    report.seconds = time.perf_counter() - tic
    return model, report


def train_seeds(variant: str, dataset: Dataset, robot, config: TrainConfig) -> list[tuple[IdModel, TrainReport]]:
    return [train(variant, dataset, robot, config, seed) for seed in config.seeds]


def append_results(path, reports) -> None:
    """Append one row per (report, joint) to a results CSV, writing the header if new."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new:
            writer.writerow(RESULTS_HEADER)
        for rep in reports:
            for j, value in enumerate(rep.test_rmse):
                writer.writerow([rep.variant, rep.seed, j + 1, repr(float(value)), f"{rep.seconds:.3f}"])
