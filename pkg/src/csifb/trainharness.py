"""Deterministic training loops, plateau learning-rate schedule, evaluation.

Reproducibility contract: (training seed, config, dataset bytes, model init)
fully determine the loss trace and the returned parameters. Shuffling uses a
dedicated RNG sub-stream of the training seed; gradient reductions are plain
batched matmuls, so their accumulation order is fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nncore as nn
from .chanmodel import Dataset
from .classicbf import RateParams, sinr, spectral_efficiency
from .models import nmse_db

LOSS_KINDS = ("loss_s", "loss_m", "mse")

# SeedSequence spawn key for the minibatch shuffle stream (chanmodel owns 0-2)
_STREAM_SHUFFLE = 3


@dataclass
class TrainConfig:
    loss: str
    epochs: int = 200
    batch_size: int = 500
    lr_init: float = 1e-3
    plateau_epochs: int = 40
    lr_decay: float = 0.5
    seed: int = 0
    alpha: float = 0.0
    rho: float | None = None
    min_improvement: float = 1e-6

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not (self.lr_init > 0 and math.isfinite(self.lr_init)):
            raise ValueError(f"lr_init must be positive and finite, got {self.lr_init}")
        if self.plateau_epochs < 1:
            raise ValueError("plateau_epochs must be >= 1")
        if not (0 < self.lr_decay < 1):
            raise ValueError(f"lr_decay must lie in (0, 1), got {self.lr_decay}")
        if self.loss == "loss_m":
            if self.rho is None or not (self.rho > 0 and math.isfinite(self.rho)):
                raise ValueError("loss_m requires a finite positive rho "
                                 "(an infinite-SNR objective does not converge)")
            if not (0.0 <= self.alpha <= 1.0):
                raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


class PlateauLrSchedule:
    """Halve the rate when the best validation loss stalls for `patience` epochs.

    update() is called once per epoch with that epoch's validation loss and
    returns the rate for the next epoch. Halving epochs (1-based) are logged
    in self.halvings; the stall counter resets on improvement and after every
    halving, so stall windows are disjoint.
    """

    def __init__(self, lr_init, factor=0.5, patience=40, min_improvement=1e-6):
        self.lr = lr_init
        self.factor = factor
        self.patience = patience
        self.min_improvement = min_improvement
        self.best = math.inf
        self.stalled = 0
        self.epoch = 0
        self.halvings = []

    def update(self, val_loss) -> float:
        self.epoch += 1
        if val_loss < self.best - self.min_improvement:
            self.best = val_loss
            self.stalled = 0
        else:
            self.stalled += 1
            if self.stalled >= self.patience:
                self.lr *= self.factor
                self.halvings.append(self.epoch)
                self.stalled = 0
        return self.lr


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class TrainResult:
    model: object
    trace: list
    best_epoch: int
    best_val_loss: float
    aborted: bool = False
    lr_halvings: list = field(default_factory=list)


def _batch_for(dataset: Dataset, idx, needs_pair: bool):
    if needs_pair:
        return dataset.h[idx], dataset.g[idx]
    return (dataset.h[idx],)


def _mean_loss(model, dataset, idx, batch_size, needs_pair, alpha, rho):
    total = 0.0
    for start in range(0, len(idx), batch_size):
        chunk = idx[start:start + batch_size]
        loss = model.batch_loss(_batch_for(dataset, chunk, needs_pair), alpha, rho)
        total += loss * len(chunk)
    return total / len(idx)


def train(model, dataset: Dataset, config: TrainConfig) -> TrainResult:
    """Adam training with per-epoch validation and best-checkpoint return.

    The quantizer stays active during validation (deployment-matched); only
    the backward pass uses the straight-through surrogate. On a non-finite
    loss the run aborts and the best checkpoint so far is restored.
    """
    if model.loss_kind != config.loss:
        raise ValueError(f"model expects loss {model.loss_kind!r}, config says {config.loss!r}")
    needs_pair = config.loss == "loss_m" or getattr(model, "paired", False)
    if needs_pair and not dataset.paired:
        raise ValueError("this model/loss requires a paired dataset")
    train_idx, val_idx, _ = dataset.splits()
    if config.batch_size > len(train_idx):
        raise ValueError(f"batch_size {config.batch_size} exceeds training set "
                         f"size {len(train_idx)}")

    alpha, rho = config.alpha, config.rho
    params = model.parameter_arrays()
    state = nn.init_adam(params)
    schedule = PlateauLrSchedule(config.lr_init, config.lr_decay,
                                 config.plateau_epochs, config.min_improvement)
    shuffle_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(_STREAM_SHUFFLE,))))

    best_snapshot = [p.copy() for p in params]
    best_val = math.inf
    best_epoch = 0
    trace = []
    aborted = False
    lr = config.lr_init
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(len(train_idx))
        total = 0.0
        for start in range(0, len(perm), config.batch_size):
            chunk = train_idx[perm[start:start + config.batch_size]]
            batch = _batch_for(dataset, chunk, needs_pair)
            loss, grads = model.batch_loss_and_grads(batch, alpha, rho)
            if not math.isfinite(loss):
                aborted = True
                break
            nn.adam_step(params, grads, state, lr)
            total += loss * len(chunk)
        if aborted:
            break
        train_loss = total / len(train_idx)
        val_loss = _mean_loss(model, dataset, val_idx, config.batch_size,
                              needs_pair, alpha, rho)
        if not math.isfinite(val_loss):
            aborted = True
            break
        trace.append(EpochRecord(epoch, train_loss, val_loss, lr))
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            for snap, p in zip(best_snapshot, params):
                np.copyto(snap, p)
        lr = schedule.update(val_loss)

    for p, snap in zip(params, best_snapshot):
        np.copyto(p, snap)
    return TrainResult(model=model, trace=trace, best_epoch=best_epoch,
                       best_val_loss=best_val, aborted=aborted,
                       lr_halvings=list(schedule.halvings))


METRICS = ("mean_se", "mean_rate", "nmse_db")
_SPLIT_POS = {"train": 0, "val": 1, "test": 2}


def evaluate(model, dataset: Dataset, split="test", metric="mean_se",
             rate: RateParams | None = None) -> float:
    """Metric averaged over one split, accumulated in float64.

    mean_se needs a beam-emitting model and rho; mean_rate additionally needs
    a paired dataset and alpha; nmse_db needs a reconstructing model.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if split not in _SPLIT_POS:
        raise ValueError(f"unknown split {split!r}")
    idx = dataset.splits()[_SPLIT_POS[split]]
    if len(idx) == 0:
        raise ValueError(f"split {split!r} is empty")
    H = dataset.h[idx].astype(np.complex128)
    if metric == "nmse_db":
        return nmse_db(H, model.reconstruct(H))
    if rate is None:
        raise ValueError(f"metric {metric!r} requires rate parameters")
    if metric == "mean_se":
        V = np.asarray(model.infer_beams(H), dtype=np.complex128)
        return float(np.mean(spectral_efficiency(H, V, rate)))
    G = dataset.g[idx].astype(np.complex128) if dataset.paired else None
    if G is None:
        raise ValueError("mean_rate requires a paired dataset")
    V = np.asarray(model.infer_beams(H, G), dtype=np.complex128)
    rates = np.log2(1.0 + sinr(H, G, V, rate))
    return float(np.mean(rates))


def write_trace_csv(path: str, trace) -> None:
    """Loss trace as CSV with the fixed header epoch,train_loss,val_loss,lr."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("epoch,train_loss,val_loss,lr\n")
        for rec in trace:
            f.write(f"{rec.epoch},{rec.train_loss!r},{rec.val_loss!r},{rec.lr!r}\n")
