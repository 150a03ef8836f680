"""Training loop, optimizer, LR scheduling, early stopping, and metrics.

The protocol: AdamW (decoupled weight decay) from an initial learning
rate of 1e-3 with weight decay 1e-4, a plateau scheduler that halves the
learning rate after 10 epochs without validation improvement, and early
stopping after 20 such epochs, restoring the parameters from the epoch
with the lowest validation loss. The loop is single-threaded and
deterministic given the seed.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .model import MixtureInput, ModelParams, build_model, forward, named_parameters

logger = logging.getLogger(__name__)

Example = tuple[MixtureInput, float]


class TrainingError(RuntimeError):
    pass


class MetricError(ValueError):
    pass


@dataclass
class TrainConfig:
    lr0: float = 0.001
    weight_decay: float = 0.0001
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    scheduler_factor: float = 0.5
    scheduler_patience: int = 10
    early_stop_patience: int = 20
    max_epochs: int = 1000
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if min(self.lr0, self.weight_decay, self.eps, self.scheduler_factor) < 0:
            raise ValueError("rates and factors must be non-negative")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be >= 1")


@dataclass
class HistoryEntry:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class MetricsReport:
    pearson_rp: float
    spearman_rs: float
    mse: float
    n: int


def mse_loss(preds: Tensor, targets: Tensor) -> Tensor:
    """Mean squared error over 1-D tensors; differentiable."""
    if preds.data.shape != targets.data.shape or preds.data.ndim != 1:
        raise ad.DimensionError(
            f"mse_loss shapes {preds.data.shape} and {targets.data.shape}"
        )
    if preds.data.size < 1:
        raise ad.DimensionError("mse_loss of empty vectors")
    diff = ad.sub(preds, targets)
    return ad.reduce_mean(ad.mul(diff, diff))


class AdamW:
    """Adam with decoupled weight decay:
    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta).
    """

    def __init__(
        self,
        params: list[Tensor],
        lr: float = 0.001,
        weight_decay: float = 0.0001,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads: dict[Tensor, np.ndarray]) -> None:
        self.step_count += 1
        bias1 = 1.0 - self.beta1**self.step_count
        bias2 = 1.0 - self.beta2**self.step_count
        for p, m, v in zip(self.params, self.m, self.v):
            g = grads[p]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            p.data -= self.lr * (update + self.weight_decay * p.data)


class PlateauScheduler:
    """Multiply the optimizer lr by `factor` after `patience` consecutive
    epochs without a strict improvement of the best validation loss."""

    def __init__(self, optimizer: AdamW, factor: float = 0.5, patience: int = 10):
        self.optimizer = optimizer
        self.factor = factor
        self.patience = patience
        self.best = math.inf
        self.stale_epochs = 0

    def step(self, val_loss: float) -> bool:
        """Returns True when the learning rate was reduced this epoch."""
        if val_loss < self.best:
            self.best = val_loss
            self.stale_epochs = 0
            return False
        self.stale_epochs += 1
        if self.stale_epochs >= self.patience:
            self.optimizer.lr *= self.factor
            self.stale_epochs = 0
            return True
        return False


def early_stopping(val_loss_history: list[float], patience: int = 20) -> tuple[bool, int]:
    """(stop now?, index of the best epoch). Improvement means strictly lower."""
    if not val_loss_history:
        raise ValueError("empty validation history")
    best_epoch = int(np.argmin(val_loss_history))
    since_best = len(val_loss_history) - 1 - best_epoch
    return since_best >= max(patience, 1), best_epoch


def _copy_params(params: ModelParams) -> ModelParams:
    clone = build_model(params.config)
    clone.feature_schema_version = params.feature_schema_version
    clone.seed = params.seed
    for (_, src), (_, dst) in zip(named_parameters(params), named_parameters(clone)):
        dst.data = src.data.copy()
    return clone


def _validation_loss(params: ModelParams, examples: list[Example]) -> float:
    errors = [
        (float(forward(params, mix).data[0]) - target) ** 2 for mix, target in examples
    ]
    return float(np.mean(errors))


def train(
    params: ModelParams,
    train_data: list[Example],
    val_data: list[Example],
    config: TrainConfig,
) -> tuple[ModelParams, list[HistoryEntry]]:
    """Minibatch training; returns the best-epoch snapshot and the history.

    Within a batch, each distinct molecule is embedded once and the
    embedding is shared across the mixtures that contain it (gradients
    accumulate through the shared subgraph).
    """
    if not train_data or not val_data:
        raise ValueError("training and validation sets must be non-empty")
    tensors = [t for _, t in named_parameters(params)]
    optimizer = AdamW(
        tensors,
        lr=config.lr0,
        weight_decay=config.weight_decay,
        betas=config.betas,
        eps=config.eps,
    )
    scheduler = PlateauScheduler(optimizer, config.scheduler_factor, config.scheduler_patience)
    rng = np.random.default_rng(config.seed)

    history: list[HistoryEntry] = []
    val_losses: list[float] = []
    best_snapshot = _copy_params(params)
    best_val = math.inf

    for epoch in range(config.max_epochs):
        lr_used = optimizer.lr
        order = rng.permutation(len(train_data))
        epoch_squares = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [train_data[i] for i in order[start : start + config.batch_size]]
            with Tape() as tape:
                tape.watch(*tensors)
                cache = {}
                preds = ad.concat(
                    [forward(params, mix, cache) for mix, _ in batch]
                )
                targets = Tensor(np.array([target for _, target in batch]))
                loss = mse_loss(preds, targets)
            loss_value = float(loss.data)
            if not math.isfinite(loss_value):
                raise TrainingError(
                    f"non-finite loss {loss_value} at epoch {epoch}, "
                    f"batch starting at {start}, lr {optimizer.lr}"
                )
            grads = ad.backward(tape, loss)
            optimizer.step(grads)
            epoch_squares += loss_value * len(batch)

        train_loss = epoch_squares / len(train_data)
        val_loss = _validation_loss(params, val_data)
        history.append(HistoryEntry(epoch, train_loss, val_loss, lr_used))
        val_losses.append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best_snapshot = _copy_params(params)

        scheduler.step(val_loss)
        stop, best_epoch = early_stopping(val_losses, config.early_stop_patience)
        if stop:
            logger.info(
                "early stop at epoch %d (best epoch %d, val loss %.6g)",
                epoch,
                best_epoch,
                best_val,
            )
            break

    return best_snapshot, history


def write_history(history: list[HistoryEntry], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "lr"])
        for entry in history:
            writer.writerow(
                [entry.epoch, repr(entry.train_loss), repr(entry.val_loss), repr(entry.lr)]
            )


def pearson(targets, preds) -> float:
    """Pearson correlation (population convention)."""
    x = np.asarray(targets, dtype=np.float64)
    y = np.asarray(preds, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise MetricError(f"need two equal-length 1-D samples, got {x.shape} and {y.shape}")
    dx = x - x.mean()
    dy = y - y.mean()
    var_x = float(np.dot(dx, dx))
    var_y = float(np.dot(dy, dy))
    if var_x == 0.0 or var_y == 0.0:
        raise MetricError("pearson is undefined for a zero-variance sample")
    return float(np.dot(dx, dy) / math.sqrt(var_x * var_y))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; ties share the average of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(targets, preds) -> float:
    """Spearman rank correlation with average ranks for ties.

    A side whose ranks have zero variance (all values tied) yields 0.0
    with a warning rather than an error.
    """
    x = np.asarray(targets, dtype=np.float64)
    y = np.asarray(preds, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise MetricError(f"need two equal-length 1-D samples, got {x.shape} and {y.shape}")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    if np.ptp(rx) == 0.0 or np.ptp(ry) == 0.0:
        logger.warning("spearman: a sample is entirely tied; returning 0.0")
        return 0.0
    return pearson(rx, ry)


def evaluate(params: ModelParams, examples: list[Example]) -> MetricsReport:
    targets = np.array([target for _, target in examples])
    preds = np.array([float(forward(params, mix).data[0]) for mix, _ in examples])
    return MetricsReport(
        pearson_rp=pearson(targets, preds),
        spearman_rs=spearman(targets, preds),
        mse=float(np.mean((preds - targets) ** 2)),
        n=len(examples),
    )
