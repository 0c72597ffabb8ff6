from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DomainError, NonFiniteError
from .losses import cross_entropy, cross_entropy_grad, l1_penalty, sharing_penalty
from .model import CnnModel, backward, forward

__all__ = ["Samples", "EpochRecord", "TrainReport", "loss_and_grad", "backward_and_step", "train", "accuracy"]

LOSS_KINDS = ("ce_l1", "ldp_shared")


@dataclass
class Samples:
    x: np.ndarray
    y: np.ndarray
    indicators: np.ndarray | None = None

    def __len__(self) -> int:
        return self.x.shape[0]

    def subset(self, idx: np.ndarray) -> "Samples":
        ind = None if self.indicators is None else self.indicators[idx]
        return Samples(self.x[idx], self.y[idx], ind)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    train_acc: float


@dataclass
class TrainReport:
    learning_rate: float
    l1_weight: float
    epochs: int
    batch_size: int
    mu: float = 0.0
    loss_kind: str = "ce_l1"
    history: list[EpochRecord] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["epoch", "train_loss", "val_loss", "train_acc"])
            for r in self.history:
                wr.writerow([r.epoch, repr(r.train_loss), repr(r.val_loss), repr(r.train_acc)])


def accuracy(pred: np.ndarray, target: np.ndarray) -> float:
    return float((pred.argmax(-1) == target.argmax(-1)).mean())


def _total_loss(model, pred, batch: Samples, loss_kind, l1_weight, mu) -> float:
    loss = cross_entropy(pred, batch.y)
    if loss_kind == "ldp_shared" and mu:
        loss += mu * sharing_penalty(pred, batch.indicators)
    if l1_weight:
        loss += l1_weight * l1_penalty(model.weight_arrays())
    return loss


def loss_and_grad(model: CnnModel, batch: Samples, loss_kind="ce_l1", l1_weight=0.0, mu=0.0) -> float:
    """Forward + backward; leaves parameter gradients in ``layer.grads``."""
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")
    if l1_weight < 0 or mu < 0:
        raise DomainError("penalty weights must be >= 0")
    pred = forward(model, batch.x)
    dprob = cross_entropy_grad(pred, batch.y)
    if loss_kind == "ldp_shared" and mu:
        if batch.indicators is None:
            raise ValueError("ldp_shared loss needs neighbor-allocation indicators")
        rows = int(np.prod(pred.shape[:-1]))
        dprob = dprob + mu * batch.indicators / rows
    backward(model, dprob)
    if l1_weight:
        for layer in model.layers:
            for k in layer.weight_keys:
                layer.grads[k] = layer.grads[k] + l1_weight * np.sign(layer.params[k])
    return _total_loss(model, pred, batch, loss_kind, l1_weight, mu)


def backward_and_step(
    model: CnnModel, batch: Samples, lr: float, loss_kind="ce_l1", l1_weight=0.0, mu=0.0
) -> float:
    """One SGD step ``w <- w - lr * dL/dw``; returns the pre-step loss."""
    if lr < 0:
        raise DomainError(f"learning rate must be >= 0, got {lr}")
    loss = loss_and_grad(model, batch, loss_kind, l1_weight, mu)
    for layer in model.layers:
        for k, grad in layer.grads.items():
            if not np.all(np.isfinite(grad)):
                raise NonFiniteError(f"non-finite gradient in {layer.kind}.{k}")
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite loss")
    if lr:
        for layer in model.layers:
            for k, grad in layer.grads.items():
                layer.params[k] -= lr * grad
    return loss


def _evaluate(model, data: Samples, loss_kind, l1_weight, mu, chunk=256) -> tuple[float, float]:
    if len(data) == 0:
        return float("nan"), float("nan")
    preds = np.concatenate([forward(model, data.x[i : i + chunk]) for i in range(0, len(data), chunk)])
    return _total_loss(model, preds, data, loss_kind, l1_weight, mu), accuracy(preds, data.y)


def train(
    model: CnnModel,
    data: Samples,
    epochs: int,
    lr: float,
    batch_size: int = 16,
    split: float = 0.8,
    seed: int = 0,
    loss_kind: str = "ce_l1",
    l1_weight: float = 0.0,
    mu: float = 0.0,
    log=None,
) -> TrainReport:
    """Minibatch SGD with a seeded train/validation split and shuffle order.

    ``train_loss``/``train_acc`` are running means over the epoch's batches;
    ``val_loss`` is evaluated on the held-out part after the epoch.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    if not 0 < split < 1:
        raise ValueError("split must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(data))
    n_train = max(1, int(round(split * len(data))))
    train_set, val_set = data.subset(perm[:n_train]), data.subset(perm[n_train:])
    report = TrainReport(lr, l1_weight, epochs, batch_size, mu, loss_kind)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train_set))
        tot_loss = tot_correct = tot_rows = 0.0
        n_seen = 0
        for b in range(0, len(order), batch_size):
            batch = train_set.subset(order[b : b + batch_size])
            loss = backward_and_step(model, batch, lr, loss_kind, l1_weight, mu)
            pred = model.layers[-1]._cache[1]
            tot_loss += loss * len(batch)
            n_seen += len(batch)
            tot_correct += float((pred.argmax(-1) == batch.y.argmax(-1)).sum())
            tot_rows += pred.shape[0] * pred.shape[1]
        val_loss, _ = _evaluate(model, val_set, loss_kind, l1_weight, mu)
        rec = EpochRecord(epoch, tot_loss / n_seen, val_loss, tot_correct / tot_rows)
        report.history.append(rec)
        if log is not None:
            log(rec)
    return report
