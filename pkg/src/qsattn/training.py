"""Optimizers and the training loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fastsim import FastContext
from .gradients import (
    GRADIENT_MODES,
    GRADIENT_SHIFT,
    LossValue,
    bce_loss,
    loss_and_gradient,
)
from .network import classify
from .params import ParamId, ParamStore
from .topology import Sample, Topology

OPTIMIZER_ADAM = "adam"
OPTIMIZER_GD = "gd"
OPTIMIZERS = (OPTIMIZER_ADAM, OPTIMIZER_GD)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    optimizer: str = OPTIMIZER_ADAM
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 100
    batch_size: int | None = None  # None = full batch
    seed: int = 0
    gradient_mode: str = GRADIENT_SHIFT
    fd_h: float = 1e-6

    def validate(self) -> None:
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.fd_h <= 0:
            raise ValueError("finite-difference step must be positive")


@dataclass
class AdamState:
    m: dict[ParamId, float] = field(default_factory=dict)
    v: dict[ParamId, float] = field(default_factory=dict)
    t: int = 0


def adam_step(store: ParamStore, gradient: dict[ParamId, float],
              state: AdamState, config: TrainConfig) -> None:
    """Standard Adam update with bias correction; mutates store and state."""
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    state.t += 1
    for pid, g in gradient.items():
        m = state.m.get(pid, 0.0)
        v = state.v.get(pid, 0.0)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        state.m[pid] = m
        state.v[pid] = v
        m_hat = m / (1 - b1**state.t)
        v_hat = v / (1 - b2**state.t)
        store.set(pid, store.get(pid) - config.learning_rate * m_hat
                  / (np.sqrt(v_hat) + eps))


def gradient_descent_step(store: ParamStore, gradient: dict[ParamId, float],
                          config: TrainConfig) -> None:
    for pid, g in gradient.items():
        store.set(pid, store.get(pid) - config.learning_rate * g)


def evaluate(topology: Topology, samples: list[Sample],
             store: ParamStore) -> tuple[LossValue, float, list[int]]:
    """Noiseless loss, accuracy and predictions on a split."""
    ctx = FastContext(topology, store)
    per_sample = []
    preds = []
    correct = 0
    for s in samples:
        p1 = ctx.forward_p1(s)
        per_sample.append(float(bce_loss(p1, s.label)))
        pred = classify(p1)
        preds.append(pred)
        correct += int(pred == s.label)
    loss = LossValue(float(np.sum(per_sample)), per_sample)
    return loss, correct / len(samples), preds


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    dev_loss: float | None = None
    dev_acc: float | None = None


@dataclass
class TrainResult:
    store: ParamStore
    history: list[EpochRecord]
    best_epoch: int | None = None
    best_store: ParamStore | None = None


def _snapshot(store: ParamStore) -> ParamStore:
    return ParamStore(dict(store.values), store.dataset, store.variant, store.seed)


def _record(topology: Topology, epoch: int, train, dev, store) -> EpochRecord:
    train_loss, train_acc, _ = evaluate(topology, train, store)
    rec = EpochRecord(epoch, train_loss.total, train_acc)
    if dev:
        dev_loss, dev_acc, _ = evaluate(topology, dev, store)
        rec.dev_loss, rec.dev_acc = dev_loss.total, dev_acc
    return rec


def train(topology: Topology, train_samples: list[Sample], store: ParamStore,
          config: TrainConfig,
          dev_samples: list[Sample] | None = None) -> TrainResult:
    """Full-batch (or minibatch) training; deterministic given config.seed.

    The history has epochs+1 rows: row 0 holds the initial evaluation.
    When a dev split is given, the checkpoint with the best dev accuracy
    (ties broken by dev loss, then earliest epoch) is kept as best_store.
    """
    config.validate()
    if not train_samples:
        raise ValueError("training split is empty")
    rng = np.random.default_rng(config.seed)
    adam = AdamState()
    history = [_record(topology, 0, train_samples, dev_samples, store)]
    best = None  # (acc, -loss, -epoch) maximized
    result = TrainResult(store=store, history=history)

    def consider_best(rec: EpochRecord) -> None:
        nonlocal best
        if rec.dev_acc is None:
            return
        key = (rec.dev_acc, -rec.dev_loss, -rec.epoch)
        if best is None or key > best:
            best = key
            result.best_epoch = rec.epoch
            result.best_store = _snapshot(store)

    consider_best(history[0])

    for epoch in range(1, config.epochs + 1):
        if config.batch_size is None:
            batches = [train_samples]
        else:
            order = rng.permutation(len(train_samples))
            shuffled = [train_samples[k] for k in order]
            batches = [shuffled[k:k + config.batch_size]
                       for k in range(0, len(shuffled), config.batch_size)]
        for batch in batches:
            loss, grad = loss_and_gradient(topology, batch, store,
                                           config.gradient_mode, config.fd_h)
            if not np.isfinite(loss.total):
                raise TrainingDiverged(
                    f"non-finite loss {loss.total} at epoch {epoch}"
                )
            if config.optimizer == OPTIMIZER_ADAM:
                adam_step(store, grad, adam, config)
            else:
                gradient_descent_step(store, grad, config)
        rec = _record(topology, epoch, train_samples, dev_samples, store)
        history.append(rec)
        consider_best(rec)
    return result


def write_loss_curve(history: list[EpochRecord], path: str | Path) -> None:
    """One CSV row per epoch: epoch,train_loss,train_acc,dev_loss,dev_acc."""
    lines = ["epoch,train_loss,train_acc,dev_loss,dev_acc"]
    for rec in history:
        dev_loss = "" if rec.dev_loss is None else repr(rec.dev_loss)
        dev_acc = "" if rec.dev_acc is None else repr(rec.dev_acc)
        lines.append(f"{rec.epoch},{rec.train_loss!r},{rec.train_acc!r},"
                     f"{dev_loss},{dev_acc}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
