"""Rule imitation and welfare training for voting networks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .. import autodiff as ad
from .. import evaluate as ev
from ..core import WelfareKind, welfare_winner
from ..data import LabeledElection, relabel
from ..losses import batch_rule_loss, batch_welfare_loss, monotonicity_loss, sample_pairs
from ..models import Gevn, GevnConfig, GraphBatch, save_checkpoint
from ..rules import RuleKind
from .history import History
from .optim import AdamState, OptimConfig, adam_step, global_norm, lr_at

log = logging.getLogger(__name__)

MONO_PAIRS = 32
PROBE_ELECTIONS = 64
PROBE_PAIRS = 4


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainResult:
    model: object
    history: History
    best_epoch: int
    best_value: float
    epochs_run: int


# objective(tape, model, batch, chunk_indices) -> scalar loss tensor
Objective = Callable[[ad.Tape, object, GraphBatch, np.ndarray], ad.Tensor]


def fit(
    model,
    ballots: Sequence[np.ndarray],
    objective: Objective,
    validate: Callable[[object], dict[str, float]],
    select: str,
    optim: OptimConfig,
    history: History | None = None,
    checkpoint: str | Path | None = None,
    metadata: dict | None = None,
) -> TrainResult:
    """Minibatch Adam over ``ballots``; keeps the parameters with the best ``select`` metric."""
    history = history or History()
    rng = np.random.default_rng([optim.seed, 17])
    state = AdamState()
    params = model.params
    best_value, best_epoch, best = -math.inf, -1, params.copy_arrays()
    count = len(ballots)
    epoch = -1
    for epoch in range(optim.epochs):
        lr = lr_at(epoch, optim)
        order = rng.permutation(count)
        losses, sizes = [], []
        for start in range(0, count, optim.batch_size):
            chunk = order[start : start + optim.batch_size]
            batch = GraphBatch([ballots[k] for k in chunk])
            tape = ad.Tape()
            tape.watch(params)
            try:
                loss = objective(tape, model, batch, chunk)
                tape.backward(loss)
            except FloatingPointError as exc:
                raise TrainingDiverged(f"epoch {epoch}, batch at {start}: {exc}") from exc
            grads = tape.gradients(params)
            if not math.isfinite(loss.item()):
                raise TrainingDiverged(f"epoch {epoch}, batch at {start}: loss {loss.item()}")
            if not adam_step(params, grads, state, lr, optim):
                log.warning("epoch %d: skipped update, gradient norm %s", epoch, global_norm(grads))
            losses.append(loss.item())
            sizes.append(len(chunk))
        train_loss = float(np.average(losses, weights=sizes))
        history.log(epoch, "train", "loss", train_loss)
        history.log(epoch, "train", "lr", lr)
        metrics = validate(model)
        for name, value in metrics.items():
            history.log(epoch, "val", name, value)
        log.info("epoch %d loss %.5f %s", epoch, train_loss, metrics)
        if metrics[select] > best_value:
            best_value, best_epoch, best = metrics[select], epoch, params.copy_arrays()
        elif epoch - best_epoch >= optim.patience:
            log.info("early stop at epoch %d (best %d)", epoch, best_epoch)
            break
    params.load(best)
    if checkpoint is not None:
        meta = dict(metadata or {}, best_epoch=best_epoch, best_value=best_value, select=select)
        save_checkpoint(checkpoint, model, meta)
    return TrainResult(model, history, best_epoch, best_value, epoch + 1)


def _ensure_labels(dataset: Sequence[LabeledElection], label: str) -> list[LabeledElection]:
    if all(e.label_kind == label and e.label is not None for e in dataset):
        return list(dataset)
    return relabel(dataset, label)


def train_mimic(
    train_set: Sequence[LabeledElection],
    val_set: Sequence[LabeledElection],
    rule,
    model_config: GevnConfig | None = None,
    optim: OptimConfig = OptimConfig(),
    checkpoint=None,
    model=None,
) -> TrainResult:
    """Fit a voting network to a classical rule's winners with the NLL loss."""
    label = f"rule:{RuleKind(rule).value}"
    train_set, val_set = _ensure_labels(train_set, label), _ensure_labels(val_set, label)
    model = model or Gevn(model_config or GevnConfig())
    ballots = [model.ballots(e.utilities) for e in train_set]
    winners = np.array([e.label for e in train_set])

    def objective(tape, model, batch, chunk):
        return batch_rule_loss(model.forward(tape, batch), batch, winners[chunk])

    def validate(model):
        return {"accuracy": ev.accuracy(model, val_set)}

    meta = {"mode": "mimic", "rule": RuleKind(rule).value}
    return fit(model, ballots, objective, validate, "accuracy", optim, checkpoint=checkpoint, metadata=meta)


def train_welfare(
    train_set: Sequence[LabeledElection],
    val_set: Sequence[LabeledElection],
    kind=WelfareKind.UTILITARIAN,
    loss: str = "welfare",
    input_kind: str = "ranking",
    mono_weight: float = 0.0,
    model_config: GevnConfig | None = None,
    optim: OptimConfig = OptimConfig(),
    checkpoint=None,
    model=None,
    mono_pairs: int = MONO_PAIRS,
) -> TrainResult:
    """Fit a voting network for social welfare.

    ``loss="welfare"`` maximises expected welfare directly; ``loss="rule"``
    imitates the welfare-maximising winner with NLL. Ballots follow
    ``input_kind`` while the loss always sees the true utilities.
    """
    kind = WelfareKind(kind)
    if loss not in ("welfare", "rule"):
        raise ValueError(f"unknown loss {loss!r}")
    if mono_weight < 0:
        raise ValueError("monotonicity weight must be non-negative")
    label = f"welfare:{kind.value}"
    train_set, val_set = _ensure_labels(train_set, label), _ensure_labels(val_set, label)
    if model is None:
        cfg = model_config or GevnConfig(input_kind=input_kind)
        if cfg.input_kind != input_kind:
            raise ValueError(f"model input kind {cfg.input_kind!r} != requested {input_kind!r}")
        model = Gevn(cfg)
    ballots = [model.ballots(e.utilities) for e in train_set]
    utilities = [e.utilities for e in train_set]
    winners = np.array([welfare_winner(u, kind) for u in utilities])
    pair_rng = np.random.default_rng([optim.seed, 29])

    def objective(tape, model, batch, chunk):
        p = model.forward(tape, batch)
        if loss == "welfare":
            total = batch_welfare_loss(p, batch, [utilities[k] for k in chunk], kind)
        else:
            total = batch_rule_loss(p, batch, winners[chunk])
        if mono_weight > 0:
            pairs = sample_pairs(batch.sizes, mono_pairs, pair_rng)
            total = total + mono_weight * monotonicity_loss(model.forward, tape, [ballots[k] for k in chunk], pairs)
        return total

    probe = [model.ballots(e.utilities) for e in val_set[:PROBE_ELECTIONS]]

    def validate(model):
        preds = ev.predict_utilities(model, [e.utilities for e in val_set])
        hits = np.mean([int(np.argmax(p)) == e.label for p, e in zip(preds, val_set)])
        return {
            "welfare": ev.expected_welfare(model, val_set, kind, preds=preds),
            "accuracy": float(hits),
            "monotonicity": ev.monotonicity_violation(
                model.predict_profiles, probe, PROBE_PAIRS, np.random.default_rng([optim.seed, 31])
            ),
        }

    meta = {"mode": "welfare", "welfare_kind": kind.value, "loss": loss, "mono_weight": mono_weight}
    return fit(model, ballots, objective, validate, "welfare", optim, checkpoint=checkpoint, metadata=meta)

