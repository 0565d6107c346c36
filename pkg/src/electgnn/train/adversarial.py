"""Alternating training of a voting network against learned strategic voters.

Scenarios:

``standard-freeze``
    A voting network pretrained on honest ballots is frozen; only the
    strategy network learns.
``robust-train``
    Each epoch runs one pass of strategy updates (voting network frozen)
    followed by one pass of voting-network updates on the mixed
    honest/strategic profiles.
``robust-freeze``
    A voting network produced by ``robust-train`` is frozen and a fresh
    strategy network is trained against it.

In a strategy step every strategic voter gets a private copy of its
election. In that copy only its own row carries gradient; the other
strategic rows are detached strategy outputs and honest rows are true
utilities. The voter's rational loss is then the negative expected
utility it obtains from the copy's outcome.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import autodiff as ad
from .. import evaluate as ev
from ..core import BallotKind, WelfareKind
from ..losses import batch_welfare_loss
from ..models import Gesn, GesnConfig, Gevn, GraphBatch, InfoSetting, Normalization
from .history import History
from .optim import AdamState, OptimConfig, adam_step, lr_at

log = logging.getLogger(__name__)

# honest spatial utilities lie in [1 - sqrt(3), 1]; strategic ballots share that range
UTILITY_RANGE = Normalization("range", 1.0 - math.sqrt(3.0), 1.0)


class Scenario(str, enum.Enum):
    STANDARD_FREEZE = "standard-freeze"
    ROBUST_TRAIN = "robust-train"
    ROBUST_FREEZE = "robust-freeze"


@dataclass(frozen=True)
class AdversarialConfig:
    scenario: str = "standard-freeze"
    info: str = "private"
    fraction: float = 0.2
    welfare_kind: str = "utilitarian"
    rational_weight: float = 1.0
    welfare_weight: float = 1.0
    normalization: Normalization = UTILITY_RANGE
    gesn_seed: int = 0
    val_seed: int = 0

    def __post_init__(self):
        Scenario(self.scenario)
        InfoSetting(self.info)
        WelfareKind(self.welfare_kind)
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("strategic fraction must lie in [0, 1]")
        if self.rational_weight <= 0 or self.welfare_weight <= 0:
            raise ValueError("loss weights must be positive")
        if isinstance(self.normalization, dict):
            object.__setattr__(self, "normalization", Normalization(**self.normalization))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdversarialResult:
    gevn: Gevn
    gesn: Gesn
    history: History = field(default_factory=History)


def counterfactual_batch(batch: GraphBatch, masks, strategic: ad.Tensor):
    """One election copy per strategic voter, as edge values over a new batch.

    Returns ``(copy_batch, edge_values, owners)`` where ``owners`` lists the
    ``(election, voter)`` each copy belongs to. Edge values are gathered from
    ``[strategic | detached strategic | honest]`` so only the owner's row
    reaches the live strategy output.
    """
    E = batch.num_edges
    index, shapes, owners = [], [], []
    for g, (n, m) in enumerate(batch.sizes):
        mask = masks[g]
        if not mask.any():
            continue
        eids = batch.edge_offset[g] + np.arange(n * m)
        rows = np.arange(n * m) // m
        base = np.where(mask[rows], E + eids, 2 * E + eids)
        for i in np.flatnonzero(mask):
            own = rows == i
            idx = base.copy()
            idx[own] = eids[own]
            index.append(idx)
            shapes.append(np.zeros((n, m)))
            owners.append((g, int(i)))
    if not owners:
        return None, None, []
    source = ad.concat([strategic, ad.stop_gradient(strategic), batch.edge_features], axis=0)
    values = ad.gather(source, ad.Index(np.concatenate(index), 3 * E))
    return GraphBatch(shapes), values, owners


def rational_losses(tape: ad.Tape, gevn: Gevn, batch: GraphBatch, masks, strategic: ad.Tensor, utilities) -> tuple[ad.Tensor, list]:
    """Per-strategic-voter rational losses ``-sum_j p_j U_ij`` (one entry per copy)."""
    copies, values, owners = counterfactual_batch(batch, masks, strategic)
    if not owners:
        return None, owners
    p = gevn.forward(tape, copies, edge_values=values)
    weights = np.concatenate([utilities[g][i] for g, i in owners])
    per_copy = ad.segment_sum(ad.mul(p, weights), copies.candidate_graph)
    return -per_copy, owners


def _honest_outcome(gevn: Gevn, batch: GraphBatch) -> np.ndarray:
    return gevn.forward(ad.Tape(), batch).value


def _batch_masks(rng: np.random.Generator, batch: GraphBatch, fraction: float) -> list[np.ndarray]:
    return [rng.random(n) < fraction for n, _ in batch.sizes]


def params_digest(model) -> str:
    """Content hash of a model's parameters (for freeze checks)."""
    h = hashlib.sha256()
    for name in sorted(model.params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(model.params[name]).tobytes())
    return h.hexdigest()


def train_adversarial(
    train_set,
    val_set,
    config: AdversarialConfig = AdversarialConfig(),
    pretrained: Gevn | None = None,
    optim: OptimConfig = OptimConfig(),
    gesn: Gesn | None = None,
) -> AdversarialResult:
    scenario = Scenario(config.scenario)
    kind = WelfareKind(config.welfare_kind)
    if pretrained is None and scenario is not Scenario.ROBUST_TRAIN:
        raise ValueError(f"scenario {scenario.value} needs a pretrained voting network")
    gevn = pretrained if pretrained is not None else Gevn()
    if gevn.input_kind is not BallotKind.CARDINAL:
        raise ValueError("adversarial training needs a voting network with cardinal ballots")
    if gesn is None:
        gesn = Gesn(GesnConfig(info=config.info, normalization=config.normalization, seed=config.gesn_seed))
    if gesn.info is not InfoSetting(config.info):
        raise ValueError("strategy network information setting does not match the config")
    results_info = gesn.info is InfoSetting.RESULTS
    train_gevn = scenario is Scenario.ROBUST_TRAIN

    utilities = [e.utilities for e in train_set]
    history = History()
    rng = np.random.default_rng([optim.seed, 41])
    gesn_state, gevn_state = AdamState(), AdamState()
    frozen_digest = None if train_gevn else params_digest(gevn)

    def validate(epoch: int) -> None:
        welfare, rational = ev.strategic_welfare(gevn, gesn, val_set, kind, config.fraction, config.val_seed)
        history.log(epoch, "val", "welfare", welfare)
        history.log(epoch, "val", "rational_loss", rational)
        history.log(epoch, "val", "honest_welfare", ev.expected_welfare(gevn, val_set, kind))
        history.log(epoch, "val", "manipulation_gain", ev.manipulation_gain(gevn, gesn, val_set, config.fraction, config.val_seed))

    validate(-1)
    for epoch in range(optim.epochs):
        lr = lr_at(epoch, optim)
        order = rng.permutation(len(utilities))
        rational, voters = 0.0, 0
        for start in range(0, len(order), optim.batch_size):
            chunk = [utilities[k] for k in order[start : start + optim.batch_size]]
            batch = GraphBatch(chunk)
            masks = _batch_masks(rng, batch, config.fraction)
            if not any(mk.any() for mk in masks):
                continue
            tape = ad.Tape()
            tape.watch(gesn.params)
            honest = _honest_outcome(gevn, batch) if results_info else None
            strategic = gesn.forward(tape, batch, honest)
            losses, owners = rational_losses(tape, gevn, batch, masks, strategic, chunk)
            loss = ad.mean(losses) * config.rational_weight
            tape.backward(loss)
            adam_step(gesn.params, tape.gradients(gesn.params), gesn_state, lr, optim)
            rational += float(losses.value.sum())
            voters += len(owners)
        if voters:
            history.log(epoch, "train", "rational_loss", rational / voters)

        if train_gevn:
            total, count = 0.0, 0
            for start in range(0, len(order), optim.batch_size):
                chunk = [utilities[k] for k in order[start : start + optim.batch_size]]
                batch = GraphBatch(chunk)
                masks = _batch_masks(rng, batch, config.fraction)
                honest = _honest_outcome(gevn, batch) if results_info else None
                strat = gesn.forward(ad.Tape(), batch, honest).value
                edge_mask = np.concatenate([mk[np.arange(n * m) // m] for mk, (n, m) in zip(masks, batch.sizes)])
                mixed = np.where(edge_mask, strat, batch.edge_features)
                tape = ad.Tape()
                tape.watch(gevn.params)
                p = gevn.forward(tape, batch, edge_values=mixed)
                loss = batch_welfare_loss(p, batch, chunk, kind) * config.welfare_weight
                tape.backward(loss)
                adam_step(gevn.params, tape.gradients(gevn.params), gevn_state, lr, optim)
                total += loss.item() * len(chunk)
                count += len(chunk)
            history.log(epoch, "train", "welfare_loss", total / count)
        history.log(epoch, "train", "lr", lr)
        validate(epoch)
        log.info(
            "epoch %d val welfare %.5f rational %.5f",
            epoch,
            history.last("val", "welfare"),
            history.last("val", "rational_loss"),
        )

    if frozen_digest is not None and params_digest(gevn) != frozen_digest:
        raise RuntimeError("frozen voting network changed during training")
    return AdversarialResult(gevn, gesn, history)
