"""Metrics and axiom audits for learned mechanisms.

A *mechanism* here is anything that maps a list of ballot matrices to a list
of candidate distributions: a callable, or a model exposing
``predict_profiles``. Metrics that start from true utilities use the model's
own ``predict`` (which derives ballots of its input kind) when available.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import argmax_lowest, column_welfare
from .data import LabeledElection
from .models import strategize_many

AUDIT_TRIALS = 16
FD_EPS = 1e-3

Mechanism = Callable[[Sequence[np.ndarray]], Sequence[np.ndarray]]


def as_mechanism(model) -> Mechanism:
    if hasattr(model, "predict_profiles"):
        return model.predict_profiles
    if callable(model):
        return model
    raise TypeError(f"{type(model).__name__} is not a mechanism")


def predict_utilities(model, utilities: Sequence[np.ndarray]) -> list[np.ndarray]:
    if hasattr(model, "predict"):
        return list(model.predict(list(utilities)))
    return list(as_mechanism(model)(list(utilities)))


def accuracy(model, dataset: Sequence[LabeledElection]) -> float:
    """Fraction of elections whose lowest-index argmax equals the stored label."""
    if len(dataset) == 0:
        raise ValueError("accuracy of an empty dataset is undefined")
    if any(e.label is None for e in dataset):
        raise ValueError("accuracy needs a labelled dataset")
    preds = predict_utilities(model, [e.utilities for e in dataset])
    hits = sum(argmax_lowest(p) == e.label for p, e in zip(preds, dataset))
    return hits / len(dataset)


def expected_welfare(model, dataset: Sequence[LabeledElection], kind, preds=None) -> float:
    if len(dataset) == 0:
        raise ValueError("expected welfare of an empty dataset is undefined")
    if preds is None:
        preds = predict_utilities(model, [e.utilities for e in dataset])
    return float(np.mean([p @ column_welfare(e.utilities, kind) for p, e in zip(preds, dataset)]))


def sample_masks(sizes: Sequence[int], fraction: float, seed: int) -> list[np.ndarray]:
    """Per-election Bernoulli(``fraction``) strategic-voter masks."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("strategic fraction must lie in [0, 1]")
    return [np.random.default_rng([seed, k]).random(n) < fraction for k, n in enumerate(sizes)]


def mixed_profiles(honest: Sequence[np.ndarray], strategic: Sequence[np.ndarray], masks) -> list[np.ndarray]:
    return [np.where(mk[:, None], s, h) for h, s, mk in zip(honest, strategic, masks)]


@dataclass
class StrategicOutcome:
    honest: list[np.ndarray]
    strategic: list[np.ndarray]
    masks: list[np.ndarray]


def strategic_outcome(gevn, gesn, utilities: Sequence[np.ndarray], fraction: float, seed: int) -> StrategicOutcome:
    """Outcomes with everyone honest and with the masked voters using ``gesn``."""
    utilities = list(utilities)
    ballots = [gevn.ballots(u) for u in utilities]
    honest = gevn.predict_profiles(ballots)
    masks = sample_masks([u.shape[0] for u in utilities], fraction, seed)
    needs_results = getattr(gesn, "info", None) == "results"
    strat = strategize_many(gesn, utilities, honest if needs_results else None)
    return StrategicOutcome(honest, gevn.predict_profiles(mixed_profiles(ballots, strat, masks)), masks)


def manipulation_gain(gevn, gesn, dataset: Sequence[LabeledElection], fraction: float = 0.2, seed: int = 0) -> float:
    """Mean utility change of strategic voters relative to honest voting."""
    utilities = [e.utilities for e in dataset]
    out = strategic_outcome(gevn, gesn, utilities, fraction, seed)
    deltas = [(u[mk] @ (ps - ph)) for u, ph, ps, mk in zip(utilities, out.honest, out.strategic, out.masks)]
    deltas = np.concatenate(deltas) if deltas else np.zeros(0)
    return float(deltas.mean()) if deltas.size else 0.0


def strategic_welfare(gevn, gesn, dataset: Sequence[LabeledElection], kind, fraction: float = 0.2, seed: int = 0):
    """(expected welfare, mean rational loss of strategic voters) under manipulation."""
    utilities = [e.utilities for e in dataset]
    out = strategic_outcome(gevn, gesn, utilities, fraction, seed)
    welfare = expected_welfare(None, dataset, kind, preds=out.strategic)
    losses = np.concatenate([-(u[mk] @ p) for u, p, mk in zip(utilities, out.strategic, out.masks)])
    return welfare, float(losses.mean()) if losses.size else 0.0


# ------------------------------------------------------------------ audits


def anonymity_deviation(mech: Mechanism, profiles: Sequence[np.ndarray], trials: int, rng) -> float:
    base = mech(profiles)
    worst = 0.0
    for _ in range(trials):
        perms = [rng.permutation(p.shape[0]) for p in profiles]
        out = mech([p[s] for p, s in zip(profiles, perms)])
        worst = max(worst, max(float(np.abs(a - b).max()) for a, b in zip(out, base)))
    return worst


def neutrality_deviation(mech: Mechanism, profiles: Sequence[np.ndarray], trials: int, rng) -> float:
    base = mech(profiles)
    worst = 0.0
    for _ in range(trials):
        perms = [rng.permutation(p.shape[1]) for p in profiles]
        out = mech([p[:, t] for p, t in zip(profiles, perms)])
        worst = max(worst, max(float(np.abs(a - b[t]).max()) for a, b, t in zip(out, base, perms)))
    return worst


def monotonicity_violation(mech: Mechanism, profiles: Sequence[np.ndarray], pairs: int, rng, eps: float = FD_EPS) -> float:
    """Mean over random (voter, candidate) probes of ``max(0, -dp_j/dsigma_ij)``."""
    plus, minus, cells = [], [], []
    for k, p in enumerate(profiles):
        n, m = p.shape
        for flat in rng.choice(n * m, size=min(pairs, n * m), replace=False):
            i, j = divmod(int(flat), m)
            up, down = p.copy(), p.copy()
            up[i, j] += eps
            down[i, j] -= eps
            plus.append(up)
            minus.append(down)
            cells.append(j)
    if not cells:
        return 0.0
    hi, lo = mech(plus), mech(minus)
    slopes = np.array([(a[j] - b[j]) / (2 * eps) for a, b, j in zip(hi, lo, cells)])
    return float(np.maximum(0.0, -slopes).mean())


@dataclass
class EvalReport:
    accuracy: float | None = None
    welfare: dict[str, float] = field(default_factory=dict)
    manipulation_gain: float | None = None
    anonymity_deviation: float | None = None
    neutrality_deviation: float | None = None
    monotonicity_violation: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def audit_axioms(model, profiles: Sequence[np.ndarray], trials: int = AUDIT_TRIALS, seed: int = 0, pairs: int = 4) -> EvalReport:
    if trials < 1:
        raise ValueError("need at least one permutation trial")
    mech = as_mechanism(model)
    profiles = [np.asarray(p, dtype=np.float64) for p in profiles]
    rng = np.random.default_rng(seed)
    return EvalReport(
        anonymity_deviation=anonymity_deviation(mech, profiles, trials, rng),
        neutrality_deviation=neutrality_deviation(mech, profiles, trials, rng),
        monotonicity_violation=monotonicity_violation(mech, profiles, pairs, rng),
    )
