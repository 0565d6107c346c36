"""Training objectives: rule imitation, expected welfare, monotonicity, rationality.

Single-election versions take a 1-D probability tensor; the ``batch_*``
variants take the flat per-candidate vector produced for a :class:`GraphBatch`
and average over elections.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .core import column_welfare
from .models.graph import GraphBatch

NLL_FLOOR = 1e-12
MONO_EPS = 1e-3


def _check_index(k: int, size: int, what: str) -> None:
    if not 0 <= k < size:
        raise IndexError(f"{what} {k} out of range for size {size}")


def rule_loss(p, winner: int) -> ad.Tensor:
    """``-log p(winner)`` with ``p`` floored at 1e-12."""
    p = ad._lift(p, None)
    _check_index(winner, p.shape[0], "winner")
    return -ad.log(ad.clamp_min(p[winner], NLL_FLOOR))


def welfare_loss(p, utilities, kind) -> ad.Tensor:
    """Negative expected welfare ``-sum_j p(c_j) sw_U(c_j)``."""
    sw = column_welfare(utilities, kind)
    return -ad.sum_(ad.mul(p, sw))


def rational_loss(p, utilities, voter: int) -> ad.Tensor:
    """Negative expected utility of one voter under the outcome distribution."""
    u = np.asarray(utilities, dtype=np.float64)
    _check_index(voter, u.shape[0], "voter")
    return -ad.sum_(ad.mul(p, u[voter]))


def batch_rule_loss(p_flat, batch: GraphBatch, winners: Sequence[int]) -> ad.Tensor:
    winners = np.asarray(winners, dtype=np.int64)
    ms = np.array([m for _, m in batch.sizes])
    if winners.shape != (batch.num_graphs,) or (winners < 0).any() or (winners >= ms).any():
        raise IndexError("winner index out of range")
    picked = ad.gather(p_flat, batch.candidate_offset + winners, batch.num_candidates)
    return -ad.mean(ad.log(ad.clamp_min(picked, NLL_FLOOR)))


def batch_welfare_loss(p_flat, batch: GraphBatch, utilities: Sequence, kind) -> ad.Tensor:
    sw = np.concatenate([column_welfare(u, kind) for u in utilities])
    return -ad.sum_(ad.mul(p_flat, sw)) * (1.0 / batch.num_graphs)


def sample_pairs(sizes: Sequence[tuple[int, int]], count: int, rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """Draw up to ``count`` distinct (election, voter, candidate) triples uniformly."""
    cells = np.array([n * m for n, m in sizes])
    total = int(cells.sum())
    picks = rng.choice(total, size=min(count, total), replace=False)
    offsets = np.concatenate([[0], np.cumsum(cells)])
    out = []
    for flat in np.sort(picks):
        g = int(np.searchsorted(offsets, flat, side="right") - 1)
        local = int(flat - offsets[g])
        m = sizes[g][1]
        out.append((g, local // m, local % m))
    return out


def monotonicity_slopes(
    forward: Callable[[ad.Tape, GraphBatch], ad.Tensor],
    tape: ad.Tape,
    profiles: Sequence,
    pairs: Sequence[tuple[int, int, int]],
    eps: float = MONO_EPS,
) -> ad.Tensor:
    """Central differences ``d p(c_j) / d sigma_i(c_j)`` for each sampled triple.

    All ``2 * len(pairs)`` perturbed elections go through one batched forward
    pass on ``tape``, so the slopes stay differentiable in the parameters.
    """
    copies = []
    for g, i, j in pairs:
        base = np.asarray(profiles[g], dtype=np.float64)
        for sign in (1.0, -1.0):
            c = base.copy()
            c[i, j] += sign * eps
            copies.append(c)
    batch = GraphBatch(copies)
    p = forward(tape, batch)
    js = np.array([j for _, _, j in pairs], dtype=np.int64)
    plus = ad.gather(p, batch.candidate_offset[0::2] + js, batch.num_candidates)
    minus = ad.gather(p, batch.candidate_offset[1::2] + js, batch.num_candidates)
    return (plus - minus) * (1.0 / (2 * eps))


def monotonicity_loss(forward, tape: ad.Tape, profiles, pairs, eps: float = MONO_EPS) -> ad.Tensor:
    """Sum over sampled triples of ``max(0, -slope)``.

    ``profiles`` may be a single ballot matrix with ``(i, j)`` pairs or a list
    of matrices with ``(election, i, j)`` triples.
    """
    if isinstance(profiles, np.ndarray) and profiles.ndim == 2:
        profiles = [profiles]
        pairs = [(0, i, j) for i, j in pairs]
    if not pairs:
        return tape.constant(0.0)
    slopes = monotonicity_slopes(forward, tape, profiles, pairs, eps)
    return ad.sum_(ad.relu(-slopes))
