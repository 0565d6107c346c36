"""Classical single-winner rules over strict ranking matrices.

``ranks[i, j]`` is the position (1 = best) voter ``i`` gives candidate ``j``.
Every rule breaks ties toward the lowest candidate index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import argmax_lowest, pairwise_counts, utilities_to_ranking, validate_ranking


class RuleKind(str, enum.Enum):
    PLURALITY = "plurality"
    BORDA = "borda"
    COPELAND = "copeland"
    MAXIMIN = "maximin"
    STV = "stv"


@dataclass(frozen=True)
class RuleResult:
    winner: int
    scores: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rounds: tuple[tuple[float, ...], ...] = ()


def plurality(ranks) -> RuleResult:
    r = validate_ranking(ranks)
    scores = (r == 1).sum(axis=0).astype(np.float64)
    return RuleResult(argmax_lowest(scores), scores)


def borda_rule(ranks) -> RuleResult:
    r = validate_ranking(ranks)
    m = r.shape[1]
    # integer points first so exact ties survive the division
    scores = (m - r).sum(axis=0) / m
    return RuleResult(argmax_lowest(scores), scores)


def copeland(ranks) -> RuleResult:
    p = pairwise_counts(ranks)
    wins = (p > p.T).sum(axis=1)
    draws = (p == p.T).sum(axis=1) - 1  # diagonal always draws with itself
    scores = wins + 0.5 * draws
    return RuleResult(argmax_lowest(scores), scores.astype(np.float64))


def maximin(ranks) -> RuleResult:
    p = pairwise_counts(ranks).astype(np.float64)
    m = p.shape[0]
    if m == 1:
        return RuleResult(0, np.zeros(1))
    np.fill_diagonal(p, np.inf)
    scores = p.min(axis=1)
    return RuleResult(argmax_lowest(scores), scores)


def stv(ranks) -> RuleResult:
    """Instant-runoff: drop the weakest candidate until someone holds a strict majority.

    ``scores`` is empty; ``rounds`` records the first-preference tallies of
    every round (eliminated candidates carry ``nan``).
    """
    r = validate_ranking(ranks)
    n, m = r.shape
    preference = np.argsort(r, axis=1)  # candidates in preference order per voter
    alive = np.ones(m, dtype=bool)
    rounds = []
    while True:
        alive_pref = alive[preference]
        top = preference[np.arange(n), alive_pref.argmax(axis=1)]
        tally = np.bincount(top, minlength=m).astype(np.float64)
        rounds.append(tuple(np.where(alive, tally, np.nan)))
        leader = argmax_lowest(np.where(alive, tally, -1.0))
        if tally[leader] * 2 > n or alive.sum() == 1:
            return RuleResult(leader, np.zeros(0), tuple(rounds))
        loser = int(np.argmin(np.where(alive, tally, np.inf)))
        alive[loser] = False


RULES = {
    RuleKind.PLURALITY: plurality,
    RuleKind.BORDA: borda_rule,
    RuleKind.COPELAND: copeland,
    RuleKind.MAXIMIN: maximin,
    RuleKind.STV: stv,
}


def run_rule(kind, ranks) -> RuleResult:
    return RULES[RuleKind(kind)](ranks)


def rule_winner(kind, utilities) -> int:
    """Winner of ``kind`` on the strict rankings induced by a utility matrix."""
    return run_rule(kind, utilities_to_ranking(np.asarray(utilities, dtype=np.float64))).winner
