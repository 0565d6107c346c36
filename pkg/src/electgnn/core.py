"""Election domain types, ballot conversions, welfare and pairwise-majority machinery.

Candidate and voter indices are 0-based throughout the package.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

NASH_LOG_FLOOR = 1e-12


class WelfareKind(str, enum.Enum):
    UTILITARIAN = "utilitarian"
    NASH = "nash"
    RAWLSIAN = "rawlsian"


class BallotKind(str, enum.Enum):
    CARDINAL = "cardinal"
    RANKING = "ranking"


def _as_matrix(utilities) -> np.ndarray:
    u = np.asarray(utilities, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] < 1 or u.shape[1] < 1:
        raise ValueError(f"expected a non-empty n x m matrix, got shape {u.shape}")
    if not np.isfinite(u).all():
        raise ValueError("utility matrix contains non-finite entries")
    return u


@dataclass(frozen=True)
class Election:
    """Ground-truth utility profile of ``n`` voters over ``m`` candidates."""

    utilities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "utilities", _as_matrix(self.utilities))

    @property
    def n(self) -> int:
        return self.utilities.shape[0]

    @property
    def m(self) -> int:
        return self.utilities.shape[1]


@dataclass(frozen=True)
class PreferenceProfile:
    """Elicited ballots ``scores[i, j] = sigma_i(c_j)``."""

    scores: np.ndarray
    kind: BallotKind = BallotKind.CARDINAL

    def __post_init__(self):
        scores = _as_matrix(self.scores)
        kind = BallotKind(self.kind)
        if kind is BallotKind.RANKING:
            m = scores.shape[1]
            expected = 1.0 - np.arange(1, m + 1) / m
            if not np.allclose(np.sort(scores, axis=1)[:, ::-1], expected, atol=1e-12):
                raise ValueError("ranking-derived rows must permute the Borda scores 1 - r/m")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "kind", kind)

    @classmethod
    def from_utilities(cls, utilities, kind=BallotKind.CARDINAL) -> "PreferenceProfile":
        kind = BallotKind(kind)
        u = _as_matrix(utilities)
        if kind is BallotKind.CARDINAL:
            return cls(u.copy(), kind)
        return cls(borda_scores(utilities_to_ranking(u)), kind)

    @property
    def shape(self) -> tuple[int, int]:
        return self.scores.shape


def utilities_to_ranking(utilities) -> np.ndarray:
    """Rank candidates by decreasing utility (rank 1 is best).

    Works on a single row or on an ``n x m`` matrix. Ties go to the lower
    candidate index.
    """
    u = np.asarray(utilities, dtype=np.float64)
    if u.size == 0:
        raise ValueError("cannot rank an empty utility row")
    if not np.isfinite(u).all():
        raise ValueError("utilities must be finite")
    squeeze = u.ndim == 1
    u = np.atleast_2d(u)
    order = np.argsort(-u, axis=1, kind="stable")
    ranks = np.empty_like(order)
    rows = np.arange(u.shape[0])[:, None]
    ranks[rows, order] = np.arange(1, u.shape[1] + 1)
    return ranks[0] if squeeze else ranks


def validate_ranking(ranks) -> np.ndarray:
    r = np.asarray(ranks)
    if r.ndim != 2 or r.size == 0:
        raise ValueError(f"ranking matrix must be non-empty 2-D, got shape {r.shape}")
    m = r.shape[1]
    if not np.array_equal(np.sort(r, axis=1), np.broadcast_to(np.arange(1, m + 1), r.shape)):
        raise ValueError("every ranking row must be a permutation of 1..m")
    return r.astype(np.int64, copy=False)


def ranking_to_borda(rank: int, m: int) -> float:
    """Normalised Borda score ``1 - r/m`` of a candidate placed at ``rank``."""
    if m < 1 or not 1 <= rank <= m:
        raise ValueError(f"rank {rank} out of range for {m} candidates")
    return 1.0 - rank / m


def borda_scores(ranks) -> np.ndarray:
    r = validate_ranking(ranks)
    return 1.0 - r / r.shape[1]


def column_welfare(utilities, kind, log_space: bool = False) -> np.ndarray:
    """Welfare of every candidate column.

    With ``log_space=True`` the Nash product is evaluated as
    ``exp(sum(log(max(u, 1e-12))))``, which requires positive utilities.
    """
    u = _as_matrix(utilities)
    kind = WelfareKind(kind)
    if kind is WelfareKind.UTILITARIAN:
        return u.sum(axis=0)
    if kind is WelfareKind.RAWLSIAN:
        return u.min(axis=0)
    if log_space:
        if (u <= 0).any():
            raise ValueError("log-space Nash welfare needs strictly positive utilities")
        return np.exp(np.log(np.maximum(u, NASH_LOG_FLOOR)).sum(axis=0))
    return u.prod(axis=0)


def welfare(utilities, kind, j: int, log_space: bool = False) -> float:
    u = _as_matrix(utilities)
    if not 0 <= j < u.shape[1]:
        raise IndexError(f"candidate {j} out of range for {u.shape[1]} candidates")
    return float(column_welfare(u, kind, log_space)[j])


def argmax_lowest(scores) -> int:
    """Index of the maximum with ties to the lowest index."""
    return int(np.argmax(np.asarray(scores)))


def welfare_winner(utilities, kind) -> int:
    return argmax_lowest(column_welfare(utilities, kind))


def pairwise_counts(ranks) -> np.ndarray:
    """``P[a, b]`` = number of voters ranking ``a`` strictly above ``b``."""
    r = validate_ranking(ranks)
    return (r[:, :, None] < r[:, None, :]).sum(axis=0)


def majority_matrix(ranks) -> np.ndarray:
    """Boolean ``B[a, b]``: ``a`` beats ``b`` by a strict majority of the head-to-head."""
    p = pairwise_counts(ranks)
    return p > p.T


def condorcet_winner(ranks) -> int | None:
    beats = majority_matrix(ranks)
    m = beats.shape[0]
    for a in range(m):
        if beats[a].sum() == m - 1:
            return a
    return None


def smith_set(ranks) -> frozenset[int]:
    """Smallest non-empty set whose members all beat every outsider.

    A candidate belongs to the Smith set iff it reaches every other
    candidate through the weak-majority relation (beats or ties).
    """
    beats = majority_matrix(ranks)
    m = beats.shape[0]
    reach = ~beats.T  # a reaches b if b does not beat a
    np.fill_diagonal(reach, True)
    for k in range(m):  # Warshall closure
        reach |= reach[:, k : k + 1] & reach[k : k + 1, :]
    return frozenset(int(a) for a in np.flatnonzero(reach.all(axis=1)))
