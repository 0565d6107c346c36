"""Election bipartite graphs and their disjoint-union batches."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..autodiff import Index
from ..core import PreferenceProfile

VOTER = np.array([1.0, 0.0])
CANDIDATE = np.array([0.0, 1.0])


def _scores(profile) -> np.ndarray:
    if isinstance(profile, PreferenceProfile):
        return profile.scores
    s = np.asarray(profile, dtype=np.float64)
    if s.ndim != 2 or 0 in s.shape:
        raise ValueError(f"profile must be a non-empty n x m matrix, got shape {s.shape}")
    return s


@dataclass(frozen=True)
class ElectionGraph:
    """Complete bipartite voter/candidate graph of one election.

    Nodes ``0..n-1`` are voters and ``n..n+m-1`` candidates. Edge ``k = i*m + j``
    joins voter ``i`` and candidate ``j`` and carries ``sigma_i(c_j)``; message
    passing uses every edge in both directions.
    """

    n: int
    m: int
    node_features: np.ndarray
    voter_node: np.ndarray
    candidate_node: np.ndarray
    edge_features: np.ndarray

    @property
    def num_edges(self) -> int:
        return self.n * self.m

    def edge(self, i: int, j: int) -> float:
        return float(self.edge_features[i * self.m + j])


def build_ebg(profile) -> ElectionGraph:
    s = _scores(profile)
    n, m = s.shape
    nodes = np.vstack([np.tile(VOTER, (n, 1)), np.tile(CANDIDATE, (m, 1))])
    voter = np.repeat(np.arange(n), m)
    cand = n + np.tile(np.arange(m), n)
    return ElectionGraph(n, m, nodes, voter, cand, s.reshape(-1).copy())


class GraphBatch:
    """Disjoint union of election graphs sharing one set of index arrays.

    Edge order is the concatenation of every profile flattened row-major, so
    a stacked per-entry vector of ballots lines up with ``edge_features``.
    """

    def __init__(self, profiles: Sequence):
        scores = [_scores(p) for p in profiles]
        if not scores:
            raise ValueError("cannot batch zero elections")
        self.sizes = [s.shape for s in scores]
        ns = np.array([s[0] for s in self.sizes])
        ms = np.array([s[1] for s in self.sizes])
        self.num_graphs = len(scores)
        self.num_voters = int(ns.sum())
        self.num_candidates = int(ms.sum())
        self.num_nodes = self.num_voters + self.num_candidates
        self.num_edges = int((ns * ms).sum())
        self.edge_features = np.concatenate([s.reshape(-1) for s in scores])

        node_offset = np.concatenate([[0], np.cumsum(ns + ms)[:-1]])
        voter_offset = np.concatenate([[0], np.cumsum(ns)[:-1]])
        cand_offset = np.concatenate([[0], np.cumsum(ms)[:-1]])
        edge_offset = np.concatenate([[0], np.cumsum(ns * ms)[:-1]])
        self.voter_offset, self.candidate_offset, self.edge_offset = voter_offset, cand_offset, edge_offset

        g_of_edge = np.repeat(np.arange(self.num_graphs), ns * ms)
        local = np.arange(self.num_edges) - edge_offset[g_of_edge]
        m_of_edge = ms[g_of_edge]
        i_local, j_local = local // m_of_edge, local % m_of_edge
        voter_node = node_offset[g_of_edge] + i_local
        cand_node = node_offset[g_of_edge] + ns[g_of_edge] + j_local

        self.edge_graph = g_of_edge
        self.edge_voter = voter_offset[g_of_edge] + i_local  # global voter id
        self.edge_candidate = cand_offset[g_of_edge] + j_local  # global candidate id
        self.voter_nodes = Index(voter_node, self.num_nodes)
        self.candidate_nodes = Index(cand_node, self.num_nodes)
        self.message_targets = Index(np.concatenate([cand_node, voter_node]), self.num_nodes)
        self.degree = self.message_targets.counts().astype(np.float64)

        is_voter = np.zeros(self.num_nodes, dtype=bool)
        g_of_voter = np.repeat(np.arange(self.num_graphs), ns)
        is_voter[node_offset[g_of_voter] + np.arange(self.num_voters) - voter_offset[g_of_voter]] = True
        self.is_voter = is_voter
        self.node_features = np.where(is_voter[:, None], VOTER, CANDIDATE)
        self.candidate_rows = Index(np.flatnonzero(~is_voter), self.num_nodes)
        self.candidate_graph = Index(np.repeat(np.arange(self.num_graphs), ms), self.num_graphs)
        self.voter_graph = Index(g_of_voter, self.num_graphs)
        self.edge_voter_index = Index(self.edge_voter, self.num_voters)
        self.edge_candidate_index = Index(self.edge_candidate, self.num_candidates)

    def split_candidates(self, flat: np.ndarray) -> list[np.ndarray]:
        """Cut a per-candidate vector back into one array per election."""
        bounds = np.cumsum([m for _, m in self.sizes])[:-1]
        return np.split(np.asarray(flat), bounds)

    def split_edges(self, flat: np.ndarray) -> list[np.ndarray]:
        """Cut a per-edge vector back into one ``n x m`` matrix per election."""
        bounds = np.cumsum([n * m for n, m in self.sizes])[:-1]
        return [part.reshape(s) for part, s in zip(np.split(np.asarray(flat), bounds), self.sizes)]

    def profile(self, g: int) -> np.ndarray:
        n, m = self.sizes[g]
        start = self.edge_offset[g]
        return self.edge_features[start : start + n * m].reshape(n, m)
