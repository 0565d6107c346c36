"""Graph election voting network.

Each layer first refreshes every edge latent from its two endpoints,

    h_ij <- phi_e(h_i, h_j, h_ij)

then every node sums messages ``psi(h_i, h_j, h_ij)`` from its neighbours
(computed with the fresh edge latents) and updates

    h_i <- phi_v(h_i, sum_j psi(h_i, h_j, h_ij)).

``phi_e``, ``psi`` and ``phi_v`` are two-layer MLPs (Linear, LayerNorm, ReLU,
Linear) over the concatenation of their arguments. Messages live on edges and
have the edge width. After the last layer the
candidate latents are projected to one logit each and a per-election softmax
turns them into a distribution over candidates. Voter nodes never reach the
readout, which is the candidate mask.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .. import autodiff as ad
from ..core import BallotKind, PreferenceProfile
from .graph import GraphBatch
from .layers import ParamStore, add_mlp, dense, mlp_tail, norm, split_dense


@dataclass(frozen=True)
class GevnConfig:
    node_width: int = 58
    edge_width: int = 19
    layers: int = 4
    node_inputs: int = 2
    input_kind: str = "ranking"
    seed: int = 0

    def __post_init__(self):
        BallotKind(self.input_kind)
        if min(self.node_width, self.edge_width, self.layers, self.node_inputs) < 1:
            raise ValueError(f"invalid GEVN config {self}")


def init_message_passing(params: ParamStore, cfg, rng: np.random.Generator) -> None:
    dn, de = cfg.node_width, cfg.edge_width
    params.add_linear("node_in", cfg.node_inputs, dn, rng)
    params.add_linear("edge_in", 1, de, rng)
    for layer in range(cfg.layers):
        add_mlp(params, f"l{layer}.edge", [2 * dn + de, de, de], rng, layer_norm=True)
        add_mlp(params, f"l{layer}.msg", [2 * dn + de, de, de], rng, layer_norm=True)
        add_mlp(params, f"l{layer}.node", [dn + de, dn, dn], rng, layer_norm=True)


def message_passing(tape: ad.Tape, params: ParamStore, cfg, batch: GraphBatch, edge_values=None, node_extra=None):
    """Run all layers; returns final ``(node_latents, edge_latents)``."""
    dn, de = cfg.node_width, cfg.edge_width
    x_nodes = batch.node_features
    if node_extra is not None:
        x_nodes = ad.concat([x_nodes, ad.reshape(node_extra, (batch.num_nodes, -1))], axis=1)
    if edge_values is None:
        edge_values = batch.edge_features
    h = dense(tape, params, "node_in", x_nodes)
    e = dense(tape, params, "edge_in", ad.reshape(edge_values, (batch.num_edges, 1)))
    voters, cands = batch.voter_nodes, batch.candidate_nodes
    for layer in range(cfg.layers):
        try:
            pv, pc, pe = split_dense(tape, params, f"l{layer}.edge.0", [h, h, e], [dn, dn, de])
            z = ad.gather(pv, voters) + ad.gather(pc, cands) + pe
            e = mlp_tail(tape, params, f"l{layer}.edge", z, 2, True, ad.relu)

            pt, ps, pe = split_dense(tape, params, f"l{layer}.msg.0", [h, h, e], [dn, dn, de])
            to_cand = ad.gather(pt, cands) + ad.gather(ps, voters)
            to_voter = ad.gather(pt, voters) + ad.gather(ps, cands)
            z = ad.concat([to_cand, to_voter], axis=0) + ad.concat([pe, pe], axis=0)
            # psi ends in a linear map, so sum the hidden activations first:
            # sum_j (a_j W + b) == (sum_j a_j) W + deg * b
            act = ad.relu(norm(tape, params, f"l{layer}.msg.0.norm", z))
            pooled = ad.segment_sum(act, batch.message_targets)
            agg = ad.linear(pooled, tape.param(params[f"l{layer}.msg.1.w"])) + ad.mul(
                batch.degree[:, None], tape.param(params[f"l{layer}.msg.1.b"])
            )

            ph, pa = split_dense(tape, params, f"l{layer}.node.0", [h, agg], [dn, de])
            h = mlp_tail(tape, params, f"l{layer}.node", ph + pa, 2, True, ad.relu)
        except FloatingPointError as exc:
            raise FloatingPointError(f"message passing layer {layer}: {exc}") from exc
    return h, e


class Gevn:
    """Voting mechanism: ballots in, one probability per candidate out."""

    kind = "gevn"

    def __init__(self, config: GevnConfig | None = None):
        self.config = config or GevnConfig()
        self.params = ParamStore()
        rng = np.random.default_rng(self.config.seed)
        init_message_passing(self.params, self.config, rng)
        self.params.add_linear("out", self.config.node_width, 1, rng)

    @property
    def input_kind(self) -> BallotKind:
        return BallotKind(self.config.input_kind)

    def config_dict(self) -> dict:
        return asdict(self.config)

    def num_parameters(self) -> int:
        return self.params.count()

    def logits(self, tape: ad.Tape, batch: GraphBatch, edge_values=None, node_extra=None) -> ad.Tensor:
        h, _ = message_passing(tape, self.params, self.config, batch, edge_values, node_extra)
        cand = ad.gather(h, batch.candidate_rows)
        return ad.reshape(dense(tape, self.params, "out", cand), (batch.num_candidates,))

    def forward(self, tape: ad.Tape, batch: GraphBatch, edge_values=None, node_extra=None) -> ad.Tensor:
        """Flat vector of candidate probabilities, elections concatenated."""
        return ad.segment_softmax(self.logits(tape, batch, edge_values, node_extra), batch.candidate_graph)

    def ballots(self, utilities) -> np.ndarray:
        return PreferenceProfile.from_utilities(utilities, self.input_kind).scores

    def predict_profiles(self, profiles: Sequence, batch_size: int = 256) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(profiles), batch_size):
            batch = GraphBatch(profiles[start : start + batch_size])
            p = self.forward(ad.Tape(), batch).value
            out.extend(batch.split_candidates(p))
        return out

    def predict(self, utilities: Sequence, batch_size: int = 256) -> list[np.ndarray]:
        return self.predict_profiles([self.ballots(u) for u in utilities], batch_size)
