"""DeepSets election baseline with a fixed candidate count.

Each voter's ballot row is encoded by an MLP, the encodings are summed over
voters and a decoder MLP emits one logit per candidate position. The model
is invariant to voter order but its input and output widths pin ``m``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .. import autodiff as ad
from ..core import BallotKind, PreferenceProfile
from .graph import GraphBatch
from .layers import ParamStore, add_mlp, mlp


@dataclass(frozen=True)
class DeepSetsConfig:
    candidates: int
    width: int = 64
    encoder_layers: int = 3
    decoder_layers: int = 5
    input_kind: str = "ranking"
    seed: int = 0


class DeepSets:
    kind = "deepsets"

    def __init__(self, config: DeepSetsConfig):
        self.config = config
        self.params = ParamStore()
        rng = np.random.default_rng(config.seed)
        m, w = config.candidates, config.width
        add_mlp(self.params, "enc", [m] + [w] * config.encoder_layers, rng, layer_norm=True)
        add_mlp(self.params, "dec", [w] * config.decoder_layers + [m], rng, layer_norm=True)

    @property
    def input_kind(self) -> BallotKind:
        return BallotKind(self.config.input_kind)

    def config_dict(self) -> dict:
        return asdict(self.config)

    def num_parameters(self) -> int:
        return self.params.count()

    def forward(self, tape: ad.Tape, batch: GraphBatch, edge_values=None) -> ad.Tensor:
        m = self.config.candidates
        bad = [s for s in batch.sizes if s[1] != m]
        if bad:
            raise ValueError(f"DeepSets model was built for {m} candidates, got an election with {bad[0][1]}")
        values = batch.edge_features if edge_values is None else edge_values
        rows = ad.reshape(values, (batch.num_voters, m))
        enc = mlp(tape, self.params, "enc", rows, self.config.encoder_layers, layer_norm=True)
        pooled = ad.segment_sum(enc, batch.voter_graph)
        logits = mlp(tape, self.params, "dec", pooled, self.config.decoder_layers, layer_norm=True)
        return ad.segment_softmax(ad.reshape(logits, (batch.num_candidates,)), batch.candidate_graph)

    def ballots(self, utilities) -> np.ndarray:
        return PreferenceProfile.from_utilities(utilities, self.input_kind).scores

    def predict_profiles(self, profiles: Sequence, batch_size: int = 256) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(profiles), batch_size):
            batch = GraphBatch(profiles[start : start + batch_size])
            out.extend(batch.split_candidates(self.forward(ad.Tape(), batch).value))
        return out

    def predict(self, utilities: Sequence, batch_size: int = 256) -> list[np.ndarray]:
        return self.predict_profiles([self.ballots(u) for u in utilities], batch_size)
