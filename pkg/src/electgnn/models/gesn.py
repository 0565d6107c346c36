"""Strategy networks: map true utilities to the ballots strategic voters submit.

Three information settings decide what a strategic ballot may depend on:

``private``
    Only the voter's own utility row. A DeepSet over the row's entries:
    a linear embedding to 32 features, two DeepSet layers (a LeakyReLU MLP
    per entry, concatenation with the row-wide sum, a second MLP), a residual
    concatenation with the initial embedding and a three-layer head.
``public``
    The whole utility matrix, through a message-passing network of the same
    form as the voting network, read out per edge.
``results``
    As ``public``, with the honest election outcome appended to every
    candidate node's input features.

Every output row passes through a normalisation: ``budget`` rescales a
per-voter softmax so the row sums to ``a``; ``range`` maps each entry into
``[a, b]`` with an affine sigmoid.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np

from .. import autodiff as ad
from .gevn import init_message_passing, message_passing
from .graph import GraphBatch
from .layers import ParamStore, add_mlp, dense, mlp

DEEPSET_WIDTH = 32


class InfoSetting(str, enum.Enum):
    PRIVATE = "private"
    PUBLIC = "public"
    RESULTS = "results"


@dataclass(frozen=True)
class Normalization:
    mode: str = "range"
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.mode not in ("budget", "range"):
            raise ValueError(f"unknown normalisation mode {self.mode!r}")
        if self.mode == "range" and not self.a < self.b:
            raise ValueError("range normalisation needs a < b")

    def apply(self, raw: ad.Tensor, voters: ad.Index) -> ad.Tensor:
        if self.mode == "budget":
            return ad.segment_softmax(raw, voters) * self.a
        return ad.sigmoid(raw) * (self.b - self.a) + self.a

    @classmethod
    def parse(cls, text: str) -> "Normalization":
        """``budget:A`` or ``range:A:B``."""
        parts = text.split(":")
        try:
            if parts[0] == "budget" and len(parts) == 2:
                return cls("budget", float(parts[1]), 0.0)
            if parts[0] == "range" and len(parts) == 3:
                return cls("range", float(parts[1]), float(parts[2]))
        except ValueError:
            pass
        raise ValueError(f"bad normalisation spec {text!r}; use budget:A or range:A:B")


@dataclass(frozen=True)
class GesnConfig:
    info: str = "private"
    normalization: Normalization = Normalization()
    # width/depth of the message-passing variant used for public/results
    node_width: int = 32
    edge_width: int = 16
    layers: int = 2
    seed: int = 0

    def __post_init__(self):
        InfoSetting(self.info)
        if isinstance(self.normalization, dict):
            object.__setattr__(self, "normalization", Normalization(**self.normalization))

    @property
    def node_inputs(self) -> int:
        return 3 if self.info == InfoSetting.RESULTS else 2


class Gesn:
    kind = "gesn"

    def __init__(self, config: GesnConfig | None = None):
        self.config = config or GesnConfig()
        self.params = ParamStore()
        rng = np.random.default_rng(self.config.seed)
        if self.info is InfoSetting.PRIVATE:
            w = DEEPSET_WIDTH
            self.params.add_linear("embed", 1, w, rng)
            for k in range(2):
                add_mlp(self.params, f"set{k}.inner", [w, w, w], rng, layer_norm=False)
                add_mlp(self.params, f"set{k}.outer", [2 * w, w, w], rng, layer_norm=False)
            add_mlp(self.params, "head", [2 * w, w, w, 1], rng, layer_norm=False)
        else:
            init_message_passing(self.params, self.config, rng)
            self.params.add_linear("out", self.config.edge_width, 1, rng)

    @property
    def info(self) -> InfoSetting:
        return InfoSetting(self.config.info)

    def config_dict(self) -> dict:
        return asdict(self.config)

    def num_parameters(self) -> int:
        return self.params.count()

    def forward(self, tape: ad.Tape, batch: GraphBatch, honest_pscf=None) -> ad.Tensor:
        """Strategic ballot for every (voter, candidate) edge of ``batch``.

        ``batch`` carries true utilities as edge features. ``honest_pscf`` is the
        flat per-candidate outcome under truthful voting, required in the
        results setting only.
        """
        if self.info is InfoSetting.RESULTS and honest_pscf is None:
            raise ValueError("the results setting needs the honest election outcome")
        if self.info is InfoSetting.PRIVATE:
            raw = self._private(tape, batch)
        else:
            extra = None
            if self.info is InfoSetting.RESULTS:
                extra = np.zeros(batch.num_nodes)
                extra[batch.candidate_rows.indices] = np.asarray(
                    honest_pscf.value if isinstance(honest_pscf, ad.Tensor) else honest_pscf
                )
            _, e = message_passing(tape, self.params, self.config, batch, node_extra=extra)
            raw = ad.reshape(dense(tape, self.params, "out", e), (batch.num_edges,))
        return self.config.normalization.apply(raw, batch.edge_voter_index)

    def _private(self, tape: ad.Tape, batch: GraphBatch) -> ad.Tensor:
        rows = batch.edge_voter_index
        x = batch.edge_features.reshape(-1, 1)
        embedded = dense(tape, self.params, "embed", x)
        h = embedded
        for k in range(2):
            inner = mlp(tape, self.params, f"set{k}.inner", h, 2, activation=ad.leaky_relu)
            pooled = ad.gather(ad.segment_sum(inner, rows), rows)
            h = mlp(tape, self.params, f"set{k}.outer", ad.concat([inner, pooled], axis=1), 2, activation=ad.leaky_relu)
        out = mlp(tape, self.params, "head", ad.concat([h, embedded], axis=1), 3, activation=ad.leaky_relu)
        return ad.reshape(out, (batch.num_edges,))

    def strategize(self, utilities, honest_pscf=None) -> np.ndarray:
        """Ballot matrix for one election without gradients."""
        return strategize_many(self, [utilities], None if honest_pscf is None else [honest_pscf])[0]


class HonestStrategy:
    """Reports true utilities; the identity strategy."""

    kind = "honest"
    info = InfoSetting.PRIVATE

    def forward(self, tape: ad.Tape, batch: GraphBatch, honest_pscf=None) -> ad.Tensor:
        return tape.constant(batch.edge_features)

    def strategize(self, utilities, honest_pscf=None) -> np.ndarray:
        return np.asarray(utilities, dtype=np.float64).copy()


def strategize_many(strategy, utilities, honest_pscfs=None, batch_size: int = 256) -> list[np.ndarray]:
    """Batched :meth:`Gesn.strategize` over a list of utility matrices."""
    out: list[np.ndarray] = []
    for start in range(0, len(utilities), batch_size):
        chunk = utilities[start : start + batch_size]
        batch = GraphBatch(chunk)
        honest = None
        if honest_pscfs is not None:
            honest = np.concatenate(honest_pscfs[start : start + batch_size])
        flat = strategy.forward(ad.Tape(), batch, honest).value
        out.extend(batch.split_edges(flat))
    return out
