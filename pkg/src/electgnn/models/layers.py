"""Parameter containers and MLP building blocks on top of the tape."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import autodiff as ad


class ParamStore(dict):
    """Ordered name -> array mapping owned by a model."""

    def add_linear(self, name: str, fan_in: int, fan_out: int, rng: np.random.Generator) -> None:
        # Kaiming fan-in scaling for ReLU-family MLPs
        self[f"{name}.w"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        self[f"{name}.b"] = np.zeros(fan_out)

    def add_norm(self, name: str, width: int) -> None:
        self[f"{name}.g"] = np.ones(width)
        self[f"{name}.b"] = np.zeros(width)

    def count(self) -> int:
        return int(sum(a.size for a in self.values()))

    def copy_arrays(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.items()}

    def load(self, arrays: dict[str, np.ndarray]) -> None:
        """Overwrite in place so tapes and optimisers keep valid references."""
        missing = set(self) ^ set(arrays)
        if missing:
            raise KeyError(f"parameter names differ: {sorted(missing)}")
        for k, v in arrays.items():
            if self[k].shape != np.shape(v):
                raise ValueError(f"parameter {k}: shape {np.shape(v)} != {self[k].shape}")
            self[k][...] = v


def dense(tape: ad.Tape, params: ParamStore, name: str, x) -> ad.Tensor:
    return ad.linear(x, tape.param(params[f"{name}.w"]), tape.param(params[f"{name}.b"]))


def norm(tape: ad.Tape, params: ParamStore, name: str, x) -> ad.Tensor:
    return ad.layer_norm(x, tape.param(params[f"{name}.g"]), tape.param(params[f"{name}.b"]))


def split_dense(tape: ad.Tape, params: ParamStore, name: str, parts: Sequence, widths: Sequence[int], bias: bool = True):
    """Project each concatenation block separately: ``[a|b|c] @ W == a@Wa + b@Wb + c@Wc``.

    Returns one projected tensor per part (bias folded into the first), so
    callers can gather node projections onto edges instead of gathering the
    wider node features first.
    """
    w = tape.param(params[f"{name}.w"])
    out = []
    start = 0
    for k, (x, width) in enumerate(zip(parts, widths)):
        block = w[start : start + width]
        start += width
        if k == 0 and bias:
            out.append(ad.linear(x, block, tape.param(params[f"{name}.b"])))
        else:
            out.append(ad.linear(x, block))
    return out


def add_mlp(params: ParamStore, name: str, widths: Sequence[int], rng, layer_norm: bool) -> None:
    for k in range(len(widths) - 1):
        params.add_linear(f"{name}.{k}", widths[k], widths[k + 1], rng)
        if layer_norm and k < len(widths) - 2:
            params.add_norm(f"{name}.{k}.norm", widths[k + 1])


def mlp_tail(tape, params, name: str, hidden, depth: int, layer_norm: bool, activation):
    """Finish an MLP whose first linear layer has already produced ``hidden``."""
    for k in range(depth - 1):
        if layer_norm:
            hidden = norm(tape, params, f"{name}.{k}.norm", hidden)
        hidden = activation(hidden)
        hidden = dense(tape, params, f"{name}.{k + 1}", hidden)
    return hidden


def mlp(tape, params, name: str, x, depth: int, layer_norm: bool = False, activation=ad.relu):
    return mlp_tail(tape, params, name, dense(tape, params, f"{name}.0", x), depth, layer_norm, activation)
