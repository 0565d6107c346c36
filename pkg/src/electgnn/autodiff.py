"""Reverse-mode automatic differentiation over dense float64 arrays.

A :class:`Tape` records every operation whose inputs need gradients, in
execution order, and :meth:`Tape.backward` replays the records in reverse.
Parameters are plain numpy arrays owned by the models; ``tape.param(arr)``
lifts an array onto the tape, as a gradient-tracking leaf when the array was
registered with :meth:`Tape.watch` and as a constant otherwise. Leaving a
parameter unwatched is how networks are frozen.

    tape = Tape()
    tape.watch(model.params)
    loss = some_loss(model.forward(tape, batch))
    tape.backward(loss)
    grads = tape.gradients(model.params)
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import _kernels

DTYPE = np.float64


class Tensor:
    __slots__ = ("value", "tape", "requires_grad", "grad")

    def __init__(self, value, tape: "Tape | None" = None, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=DTYPE)
        self.tape = tape
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def __len__(self) -> int:
        return len(self.value)

    def __repr__(self) -> str:
        flag = ", requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def numpy(self) -> np.ndarray:
        return self.value

    def item(self) -> float:
        return float(self.value)

    __array_priority__ = 100.0

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, key):
        return getitem(self, key)

    def sum(self, axis=None):
        return sum_(self, axis)

    def mean(self, axis=None):
        return mean(self, axis)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 else shape)


class _Record:
    __slots__ = ("op", "out", "inputs", "backward")

    def __init__(self, op, out, inputs, backward):
        self.op = op
        self.out = out
        self.inputs = inputs
        self.backward = backward


class Tape:
    """Ordered op records plus a registry of the parameters being trained."""

    def __init__(self, check_finite: bool = True):
        self.records: list[_Record] = []
        self.check_finite = check_finite
        self._watched: set[int] = set()
        self._leaves: dict[int, Tensor] = {}
        self._done = False

    def watch(self, params: Mapping[str, np.ndarray] | Iterable[np.ndarray]) -> None:
        arrays = params.values() if isinstance(params, Mapping) else params
        for arr in arrays:
            self._watched.add(id(arr))

    def param(self, arr: np.ndarray) -> Tensor:
        leaf = self._leaves.get(id(arr))
        if leaf is None:
            leaf = Tensor(arr, self, requires_grad=id(arr) in self._watched)
            leaf.value = arr  # no copy: the leaf aliases the parameter storage
            self._leaves[id(arr)] = leaf
        return leaf

    def variable(self, value) -> Tensor:
        return Tensor(np.array(value, dtype=DTYPE), self, requires_grad=True)

    def constant(self, value) -> Tensor:
        return Tensor(value, self, requires_grad=False)

    def record(self, op: str, value: np.ndarray, inputs: Sequence[Tensor], backward) -> Tensor:
        if self.check_finite and not np.isfinite(value).all():
            raise FloatingPointError(f"non-finite output from {op}")
        needs = any(t.requires_grad for t in inputs)
        out = Tensor(value, self, requires_grad=needs)
        if needs:
            self.records.append(_Record(op, out, inputs, backward))
        return out

    def backward(self, output: Tensor) -> None:
        if output.value.size != 1:
            raise ValueError(f"backward needs a scalar output, got shape {output.shape}")
        if self._done:
            raise RuntimeError("backward already ran on this tape")
        self._done = True
        if not output.requires_grad:
            return
        output.grad = np.ones_like(output.value)
        for rec in reversed(self.records):
            g = rec.out.grad
            if g is None:
                continue
            rec.out.grad = None  # intermediate adjoints are not needed afterwards
            for inp, gi in zip(rec.inputs, rec.backward(g)):
                if gi is None or not inp.requires_grad:
                    continue
                inp.grad = gi if inp.grad is None else inp.grad + gi
        # records reference the tape through their outputs; drop them so the
        # activations are freed without waiting for the cycle collector
        self.records.clear()

    def grad(self, arr: np.ndarray) -> np.ndarray:
        leaf = self._leaves.get(id(arr))
        if leaf is None or leaf.grad is None:
            return np.zeros_like(arr)
        return leaf.grad

    def gradients(self, params: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
        return {name: self.grad(arr) for name, arr in params.items()}


def _tape_of(*xs) -> Tape | None:
    for x in xs:
        if isinstance(x, Tensor) and x.tape is not None:
            return x.tape
    return None


def _lift(x, tape: Tape | None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, tape, requires_grad=False)


def _emit(op: str, value: np.ndarray, inputs: Sequence[Tensor], backward) -> Tensor:
    tape = _tape_of(*inputs)
    if tape is None:
        if not np.isfinite(value).all():
            raise FloatingPointError(f"non-finite output from {op}")
        return Tensor(value)
    return tape.record(op, value, inputs, backward)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


class Index:
    """Integer index vector into ``size`` slots, with a cached scatter matrix.

    Used both for row gathers (``x[indices]``) and for their adjoint, the
    segment sum that adds rows sharing a slot.
    """

    def __init__(self, indices, size: int):
        self.indices = np.asarray(indices, dtype=np.int64)
        self.size = int(size)
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.size):
            raise IndexError("index out of range for segment count")
        self._matrix = None

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def matrix(self):
        if self._matrix is None:
            k = len(self.indices)
            self._matrix = sp.csr_matrix(
                (np.ones(k), (self.indices, np.arange(k))), shape=(self.size, k)
            )
        return self._matrix

    def scatter(self, x: np.ndarray) -> np.ndarray:
        """Sum rows of ``x`` into ``size`` slots."""
        if x.shape[0] != len(self.indices):
            raise ValueError(f"segment index has {len(self.indices)} entries, data has {x.shape[0]} rows")
        if x.ndim == 1:
            return np.bincount(self.indices, weights=x, minlength=self.size)
        return np.asarray(self.matrix @ x)

    def counts(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.size)


def _as_index(index, size: int | None) -> Index:
    if isinstance(index, Index):
        return index
    idx = np.asarray(index, dtype=np.int64)
    return Index(idx, size if size is not None else (int(idx.max()) + 1 if idx.size else 0))


# ---------------------------------------------------------------- primitives


def add(a, b) -> Tensor:
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    sa, sb = a.shape, b.shape
    return _emit("add", a.value + b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def neg(a) -> Tensor:
    a = _lift(a, None)
    return _emit("neg", -a.value, (a,), lambda g: (-g,))


def mul(a, b) -> Tensor:
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    av, bv = a.value, b.value

    def backward(g):
        return (
            _unbroadcast(g * bv, av.shape) if a.requires_grad else None,
            _unbroadcast(g * av, bv.shape) if b.requires_grad else None,
        )

    return _emit("mul", av * bv, (a, b), backward)


def div(a, b) -> Tensor:
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    av, bv = a.value, b.value
    out = av / bv

    def backward(g):
        return (
            _unbroadcast(g / bv, av.shape) if a.requires_grad else None,
            _unbroadcast(-g * out / bv, bv.shape) if b.requires_grad else None,
        )

    return _emit("div", out, (a, b), backward)


def matmul(a, b) -> Tensor:
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    av, bv = a.value, b.value
    if av.ndim != 2 or bv.ndim != 2 or av.shape[1] != bv.shape[0]:
        raise ValueError(f"matmul shape mismatch: {av.shape} @ {bv.shape}")

    def backward(g):
        return (
            g @ bv.T if a.requires_grad else None,
            av.T @ g if b.requires_grad else None,
        )

    return _emit("matmul", av @ bv, (a, b), backward)


def linear(x, weight, bias=None) -> Tensor:
    """``x @ weight + bias`` fused into one record."""
    tape = _tape_of(x, weight, bias)
    x, w = _lift(x, tape), _lift(weight, tape)
    xv, wv = x.value, w.value
    if xv.ndim != 2 or wv.ndim != 2 or xv.shape[1] != wv.shape[0]:
        raise ValueError(f"linear shape mismatch: {xv.shape} @ {wv.shape}")
    out = xv @ wv
    if bias is None:
        return _emit("linear", out, (x, w), lambda g: (g @ wv.T if x.requires_grad else None, xv.T @ g if w.requires_grad else None))
    b = _lift(bias, tape)
    out += b.value

    def backward(g):
        return (
            g @ wv.T if x.requires_grad else None,
            xv.T @ g if w.requires_grad else None,
            g.sum(axis=0) if b.requires_grad else None,
        )

    return _emit("linear", out, (x, w, b), backward)


def concat(xs: Sequence, axis: int = 0) -> Tensor:
    tape = _tape_of(*xs)
    xs = [_lift(x, tape) for x in xs]
    sizes = [x.shape[axis] for x in xs]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit("concat", np.concatenate([x.value for x in xs], axis=axis), tuple(xs), backward)


def relu(x) -> Tensor:
    x = _lift(x, None)
    out = np.maximum(x.value, 0.0)
    return _emit("relu", out, (x,), lambda g: (g * (out > 0),))


def leaky_relu(x, slope: float = 0.01) -> Tensor:
    x = _lift(x, None)
    factor = np.where(x.value > 0, 1.0, slope)
    return _emit("leaky_relu", x.value * factor, (x,), lambda g: (g * factor,))


def sigmoid(x) -> Tensor:
    x = _lift(x, None)
    out = np.empty_like(x.value)
    pos = x.value >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x.value[pos]))
    ez = np.exp(x.value[~pos])
    out[~pos] = ez / (1.0 + ez)
    return _emit("sigmoid", out, (x,), lambda g: (g * out * (1.0 - out),))


def tanh(x) -> Tensor:
    x = _lift(x, None)
    out = np.tanh(x.value)
    return _emit("tanh", out, (x,), lambda g: (g * (1.0 - out * out),))


def exp(x) -> Tensor:
    x = _lift(x, None)
    out = np.exp(x.value)
    return _emit("exp", out, (x,), lambda g: (g * out,))


def log(x) -> Tensor:
    x = _lift(x, None)
    if (x.value <= 0).any():
        raise FloatingPointError("log of a non-positive value")
    return _emit("log", np.log(x.value), (x,), lambda g: (g / x.value,))


def clamp_min(x, floor: float) -> Tensor:
    x = _lift(x, None)
    keep = x.value >= floor
    return _emit("clamp_min", np.where(keep, x.value, floor), (x,), lambda g: (g * keep,))


def sum_(x, axis=None) -> Tensor:
    x = _lift(x, None)
    shape = x.shape

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _emit("sum", np.asarray(x.value.sum(axis=axis)), (x,), backward)


def mean(x, axis=None) -> Tensor:
    x = _lift(x, None)
    count = x.value.size if axis is None else x.shape[axis]
    return sum_(x, axis) * (1.0 / count)


def reshape(x, shape) -> Tensor:
    x = _lift(x, None)
    old = x.shape
    return _emit("reshape", x.value.reshape(shape), (x,), lambda g: (g.reshape(old),))


def getitem(x, key) -> Tensor:
    """Basic or integer-array indexing; repeated indices accumulate in backward."""
    x = _lift(x, None)
    shape = x.shape
    parts = key if isinstance(key, tuple) else (key,)
    basic = all(isinstance(k, (slice, int, type(None), type(Ellipsis))) for k in parts)

    def backward(g):
        full = np.zeros(shape)
        if basic:
            full[key] += g
        else:
            np.add.at(full, key, g)
        return (full,)

    return _emit("getitem", np.array(x.value[key]), (x,), backward)


def stop_gradient(x) -> Tensor:
    """Same values, cut off from the graph."""
    if isinstance(x, Tensor):
        return Tensor(x.value, x.tape, requires_grad=False)
    return Tensor(x)


def gather(x, index, size: int | None = None) -> Tensor:
    """Rows ``x[index]``; backward scatters into the source rows."""
    x = _lift(x, None)
    idx = _as_index(index, x.shape[0] if size is None else size)
    if idx.size != x.shape[0]:
        raise ValueError(f"gather index addresses {idx.size} rows, tensor has {x.shape[0]}")
    return _emit("gather", x.value[idx.indices], (x,), lambda g: (idx.scatter(g),))


def segment_sum(x, index, size: int | None = None) -> Tensor:
    """Sum rows of ``x`` sharing a segment id; output has one row per segment."""
    x = _lift(x, None)
    idx = _as_index(index, size)
    return _emit("segment_sum", idx.scatter(x.value), (x,), lambda g: (g[idx.indices],))


def layer_norm(x, gain=None, bias=None, eps: float = 1e-10) -> Tensor:
    """Normalise each row of a 2-D tensor over its features, then scale and shift."""
    tape = _tape_of(x, gain, bias)
    x = _lift(x, tape)
    if x.ndim != 2:
        raise ValueError("layer_norm expects a 2-D tensor")
    width = x.shape[1]
    gain = _lift(np.ones(width) if gain is None else gain, tape)
    bias = _lift(np.zeros(width) if bias is None else bias, tape)
    out, xhat, inv_std = _kernels.ln_forward(np.ascontiguousarray(x.value), gain.value, bias.value, eps)

    def backward(g):
        return _kernels.ln_backward(np.ascontiguousarray(g), xhat, inv_std, gain.value)

    return _emit("layer_norm", out, (x, gain, bias), backward)


def softmax(x, mask=None) -> Tensor:
    """Softmax over a 1-D vector; masked-out entries get probability zero."""
    x = _lift(x, None)
    if x.ndim != 1:
        raise ValueError("softmax expects a 1-D vector")
    keep = np.ones(x.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if keep.shape != x.shape:
        raise ValueError("mask shape does not match logits")
    if not keep.any():
        raise ValueError("softmax mask excludes every entry")
    z = np.where(keep, x.value, -np.inf)
    e = np.exp(z - z[keep].max())
    p = e / e.sum()

    def backward(g):
        return (p * (g - (g * p).sum()),)

    return _emit("softmax", p, (x,), backward)


def segment_softmax(x, index, size: int | None = None) -> Tensor:
    """Independent softmax within each segment of a 1-D logit vector."""
    x = _lift(x, None)
    if x.ndim != 1:
        raise ValueError("segment_softmax expects a 1-D vector")
    idx = _as_index(index, size)
    if (idx.counts() == 0).any():
        raise ValueError("segment_softmax has an empty segment")
    peak = np.full(idx.size, -np.inf)
    np.maximum.at(peak, idx.indices, x.value)
    e = np.exp(x.value - peak[idx.indices])
    p = e / idx.scatter(e)[idx.indices]

    def backward(g):
        return (p * (g - idx.scatter(g * p)[idx.indices]),)

    return _emit("segment_softmax", p, (x,), backward)


def custom(op: str, value, inputs: Sequence, backward: Callable) -> Tensor:
    """Record a user-defined op with a hand-written vector-Jacobian product."""
    tape = _tape_of(*inputs)
    inputs = tuple(_lift(t, tape) for t in inputs)
    return _emit(op, np.asarray(value, dtype=DTYPE), inputs, backward)


# ---------------------------------------------------------- gradient checks


def numeric_gradient(fn: Callable[[np.ndarray], float], point: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    point = np.array(point, dtype=DTYPE)
    grad = np.zeros_like(point)
    flat, gflat = point.reshape(-1), grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + eps
        hi = fn(point)
        flat[k] = orig - eps
        lo = fn(point)
        flat[k] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise FloatingPointError(f"non-finite evaluation at coordinate {k}")
        gflat[k] = (hi - lo) / (2 * eps)
    return grad


def check_gradients(fn: Callable[[Tensor], Tensor], point, eps: float = 1e-5) -> float:
    """Max over coordinates of ``|analytic - central difference| / max(1, |analytic|)``.

    ``fn`` maps a tape variable to a scalar tensor on the same tape.
    """
    point = np.array(point, dtype=DTYPE)
    tape = Tape()
    x = tape.variable(point)
    out = fn(x)
    if not np.isfinite(out.value).all():
        raise FloatingPointError("function value is not finite")
    tape.backward(out)
    analytic = x.grad if x.grad is not None else np.zeros_like(point)

    def value_at(p):
        return float(fn(Tape().constant(p)).value)

    numeric = numeric_gradient(value_at, point, eps)
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))
