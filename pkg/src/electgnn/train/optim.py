"""Adam, global-norm clipping and the warmup + warm-restart schedule."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimConfig:
    lr: float = 3e-4
    clip_norm: float = 1.0
    batch_size: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    warmup_epochs: int = 20
    warmup_start: float = 0.1
    restart_period: int = 20
    restart_mult: int = 2
    lr_floor: float = 0.0
    epochs: int = 100
    patience: int = 30
    seed: int = 0

    def __post_init__(self):
        positive = (self.lr, self.clip_norm, self.batch_size, self.eps, self.restart_period, self.epochs, self.patience)
        if min(positive) <= 0 or self.restart_mult < 1 or self.warmup_epochs < 0:
            raise ValueError(f"invalid optimiser config {self}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1 and 0 < self.warmup_start <= 1):
            raise ValueError(f"invalid optimiser config {self}")
        if not 0 <= self.lr_floor <= self.lr:
            raise ValueError("lr floor must lie in [0, lr]")


def lr_at(epoch: float, cfg: OptimConfig = OptimConfig()) -> float:
    """Linear warmup, then cosine annealing restarted every T0, T0*mult, ... epochs."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    if epoch < cfg.warmup_epochs:
        frac = epoch / cfg.warmup_epochs
        return cfg.lr * (cfg.warmup_start + (1.0 - cfg.warmup_start) * frac)
    t = epoch - cfg.warmup_epochs
    period = float(cfg.restart_period)
    while t >= period:
        t -= period
        period *= cfg.restart_mult
    return cfg.lr_floor + (cfg.lr - cfg.lr_floor) * 0.5 * (1.0 + math.cos(math.pi * t / period))


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    """Rescale so the global L2 norm is at most ``max_norm``; returns (grads, norm before)."""
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        grads = {k: g * scale for k, g in grads.items()}
    return grads, norm


@dataclass
class AdamState:
    step: int = 0
    skipped: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState, lr: float,
              cfg: OptimConfig = OptimConfig()) -> bool:
    """Clip, then apply one bias-corrected Adam update in place.

    Only parameters present in ``grads`` move. A non-finite gradient skips the
    step entirely (returns False) and is logged.
    """
    if not all(np.isfinite(g).all() for g in grads.values()):
        state.skipped += 1
        log.warning("non-finite gradient at step %d; update skipped", state.step)
        return False
    grads, _ = clip_grad_norm(grads, cfg.clip_norm)
    state.step += 1
    t = state.step
    c1 = 1.0 - cfg.beta1**t
    c2 = 1.0 - cfg.beta2**t
    for name, g in grads.items():
        p = params[name]
        if p.shape != g.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
    return True
