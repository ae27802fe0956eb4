"""Adam with bias correction, global-norm gradient clipping, and the cosine
learning-rate schedule the trainer uses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .tensor import Tensor


@dataclass
class LrSchedule:
    """Cosine decay from ``initial_lr`` to ``final_lr`` over ``total_steps``."""

    initial_lr: float
    total_steps: int
    final_lr: float = 0.0

    def __post_init__(self) -> None:
        if self.total_steps <= 0:
            raise ValueError(f"total_steps must be positive, got {self.total_steps}")
        if self.initial_lr < 0 or self.final_lr < 0:
            raise ValueError("learning rates must be non-negative")


def cosine_lr(step: int, schedule: LrSchedule) -> float:
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    if step >= schedule.total_steps:
        return schedule.final_lr
    span = schedule.initial_lr - schedule.final_lr
    return schedule.final_lr + span * 0.5 * (1.0 + math.cos(math.pi * step / schedule.total_steps))


def clip_global_norm(params: Mapping[str, Tensor], max_norm: float = 5.0) -> float:
    """Scale all grads in place so their joint L2 norm is at most ``max_norm``.

    Returns the pre-clip norm. Parameters without a grad buffer contribute
    nothing. fsum keeps the norm independent of parameter ordering.
    """
    if max_norm <= 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    grads = [p.grad for p in params.values() if p.grad is not None]
    total = math.fsum(float((g.astype(np.float64) ** 2).sum()) for g in grads)
    norm = math.sqrt(total)
    if norm > max_norm:
        factor = max_norm / norm
        for g in grads:
            g *= factor
    return norm


@dataclass
class AdamState:
    """First/second moment buffers plus the shared step counter."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, Tensor], state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place, over every named parameter.

    A missing grad buffer counts as an all-zero gradient, so the step counter
    still advances and moment decay still happens. Non-finite gradients are a
    hard error (they survived clipping, so something upstream diverged).
    """
    if lr < 0:
        raise ValueError(f"lr must be non-negative, got {lr}")
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for name, p in params.items():
        g = p.grad
        if g is None:
            g = np.zeros_like(p.data)
        elif g.shape != p.data.shape:
            raise ValueError(f"adam: grad shape {g.shape} != param shape {p.data.shape} for {name}")
        elif not np.all(np.isfinite(g)):
            raise FloatingPointError(f"adam: non-finite gradient for {name}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
