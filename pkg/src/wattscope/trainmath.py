"""Optimization schedule and loss accounting as pure, testable functions.

Everything here is plain arithmetic on config values: the warmup+cosine
learning-rate curve, gradient-accumulation batch accounting, and a
cross-entropy definition usable as an oracle against probability grids.
No optimizer state, no model execution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Constants surfaced for the fine-tuning harness; no computation here uses them.
WEIGHT_DECAY_DEFAULT = 0.01
BEAM_WIDTH_DEFAULT = 3
MAX_NEW_TOKENS_DEFAULT = 1024


class StepOutOfRange(ValueError):
    """Step index outside [0, t_max]."""


class NonNormalizedDistribution(ValueError):
    """A probability row does not sum to 1 within tolerance."""


@dataclass(frozen=True)
class ScheduleConfig:
    """Warmup + cosine decay parameters.

    ``warmup_floor`` is the rate at step 0; the ramp ends exactly at
    ``eta_max`` when t reaches ``t_warm``.
    """

    eta_max: float = 1e-4
    eta_min: float = 0.0
    t_warm: int = 50
    t_max: int = 800
    warmup_floor: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.eta_min <= self.eta_max):
            raise ValueError("require 0 <= eta_min <= eta_max")
        if not (0 < self.t_warm < self.t_max):
            raise ValueError("require 0 < t_warm < t_max")


@dataclass(frozen=True)
class AccumulationConfig:
    micro_batch: int = 6
    accumulation: int = 8

    def __post_init__(self):
        if self.micro_batch < 1 or self.accumulation < 1:
            raise ValueError("micro_batch and accumulation must be >= 1")


def lr_at(t: int, cfg: ScheduleConfig = ScheduleConfig()) -> float:
    """Learning rate at optimization step t.

    Linear ramp from ``warmup_floor`` to ``eta_max`` over ``t_warm`` steps,
    then cosine decay to ``eta_min`` at ``t_max``. The two segments meet
    exactly at ``t_warm``.
    """
    if t < 0 or t > cfg.t_max:
        raise StepOutOfRange(f"step {t} outside [0, {cfg.t_max}]")
    if t < cfg.t_warm:
        return cfg.warmup_floor + (cfg.eta_max - cfg.warmup_floor) * (t / cfg.t_warm)
    frac = (t - cfg.t_warm) / (cfg.t_max - cfg.t_warm)
    return cfg.eta_min + 0.5 * (cfg.eta_max - cfg.eta_min) * (1.0 + math.cos(math.pi * frac))


def effective_batch(cfg: AccumulationConfig = AccumulationConfig()) -> int:
    """Effective batch size simulated by gradient accumulation."""
    return cfg.accumulation * cfg.micro_batch


def schedule_trace(cfg: ScheduleConfig = ScheduleConfig()) -> list[tuple[int, float]]:
    """(step, lr) pairs for every step 0..t_max inclusive."""
    return [(t, lr_at(t, cfg)) for t in range(cfg.t_max + 1)]


def write_schedule_csv(path, cfg: ScheduleConfig = ScheduleConfig()) -> None:
    """Dump the schedule trace as a two-column CSV.

    Rates are written with %.17g so parsing the file recovers the exact
    float values.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("step,lr\n")
        for t, lr in schedule_trace(cfg):
            f.write(f"{t},{lr:.17g}\n")


def cross_entropy(probs, targets, *, tol: float = 1e-6) -> float:
    """Mean negative log-probability of the target tokens.

    ``probs`` is an N x T x V grid of next-token distributions and
    ``targets`` an N x T grid of token indices. Every distribution must
    sum to 1 within ``tol``. Averaging is over all N*T positions.
    """
    p = np.asarray(probs, dtype=float)
    tgt = np.asarray(targets, dtype=int)
    if p.ndim != 3:
        raise ValueError("probs must be N x T x V")
    if tgt.shape != p.shape[:2]:
        raise ValueError("targets must be N x T matching probs")
    sums = p.sum(axis=2)
    bad = np.abs(sums - 1.0) > tol
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NonNormalizedDistribution(
            f"distribution at ({i},{j}) sums to {sums[i, j]:.9f}"
        )
    n, t = tgt.shape
    picked = p[np.arange(n)[:, None], np.arange(t)[None, :], tgt]
    # fsum in fixed row-major order: bitwise-reproducible reduction
    return -math.fsum(math.log(v) for v in picked.ravel()) / (n * t)
