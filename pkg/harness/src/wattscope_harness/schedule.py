"""Warmup + cosine learning-rate curve and the loss-log CSV format.

The rate computation keeps the exact arithmetic of the published schedule
CSV (same expression, same operation order), so a rate logged here is
bit-identical to the value in that file at the same step. Rates are
written with %.17g for the same reason.
"""

from __future__ import annotations

import math

from .config import HarnessConfig

LOSS_LOG_HEADER = "step,train_loss,val_loss,lr"


class StepOutOfRange(ValueError):
    """Step index outside [0, t_max]."""


def lr_at(t: int, cfg: HarnessConfig) -> float:
    """Learning rate at optimizer step t: linear ramp, then cosine decay."""
    if t < 0 or t > cfg.t_max:
        raise StepOutOfRange(f"step {t} outside [0, {cfg.t_max}]")
    if t < cfg.t_warm:
        return cfg.warmup_floor + (cfg.eta_max - cfg.warmup_floor) * (t / cfg.t_warm)
    frac = (t - cfg.t_warm) / (cfg.t_max - cfg.t_warm)
    return cfg.eta_min + 0.5 * (cfg.eta_max - cfg.eta_min) * (1.0 + math.cos(math.pi * frac))


def format_loss_row(step: int, train_loss: float, val_loss: float, lr: float) -> str:
    return f"{step},{train_loss:.17g},{val_loss:.17g},{lr:.17g}"


def write_loss_log(path, rows) -> None:
    """Write (step, train_loss, val_loss, lr) rows under the fixed header."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(LOSS_LOG_HEADER + "\n")
        for step, train_loss, val_loss, lr in rows:
            f.write(format_loss_row(step, train_loss, val_loss, lr) + "\n")
