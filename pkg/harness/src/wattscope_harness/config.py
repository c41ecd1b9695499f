"""Run configuration for finetuning and generation.

One frozen dataclass carries everything both entry points need: where the
manifest lives, which model to build, optimization geometry, and the
warmup+cosine schedule constants. The schedule defaults are the same
numbers the dataset side publishes in its schedule CSV, so a loss log
written here can be diffed against that file without conversion.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class HarnessConfig:
    """Knobs for one finetune/generate run.

    ``accumulation`` is the number of micro-batches summed into one
    optimizer step; the effective batch is ``micro_batch * accumulation``.
    ``steps`` counts optimizer steps, not micro-batches, and must stay
    within the schedule horizon ``t_max``.
    """

    manifest: str
    model: str = "tiny-vlm"
    out_dir: str = "harness_run"
    steps: int = 50
    micro_batch: int = 6
    accumulation: int = 8
    eta_max: float = 1e-4
    eta_min: float = 0.0
    t_warm: int = 50
    t_max: int = 800
    warmup_floor: float = 0.0
    weight_decay: float = 0.01
    beam_width: int = 3
    max_new_tokens: int = 1024
    seed: int = 0
    log_every: int = 10

    def __post_init__(self):
        if not self.manifest:
            raise ValueError("manifest path must be non-empty")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.micro_batch < 1 or self.accumulation < 1:
            raise ValueError("micro_batch and accumulation must be >= 1")
        if not (0.0 <= self.eta_min <= self.eta_max):
            raise ValueError("require 0 <= eta_min <= eta_max")
        if not (0 < self.t_warm < self.t_max):
            raise ValueError("require 0 < t_warm < t_max")
        if self.steps > self.t_max:
            raise ValueError("steps must not exceed t_max")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be >= 0")
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")

    def effective_batch(self) -> int:
        return self.micro_batch * self.accumulation
