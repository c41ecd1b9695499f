"""Finetuning loop: frozen vision encoder, AdamW decoder updates.

Micro-batches cycle through the train split in manifest order; every
optimizer step sums ``accumulation`` micro-batch gradients before moving
weights, and the step's learning rate comes from the shared
warmup+cosine curve. Loss is teacher-forced cross entropy over answer
tokens only; prompt and padding positions never contribute.

The run leaves three files in ``out_dir``: the checkpoint, a loss-log CSV
(step, train_loss, val_loss, lr), and a run metadata JSON.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import torch
import torch.nn.functional as F

from . import model as model_mod
from . import schedule
from .config import HarnessConfig
from .images import ImageCache
from .manifest import read_manifest
from .tokenizer import BOS, EOS, PAD, SEP, WordTokenizer

IGNORE = -100

CHECKPOINT_NAME = "checkpoint.pt"
LOSS_LOG_NAME = "loss_log.csv"
RUN_META_NAME = "run.json"


@dataclass(frozen=True)
class TrainResult:
    checkpoint_path: Path
    loss_log_path: Path
    run_meta_path: Path
    encoder_digest_before: str
    encoder_digest_after: str
    logged: tuple


def encode_example(ex, tok: WordTokenizer, max_positions: int):
    """Token ids [bos, prompt.., sep, answer.., eos] and the sep position."""
    ids = [BOS] + tok.encode(ex.prompt()) + [SEP] + tok.encode(ex.answer) + [EOS]
    sep_pos = ids.index(SEP)
    return ids[:max_positions], sep_pos


def _batch_tensors(batch, tok, max_positions):
    encoded = [encode_example(ex, tok, max_positions) for ex in batch]
    width = max(len(ids) for ids, _ in encoded)
    tokens = torch.full((len(batch), width), PAD, dtype=torch.long)
    for row, (ids, _) in enumerate(encoded):
        tokens[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
    inputs = tokens[:, :-1]
    labels = tokens[:, 1:].clone()
    for row, (_, sep_pos) in enumerate(encoded):
        labels[row, :sep_pos] = IGNORE
    labels[labels == PAD] = IGNORE
    pad_mask = inputs == PAD
    return inputs, labels, pad_mask


def _batch_loss(model, batch, tok, cache, reduction: str = "mean"):
    inputs, labels, pad_mask = _batch_tensors(batch, tok, model.spec.max_positions)
    images = torch.stack([cache.get(ex.image_path) for ex in batch])
    logits = model(images, inputs, pad_mask)
    loss = F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]),
        labels.reshape(-1),
        ignore_index=IGNORE,
        reduction=reduction,
    )
    return loss, int((labels != IGNORE).sum())


def split_loss(model, examples, tok, cache, micro_batch: int) -> float:
    """Token-mean teacher-forced loss over a whole split."""
    if not examples:
        return math.nan
    total, count = 0.0, 0
    with torch.no_grad():
        for i in range(0, len(examples), micro_batch):
            loss, n = _batch_loss(model, examples[i : i + micro_batch], tok, cache, reduction="sum")
            total += float(loss)
            count += n
    return total / count


def finetune(cfg: HarnessConfig) -> TrainResult:
    """Run the configured number of optimizer steps and persist the run.

    Raises ManifestSchemaMismatch for a bad manifest and ModelLoadFailure
    for an unknown model identifier. The vision encoder is digest-checked
    before and after; any drift aborts the run.
    """
    view = read_manifest(cfg.manifest)
    train_ex = view.split("train")
    val_ex = view.split("val")
    if not train_ex:
        raise ValueError("manifest has no train records")

    tok = WordTokenizer.from_texts(
        itertools.chain(
            (ex.prompt() for ex in view.examples), (ex.answer for ex in view.examples)
        )
    )
    model = model_mod.build_model(cfg.model, tok.size, cfg.seed)
    digest_before = model_mod.encoder_digest(model)
    cache = ImageCache(model.spec.image_size)

    trainable = [p for p in model.parameters() if p.requires_grad]
    opt = torch.optim.AdamW(trainable, lr=cfg.eta_max, weight_decay=cfg.weight_decay)
    stream = itertools.cycle(train_ex)

    model.train()
    rows = []
    for step in range(1, cfg.steps + 1):
        lr = schedule.lr_at(step, cfg)
        for group in opt.param_groups:
            group["lr"] = lr
        opt.zero_grad(set_to_none=True)
        acc = 0.0
        for _ in range(cfg.accumulation):
            batch = list(itertools.islice(stream, cfg.micro_batch))
            loss, _ = _batch_loss(model, batch, tok, cache)
            (loss / cfg.accumulation).backward()
            acc += float(loss.detach())
        opt.step()
        train_loss = acc / cfg.accumulation
        if step % cfg.log_every == 0 or step == cfg.steps:
            val_loss = split_loss(model, val_ex, tok, cache, cfg.micro_batch)
            rows.append((step, train_loss, val_loss, lr))
    model.eval()

    digest_after = model_mod.encoder_digest(model)
    if digest_after != digest_before:
        raise RuntimeError("vision encoder changed during finetuning")

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / CHECKPOINT_NAME
    model_mod.save_checkpoint(ckpt_path, model, cfg.model, tok.vocab, cfg.seed)
    log_path = out_dir / LOSS_LOG_NAME
    schedule.write_loss_log(log_path, rows)
    meta_path = out_dir / RUN_META_NAME
    meta = {
        "model": cfg.model,
        "manifest": str(view.path),
        "seed": cfg.seed,
        "steps": cfg.steps,
        "micro_batch": cfg.micro_batch,
        "accumulation": cfg.accumulation,
        "effective_batch": cfg.effective_batch(),
        "weight_decay": cfg.weight_decay,
        "beam_width": cfg.beam_width,
        "max_new_tokens": cfg.max_new_tokens,
        "schedule": {
            "eta_max": cfg.eta_max,
            "eta_min": cfg.eta_min,
            "t_warm": cfg.t_warm,
            "t_max": cfg.t_max,
            "warmup_floor": cfg.warmup_floor,
        },
        "counts": {"train": len(train_ex), "val": len(val_ex)},
        "vocab_size": tok.size,
        "encoder_digest_before": digest_before,
        "encoder_digest_after": digest_after,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    return TrainResult(
        checkpoint_path=ckpt_path,
        loss_log_path=log_path,
        run_meta_path=meta_path,
        encoder_digest_before=digest_before,
        encoder_digest_after=digest_after,
        logged=tuple(rows),
    )
