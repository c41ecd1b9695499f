"""Generation over the validation split of a manifest.

Decoding is beam search with a configurable width (width 1 is greedy);
there is no sampling anywhere, so outputs are a pure function of the
checkpoint, the manifest, and the config. Each val record yields one
JSONL row with the generated text and the teacher-forced log-probability
of every reference answer token, which is what the evaluation side needs
for perplexity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch
import torch.nn.functional as F

from . import model as model_mod
from .config import HarnessConfig
from .images import ImageCache
from .manifest import read_manifest
from .tokenizer import BOS, EOS, SEP, WordTokenizer
from .train import encode_example

GENERATIONS_NAME = "generations.jsonl"
GENERATE_META_NAME = "generation_meta.json"


@dataclass(frozen=True)
class GenerateResult:
    generations_path: Path
    meta_path: Path
    count: int
    beam_width: int


def _beam_decode(model, memory, prefix, width: int, max_new: int) -> list:
    """Best token continuation of prefix; ties break toward lower token ids."""
    beams = [(tuple(prefix), 0.0, False)]
    for _ in range(max_new):
        if all(done for _, _, done in beams):
            break
        candidates = []
        for ids, logp, done in beams:
            if done:
                candidates.append((ids, logp, True))
                continue
            tokens = torch.tensor([ids], dtype=torch.long)
            logits = model.decode(memory, tokens)
            logprobs = F.log_softmax(logits[0, -1].double(), dim=-1)
            top = torch.topk(logprobs, min(width, logprobs.shape[0]))
            for lp, tok_id in zip(top.values.tolist(), top.indices.tolist()):
                candidates.append((ids + (tok_id,), logp + lp, tok_id == EOS))
        candidates.sort(key=lambda c: (-c[1], c[0]))
        beams = candidates[:width]
    best = min(beams, key=lambda c: (-c[1], c[0]))
    tail = list(best[0][len(prefix) :])
    if tail and tail[-1] == EOS:
        tail.pop()
    return tail


def _reference_logprobs(model, memory, ex, tok: WordTokenizer) -> list:
    """Log-probability of each reference answer token (eos included)."""
    ids, sep_pos = encode_example(ex, tok, model.spec.max_positions)
    tokens = torch.tensor([ids], dtype=torch.long)
    logits = model.decode(memory, tokens[:, :-1])
    logprobs = F.log_softmax(logits.double(), dim=-1)
    return [float(logprobs[0, p, ids[p + 1]]) for p in range(sep_pos, len(ids) - 1)]


def generate(cfg: HarnessConfig, checkpoint) -> GenerateResult:
    """Write one generation per val record plus a metadata sidecar.

    Raises MissingCheckpoint if the checkpoint file is absent and
    ModelLoadFailure if it cannot be restored.
    """
    model, model_id, vocab, _ = model_mod.load_checkpoint(checkpoint)
    tok = WordTokenizer(vocab)
    view = read_manifest(cfg.manifest)
    val = sorted(view.split("val"), key=lambda ex: ex.example_id)
    if not val:
        raise ValueError("manifest has no val records to generate for")

    torch.manual_seed(cfg.seed)
    cache = ImageCache(model.spec.image_size)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gen_path = out_dir / GENERATIONS_NAME

    max_positions = model.spec.max_positions
    with torch.no_grad(), open(gen_path, "w", encoding="utf-8", newline="\n") as f:
        for ex in val:
            memory = model.encode_image(cache.get(ex.image_path).unsqueeze(0))
            prefix = ([BOS] + tok.encode(ex.prompt()) + [SEP])[: max_positions - 1]
            max_new = min(cfg.max_new_tokens, max_positions - len(prefix))
            tail = _beam_decode(model, memory, prefix, cfg.beam_width, max_new)
            row = {
                "id": ex.example_id,
                "text": tok.decode(tail),
                "token_logprobs": _reference_logprobs(model, memory, ex, tok),
            }
            f.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")

    meta_path = out_dir / GENERATE_META_NAME
    meta = {
        "model": model_id,
        "checkpoint": str(checkpoint),
        "manifest": str(view.path),
        "beam_width": cfg.beam_width,
        "max_new_tokens": cfg.max_new_tokens,
        "seed": cfg.seed,
        "count": len(val),
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return GenerateResult(
        generations_path=gen_path,
        meta_path=meta_path,
        count=len(val),
        beam_width=cfg.beam_width,
    )
