"""Model zoo, checkpoint format, and the frozen-encoder contract.

The architecture pairs a small convolutional vision encoder with a
transformer text decoder that cross-attends to the visual tokens. The
encoder is frozen at construction time and stays frozen: finetuning only
ever updates decoder weights, and ``encoder_digest`` exists so callers can
prove the encoder bytes never moved.

Checkpoints are self-contained: architecture id, vocabulary, and weights
travel together, so generation needs nothing but the checkpoint file and
a manifest.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

CHECKPOINT_FORMAT = "wattscope-harness-checkpoint"
CHECKPOINT_VERSION = 1


class ModelLoadFailure(RuntimeError):
    """Unknown model identifier or a checkpoint that cannot be restored."""


class MissingCheckpoint(FileNotFoundError):
    """Checkpoint path does not exist."""


@dataclass(frozen=True)
class ModelSpec:
    image_size: int
    d_model: int
    n_heads: int
    n_layers: int
    feedforward: int
    max_positions: int


MODELS = {
    "tiny-vlm": ModelSpec(
        image_size=64,
        d_model=32,
        n_heads=2,
        n_layers=2,
        feedforward=64,
        max_positions=192,
    ),
}


def model_spec(model_id: str) -> ModelSpec:
    if model_id not in MODELS:
        raise ModelLoadFailure(
            f"unknown model {model_id!r}; known: {sorted(MODELS)}"
        )
    return MODELS[model_id]


class VisionEncoder(nn.Module):
    """Two strided convolutions mapping an image to a grid of visual tokens."""

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.conv1 = nn.Conv2d(3, 8, kernel_size=4, stride=4)
        self.conv2 = nn.Conv2d(8, 16, kernel_size=4, stride=4)
        self.proj = nn.Linear(16, spec.d_model)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        h = torch.relu(self.conv1(images))
        h = torch.relu(self.conv2(h))
        # B x C x H x W -> B x (H*W) x C, one token per surviving cell
        tokens = h.flatten(2).transpose(1, 2)
        return self.proj(tokens)


class TinyVlm(nn.Module):
    def __init__(self, spec: ModelSpec, vocab_size: int):
        super().__init__()
        self.spec = spec
        self.vision = VisionEncoder(spec)
        self.tok_emb = nn.Embedding(vocab_size, spec.d_model)
        self.pos_emb = nn.Embedding(spec.max_positions, spec.d_model)
        layer = nn.TransformerDecoderLayer(
            d_model=spec.d_model,
            nhead=spec.n_heads,
            dim_feedforward=spec.feedforward,
            dropout=0.0,
            batch_first=True,
        )
        self.decoder = nn.TransformerDecoder(layer, num_layers=spec.n_layers)
        self.head = nn.Linear(spec.d_model, vocab_size)

    def encode_image(self, images: torch.Tensor) -> torch.Tensor:
        return self.vision(images)

    def decode(self, memory: torch.Tensor, tokens: torch.Tensor, pad_mask=None) -> torch.Tensor:
        n = tokens.shape[1]
        if n > self.spec.max_positions:
            raise ValueError(f"sequence length {n} exceeds {self.spec.max_positions}")
        pos = torch.arange(n, device=tokens.device)
        x = self.tok_emb(tokens) + self.pos_emb(pos)
        causal = torch.triu(torch.ones(n, n, dtype=torch.bool, device=tokens.device), diagonal=1)
        h = self.decoder(tgt=x, memory=memory, tgt_mask=causal, tgt_key_padding_mask=pad_mask)
        return self.head(h)

    def forward(self, images: torch.Tensor, tokens: torch.Tensor, pad_mask=None) -> torch.Tensor:
        return self.decode(self.encode_image(images), tokens, pad_mask)


def build_model(model_id: str, vocab_size: int, seed: int) -> TinyVlm:
    """Construct a model with seeded init and the vision encoder frozen."""
    spec = model_spec(model_id)
    torch.manual_seed(seed)
    model = TinyVlm(spec, vocab_size)
    model.vision.requires_grad_(False)
    model.eval()
    return model


def encoder_digest(model: TinyVlm) -> str:
    """SHA-256 over the vision encoder's parameter bytes, key order fixed."""
    h = hashlib.sha256()
    state = model.vision.state_dict()
    for key in sorted(state):
        tensor = state[key].detach().cpu().contiguous()
        h.update(key.encode("utf-8"))
        h.update(str(tuple(tensor.shape)).encode("utf-8"))
        h.update(tensor.numpy().tobytes())
    return h.hexdigest()


def save_checkpoint(path, model: TinyVlm, model_id: str, vocab: list, seed: int) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "model_id": model_id,
        "vocab": list(vocab),
        "seed": seed,
        "state_dict": model.state_dict(),
    }
    torch.save(payload, path)


def load_checkpoint(path):
    """Restore (model, model_id, vocab, seed) from a checkpoint file."""
    path = Path(path)
    if not path.exists():
        raise MissingCheckpoint(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ModelLoadFailure(f"unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise ModelLoadFailure(f"{path} is not a harness checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ModelLoadFailure(f"unsupported checkpoint version {payload.get('version')!r}")
    vocab = payload["vocab"]
    seed = int(payload.get("seed", 0))
    model_id = payload["model_id"]
    model = build_model(model_id, len(vocab) + 1, seed)
    try:
        model.load_state_dict(payload["state_dict"], strict=True)
    except Exception as exc:
        raise ModelLoadFailure(f"checkpoint weights do not fit {model_id!r}: {exc}") from exc
    model.eval()
    return model, model_id, vocab, seed
