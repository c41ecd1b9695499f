"""PNG loading for model input: decode, resize, scale to [0, 1]."""

from __future__ import annotations

import numpy as np
import torch
from PIL import Image


def load_image(path, size: int) -> torch.Tensor:
    """Read a PNG into a float32 CHW tensor resized to size x size."""
    with Image.open(path) as im:
        rgb = im.convert("RGB").resize((size, size), Image.BILINEAR)
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1).contiguous()


class ImageCache:
    """Decode each image once; training revisits the same files every epoch."""

    def __init__(self, size: int):
        self.size = size
        self._cache = {}

    def get(self, path) -> torch.Tensor:
        key = str(path)
        if key not in self._cache:
            self._cache[key] = load_image(path, self.size)
        return self._cache[key]
