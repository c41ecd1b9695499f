"""Minimal PNG writer for RGB8 rasters.

Fixed settings throughout (filter 0 on every scanline, one zlib stream at
a pinned compression level) so encoding the same pixels always yields the
same bytes. Decoding is out of scope; tests use an external decoder to
check the round trip.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_COMPRESSION_LEVEL = 6


def _chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload))
    )


def encode_png_rgb8(pixels: np.ndarray) -> bytes:
    """Serialize an (H, W, 3) uint8 array as a PNG byte stream."""
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError("expected an (H, W, 3) uint8 array")
    h, w = pixels.shape[:2]
    # filter byte 0 (None) in front of each scanline
    raw = np.concatenate(
        [np.zeros((h, 1), dtype=np.uint8), pixels.reshape(h, w * 3)], axis=1
    ).tobytes()
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return b"".join(
        [
            _SIGNATURE,
            _chunk(b"IHDR", ihdr),
            _chunk(b"IDAT", zlib.compress(raw, _COMPRESSION_LEVEL)),
            _chunk(b"IEND", b""),
        ]
    )


def png_dimensions(data: bytes) -> tuple[int, int]:
    """Read (width, height) out of a PNG header without decoding."""
    if data[:8] != _SIGNATURE or data[12:16] != b"IHDR":
        raise ValueError("not a PNG stream")
    w, h = struct.unpack(">II", data[16:24])
    return w, h
