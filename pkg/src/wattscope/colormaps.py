"""Named 256-entry RGB lookup tables for rendering."""

from __future__ import annotations

import importlib.resources

import numpy as np

TABLE_SIZE = 256


class UnknownColormap(KeyError):
    pass


def _load_viridis() -> np.ndarray:
    ref = importlib.resources.files("wattscope").joinpath("data/viridis256.csv")
    rows = []
    for line in ref.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        r, g, b = line.split(",")
        rows.append((int(r), int(g), int(b)))
    table = np.array(rows, dtype=np.uint8)
    if table.shape != (TABLE_SIZE, 3):
        raise ValueError(f"viridis table has shape {table.shape}")
    return table


def _gray() -> np.ndarray:
    ramp = np.arange(TABLE_SIZE, dtype=np.uint8)
    return np.stack([ramp, ramp, ramp], axis=1)


_TABLES = {}


def get_colormap(name: str) -> np.ndarray:
    """Resolve a colormap name to its (256, 3) uint8 table."""
    if name not in _TABLES:
        if name == "viridis":
            _TABLES[name] = _load_viridis()
        elif name == "gray":
            _TABLES[name] = _gray()
        else:
            raise UnknownColormap(name)
    return _TABLES[name]
