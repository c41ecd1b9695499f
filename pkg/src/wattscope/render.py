"""Deterministic rasterization of scalogram and recurrence grids.

Two modes: ``heatmap`` maps grid values through a colormap with
nearest-neighbor resampling; ``surface3d`` draws the value surface under
a fixed orthographic camera (azimuth 45 degrees, elevation 30 degrees)
with painter's-order triangle fill. Both are pure functions of
(grid, config): the same input always produces the same bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .colormaps import get_colormap
from .pngio import encode_png_rgb8

LOG_FLOOR = 1e-12
SURFACE_MESH_LIMIT = 64
SURFACE_HEIGHT = 0.5
AZIMUTH_DEG = 45.0
ELEVATION_DEG = 30.0


class EmptyGrid(ValueError):
    pass


@dataclass(frozen=True)
class RenderConfig:
    width: int = 512
    height: int = 512
    mode: str = "heatmap"
    colormap: str = "viridis"
    value_scale: str = "linear"
    annotate_axes: bool = False

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("width and height must be > 0")
        if self.mode not in ("heatmap", "surface3d"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.value_scale not in ("linear", "log"):
            raise ValueError(f"unknown value_scale {self.value_scale!r}")
        get_colormap(self.colormap)


@dataclass(frozen=True)
class Provenance:
    channel: str = ""
    window_start: str = ""


@dataclass
class RenderedImage:
    pixels: np.ndarray
    config: RenderConfig
    source_kind: str
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        if self.source_kind not in ("cwt", "rp"):
            raise ValueError(f"unknown source_kind {self.source_kind!r}")


def _normalize(grid, value_scale: str) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.size == 0 or g.ndim != 2:
        raise EmptyGrid("need a non-empty 2-D grid")
    if value_scale == "log":
        g = np.log(np.maximum(g, LOG_FLOOR))
    lo = g.min()
    hi = g.max()
    if hi == lo:
        return np.full(g.shape, 0.5)
    return (g - lo) / (hi - lo)


def _color_indices(v: np.ndarray) -> np.ndarray:
    return np.rint(v * 255.0).astype(np.intp)


def _nearest_map(n_out: int, n_src: int) -> np.ndarray:
    idx = ((np.arange(n_out) + 0.5) * n_src / n_out).astype(np.intp)
    return np.minimum(idx, n_src - 1)


def _annotate(pixels: np.ndarray) -> None:
    h, w = pixels.shape[:2]
    black = np.array([0, 0, 0], dtype=np.uint8)
    pixels[0, :] = black
    pixels[h - 1, :] = black
    pixels[:, 0] = black
    pixels[:, w - 1] = black
    tick = max(2, min(6, h // 64, w // 64) + 2)
    for k in range(1, 8):
        x = k * (w - 1) // 8
        pixels[h - tick : h, x] = black
        y = h - 1 - k * (h - 1) // 8
        pixels[y, 0:tick] = black


def render_heatmap(grid, cfg: RenderConfig = RenderConfig(), source_kind: str = "cwt",
                   provenance: Provenance = Provenance()) -> RenderedImage:
    """Colormapped raster of a grid, row 0 at the image bottom."""
    v = _normalize(grid, cfg.value_scale)
    table = get_colormap(cfg.colormap)
    small = table[_color_indices(v)]
    rows, cols = v.shape
    row_map = _nearest_map(cfg.height, rows)[::-1]  # image top = highest grid row
    col_map = _nearest_map(cfg.width, cols)
    pixels = small[np.ix_(row_map, col_map)]
    if cfg.annotate_axes:
        _annotate(pixels)
    return RenderedImage(pixels, cfg, source_kind, provenance)


def _camera_basis():
    az = math.radians(AZIMUTH_DEG)
    el = math.radians(ELEVATION_DEG)
    right = np.array([-math.sin(az), math.cos(az), 0.0])
    up = np.array([-math.sin(el) * math.cos(az), -math.sin(el) * math.sin(az), math.cos(el)])
    toward = np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])
    return right, up, toward


def _decimate(v: np.ndarray) -> np.ndarray:
    rows, cols = v.shape
    r = _nearest_map(min(rows, SURFACE_MESH_LIMIT), rows)
    c = _nearest_map(min(cols, SURFACE_MESH_LIMIT), cols)
    return v[np.ix_(r, c)]


def _axis_coords(n: int) -> np.ndarray:
    return np.full(1, 0.5) if n == 1 else np.arange(n) / (n - 1)


def surface_viewport(width: int, height: int):
    """Pixel mapping fixed by the unit-square bounding box, so the camera
    never moves with the data."""
    right, up, _ = _camera_basis()
    corners = np.array(
        [[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, SURFACE_HEIGHT)]
    )
    sx = corners @ right
    sy = corners @ up
    span = max(sx.max() - sx.min(), 1e-9)
    rise = max(sy.max() - sy.min(), 1e-9)
    scale = 0.9 * min((width - 1) / span, (height - 1) / rise)
    mid_x = 0.5 * (sx.max() + sx.min())
    mid_y = 0.5 * (sy.max() + sy.min())

    def to_pixel(s_x, s_y):
        px = (width - 1) / 2.0 + (s_x - mid_x) * scale
        py = (height - 1) / 2.0 - (s_y - mid_y) * scale
        return px, py

    return to_pixel


def _fill_triangle(pixels, xs, ys, color):
    area = (xs[1] - xs[0]) * (ys[2] - ys[0]) - (xs[2] - xs[0]) * (ys[1] - ys[0])
    if area == 0.0:
        return
    if area < 0.0:  # enforce one winding so the inclusive edge test is stable
        xs = (xs[0], xs[2], xs[1])
        ys = (ys[0], ys[2], ys[1])
    h, w = pixels.shape[:2]
    x_lo = max(0, int(math.floor(min(xs))))
    x_hi = min(w - 1, int(math.ceil(max(xs))))
    y_lo = max(0, int(math.floor(min(ys))))
    y_hi = min(h - 1, int(math.ceil(max(ys))))
    if x_lo > x_hi or y_lo > y_hi:
        return
    gx, gy = np.meshgrid(np.arange(x_lo, x_hi + 1), np.arange(y_lo, y_hi + 1))
    inside = np.ones(gx.shape, dtype=bool)
    for k in range(3):
        x0, y0 = xs[k], ys[k]
        x1, y1 = xs[(k + 1) % 3], ys[(k + 1) % 3]
        inside &= (x1 - x0) * (gy - y0) - (y1 - y0) * (gx - x0) >= 0.0
    pixels[gy[inside], gx[inside]] = color


def render_surface3d(grid, cfg: RenderConfig = RenderConfig(mode="surface3d"),
                     source_kind: str = "cwt",
                     provenance: Provenance = Provenance()) -> RenderedImage:
    """Orthographic surface plot of the grid, colored by height.

    The grid is decimated to at most 64x64 mesh cells (nearest sample),
    each quad split into two triangles, painted back to front.
    """
    v = _decimate(_normalize(grid, cfg.value_scale))
    table = get_colormap(cfg.colormap)
    rows, cols = v.shape
    right, up, toward = _camera_basis()
    to_pixel = surface_viewport(cfg.width, cfg.height)

    x = _axis_coords(cols)
    y = _axis_coords(rows)
    pts = np.empty((rows, cols, 3))
    pts[:, :, 0] = x[None, :]
    pts[:, :, 1] = y[:, None]
    pts[:, :, 2] = v * SURFACE_HEIGHT
    px, py = to_pixel(pts @ right, pts @ up)
    depth = pts @ toward

    tris = []
    for i in range(rows - 1):
        for j in range(cols - 1):
            for corner_set in (((i, j), (i + 1, j), (i + 1, j + 1)),
                               ((i, j), (i + 1, j + 1), (i, j + 1))):
                ii = tuple(c[0] for c in corner_set)
                jj = tuple(c[1] for c in corner_set)
                mean_h = (v[ii[0], jj[0]] + v[ii[1], jj[1]] + v[ii[2], jj[2]]) / 3.0
                mean_d = (depth[ii[0], jj[0]] + depth[ii[1], jj[1]] + depth[ii[2], jj[2]]) / 3.0
                tris.append(
                    (
                        mean_d,
                        tuple(px[a, b] for a, b in corner_set),
                        tuple(py[a, b] for a, b in corner_set),
                        table[int(np.rint(mean_h * 255.0))],
                    )
                )
    tris.sort(key=lambda t: t[0])

    pixels = np.full((cfg.height, cfg.width, 3), 255, dtype=np.uint8)
    for _, xs, ys, color in tris:
        _fill_triangle(pixels, xs, ys, color)
    if cfg.annotate_axes:
        _annotate(pixels)
    return RenderedImage(pixels, cfg, source_kind, provenance)


def render(grid, cfg: RenderConfig = RenderConfig(), source_kind: str = "cwt",
           provenance: Provenance = Provenance()) -> RenderedImage:
    if cfg.mode == "surface3d":
        return render_surface3d(grid, cfg, source_kind, provenance)
    return render_heatmap(grid, cfg, source_kind, provenance)


def encode_png(img: RenderedImage) -> bytes:
    return encode_png_rgb8(img.pixels)
