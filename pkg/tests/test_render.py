"""Colormapped rasters, the 3-D surface projection, and PNG encoding."""

import hashlib
import io

import numpy as np
import pytest
from PIL import Image

from wattscope.colormaps import TABLE_SIZE, UnknownColormap, get_colormap
from wattscope.pngio import encode_png_rgb8, png_dimensions
from wattscope.render import (
    EmptyGrid,
    Provenance,
    RenderConfig,
    RenderedImage,
    encode_png,
    render,
    render_heatmap,
    render_surface3d,
)

# Digests of the two render modes on REFERENCE_GRID at the default
# 512x512 config, frozen from the first verified render. Any pixel-level
# change to normalization, color mapping, resampling, or projection
# shows up here.
HEATMAP_SHA256 = "d39bf4c5a629db4db31e22cdbf07faa331bad672e241b24b512fb90bbc21b78b"
SURFACE_SHA256 = "4572ab9e2b6e97ec914d99f7ff9297578a0bbc56ed54e7f8ff3fe175fa329557"

VIRIDIS_LOW = (68, 1, 84)
VIRIDIS_MID = (33, 145, 140)
VIRIDIS_HIGH = (253, 231, 37)


def _reference_grid():
    ii, jj = np.mgrid[0:64, 0:64]
    return np.exp(-((ii - 20) ** 2) / 50.0) * (1.0 + 0.5 * np.sin(jj / 3.0)) + 0.01 * jj


def _decode(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))


class TestColormaps:
    def test_viridis_anchor_entries(self):
        table = get_colormap("viridis")
        assert table.shape == (TABLE_SIZE, 3)
        assert table.dtype == np.uint8
        assert tuple(table[0]) == VIRIDIS_LOW
        assert tuple(table[128]) == VIRIDIS_MID
        assert tuple(table[255]) == VIRIDIS_HIGH

    def test_gray_ramp(self):
        table = get_colormap("gray")
        np.testing.assert_array_equal(table, np.repeat(np.arange(256), 3).reshape(256, 3))

    def test_unknown_name(self):
        with pytest.raises(UnknownColormap):
            get_colormap("jet")


class TestPngIo:
    def test_round_trip(self):
        rng = np.random.default_rng(67)
        pixels = rng.integers(0, 256, size=(21, 13, 3), dtype=np.uint8)
        data = encode_png_rgb8(pixels)
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
        assert png_dimensions(data) == (13, 21)
        np.testing.assert_array_equal(_decode(data), pixels)

    def test_deterministic_bytes(self):
        pixels = np.arange(27, dtype=np.uint8).reshape(3, 3, 3)
        assert encode_png_rgb8(pixels) == encode_png_rgb8(pixels)

    def test_shape_and_dtype_checked(self):
        with pytest.raises(ValueError):
            encode_png_rgb8(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(ValueError):
            encode_png_rgb8(np.zeros((4, 4, 3), dtype=np.float64))


class TestRenderConfig:
    def test_defaults(self):
        cfg = RenderConfig()
        assert (cfg.width, cfg.height) == (512, 512)
        assert cfg.mode == "heatmap" and cfg.value_scale == "linear"

    def test_validation(self):
        with pytest.raises(ValueError):
            RenderConfig(width=0)
        with pytest.raises(ValueError):
            RenderConfig(mode="contour")
        with pytest.raises(ValueError):
            RenderConfig(value_scale="sqrt")
        with pytest.raises(UnknownColormap):
            RenderConfig(colormap="jet")

    def test_source_kind_checked(self):
        with pytest.raises(ValueError):
            RenderedImage(np.zeros((1, 1, 3), dtype=np.uint8), RenderConfig(), "scatter")


class TestHeatmap:
    def test_pixel_buffer_shape(self):
        img = render_heatmap(np.eye(4), RenderConfig(width=40, height=24))
        assert img.pixels.shape == (24, 40, 3)
        assert img.pixels.dtype == np.uint8
        assert img.source_kind == "cwt"

    def test_grid_row_zero_lands_at_image_bottom(self):
        grid = np.zeros((4, 4))
        grid[0] = 1.0
        img = render_heatmap(grid, RenderConfig(width=8, height=8))
        assert tuple(img.pixels[-1, 0]) == VIRIDIS_HIGH
        assert tuple(img.pixels[0, 0]) == VIRIDIS_LOW

    def test_constant_grid_maps_to_midpoint_color(self):
        img = render_heatmap(np.full((5, 7), 3.3), RenderConfig(width=16, height=16))
        assert set(map(tuple, img.pixels.reshape(-1, 3))) == {VIRIDIS_MID}

    def test_nearest_neighbor_quadrants(self):
        grid = np.array([[0.0, 1.0], [1.0, 0.0]])
        img = render_heatmap(grid, RenderConfig(width=100, height=100))
        quads = {
            (0, 0): VIRIDIS_HIGH,     # grid row 1 -> image top
            (0, 99): VIRIDIS_LOW,
            (99, 0): VIRIDIS_LOW,     # grid row 0 -> image bottom
            (99, 99): VIRIDIS_HIGH,
        }
        for (r, c), color in quads.items():
            assert tuple(img.pixels[r, c]) == color
        counts = np.unique(img.pixels.reshape(-1, 3), axis=0, return_counts=True)[1]
        np.testing.assert_array_equal(counts, [5000, 5000])

    def test_log_scale_tolerates_zeros(self):
        grid = np.array([[0.0, 1e-6], [1e-3, 1.0]])
        img = render_heatmap(grid, RenderConfig(width=4, height=4, value_scale="log"))
        assert tuple(img.pixels[-1, 0]) == VIRIDIS_LOW
        assert tuple(img.pixels[0, -1]) == VIRIDIS_HIGH

    def test_log_scale_orders_decades_evenly(self):
        grid = np.array([[1e-4, 1e-3, 1e-2, 1e-1, 1.0]])
        img = render_heatmap(grid, RenderConfig(width=5, height=1, value_scale="log"))
        table = get_colormap("viridis")
        idx = [np.flatnonzero((table == px).all(axis=1))[0] for px in img.pixels[0]]
        np.testing.assert_allclose(np.diff(idx), 64, atol=1)

    def test_annotated_border_is_black(self):
        img = render_heatmap(np.eye(8), RenderConfig(width=64, height=64, annotate_axes=True))
        black = np.zeros(3, dtype=np.uint8)
        np.testing.assert_array_equal(img.pixels[0], np.tile(black, (64, 1)))
        np.testing.assert_array_equal(img.pixels[:, -1], np.tile(black, (64, 1)))

    def test_empty_grid_rejected(self):
        with pytest.raises(EmptyGrid):
            render_heatmap(np.zeros((0, 4)))

    def test_golden_digest(self):
        img = render_heatmap(_reference_grid())
        assert hashlib.sha256(encode_png(img)).hexdigest() == HEATMAP_SHA256


class TestSurface3d:
    def test_golden_digest(self):
        img = render_surface3d(_reference_grid())
        assert hashlib.sha256(encode_png(img)).hexdigest() == SURFACE_SHA256

    def test_flat_grid_renders_single_plateau_color(self):
        cfg = RenderConfig(width=96, height=96, mode="surface3d")
        img = render_surface3d(np.zeros((9, 9)), cfg)
        colors = set(map(tuple, img.pixels.reshape(-1, 3)))
        assert colors == {VIRIDIS_MID, (255, 255, 255)}

    def test_spike_projects_near_viewport_center_top(self):
        grid = np.zeros((17, 17))
        grid[8, 8] = 1.0
        cfg = RenderConfig(width=128, height=128, mode="surface3d")
        img = render_surface3d(grid, cfg)
        nonwhite = np.argwhere((img.pixels != 255).any(axis=2))
        top_row = nonwhite[:, 0].min()
        apex_cols = nonwhite[nonwhite[:, 0] == top_row][:, 1]
        # the azimuth-45 camera puts the grid center on the vertical
        # midline, and the spike apex is the highest drawn point
        assert abs(apex_cols.mean() - 63.5) <= 2.0
        assert top_row < 64

    def test_background_is_white(self):
        img = render_surface3d(_reference_grid(), RenderConfig(width=64, height=64, mode="surface3d"))
        assert tuple(img.pixels[0, 0]) == (255, 255, 255)

    def test_viewport_is_fixed_by_bounding_box_not_data(self):
        """Every dataset projects into the same footprint: the camera
        frames the unit box, so changing heights never pans or zooms."""
        cfg = RenderConfig(width=200, height=100, mode="surface3d")
        footprints = []
        for grid in (np.zeros((9, 9)), _reference_grid()):
            img = render_surface3d(grid, cfg)
            cols = np.argwhere((img.pixels != 255).any(axis=2))[:, 1]
            footprints.append((cols.min(), cols.max()))
            assert cols.min() >= 2 and cols.max() <= 197
        assert footprints[0] == footprints[1]

    def test_large_grid_is_decimated_not_rejected(self):
        rng = np.random.default_rng(71)
        img = render_surface3d(rng.uniform(size=(300, 200)), RenderConfig(width=64, height=64, mode="surface3d"))
        assert img.pixels.shape == (64, 64, 3)


class TestRenderDispatch:
    def test_mode_routes(self):
        grid = _reference_grid()
        cfg_h = RenderConfig(width=32, height=32)
        cfg_s = RenderConfig(width=32, height=32, mode="surface3d")
        np.testing.assert_array_equal(
            render(grid, cfg_h).pixels, render_heatmap(grid, cfg_h).pixels
        )
        np.testing.assert_array_equal(
            render(grid, cfg_s).pixels, render_surface3d(grid, cfg_s).pixels
        )

    def test_provenance_carried(self):
        prov = Provenance(channel="main_kw", window_start="20230701T000000Z")
        img = render(np.eye(4), RenderConfig(width=8, height=8), "rp", prov)
        assert img.provenance == prov
        assert img.source_kind == "rp"

    def test_encode_png_matches_pixels(self):
        img = render(_reference_grid(), RenderConfig(width=24, height=16))
        data = encode_png(img)
        assert png_dimensions(data) == (24, 16)
        np.testing.assert_array_equal(_decode(data), img.pixels)
