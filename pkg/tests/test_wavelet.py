"""Morlet wavelet, scale grids, and the continuous wavelet transform."""

import math

import numpy as np
import pytest

from wattscope.wavelet import (
    MIN_WINDOW_SAMPLES,
    SUPPORT_RADIUS,
    DegenerateScale,
    EmptyWindow,
    MorletParams,
    ScaleGrid,
    Scalogram,
    cwt,
    dump_scalogram,
    load_scalogram,
    morlet,
    scale_to_frequency,
    scalogram_power,
)

# pi**-0.25 and psi(1) for omega0 = 6, evaluated at 40 significant digits
# with arbitrary-precision arithmetic and rounded once to binary64.
PI_QUARTER_ROOT = 0.7511255444649425
MORLET_AT_ONE = 0.4374350244374875 - 0.1272963004398479j


class TestMorlet:
    def test_value_at_zero(self):
        val = morlet(0.0)
        assert isinstance(val, complex)
        assert abs(val.real - PI_QUARTER_ROOT) < 1e-15
        assert val.imag == 0.0

    def test_frozen_value_at_one(self):
        val = morlet(1.0)
        assert abs(val.real - MORLET_AT_ONE.real) < 1e-15
        assert abs(val.imag - MORLET_AT_ONE.imag) < 1e-15

    def test_hermitian_symmetry(self):
        """psi(-t) == conj(psi(t)), with and without the zero-mean term."""
        rng = np.random.default_rng(3)
        t = rng.uniform(-5.0, 5.0, size=200)
        for correction in (False, True):
            params = MorletParams(admissibility_correction=correction)
            np.testing.assert_allclose(
                morlet(-t, params), np.conj(morlet(t, params)), rtol=0, atol=1e-15
            )

    def test_even_envelope(self):
        t = np.linspace(-4.0, 4.0, 81)
        np.testing.assert_allclose(np.abs(morlet(-t)), np.abs(morlet(t)), atol=1e-15)

    def test_correction_gives_zero_mean(self):
        t = np.linspace(-8.0, 8.0, 4001)
        plain = np.trapezoid(morlet(t), t)
        corrected = np.trapezoid(morlet(t, MorletParams(admissibility_correction=True)), t)
        assert abs(plain) > 1e-9
        assert abs(corrected) < 1e-10

    def test_array_input(self):
        out = morlet(np.zeros(5))
        assert out.shape == (5,)
        np.testing.assert_allclose(out.real, PI_QUARTER_ROOT)

    def test_omega0_must_be_positive(self):
        with pytest.raises(ValueError):
            MorletParams(omega0=0.0)


class TestScaleGrid:
    def test_log_spacing_has_constant_ratio(self):
        grid = ScaleGrid.log_spaced(2.0, 32.0, 9)
        assert grid.count == 9
        assert grid.spacing == "log"
        np.testing.assert_allclose(grid.scales[0], 2.0)
        np.testing.assert_allclose(grid.scales[-1], 32.0)
        ratios = grid.scales[1:] / grid.scales[:-1]
        np.testing.assert_allclose(ratios, ratios[0])

    def test_linear_spacing_has_constant_step(self):
        grid = ScaleGrid.linear_spaced(1.0, 9.0, 5)
        np.testing.assert_allclose(grid.scales, [1.0, 3.0, 5.0, 7.0, 9.0])
        assert grid.spacing == "linear"

    def test_default_grid_spans_4_to_half_window(self):
        grid = ScaleGrid.default_for_window(512)
        assert grid.count == 64
        assert grid.spacing == "log"
        assert grid.scales[0] == 4.0
        np.testing.assert_allclose(grid.scales[-1], 256.0)

    def test_default_grid_rejects_tiny_window(self):
        with pytest.raises(EmptyWindow):
            ScaleGrid.default_for_window(MIN_WINDOW_SAMPLES - 1)

    def test_non_increasing_rejected(self):
        with pytest.raises(ValueError):
            ScaleGrid(np.array([4.0, 4.0, 5.0]), "log")

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            ScaleGrid(np.array([0.0, 1.0]), "linear")

    def test_unknown_spacing_rejected(self):
        with pytest.raises(ValueError):
            ScaleGrid(np.array([1.0, 2.0]), "quadratic")


class TestScaleToFrequency:
    def test_paper_mode_is_rate_over_scale(self):
        assert scale_to_frequency(4.0, 2.0) == 0.5
        assert scale_to_frequency(8.0, 1.0) == 0.125

    def test_center_corrected_mode(self):
        f = scale_to_frequency(8.0, 1.0, mode="center_corrected")
        np.testing.assert_allclose(f, 6.0 / (2.0 * math.pi) / 8.0)

    def test_corrected_below_paper_for_default_params(self):
        assert scale_to_frequency(4.0, 1.0, mode="center_corrected") < scale_to_frequency(4.0, 1.0)

    def test_nonpositive_inputs_rejected(self):
        with pytest.raises(ValueError):
            scale_to_frequency(0.0, 1.0)
        with pytest.raises(ValueError):
            scale_to_frequency(1.0, -1.0)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            scale_to_frequency(1.0, 1.0, mode="angular")


def _grid(lo=4.0, hi=16.0, count=6):
    return ScaleGrid.log_spaced(lo, hi, count)


class TestCwt:
    def test_output_shapes(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=64)
        grid = _grid()
        sg = cwt(x, grid, sample_rate=0.5)
        for arr in (sg.coeffs_real, sg.coeffs_imag, sg.power):
            assert arr.shape == (6, 64)
        assert sg.valid.shape == (6, 64) and sg.valid.dtype == bool
        assert sg.sample_rate == 0.5
        np.testing.assert_allclose(sg.frequency_map, 0.5 / grid.scales)

    def test_short_window_rejected(self):
        with pytest.raises(EmptyWindow):
            cwt(np.ones(MIN_WINDOW_SAMPLES - 1), _grid())

    def test_sub_sample_scale_rejected(self):
        with pytest.raises(DegenerateScale):
            cwt(np.ones(32), ScaleGrid.log_spaced(0.5, 8.0, 4))

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            cwt(np.ones(32), _grid(), method="dwt")

    def test_zero_signal_gives_zero_power(self):
        sg = cwt(np.zeros(32), _grid(), method="direct")
        assert np.all(sg.power == 0.0)

    def test_fft_matches_direct(self):
        """Both evaluation paths compute the same correlation; they may
        only differ where the fft kernel truncation meets the zero pad."""
        rng = np.random.default_rng(13)
        x = rng.normal(size=128)
        grid = ScaleGrid.default_for_window(128, count=16)
        fast = cwt(x, grid, method="fft")
        slow = cwt(x, grid, method="direct")
        lo, hi = 13, 115
        diff = np.hypot(
            fast.coeffs_real[:, lo:hi] - slow.coeffs_real[:, lo:hi],
            fast.coeffs_imag[:, lo:hi] - slow.coeffs_imag[:, lo:hi],
        )
        ref = np.hypot(slow.coeffs_real[:, lo:hi], slow.coeffs_imag[:, lo:hi])
        rel = np.linalg.norm(diff) / np.linalg.norm(ref)
        assert rel < 1e-6

    def test_linearity(self):
        rng = np.random.default_rng(17)
        x = rng.normal(size=64)
        y = rng.normal(size=64)
        grid = _grid(count=5)
        sx = cwt(x, grid, method="direct")
        sy = cwt(y, grid, method="direct")
        sz = cwt(2.5 * x - 0.75 * y, grid, method="direct")
        np.testing.assert_allclose(
            sz.coeffs_real, 2.5 * sx.coeffs_real - 0.75 * sy.coeffs_real, atol=1e-9
        )
        np.testing.assert_allclose(
            sz.coeffs_imag, 2.5 * sx.coeffs_imag - 0.75 * sy.coeffs_imag, atol=1e-9
        )

    def test_shift_covariance(self):
        """Sliding the window along the signal slides the coefficients,
        away from both windows' edge regions."""
        rng = np.random.default_rng(19)
        shift = 7
        n = 96
        z = rng.normal(size=n + shift)
        grid = _grid(4.0, 8.0, 4)
        s0 = cwt(z[:n], grid, method="direct")
        s1 = cwt(z[shift : shift + n], grid, method="direct")
        for i, a in enumerate(grid.scales):
            j = int(math.ceil(SUPPORT_RADIUS * a))
            cols = np.arange(j, n - j - shift)
            np.testing.assert_allclose(
                s1.coeffs_real[i, cols], s0.coeffs_real[i, cols + shift], atol=1e-6
            )
            np.testing.assert_allclose(
                s1.coeffs_imag[i, cols], s0.coeffs_imag[i, cols + shift], atol=1e-6
            )

    def test_phase_invariant_power_for_complex_tone(self):
        """|C| of a complex exponential is flat in time inside the valid
        cone."""
        n = 320
        omega = 2.0 * math.pi / 16.0
        x = np.exp(1j * omega * np.arange(n))
        grid = _grid(8.0, 20.0, 4)
        sg = cwt(x, grid, method="direct")
        for i in range(grid.count):
            row = sg.power[i][sg.valid[i]]
            assert row.std() / row.mean() < 1e-6

    def test_sinusoid_peaks_at_matching_scale(self):
        """A pure tone concentrates power on the scale row whose
        center-corrected frequency matches the tone."""
        n = 512
        grid = ScaleGrid.default_for_window(n)
        for target in (14, 32):
            f = scale_to_frequency(grid.scales[target], 1.0, mode="center_corrected")
            x = np.sin(2.0 * math.pi * f * np.arange(n))
            sg = cwt(x, grid, method="fft")
            profile = sg.power[:, 208:305].mean(axis=1)
            assert int(np.argmax(profile)) == target

    def test_validity_mask_geometry(self):
        n = 64
        grid = _grid(4.0, 9.0, 3)
        sg = cwt(np.ones(n), grid)
        for i, a in enumerate(grid.scales):
            j = int(math.ceil(SUPPORT_RADIUS * a))
            expect = np.zeros(n, dtype=bool)
            if j <= n - 1 - j:
                expect[j : n - j] = True
            np.testing.assert_array_equal(sg.valid[i], expect)


class TestPower:
    def test_magnitude_squared(self):
        grid = _grid(1.0, 2.0, 2)
        sg = Scalogram(
            coeffs_real=np.array([[3.0, 0.0]]),
            coeffs_imag=np.array([[4.0, 2.0]]),
            power=np.zeros((1, 2)),
            scale_grid=grid,
            sample_rate=1.0,
            frequency_map=np.array([1.0]),
            valid=np.ones((1, 2), dtype=bool),
        )
        scalogram_power(sg)
        np.testing.assert_array_equal(sg.power, [[25.0, 4.0]])

    def test_idempotent(self):
        rng = np.random.default_rng(23)
        sg = cwt(rng.normal(size=32), _grid())
        before = sg.power.copy()
        scalogram_power(sg)
        np.testing.assert_array_equal(sg.power, before)


class TestDump:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(29)
        sg = cwt(rng.normal(size=40), _grid(), sample_rate=2.0)
        path = tmp_path / "sg.bin"
        dump_scalogram(sg, path)
        power, fs, scales = load_scalogram(path)
        assert fs == 2.0
        np.testing.assert_array_equal(scales, sg.scale_grid.scales)
        assert power.shape == sg.power.shape
        np.testing.assert_allclose(power, sg.power, rtol=1e-6)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ValueError):
            load_scalogram(path)
