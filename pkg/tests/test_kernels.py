import numpy as np
import pytest

from stmdkit.errors import InvalidParameterError, InvalidStateError
from stmdkit.kernels import (
    TemporalHistory,
    bandpass_kernel,
    conv2_same,
    gamma_density,
    gamma_kernel,
    gaussian_2d_closed_form,
    gaussian_kernel_2d,
    inhibition_kernel,
    temporal_apply,
)

from oracles import conv2_replicate, temporal_dot, trapezoid_mass


class TestGammaKernel:
    def test_peak_at_time_constant(self):
        k = gamma_kernel(n=1, tau_ms=10.0, dt_ms=1.0)
        assert int(np.argmax(k.taps)) == 10

    @pytest.mark.parametrize("n,tau", [(4, 8.0), (16, 32.0), (9, 45.0), (10, 25.0), (1, 10.0)])
    def test_unit_mass_and_zero_lag(self, n, tau):
        k = gamma_kernel(n, tau, dt_ms=1.0)
        assert k.taps[0] == 0.0
        assert abs(k.taps.sum() - 1.0) < 1e-9
        assert np.all(k.taps >= 0)
        assert np.all(np.isfinite(k.taps))

    def test_support_matches_fine_grid_integration(self):
        # feedback delay kernel: the truncation lag chosen by the tail criterion
        # must agree with a trapezoid integration of the continuous kernel
        n, tau, eps = 10, 25.0, 1e-3
        k = gamma_kernel(n, tau, dt_ms=1.0, tail_eps=eps)
        k_lags = len(k.taps) - 1
        dens = lambda t: gamma_density(n, tau, t)
        mass_inside = trapezoid_mass(dens, float(k_lags), dt=0.01)
        mass_one_less = trapezoid_mass(dens, float(k_lags - 1), dt=0.01)
        assert 1.0 - mass_inside < eps + 1e-4
        assert 1.0 - mass_one_less > eps - 1e-4

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParameterError):
            gamma_kernel(0, 10.0, 1.0)
        with pytest.raises(InvalidParameterError):
            gamma_kernel(4, -1.0, 1.0)
        with pytest.raises(InvalidParameterError):
            gamma_kernel(4, 10.0, 0.0)
        with pytest.raises(InvalidParameterError):
            gamma_kernel(4, float("nan"), 1.0)
        with pytest.raises(InvalidParameterError):
            gamma_kernel(4, 10.0, 1.0, tail_eps=0.0)


class TestBandpassKernel:
    def test_zero_dc(self):
        k = bandpass_kernel(4, 8.0, 16, 32.0, dt_ms=1.0)
        assert abs(k.taps.sum()) < 1e-6

    def test_biphasic_sign_structure(self):
        # fast excitation minus slow inhibition: positive head, negative tail
        k = bandpass_kernel(4, 8.0, 16, 32.0, dt_ms=1.0)
        assert np.all(k.taps[1:11] > 0)
        assert np.all(k.taps[30:60] < 0)

    def test_degenerate_cancellation(self):
        k = bandpass_kernel(6, 12.0, 6, 12.0, dt_ms=1.0)
        assert np.all(k.taps == 0.0)


class TestGaussianKernel2d:
    def test_center_max_and_unit_sum(self):
        k = gaussian_kernel_2d(1.0, radius=3)
        assert k.weights.shape == (7, 7)
        assert k.weights[3, 3] == k.weights.max()
        assert abs(k.weights.sum() - 1.0) < 1e-9
        assert np.all(k.weights > 0)

    def test_delta_limit(self):
        k = gaussian_kernel_2d(0.1, radius=1)
        assert k.weights[1, 1] > 1.0 - 1e-9

    def test_auto_radius(self):
        assert gaussian_kernel_2d(1.5).radius == 5
        assert gaussian_kernel_2d(1.0).radius == 3

    def test_matches_closed_form_up_to_scale(self):
        sigma = 1.5
        k = gaussian_kernel_2d(sigma)
        r = k.radius
        coords = np.arange(-r, r + 1, dtype=float)
        xx, yy = np.meshgrid(coords, coords, indexing="xy")
        direct = gaussian_2d_closed_form(sigma, xx, yy)
        ratio = k.weights / direct
        assert np.allclose(ratio, ratio[r, r], rtol=1e-12)

    def test_symmetry(self):
        k = gaussian_kernel_2d(2.3)
        assert np.allclose(k.weights, k.weights[::-1, :])
        assert np.allclose(k.weights, k.weights[:, ::-1])

    def test_invalid_sigma(self):
        with pytest.raises(InvalidParameterError):
            gaussian_kernel_2d(0.0)
        with pytest.raises(InvalidParameterError):
            gaussian_kernel_2d(-2.0)


class TestInhibitionKernel:
    def test_default_sign_structure(self):
        k = inhibition_kernel(A=1, B=3, e=1, rho=0, sigma2=1.5, sigma3=3.0)
        r = k.radius
        assert k.weights[r, r] > 0
        assert k.weights[r, r + 3] < 0
        assert k.weights[r + 3, r] < 0

    def test_equal_gains_reduce_to_difference_of_gaussians(self):
        a = 2.0
        k = inhibition_kernel(A=a, B=a, e=1.0, rho=0.0, sigma2=1.5, sigma3=3.0)
        r = k.radius
        coords = np.arange(-r, r + 1, dtype=float)
        xx, yy = np.meshgrid(coords, coords, indexing="xy")
        g = gaussian_2d_closed_form(1.5, xx, yy) - gaussian_2d_closed_form(3.0, xx, yy)
        assert np.allclose(k.weights, a * g, rtol=1e-12, atol=1e-15)

    def test_large_offset_makes_all_weights_negative(self):
        k = inhibition_kernel(A=1, B=3, e=1, rho=1.0, sigma2=1.5, sigma3=3.0)
        assert np.all(k.weights < 0)

    def test_definition_pointwise(self):
        A, B, e, rho = 1.0, 3.0, 1.0, 0.0
        k = inhibition_kernel(A, B, e, rho, sigma2=1.5, sigma3=3.0)
        r = k.radius
        for (dy, dx) in [(0, 0), (2, 1), (-3, 0), (5, -4)]:
            g = (gaussian_2d_closed_form(1.5, dx, dy)
                 - e * gaussian_2d_closed_form(3.0, dx, dy) - rho)
            expect = A * max(g, 0.0) + B * min(g, 0.0)
            assert k.weights[r + dy, r + dx] == pytest.approx(expect, rel=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidParameterError):
            inhibition_kernel(float("inf"), 3, 1, 0, 1.5, 3.0)


class TestConv2Same:
    def test_identity_kernel(self):
        rng = np.random.default_rng(0)
        frame = rng.random((12, 17))
        from stmdkit.kernels import SpatialKernel
        ident = SpatialKernel(radius=0, weights=np.ones((1, 1)))
        assert np.array_equal(conv2_same(frame, ident), frame)

    def test_constant_frame_preserved(self):
        frame = np.full((20, 20), 0.37)
        out = conv2_same(frame, gaussian_kernel_2d(1.5))
        assert np.allclose(out, 0.37, atol=1e-12)

    def test_impulse_reproduces_kernel(self):
        k = gaussian_kernel_2d(1.0, radius=3)
        frame = np.zeros((15, 15))
        frame[7, 7] = 1.0
        out = conv2_same(frame, k)
        assert np.allclose(out[4:11, 4:11], k.weights, atol=1e-12)

    @pytest.mark.parametrize("maker", [
        lambda: gaussian_kernel_2d(1.0),
        lambda: gaussian_kernel_2d(3.0),
        lambda: inhibition_kernel(1, 3, 1, 0, 1.5, 3.0),
    ])
    def test_matches_dense_oracle(self, maker):
        rng = np.random.default_rng(42)
        frame = rng.random((32, 32))
        kernel = maker()
        got = conv2_same(frame, kernel)
        want = conv2_replicate(frame, kernel.weights)
        scale = np.abs(want).max()
        assert np.abs(got - want).max() <= 1e-9 * max(scale, 1.0)

    def test_linearity(self):
        rng = np.random.default_rng(3)
        x, y = rng.random((16, 16)), rng.random((16, 16))
        k = gaussian_kernel_2d(1.5)
        lhs = conv2_same(2.5 * x + 0.3 * y, k)
        rhs = 2.5 * conv2_same(x, k) + 0.3 * conv2_same(y, k)
        assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-12)

    def test_shift_equivariance_away_from_borders(self):
        rng = np.random.default_rng(7)
        frame = rng.random((24, 24))
        k = gaussian_kernel_2d(1.0, radius=3)
        shifted = np.roll(frame, (2, 3), axis=(0, 1))
        out, out_s = conv2_same(frame, k), conv2_same(shifted, k)
        r = k.radius
        m = 2 + 3 + r  # stay clear of both the borders and the wrap seam
        assert np.allclose(np.roll(out, (2, 3), axis=(0, 1))[m:-m, m:-m],
                           out_s[m:-m, m:-m], atol=1e-12)

    def test_kernel_larger_than_frame_rejected(self):
        with pytest.raises(InvalidParameterError):
            conv2_same(np.zeros((5, 5)), gaussian_kernel_2d(3.0))  # radius 9

    def test_empty_frame_rejected(self):
        with pytest.raises(InvalidParameterError):
            conv2_same(np.zeros((0, 4)), gaussian_kernel_2d(1.0))


class TestTemporalApply:
    def _history(self, frames, capacity=None):
        frames = [np.asarray(f, dtype=float) for f in frames]
        h = TemporalHistory(capacity or len(frames), frames[0].shape)
        for f in frames:  # oldest first
            h.push(f)
        return h

    def test_single_tap_identity(self):
        from stmdkit.kernels import DiscreteTemporalKernel
        rng = np.random.default_rng(1)
        cur = rng.random((6, 6))
        h = self._history([rng.random((6, 6)), cur])
        k = DiscreteTemporalKernel(taps=np.array([1.0]), dt_ms=1.0)
        assert np.array_equal(temporal_apply(h, k), cur)

    def test_constant_history_through_bandpass_is_null(self):
        k = bandpass_kernel(4, 8.0, 16, 32.0)
        const = np.full((5, 5), 0.8)
        h = TemporalHistory(len(k.taps), (5, 5))
        for _ in range(len(k.taps)):
            h.push(const)
        assert np.abs(temporal_apply(h, k)).max() <= 1e-6 * 0.8

    def test_impulse_reads_single_tap(self):
        k = gamma_kernel(9, 45.0, dt_ms=1.0)
        lag = 30
        h = TemporalHistory(len(k.taps), (4, 4))
        impulse = np.zeros((4, 4))
        impulse[2, 1] = 1.0
        h.push(impulse)
        for _ in range(lag):
            h.push(np.zeros((4, 4)))
        out = temporal_apply(h, k)
        assert out[2, 1] == pytest.approx(k.taps[lag], rel=1e-12)
        out[2, 1] = 0.0
        assert np.all(out == 0.0)

    def test_matches_dot_product_oracle(self):
        rng = np.random.default_rng(9)
        k = gamma_kernel(4, 8.0, dt_ms=1.0)
        frames = [rng.random((8, 8)) for _ in range(len(k.taps) + 5)]
        h = self._history(frames, capacity=len(k.taps))
        newest_first = frames[::-1]
        want = temporal_dot(newest_first, k.taps)
        got = temporal_apply(h, k)
        assert np.abs(got - want).max() <= 1e-9 * np.abs(want).max()

    def test_missing_history_reads_zero(self):
        # only one frame pushed: every deeper lag contributes nothing
        k = gamma_kernel(1, 3.0, dt_ms=1.0)
        h = TemporalHistory(len(k.taps), (3, 3))
        h.push(np.ones((3, 3)))
        assert np.allclose(temporal_apply(h, k), k.taps[0])

    def test_size_mismatch_rejected(self):
        h = TemporalHistory(4, (3, 3))
        with pytest.raises(InvalidStateError):
            h.push(np.zeros((4, 3)))

    def test_kernel_longer_than_capacity_rejected(self):
        k = gamma_kernel(9, 45.0, dt_ms=1.0)
        h = TemporalHistory(3, (2, 2))
        h.push(np.zeros((2, 2)))
        with pytest.raises(InvalidStateError):
            temporal_apply(h, k)

    def test_empty_history_rejected(self):
        from stmdkit.kernels import DiscreteTemporalKernel
        h = TemporalHistory(3, (2, 2))
        k = DiscreteTemporalKernel(taps=np.array([1.0]), dt_ms=1.0)
        with pytest.raises(InvalidStateError):
            temporal_apply(h, k)
