"""Property-based checks of the kernel algebra, detector invariants, and scoring."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stmdkit.evaluate import compute_rates, match_detections
from stmdkit.kernels import (
    TemporalHistory,
    bandpass_kernel,
    conv2_same,
    gamma_kernel,
    gaussian_kernel_2d,
    temporal_apply,
)
from stmdkit.pipeline import Detection, ModelParams, detect, run_sequence
from stmdkit.synth import GroundTruthEntry

from oracles import conv2_replicate, temporal_dot


class TestKernelProperties:
    @given(n=st.integers(1, 20), tau=st.floats(1.0, 60.0), dt=st.sampled_from([0.5, 1.0, 2.0]))
    @settings(max_examples=40, deadline=None)
    def test_gamma_unit_mass_nonnegative_zero_lag(self, n, tau, dt):
        k = gamma_kernel(n, tau, dt)
        assert k.taps[0] == 0.0
        assert abs(k.taps.sum() - 1.0) < 1e-9
        assert np.all(k.taps >= 0.0)
        assert np.all(np.isfinite(k.taps))

    @given(n1=st.integers(1, 12), tau1=st.floats(2.0, 20.0),
           n2=st.integers(1, 20), tau2=st.floats(20.0, 60.0))
    @settings(max_examples=25, deadline=None)
    def test_bandpass_zero_dc(self, n1, tau1, n2, tau2):
        k = bandpass_kernel(n1, tau1, n2, tau2, 1.0)
        assert abs(k.taps.sum()) < 1e-6

    @given(sigma=st.floats(0.3, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_gaussian_unit_mass(self, sigma):
        k = gaussian_kernel_2d(sigma)
        assert abs(k.weights.sum() - 1.0) < 1e-9
        assert np.all(k.weights > 0.0)

    @given(seed=st.integers(0, 10_000), a=st.floats(-3.0, 3.0), b=st.floats(-3.0, 3.0))
    @settings(max_examples=20, deadline=None)
    def test_conv2_linearity(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x, y = rng.random((16, 16)), rng.random((16, 16))
        k = gaussian_kernel_2d(1.2)
        lhs = conv2_same(a * x + b * y, k)
        rhs = a * conv2_same(x, k) + b * conv2_same(y, k)
        assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-12)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=15, deadline=None)
    def test_conv2_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        frame = rng.random((32, 32))
        k = gaussian_kernel_2d(rng.uniform(0.5, 2.5))
        want = conv2_replicate(frame, k.weights)
        got = conv2_same(frame, k)
        assert np.abs(got - want).max() <= 1e-9 * max(1.0, np.abs(want).max())

    @given(seed=st.integers(0, 10_000), n=st.integers(1, 8), tau=st.floats(2.0, 20.0))
    @settings(max_examples=15, deadline=None)
    def test_temporal_apply_matches_oracle(self, seed, n, tau):
        rng = np.random.default_rng(seed)
        k = gamma_kernel(n, tau, 1.0)
        frames = [rng.random((6, 6)) for _ in range(len(k.taps))]
        h = TemporalHistory(len(k.taps), (6, 6))
        for f in frames:
            h.push(f)
        want = temporal_dot(frames[::-1], k.taps)
        assert np.abs(temporal_apply(h, k) - want).max() <= 1e-9


class TestDetectorProperties:
    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_alpha_zero_equals_feedback_free_reference(self, seed):
        # property-tested degenerate equivalence on random streams
        rng = np.random.default_rng(seed)
        frames = [rng.random((20, 20)) for _ in range(12)]
        params = ModelParams().without_feedback()
        from stmdkit.kernels import inhibition_kernel
        blur = gaussian_kernel_2d(params.sigma1)
        bp = bandpass_kernel(params.n1, params.tau1, params.n2, params.tau2, params.dt_ms)
        delay = gamma_kernel(params.n3, params.tau3, params.dt_ms)
        inhib = inhibition_kernel(params.A, params.B, params.e, params.rho,
                                  params.sigma2, params.sigma3)
        blurred, offs = [], []
        for frame, result in zip(frames, run_sequence(frames, params)):
            blurred.insert(0, conv2_replicate(frame, blur.weights))
            L = temporal_dot(blurred, bp.taps)
            offs.insert(0, np.maximum(-L, 0.0))
            D = np.maximum(L, 0.0) * temporal_dot(offs, delay.taps)
            Q = conv2_replicate(D, inhib.weights)
            assert np.abs(result.Q - Q).max() <= 1e-12
            assert not result.F.any()

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=10, deadline=None)
    def test_nonnegative_channel_maps(self, seed):
        rng = np.random.default_rng(seed)
        frames = [rng.random((20, 20)) for _ in range(10)]
        for r in run_sequence(frames, ModelParams()):
            for name in ("tm3", "tm1", "F", "D", "E"):
                assert getattr(r, name).min() >= 0.0

    @given(seed=st.integers(0, 10_000),
           lams=st.lists(st.floats(0.0, 1.0), min_size=2, max_size=5, unique=True))
    @settings(max_examples=25, deadline=None)
    def test_detection_nesting(self, seed, lams):
        rng = np.random.default_rng(seed)
        Q = rng.random((40, 40))
        params = ModelParams()
        sets = []
        for lam in sorted(lams):
            dets = detect(Q, 0, dataclasses.replace(params, lam=lam))
            sets.append({(d.x, d.y) for d in dets})
        for bigger, smaller in zip(sets, sets[1:]):
            assert smaller <= bigger


class TestMatchingProperties:
    @given(seed=st.integers(0, 10_000), n_dets=st.integers(0, 12), n_gt=st.integers(1, 4))
    @settings(max_examples=40, deadline=None)
    def test_one_to_one_accounting(self, seed, n_dets, n_gt):
        rng = np.random.default_rng(seed)
        dets = [[Detection(0, int(x), int(y), float(s))
                 for x, y, s in zip(rng.integers(0, 50, n_dets),
                                    rng.integers(0, 50, n_dets),
                                    rng.random(n_dets))]]
        gt = [GroundTruthEntry(0, float(rng.uniform(0, 50)), float(rng.uniform(0, 50)))
              for _ in range(n_gt)]
        m = match_detections(dets, gt)
        assert 0 <= m.true_positives <= min(n_dets, n_gt)
        assert m.true_positives + m.false_positives == n_dets
        assert m.actual_targets == n_gt
        d_r, f_a = compute_rates(m)
        assert 0.0 <= d_r <= 1.0
        assert f_a >= 0.0
