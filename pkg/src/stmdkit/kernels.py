"""Discrete spatial and temporal kernels and their application.

Temporal filtering is built from Gamma kernels

    g(t) = (n*t)**n * exp(-n*t/tau) / ((n-1)! * tau**(n+1)),

unit-mass smooth delay lines whose order ``n`` controls spread and whose
time constant ``tau`` (ms) sets the delay: the continuous mode sits at
``t = tau``.  A band-pass filter is the difference of a fast and a slow
Gamma kernel.  Spatial filtering uses sampled 2-D Gaussians and a
center-positive / surround-negative inhibition kernel built from a
difference of Gaussians.

Kernels are sampled on the frame grid (one tap per frame interval of
``dt_ms`` milliseconds), truncated once the omitted continuous tail mass
drops below ``tail_eps``, and, for plain Gamma kernels, renormalized to
unit sum so delay lines preserve mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft
from scipy import ndimage
from scipy.special import gammainccinv, gammaln

from .errors import InvalidParameterError, InvalidStateError

# Kernels at least this wide go through the padded-FFT path in conv2_same.
_FFT_SIZE_THRESHOLD = 13


@dataclass
class DiscreteTemporalKernel:
    """FIR taps at lags 0,1,2,... (one lag per frame interval of dt_ms)."""

    taps: np.ndarray
    dt_ms: float
    meta: tuple = ()

    def __len__(self) -> int:
        return len(self.taps)


@dataclass
class SpatialKernel:
    """Dense (2*radius+1)^2 weight grid, optionally separable."""

    radius: int
    weights: np.ndarray
    # 1-D factor such that weights == outer(factor, factor); None if not separable.
    factor: np.ndarray | None = None


@dataclass
class InhibitionKernel:
    """Center-positive / surround-negative lateral inhibition weights."""

    radius: int
    weights: np.ndarray
    params: dict = field(default_factory=dict)


def _require_positive(**kwargs) -> None:
    for name, value in kwargs.items():
        if not np.isfinite(value) or value <= 0:
            raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")


def gamma_density(n: int, tau_ms: float, t_ms: np.ndarray) -> np.ndarray:
    """Continuous Gamma kernel evaluated at times t_ms (ms); zero for t <= 0."""
    t = np.asarray(t_ms, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    # log form avoids overflow of (n*t)**n for large orders
    log_g = (
        n * np.log(n * t[pos])
        - n * t[pos] / tau_ms
        - gammaln(n)
        - (n + 1) * math.log(tau_ms)
    )
    out[pos] = np.exp(log_g)
    return out


def gamma_support_lags(n: int, tau_ms: float, dt_ms: float, tail_eps: float) -> int:
    """Smallest lag K such that the continuous mass beyond K*dt is < tail_eps.

    The kernel equals a Gamma(shape n+1, scale tau/n) density, so the tail
    mass beyond T is the regularized upper incomplete gamma Q(n+1, n*T/tau).
    """
    t_cut = gammainccinv(n + 1, tail_eps) * tau_ms / n
    return int(math.floor(t_cut / dt_ms)) + 1


def gamma_kernel(n: int, tau_ms: float, dt_ms: float = 1.0,
                 tail_eps: float = 1e-3) -> DiscreteTemporalKernel:
    """Unit-mass discrete Gamma delay kernel of order n and time constant tau_ms.

    Taps sample the continuous kernel at lags 0..K (K chosen by the tail
    criterion) and are renormalized to sum exactly to 1.  The lag-0 tap is
    analytically zero for every order n >= 1, so filters built from these
    kernels depend strictly on past frames.
    """
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"order n must be an integer >= 1, got {n!r}")
    n = int(n)
    _require_positive(tau_ms=tau_ms, dt_ms=dt_ms)
    if not (0.0 < tail_eps < 1.0):
        raise InvalidParameterError(f"tail_eps must lie in (0,1), got {tail_eps!r}")

    k_max = gamma_support_lags(n, tau_ms, dt_ms, tail_eps)
    taps = gamma_density(n, tau_ms, np.arange(k_max + 1) * dt_ms)
    taps /= taps.sum()
    return DiscreteTemporalKernel(taps=taps, dt_ms=float(dt_ms), meta=(n, float(tau_ms)))


def bandpass_kernel(n1: int, tau1: float, n2: int, tau2: float,
                    dt_ms: float = 1.0, tail_eps: float = 1e-3) -> DiscreteTemporalKernel:
    """Temporal band-pass taps: fast Gamma kernel minus slow Gamma kernel.

    The two unit-mass kernels are subtracted after zero-padding to the longer
    support; the difference is deliberately not renormalized, so the taps sum
    to zero and the filter rejects any constant (DC) input.
    """
    fast = gamma_kernel(n1, tau1, dt_ms, tail_eps)
    slow = gamma_kernel(n2, tau2, dt_ms, tail_eps)
    width = max(len(fast), len(slow))
    taps = np.zeros(width)
    taps[: len(fast)] += fast.taps
    taps[: len(slow)] -= slow.taps
    return DiscreteTemporalKernel(taps=taps, dt_ms=float(dt_ms),
                                  meta=(fast.meta, slow.meta))


def gaussian_kernel_2d(sigma: float, radius: int | str = "auto") -> SpatialKernel:
    """Sampled 2-D Gaussian, renormalized to unit sum.

    radius="auto" takes ceil(3*sigma), covering >99.7% of the continuous mass.
    """
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive and finite, got {sigma!r}")
    if radius == "auto":
        radius = math.ceil(3.0 * sigma)
    radius = int(radius)
    if radius < 0:
        raise InvalidParameterError(f"radius must be >= 0, got {radius!r}")

    x = np.arange(-radius, radius + 1, dtype=float)
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    g /= g.sum()
    # outer product of the normalized 1-D profiles is exactly the normalized
    # 2-D Gaussian, and gives conv2_same its separable fast path
    return SpatialKernel(radius=radius, weights=np.outer(g, g), factor=g)


def gaussian_2d_closed_form(sigma: float, x, y) -> np.ndarray:
    """exp(-(x^2+y^2)/(2 sigma^2)) / (2 pi sigma^2), the unnormalized sampling."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.exp(-(x ** 2 + y ** 2) / (2.0 * sigma ** 2)) / (2.0 * math.pi * sigma ** 2)


def inhibition_kernel(A: float, B: float, e: float, rho: float,
                      sigma2: float, sigma3: float,
                      radius: int | str = "auto") -> InhibitionKernel:
    """Lateral inhibition weights A*[g]+ + B*[g]- with g = G_s2 - e*G_s3 - rho.

    Both Gaussians keep their closed-form 1/(2 pi sigma^2) amplitude and no
    renormalization is applied, so the center stays positive and the surround
    negative for the default center-narrow / surround-wide configuration.
    """
    for name, value in (("A", A), ("B", B), ("e", e), ("rho", rho)):
        if not np.isfinite(value):
            raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    _require_positive(sigma2=sigma2, sigma3=sigma3)
    if radius == "auto":
        radius = math.ceil(3.0 * sigma3)
    radius = int(radius)

    coords = np.arange(-radius, radius + 1, dtype=float)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    g = gaussian_2d_closed_form(sigma2, xx, yy) - e * gaussian_2d_closed_form(sigma3, xx, yy) - rho
    weights = A * np.maximum(g, 0.0) + B * np.minimum(g, 0.0)
    return InhibitionKernel(
        radius=radius, weights=weights,
        params={"A": A, "B": B, "e": e, "rho": rho, "sigma2": sigma2, "sigma3": sigma3},
    )


def conv2_same(frame: np.ndarray, kernel: SpatialKernel | InhibitionKernel) -> np.ndarray:
    """Same-size 2-D correlation with replicate-edge padding.

    Chooses between a separable two-pass path (when the kernel carries a 1-D
    factor), a padded FFT path for wide kernels, and direct dense correlation;
    all paths agree with the dense definition to ~1e-15 relative.
    """
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2 or frame.size == 0:
        raise InvalidParameterError("frame must be a non-empty 2-D array")
    weights = kernel.weights
    if weights.shape[0] > frame.shape[0] or weights.shape[1] > frame.shape[1]:
        raise InvalidParameterError(
            f"kernel {weights.shape} larger than frame {frame.shape}")

    factor = getattr(kernel, "factor", None)
    if factor is not None:
        tmp = ndimage.correlate1d(frame, factor, axis=0, mode="nearest")
        return ndimage.correlate1d(tmp, factor, axis=1, mode="nearest")
    if weights.shape[0] >= _FFT_SIZE_THRESHOLD:
        return _fft_correlate_replicate(frame, kernel)
    return ndimage.correlate(frame, weights, mode="nearest")


def _fft_correlate_replicate(frame: np.ndarray, kernel) -> np.ndarray:
    """Replicate-padded FFT correlation, caching the kernel transform per shape."""
    r = kernel.radius
    padded = np.pad(frame, r, mode="edge")
    cache = kernel.__dict__.setdefault("_fft_cache", {})
    plan = cache.get(padded.shape)
    if plan is None:
        fshape = tuple(sp_fft.next_fast_len(s, real=True) for s in padded.shape)
        # flip turns convolution into correlation
        plan = (sp_fft.rfft2(kernel.weights[::-1, ::-1], fshape), fshape)
        cache[padded.shape] = plan
    k_fft, fshape = plan
    conv = sp_fft.irfft2(sp_fft.rfft2(padded, fshape) * k_fft, fshape)
    h, w = frame.shape
    return conv[2 * r:2 * r + h, 2 * r:2 * r + w]


class TemporalHistory:
    """Fixed-capacity ring buffer of equally sized frames, newest at lag 0.

    Slots that have never been written read as zero frames, which is exactly
    the before-stream-start convention temporal filtering expects.
    """

    def __init__(self, capacity: int, frame_shape: tuple[int, int], dtype=np.float64):
        if capacity < 1:
            raise InvalidParameterError(f"capacity must be >= 1, got {capacity!r}")
        self.capacity = int(capacity)
        self.frame_shape = tuple(frame_shape)
        self._buf = np.zeros((self.capacity, *self.frame_shape), dtype=dtype)
        self._pos = self.capacity - 1  # slot holding the lag-0 frame
        self.n_pushed = 0

    def push(self, frame: np.ndarray) -> None:
        if frame.shape != self.frame_shape:
            raise InvalidStateError(
                f"frame shape {frame.shape} does not match history {self.frame_shape}")
        self._pos = (self._pos + 1) % self.capacity
        self._buf[self._pos] = frame
        self.n_pushed += 1

    def at_lag(self, lag: int) -> np.ndarray:
        if not (0 <= lag < self.capacity):
            raise InvalidStateError(f"lag {lag} outside buffer capacity {self.capacity}")
        return self._buf[(self._pos - lag) % self.capacity]


def temporal_apply(history: TemporalHistory, kernel: DiscreteTemporalKernel) -> np.ndarray:
    """Per-pixel dot product of kernel taps with the frames at lags 0,1,...

    Runs as a single tensordot against the ring buffer by permuting the taps
    into storage order instead of reordering the frames.
    """
    taps = kernel.taps
    if len(taps) > history.capacity:
        raise InvalidStateError(
            f"kernel needs {len(taps)} lags but history holds {history.capacity}")
    if history.n_pushed < 1:
        raise InvalidStateError("history holds no frames")
    slots = (history._pos - np.arange(len(taps))) % history.capacity
    w = np.zeros(history.capacity)
    w[slots] = taps
    return np.tensordot(w, history._buf, axes=(0, 0))
