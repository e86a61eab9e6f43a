"""A tour of the filtering building blocks.

Every stage of the detector is a convolution with one of three kernel
families: unit-mass Gamma kernels acting as smooth temporal delay lines,
their differences acting as temporal band-pass filters, and 2-D Gaussians /
difference-of-Gaussians acting as spatial blur and lateral inhibition.
Run this script to print their key properties and (if matplotlib is
installed) save plots under demos/out/.
"""

import numpy as np

from stmdkit import bandpass_kernel, gamma_kernel, gaussian_kernel_2d, inhibition_kernel

# A Gamma kernel of order n and time constant tau peaks at lag tau (here in
# milliseconds, one tap per 1 ms frame). Total mass is exactly 1, so filtering a
# constant signal through it changes nothing: it is a pure smooth delay.
delay = gamma_kernel(n=9, tau_ms=45.0, dt_ms=1.0)
print(f"delay kernel: {len(delay.taps)} taps, "
      f"peak at lag {int(np.argmax(delay.taps))} ms, sum={delay.taps.sum():.12f}")

# Increasing the order narrows the kernel around the same peak.
for n in (2, 5, 15):
    k = gamma_kernel(n, 45.0, 1.0)
    spread = np.sqrt(np.sum(k.taps * (np.arange(len(k.taps)) - 45.0) ** 2))
    print(f"  order {n:2d}: spread around the peak ~ {spread:.1f} ms")

# The band-pass filter is a fast Gamma kernel minus a slow one. Its taps sum
# to zero, so any static scene is rejected exactly; a luminance step produces
# a transient of one sign followed by a rebound of the other.
bp = bandpass_kernel(n1=4, tau1=8.0, n2=16, tau2=32.0, dt_ms=1.0)
print(f"\nband-pass: {len(bp.taps)} taps, sum={bp.taps.sum():+.2e}, "
      f"positive head up to lag {int(np.nonzero(bp.taps < 0)[0][0]) - 1}")

# Spatial kernels: a unit-sum Gaussian blur and the center-positive /
# surround-negative inhibition kernel that grants size selectivity.
blur = gaussian_kernel_2d(sigma=1.0)
inhib = inhibition_kernel(A=1, B=3, e=1, rho=0, sigma2=1.5, sigma3=3.0)
r = inhib.radius
print(f"\nblur: {blur.weights.shape}, sum={blur.weights.sum():.9f}")
print(f"inhibition: {inhib.weights.shape}, center={inhib.weights[r, r]:+.4f}, "
      f"ring at 3 px={inhib.weights[r, r + 3]:+.4f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out = Path(__file__).parent / "out"
    out.mkdir(exist_ok=True)

    fig, axes = plt.subplots(1, 3, figsize=(13, 3.5))
    axes[0].plot(delay.taps, label="delay (n=9, tau=45)")
    axes[0].plot(gamma_kernel(10, 25.0, 1.0).taps, label="feedback delay (n=10, tau=25)")
    axes[0].set(title="Gamma delay kernels", xlabel="lag (ms)")
    axes[0].legend()
    axes[1].axhline(0, color="gray", lw=0.5)
    axes[1].plot(bp.taps)
    axes[1].set(title="temporal band-pass", xlabel="lag (ms)")
    im = axes[2].imshow(inhib.weights, cmap="RdBu_r",
                        vmin=-abs(inhib.weights).max(), vmax=abs(inhib.weights).max())
    axes[2].set(title="lateral inhibition")
    fig.colorbar(im, ax=axes[2])
    fig.tight_layout()
    fig.savefig(out / "kernels.png", dpi=120)
    print(f"\nplots saved to {out / 'kernels.png'}")
except ImportError:
    print("\nmatplotlib not installed; skipping plots")
