"""Synthetic benchmark sequences: a small rectangular target over a panning background.

A sequence is a horizontally wrapping background image panning at constant
velocity with a solid rectangular target sweeping across a fixed row.  Both
motions use sub-pixel resolution: the background is resampled bilinearly and
the target is drawn with coverage weighting on its boundary pixels, so a
target moving 0.25 px per frame actually moves every frame instead of
snapping to the pixel grid every fourth one. Ground truth records the exact
continuous target center per frame.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError
from .frameio import read_frame, write_csv, write_pgm

DIRECTIONS = ("rightward", "leftward")


@dataclass
class SynthConfig:
    """Everything needed to render one sequence reproducibly.

    Defaults give the reference benchmark sequence: a 5x5 black target at
    250 px/s over a background panning rightward at 150 px/s, 500x250 frames
    sampled at 1000 fps. Luminance is in 8-bit units (0..255).
    """

    width: int = 500
    height: int = 250
    fps: float = 1000.0
    duration_frames: int = 1000
    target_width: int = 5
    target_height: int = 5
    target_luminance: float = 0.0
    target_velocity: float = 250.0     # px/s, rightward
    target_start_x: float = 20.0       # left edge of the rectangle at t=0
    target_y: float = 125.0            # fixed center row
    background_velocity: float = 150.0  # px/s
    background_direction: str = "rightward"
    seed: int = 0
    background_path: str | None = None
    # resolved pixel data; not serialized (regenerate from seed or path)
    background_image: np.ndarray | None = field(default=None, repr=False, compare=False)

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError("frame size must be at least 1x1")
        if self.duration_frames < 1:
            raise InvalidParameterError(
                f"duration_frames must be >= 1, got {self.duration_frames!r}")
        if self.fps <= 0:
            raise InvalidParameterError(f"fps must be positive, got {self.fps!r}")
        if self.target_width < 1 or self.target_height < 1:
            raise InvalidParameterError("target must be at least 1x1 px")
        if not (0.0 <= self.target_luminance <= 255.0):
            raise InvalidParameterError(
                f"target_luminance must be in [0,255], got {self.target_luminance!r}")
        if self.background_direction not in DIRECTIONS:
            raise InvalidParameterError(
                f"background_direction must be one of {DIRECTIONS}")
        if self.target_velocity < 0 or self.background_velocity < 0:
            raise InvalidParameterError("velocities must be >= 0 (direction fields set sign)")
        x0, y0 = self.target_start_x, self.target_y
        if x0 < 0 or x0 + self.target_width > self.width:
            raise InvalidParameterError("target does not fit horizontally at start")
        if y0 - self.target_height / 2 < 0 or y0 + self.target_height / 2 > self.height:
            raise InvalidParameterError("target does not fit vertically")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("background_image")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__ if f != "background_image"}
        unknown = set(d) - known
        if unknown:
            raise InvalidParameterError(f"unknown synth config fields: {sorted(unknown)}")
        return cls(**d)


def natural_background(height: int, width: int, seed: int = 0) -> np.ndarray:
    """Reproducible cluttered background with natural-image-like 1/f statistics.

    Synthesized in the Fourier domain (hence periodic, so horizontal panning
    wraps seamlessly), shaped with a 1/f^1.6 amplitude falloff, then dimmed by
    soft-edged bush-like patches. Patch contrast is kept below the contrast of
    a black benchmark target so clutter distracts the detector without
    routinely out-scoring the target. Returns [0,1] floats.
    """
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    f = np.hypot(fy, fx)
    f0 = 1.0 / max(height, width)

    base = np.fft.ifft2(np.fft.fft2(rng.standard_normal((height, width)))
                        / (f + f0) ** 1.6).real
    base = (base - base.mean()) / base.std()
    lum = 0.62 + 0.25 * np.tanh(0.8 * base)

    clutter = np.fft.ifft2(np.fft.fft2(rng.standard_normal((height, width)))
                           / (f + f0) ** 1.6).real
    clutter = (clutter - clutter.mean()) / clutter.std()
    dim = 1.0 - 0.72 / (1.0 + np.exp((clutter + 1.0) * 6.0))
    return np.clip(lum * dim, 0.02, 0.98)


def resolve_background(cfg: SynthConfig) -> np.ndarray:
    """The [0,1] background image for a config: explicit, from file, or procedural."""
    if cfg.background_image is not None:
        bg = np.asarray(cfg.background_image, dtype=float)
    elif cfg.background_path is not None:
        bg = read_frame(cfg.background_path)
    else:
        bg = natural_background(cfg.height, cfg.width, cfg.seed)
    if bg.ndim != 2 or bg.shape[0] != cfg.height:
        raise InvalidParameterError(
            f"background height {bg.shape} does not match frame height {cfg.height}")
    if bg.shape[1] < cfg.width:
        raise InvalidParameterError("background narrower than the frame")
    return bg


def _pan_background(bg: np.ndarray, shift_px: float, width: int) -> np.ndarray:
    """Background panned so content moves +shift_px columns, wrapping horizontally."""
    bg_w = bg.shape[1]
    src = (np.arange(width, dtype=float) - shift_px) % bg_w
    i0 = np.floor(src).astype(int) % bg_w
    frac = src - np.floor(src)
    i1 = (i0 + 1) % bg_w
    return bg[:, i0] * (1.0 - frac) + bg[:, i1] * frac


def _interval_coverage(a: float, b: float, n: int) -> tuple[int, np.ndarray]:
    """Coverage of [a, b) by unit pixels: (first pixel index, per-pixel fractions)."""
    lo = int(math.floor(a))
    hi = int(math.ceil(b))
    idx = np.arange(lo, hi, dtype=float)
    cov = np.minimum(b, idx + 1.0) - np.maximum(a, idx)
    return lo, np.clip(cov, 0.0, 1.0)


def _draw_target(frame: np.ndarray, cfg: SynthConfig, x_left: float) -> None:
    """Composite the target rectangle over the frame with sub-pixel edge coverage."""
    h, w = frame.shape
    y_top = cfg.target_y - cfg.target_height / 2.0
    x0, cov_x = _interval_coverage(x_left, x_left + cfg.target_width, w)
    y0, cov_y = _interval_coverage(y_top, y_top + cfg.target_height, h)
    xs = np.arange(x0, x0 + len(cov_x))
    ys = np.arange(y0, y0 + len(cov_y))
    ok_x = (xs >= 0) & (xs < w)
    ok_y = (ys >= 0) & (ys < h)
    if not ok_x.any() or not ok_y.any():
        return
    alpha = np.outer(cov_y[ok_y], cov_x[ok_x])
    region = frame[np.ix_(ys[ok_y], xs[ok_x])]
    frame[np.ix_(ys[ok_y], xs[ok_x])] = (
        alpha * (cfg.target_luminance / 255.0) + (1.0 - alpha) * region)


@dataclass
class GroundTruthEntry:
    frame_index: int
    cx: float
    cy: float


def ground_truth(cfg: SynthConfig) -> list[GroundTruthEntry]:
    """Target-center entries for every frame in which the rectangle is fully in view."""
    out = []
    for t in range(cfg.duration_frames):
        x_left = cfg.target_start_x + cfg.target_velocity * t / cfg.fps
        if x_left < 0 or x_left + cfg.target_width > cfg.width:
            break
        out.append(GroundTruthEntry(
            frame_index=t, cx=x_left + cfg.target_width / 2.0, cy=cfg.target_y))
    return out


def render_frame(cfg: SynthConfig, bg: np.ndarray, t: int) -> np.ndarray:
    """Frame t: panned background with the target composited, on the 8-bit grid."""
    sign = 1.0 if cfg.background_direction == "rightward" else -1.0
    shift = sign * cfg.background_velocity * t / cfg.fps
    frame = _pan_background(bg, shift, cfg.width)
    x_left = cfg.target_start_x + cfg.target_velocity * t / cfg.fps
    if x_left < cfg.width and x_left + cfg.target_width > 0:
        _draw_target(frame, cfg, x_left)
    # quantize to the 8-bit grid so in-memory frames match PGM round-trips exactly
    return np.rint(np.clip(frame, 0.0, 1.0) * 255.0) / 255.0


def generate_sequence(cfg: SynthConfig):
    """(lazy frame iterator, ground truth list) for a config."""
    cfg.validate()
    bg = resolve_background(cfg)

    def frames():
        for t in range(cfg.duration_frames):
            yield render_frame(cfg, bg, t)

    return frames(), ground_truth(cfg)


def group_configs(group: int, initial: SynthConfig) -> list[SynthConfig]:
    """The benchmark sweep for one experiment group, holding everything else fixed.

    1: square target size 1..15 px        4: background velocity 0..500 rightward
    2: target luminance 0..75 step 15     5: background velocity 0..500 leftward
    3: target velocity 0..500 step 50     6: target velocity 200..400 over three
                                             alternate backgrounds
    """
    if group == 1:
        return [replace(initial, target_width=s, target_height=s) for s in range(1, 16)]
    if group == 2:
        return [replace(initial, target_luminance=float(l)) for l in range(0, 76, 15)]
    if group == 3:
        return [replace(initial, target_velocity=float(v)) for v in range(0, 501, 50)]
    if group == 4:
        return [replace(initial, background_velocity=float(v),
                        background_direction="rightward") for v in range(0, 501, 50)]
    if group == 5:
        return [replace(initial, background_velocity=float(v),
                        background_direction="leftward") for v in range(0, 501, 50)]
    if group == 6:
        return [
            replace(initial, seed=initial.seed + bg_offset, target_velocity=float(v))
            for bg_offset in (1, 2, 3)
            for v in range(200, 401, 50)
        ]
    raise InvalidParameterError(f"group must be 1..6, got {group!r}")


def _centered_box(cx: float, cy: float, half_w: float, half_h: float, frame_shape):
    h, w = frame_shape
    x0 = max(0, int(round(cx - half_w)))
    x1 = min(w, int(round(cx + half_w)))
    y0 = max(0, int(round(cy - half_h)))
    y1 = min(h, int(round(cy + half_h)))
    return x0, x1, y0, y1


def weber_contrast(target_luminance: float, frames, gt, d_px: int = 10,
                   target_width: int = 5, target_height: int = 5) -> float:
    """|mean target intensity - mean surround intensity| / 255, averaged over frames.

    The surround is the (w+2d) x (h+2d) box around the target center minus the
    target rectangle itself; boxes poking past the frame border are clipped
    with a warning. target_luminance is the nominal drawn value, used only if
    the rectangle covers no whole pixel.
    """
    by_frame = {g.frame_index: g for g in gt}
    if not by_frame:
        raise InvalidParameterError("ground truth is empty")
    half_w, half_h = target_width / 2.0, target_height / 2.0
    contrasts = []
    clipped = False
    for t, frame in enumerate(frames):
        g = by_frame.get(t)
        if g is None:
            continue
        tx0, tx1, ty0, ty1 = _centered_box(g.cx, g.cy, half_w, half_h, frame.shape)
        bx0, bx1, by0, by1 = _centered_box(
            g.cx, g.cy, half_w + d_px, half_h + d_px, frame.shape)
        if (g.cx - half_w - d_px < 0 or g.cx + half_w + d_px > frame.shape[1]
                or g.cy - half_h - d_px < 0 or g.cy + half_h + d_px > frame.shape[0]):
            clipped = True
        target = frame[ty0:ty1, tx0:tx1]
        mask = np.ones((by1 - by0, bx1 - bx0), dtype=bool)
        mask[ty0 - by0:ty1 - by0, tx0 - bx0:tx1 - bx0] = False
        surround = frame[by0:by1, bx0:bx1][mask]
        mu_t = 255.0 * target.mean() if target.size else float(target_luminance)
        mu_b = 255.0 * surround.mean()
        contrasts.append(abs(mu_t - mu_b) / 255.0)
    if clipped:
        warnings.warn("surround box clipped at the frame border", stacklevel=2)
    if not contrasts:
        raise InvalidParameterError("no frames matched the ground truth")
    return float(np.mean(contrasts))


def sequence_weber_contrast(cfg: SynthConfig, d_px: int = 10,
                            max_frames: int = 50) -> float:
    """Measured Weber contrast of a config's own sequence (first max_frames frames)."""
    cfg = replace(cfg, duration_frames=min(cfg.duration_frames, max_frames))
    frames, gt = generate_sequence(cfg)
    return weber_contrast(cfg.target_luminance, frames, gt, d_px=d_px,
                          target_width=cfg.target_width, target_height=cfg.target_height)


def path_background_mean(cfg: SynthConfig, d_px: int = 10) -> float:
    """Mean 8-bit background intensity of the rows the target's surround sweeps."""
    bg = resolve_background(cfg)
    y0 = max(0, int(math.floor(cfg.target_y - cfg.target_height / 2 - d_px)))
    y1 = min(cfg.height, int(math.ceil(cfg.target_y + cfg.target_height / 2 + d_px)))
    return float(bg[y0:y1, :].mean() * 255.0)


def luminance_for_contrast(cfg: SynthConfig, contrast: float, d_px: int = 10) -> float:
    """Target luminance realizing a requested Weber contrast against cfg's background.

    Dark targets only: luminance = surround mean - 255*contrast, clipped at 0,
    so requested contrasts beyond the background's brightness saturate.
    """
    if not (0.0 <= contrast <= 1.0):
        raise InvalidParameterError(f"contrast must be in [0,1], got {contrast!r}")
    return float(np.clip(path_background_mean(cfg, d_px) - 255.0 * contrast, 0.0, 255.0))


def write_sequence(out_dir, cfg: SynthConfig) -> Path:
    """Render a config to frame_%06d.pgm files plus gt.csv and config.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frames, gt = generate_sequence(cfg)
    for t, frame in enumerate(frames):
        write_pgm(out_dir / f"frame_{t:06d}.pgm", frame)
    write_csv(out_dir / "gt.csv", ["frame", "cx", "cy"],
              [(g.frame_index, repr(g.cx), repr(g.cy)) for g in gt])
    with open(out_dir / "config.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
        fh.write("\n")
    return out_dir
