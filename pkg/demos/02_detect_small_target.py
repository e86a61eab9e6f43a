"""Detecting a small dark target crossing a cluttered moving background.

Renders a short synthetic sequence (5x5 black square at 250 px/s over a
background panning at 150 px/s), streams it through the detector, and shows
where the strongest response lands relative to the known target position.

One subtlety worth seeing in the numbers: the detector's OFF channel delays
the luminance-decrease signal by 45 ms, so the response map localizes the
target where it was 45 frames ago (at 1000 fps). The evaluation helpers
compensate for this automatically; here we print both raw and compensated
distances to make the latency visible.
"""

import numpy as np

from stmdkit import ModelParams, SynthConfig, generate_sequence
from stmdkit.pipeline import run_sequence

cfg = SynthConfig(width=250, height=125, duration_frames=420,
                  target_start_x=15.0, target_y=62.0, seed=0)
params = ModelParams()
lat = params.response_latency_frames
print(f"response latency: {lat} frames at {params.fps:.0f} fps")

frames, gt = generate_sequence(cfg)
gt_now = {g.frame_index: g for g in gt}
gt_past = {g.frame_index + lat: g for g in gt}

print(f"\n{'frame':>6} {'argmax':>10} {'d(now)':>8} {'d(past)':>8}  detections")
raw_d, comp_d = [], []
for t, result in enumerate(run_sequence(frames, params)):
    if t < 250 or t % 40:
        continue
    y, x = np.unravel_index(result.Q.argmax(), result.Q.shape)
    g_now, g_past = gt_now[t], gt_past[t]
    d_now = np.hypot(x - g_now.cx, y - g_now.cy)
    d_past = np.hypot(x - g_past.cx, y - g_past.cy)
    raw_d.append(d_now)
    comp_d.append(d_past)
    n_strong = len(result.detections)
    print(f"{t:>6} {f'({x},{y})':>10} {d_now:>8.1f} {d_past:>8.1f}  {n_strong}")

print(f"\nmean distance to the target's current position:  {np.mean(raw_d):5.1f} px")
print(f"mean distance to its position {lat} frames earlier: {np.mean(comp_d):5.1f} px")
