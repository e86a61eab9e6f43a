"""Scoring, ROC curves, and the tuning / sensitivity experiment drivers.

Detections are matched to ground truth per frame by greedy nearest-neighbor
within a Euclidean radius (ties to the higher score), giving detection rate
D_R = TP / targets and false alarm rate F_A = FP / images.  ROC curves come
from extracting response maxima once per frame and re-thresholding them for
each lambda, so rates are monotone in the threshold by construction.

Because the detector's OFF channel carries a causal delay, the response map
at frame t localizes the target where it sat one delay mode (tau3 ms) in the
past. The experiment drivers therefore shift ground-truth time stamps by
ModelParams.response_latency_frames before per-frame matching; without the
shift a fast target outruns its own detection by more than the match radius.

Tuning curves report the mean response at the (latency-compensated)
ground-truth pixel across post-warm-up frames for a swept stimulus
parameter, normalized to peak 1.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError
from .pipeline import Detection, ModelParams, local_maxima, run_sequence
from .synth import SynthConfig, generate_sequence, luminance_for_contrast

DEFAULT_MATCH_RADIUS = 5.0


@dataclass
class MatchResult:
    true_positives: int
    actual_targets: int
    false_positives: int
    n_images: int


@dataclass
class RocPoint:
    lam: float
    d_r: float
    f_a: float


@dataclass
class TuningCurve:
    axis_name: str
    axis_values: list[float]
    responses: np.ndarray        # normalized so max = 1 (when any response > 0)
    raw_responses: np.ndarray = field(default=None, repr=False)
    label: str = ""


def _match_frame(scores, xs, ys, gts, radius: float) -> tuple[int, int]:
    """Greedy one-to-one matching for a single frame; returns (TP, FP)."""
    n = len(scores)
    matched = np.zeros(n, dtype=bool)
    tp = 0
    r2 = radius * radius
    for cx, cy in gts:
        if matched.all() and n:
            break
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        ok = (d2 <= r2) & ~matched
        idx = np.nonzero(ok)[0]
        if idx.size == 0:
            continue
        # nearest first, then higher score, then stable order
        best = idx[np.lexsort((idx, -scores[idx], d2[idx]))[0]]
        matched[best] = True
        tp += 1
    return tp, n - tp


def match_detections(dets, gt, radius_px: float = DEFAULT_MATCH_RADIUS) -> MatchResult:
    """Score per-frame detection lists against ground truth entries.

    dets is a sequence of per-frame Detection lists; each non-empty list is
    matched against the gt entries sharing its detections' frame_index. Every
    gt entry passed counts toward actual_targets, and every list (empty or
    not) counts as one evaluated image.
    """
    gt_by_frame: dict[int, list[tuple[float, float]]] = {}
    for g in gt:
        gt_by_frame.setdefault(g.frame_index, []).append((g.cx, g.cy))

    tp = fp = 0
    for frame_dets in dets:
        frame_dets = list(frame_dets)
        if frame_dets:
            frame_idx = frame_dets[0].frame_index
            scores = np.array([d.score for d in frame_dets])
            xs = np.array([float(d.x) for d in frame_dets])
            ys = np.array([float(d.y) for d in frame_dets])
            t, f = _match_frame(scores, xs, ys, gt_by_frame.get(frame_idx, []), radius_px)
            tp += t
            fp += f
    return MatchResult(
        true_positives=tp,
        actual_targets=sum(len(v) for v in gt_by_frame.values()),
        false_positives=fp,
        n_images=len(dets),
    )


def compute_rates(m: MatchResult) -> tuple[float, float]:
    """(detection rate, false alarm rate) = (TP / targets, FP / images)."""
    if m.actual_targets <= 0:
        raise InvalidParameterError("actual_targets must be > 0")
    if m.n_images <= 0:
        raise InvalidParameterError("n_images must be > 0")
    return m.true_positives / m.actual_targets, m.false_positives / m.n_images


def roc_sweep(q_maps, gt, lambdas, *, nms_radius: int = 5,
              match_radius: float = DEFAULT_MATCH_RADIUS,
              start_index: int = 0) -> list[RocPoint]:
    """One RocPoint per threshold, from response maps (or pre-extracted maxima).

    q_maps may be an iterable of 2-D response maps (frame start_index + i) or
    of (score, x, y) triple lists as produced by local_maxima. Maxima are
    extracted once per frame; each lambda then filters the same maxima sets.
    """
    lambdas = [float(l) for l in lambdas]
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise InvalidParameterError("lambdas must be strictly increasing")

    per_frame = []
    for item in q_maps:
        maxima = local_maxima(item, nms_radius) if isinstance(item, np.ndarray) else item
        arr = np.array(maxima, dtype=float).reshape(-1, 3)
        per_frame.append((arr[:, 0], arr[:, 1], arr[:, 2]))

    gt_by_frame: dict[int, list[tuple[float, float]]] = {}
    n_targets = 0
    for g in gt:
        if start_index <= g.frame_index < start_index + len(per_frame):
            gt_by_frame.setdefault(g.frame_index, []).append((g.cx, g.cy))
            n_targets += 1
    if n_targets == 0 or not per_frame:
        raise InvalidParameterError("no ground truth entries in the evaluated range")

    points = []
    for lam in lambdas:
        tp = fp = 0
        for i, (scores, xs, ys) in enumerate(per_frame):
            keep = scores > lam
            t, f = _match_frame(scores[keep], xs[keep], ys[keep],
                                gt_by_frame.get(start_index + i, []), match_radius)
            tp += t
            fp += f
        points.append(RocPoint(lam=lam, d_r=tp / n_targets, f_a=fp / len(per_frame)))
    return points


def rate_at_false_alarm(points: list[RocPoint], fa_target: float) -> float:
    """Detection rate at a given false alarm rate, linearly interpolated."""
    pts = sorted(points, key=lambda p: p.f_a)
    fas = np.array([p.f_a for p in pts])
    drs = np.array([p.d_r for p in pts])
    if fa_target <= fas[0]:
        return float(drs[0])
    if fa_target >= fas[-1]:
        return float(drs[-1])
    return float(np.interp(fa_target, fas, drs))


def default_warmup_frames(fps: float) -> int:
    """Evaluation warm-up: the first 200 ms of the stream."""
    return int(round(0.2 * fps))


def compensate_gt(gt, latency_frames: int):
    """Shift ground-truth time stamps onto the detector's delayed clock.

    The entry for stimulus frame k describes what the detector reports at
    frame k + latency, so matching compares detections at t with the target's
    position latency frames earlier.
    """
    from .synth import GroundTruthEntry

    return [GroundTruthEntry(frame_index=g.frame_index + latency_frames,
                             cx=g.cx, cy=g.cy) for g in gt]


def collect_run(cfg: SynthConfig, params: ModelParams, *, warmup_frames: int | None = None):
    """Run the detector over a config's sequence.

    Returns (per-frame maxima lists, latency-compensated gt, start index),
    with maxima covering post-warm-up frames only.
    """
    warmup = default_warmup_frames(cfg.fps) if warmup_frames is None else warmup_frames
    frames, gt = generate_sequence(cfg)
    maxima = []
    for t, result in enumerate(run_sequence(frames, params, compute_detections=False)):
        if t >= warmup:
            maxima.append(local_maxima(result.Q, params.nms_radius))
    return maxima, compensate_gt(gt, params.response_latency_frames), warmup


def gt_pixel_response(cfg: SynthConfig, params: ModelParams,
                      warmup_frames: int | None = None,
                      window_px: float = DEFAULT_MATCH_RADIUS) -> float:
    """Mean target response over post-warm-up frames.

    Per frame this is the max of Q along the target's motion track: a one-row
    window at the latency-compensated ground-truth pixel extending match-radius
    pixels left and right. The horizontal extent absorbs the residual
    velocity-dependent drift of the response blob (which trails along the
    motion axis only); keeping the window one row tall means tall stimuli are
    judged by their center-row response, where lateral inhibition acts.
    """
    warmup = default_warmup_frames(cfg.fps) if warmup_frames is None else warmup_frames
    frames, gt = generate_sequence(cfg)
    gt_by_frame = {g.frame_index: g
                   for g in compensate_gt(gt, params.response_latency_frames)}
    r = int(round(window_px))
    vals = []
    for t, result in enumerate(run_sequence(frames, params, compute_detections=False)):
        g = gt_by_frame.get(t)
        if t < warmup or g is None:
            continue
        h, w = result.Q.shape
        y = min(h - 1, max(0, int(round(g.cy))))
        x = min(w - 1, max(0, int(round(g.cx))))
        vals.append(result.Q[y, max(0, x - r):x + r + 1].max())
    if not vals:
        raise InvalidParameterError("no post-warm-up frames with ground truth")
    return float(np.mean(vals))


def _apply_axis(cfg: SynthConfig, axis: str, value: float) -> SynthConfig:
    if axis == "velocity":
        return replace(cfg, target_velocity=float(value))
    if axis == "width":
        return replace(cfg, target_width=int(value))
    if axis == "height":
        return replace(cfg, target_height=int(value))
    if axis == "weber":
        return replace(cfg, target_luminance=luminance_for_contrast(cfg, float(value)))
    raise InvalidParameterError(f"unknown tuning axis {axis!r}")


def _tuning_cell(args):
    cfg, axis, value, params, warmup = args
    return gt_pixel_response(_apply_axis(cfg, axis, value), params, warmup)


def _run_cells(cells, n_jobs: int):
    if n_jobs > 1 and len(cells) > 1:
        with multiprocessing.get_context("fork").Pool(min(n_jobs, len(cells))) as pool:
            return pool.map(_tuning_cell, cells)
    return [_tuning_cell(c) for c in cells]


def normalize_curve(raw: np.ndarray) -> np.ndarray:
    """Scale so the peak is exactly 1; negative responses clamp to 0."""
    raw = np.asarray(raw, dtype=float)
    peak = raw.max()
    if peak <= 0:
        return np.zeros_like(raw)
    return np.clip(raw / peak, 0.0, 1.0)


def tuning_sweep(axis: str, values, base: SynthConfig, params: ModelParams, *,
                 warmup_frames: int | None = None, n_jobs: int = 1,
                 label: str = "") -> TuningCurve:
    """Response curve over one stimulus axis (velocity, width, height, or weber).

    Each value renders its own sequence with every other stimulus parameter
    held at the base config; the response is the mean Q at the ground-truth
    pixel after warm-up, and the finished curve is normalized to peak 1.
    """
    values = [float(v) for v in values]
    if not values:
        raise InvalidParameterError("values must be non-empty")
    cells = [(base, axis, v, params, warmup_frames) for v in values]
    raw = np.array(_run_cells(cells, n_jobs))
    return TuningCurve(axis_name=axis, axis_values=values,
                       responses=normalize_curve(raw), raw_responses=raw, label=label)


SENSITIVITY_GRIDS = {
    "alpha": (0.1, 0.25, 0.5, 1.0, 2.0),
    "n4": (9, 12, 15, 18, 21),
    "tau4": (20.0, 25.0, 30.0, 35.0, 40.0),
}


def sensitivity_sweep(param: str, values, base: SynthConfig, params: ModelParams,
                      velocity_values, *, warmup_frames: int | None = None,
                      n_jobs: int = 1) -> list[TuningCurve]:
    """One velocity-tuning curve per feedback-parameter value.

    param is one of alpha, n4, tau4; every other model parameter stays at its
    default while the stimulus follows the base config.
    """
    if param not in SENSITIVITY_GRIDS:
        raise InvalidParameterError(f"param must be one of {sorted(SENSITIVITY_GRIDS)}")
    velocity_values = [float(v) for v in velocity_values]
    cells = []
    for value in values:
        p = replace(params, **{param: type(getattr(params, param))(value)})
        cells.extend((base, "velocity", v, p, warmup_frames) for v in velocity_values)
    flat = _run_cells(cells, n_jobs)
    curves = []
    for i, value in enumerate(values):
        raw = np.array(flat[i * len(velocity_values):(i + 1) * len(velocity_values)])
        curves.append(TuningCurve(
            axis_name="velocity", axis_values=velocity_values,
            responses=normalize_curve(raw), raw_responses=raw,
            label=f"{param}={value:g}"))
    return curves


def argmax_axis_value(curve: TuningCurve) -> float:
    """The swept value at which the curve peaks."""
    return curve.axis_values[int(np.argmax(curve.responses))]


def auto_lambda_grid(maxima_per_frame, count: int = 50) -> list[float]:
    """Log-spaced thresholds spanning the observed maxima scores."""
    scores = np.concatenate([
        np.array([m[0] for m in frame], dtype=float) if frame else np.empty(0)
        for frame in maxima_per_frame
    ]) if maxima_per_frame else np.empty(0)
    scores = scores[scores > 0]
    if scores.size == 0:
        raise InvalidParameterError("no positive response maxima; cannot build a grid")
    hi = float(scores.max())
    lo = max(float(scores.min()), hi * 1e-6)
    return list(np.geomspace(lo * 0.999, hi * 1.001, count))
