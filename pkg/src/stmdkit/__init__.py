"""Streaming small-target motion detection with time-delay feedback.

A four-stage visual pipeline (spatial blur, temporal band-pass, half-wave
rectified ON / delayed OFF channels, feedback-modulated correlation with
lateral inhibition) that responds to small fast-moving targets against
cluttered moving backgrounds, plus a synthetic benchmark generator and an
evaluation harness for tuning-curve and ROC experiments.
"""

from .errors import InvalidParameterError, InvalidStateError
from .kernels import (
    DiscreteTemporalKernel,
    InhibitionKernel,
    SpatialKernel,
    TemporalHistory,
    bandpass_kernel,
    conv2_same,
    gamma_kernel,
    gaussian_kernel_2d,
    inhibition_kernel,
    temporal_apply,
)
from .pipeline import (
    Detection,
    DetectorState,
    FrameResult,
    ModelParams,
    detect,
    feedback_signal,
    lamina_step,
    lateral_inhibit,
    lobula_step,
    medulla_step,
    neighbor_sum,
    process_frame,
    retina_step,
    run_sequence,
)
from .synth import GroundTruthEntry, SynthConfig, generate_sequence, group_configs, weber_contrast
from .evaluate import (
    MatchResult,
    RocPoint,
    TuningCurve,
    compute_rates,
    match_detections,
    rate_at_false_alarm,
    roc_sweep,
    sensitivity_sweep,
    tuning_sweep,
)

__version__ = "0.1.0"
