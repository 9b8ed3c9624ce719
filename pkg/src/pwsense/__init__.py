"""Passive Wi-Fi Doppler sensing: CAF, interference cancellation, CFAR, streaming."""

from .caf import CafSurface, caf_batched, caf_direct, num_batches
from .cancel import CleanConfig, NlmsConfig, clean, nlms_filter, self_ambiguity
from .core import DelayGrid, DopplerGrid, IqFrame, down_sample, slice_frame
from .detect import CfarConfig, Detection, ca_cfar, cfar_alpha
from .pipeline import PipelineConfig, StageStats, pipeline_latency, run_pipeline
from .record import DopplerRecord, EngineConfig, doppler_record
from .synth import (MotionModel, Reflector, Scene, WaveformSpec, apply_scene,
                    gen_waveform, motion_displacement)

__version__ = "0.1.0"

__all__ = [
    "CafSurface", "caf_batched", "caf_direct", "num_batches",
    "CleanConfig", "NlmsConfig", "clean", "nlms_filter", "self_ambiguity",
    "DelayGrid", "DopplerGrid", "IqFrame", "down_sample", "slice_frame",
    "CfarConfig", "Detection", "ca_cfar", "cfar_alpha",
    "PipelineConfig", "StageStats", "pipeline_latency", "run_pipeline",
    "DopplerRecord", "EngineConfig", "doppler_record",
    "MotionModel", "Reflector", "Scene", "WaveformSpec", "apply_scene", "gen_waveform",
    "motion_displacement",
]
