"""LSTM-based receive equalizer for high-speed serial links.

The package simulates NRZ links over lossy or mismatched channels, trains a
stacked LSTM equalizer from scratch with backpropagation through time, runs
it clock by clock, and compares it with a classical FFE-DFE receiver using
eye-diagram and bit-error-rate measurements.
"""

from .baseline import Baseline, DfeTaps, FfeTaps, fit_baseline, run_baseline
from .channel import (
    ImpulseResponse,
    add_awgn,
    apply_channel,
    lossy_channel_per_ui,
    s21_to_impulse,
    synth_lossy_channel,
)
from .errors import (
    ConfigError,
    DataError,
    EqualizerError,
    FitError,
    ParseError,
    ShapeError,
    TrainingError,
    UnsupportedVersionError,
)
from .lstm import LstmStack, equalize_stream, stack_forward
from .metrics import EyeHistogram, EyeReport, accumulate_eye, ber, eye_metrics, render_eye
from .rom import load_model, save_model
from .signal import BitStream, LinkConfig, Waveform, generate_bits, modulate_nrz
from .touchstone import SParameterSet, parse_touchstone, read_touchstone
from .training import Dataset, TrainConfig, TrainReport, build_dataset, train

__version__ = "0.1.0"

__all__ = [
    "Baseline", "BitStream", "ConfigError", "DataError", "Dataset", "DfeTaps",
    "EqualizerError", "EyeHistogram", "EyeReport", "FfeTaps", "FitError",
    "ImpulseResponse", "LinkConfig", "LstmStack", "ParseError", "SParameterSet",
    "ShapeError", "TrainConfig", "TrainReport", "TrainingError",
    "UnsupportedVersionError", "Waveform", "accumulate_eye", "add_awgn",
    "apply_channel", "ber", "build_dataset", "equalize_stream", "eye_metrics",
    "fit_baseline", "generate_bits", "load_model", "lossy_channel_per_ui",
    "modulate_nrz", "parse_touchstone", "read_touchstone", "render_eye",
    "run_baseline", "s21_to_impulse", "save_model", "stack_forward",
    "synth_lossy_channel", "train",
]
