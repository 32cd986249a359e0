"""Orientation gesture recognition with Bayesian hidden Markov models."""

from .classifier import ClassRegistry, build_registry, classify, evaluate, register_class
from .dtw import DtwTemplateSet, dtw_classify, dtw_distance
from .geometry import Quat, arm_direction, compensate, palm_vector, quat_rotate
from .hmm import FilterState, HmmPointParams, ObsSeq, filter_step, forward_loglik, sample_sequence
from .quantizer import QuantizerGrid, default_grid, quantize, quantize_stream
from .streaming import KeyGestureDetector, LocalizedDetector, key_step, localized_step, run_stream
from .vb import DirichletHmm, VbConfig, expected_counts, learn_class, learn_shared_prior, vb_fit

__version__ = "0.1.0"

__all__ = [
    "ClassRegistry", "DirichletHmm", "DtwTemplateSet", "FilterState", "HmmPointParams",
    "KeyGestureDetector", "LocalizedDetector", "ObsSeq", "Quat", "QuantizerGrid", "VbConfig",
    "arm_direction", "build_registry", "classify", "compensate", "default_grid", "dtw_classify",
    "dtw_distance", "evaluate", "expected_counts", "filter_step", "forward_loglik", "key_step",
    "learn_class", "learn_shared_prior", "localized_step", "palm_vector", "quantize",
    "quantize_stream", "quat_rotate", "register_class", "run_stream", "sample_sequence", "vb_fit",
]
