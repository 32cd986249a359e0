"""Real-time detection on orientation and symbol streams.

Two detectors: a per-class localized log-likelihood with a forgetting
factor, and a key-gesture trigger that fires once the palm has pointed up
for long enough and is then turned back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from types import MappingProxyType

import numpy as np

from .classifier import ClassRegistry, classify
from .errors import InvalidInputError, NonMonotonicTimestampsError
from .geometry import Quat, compensate, palm_vector
from .hmm import filter_step, initial_filter_state
from .quantizer import quantize_stream

DEFAULT_GAMMA = 0.9
DEFAULT_SAMPLE_RATE_HZ = 6.7
DEFAULT_WINDOW_S = 3.0
TRIGGERED = "Triggered"


@dataclass(frozen=True, eq=False)
class LocalizedDetector:
    """Per-class running ``L_t = gamma * L_{t-1} + log p(y_t | y_{1:t-1})``.

    ``tracks`` maps each label to ``(L, FilterState)``.
    """

    gamma: float
    threshold: float
    tracks: MappingProxyType

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidInputError(f"gamma must be in [0, 1], got {self.gamma}")
        object.__setattr__(self, "tracks", MappingProxyType(dict(self.tracks)))

    @classmethod
    def start(cls, models: dict, gamma: float = DEFAULT_GAMMA, threshold: float = -math.inf):
        return cls(gamma, threshold, {k: (0.0, initial_filter_state(p)) for k, p in models.items()})

    def reset(self, models: dict, labels=None) -> LocalizedDetector:
        """Restart ``labels`` (default all) from ``L = 0`` and the prior state filter."""
        labels = self.tracks.keys() if labels is None else labels
        tracks = dict(self.tracks)
        for k in labels:
            tracks[k] = (0.0, initial_filter_state(models[k]))
        return replace(self, tracks=tracks)


def localized_update(L: float, step: float, gamma: float) -> float:
    # gamma * -inf stays -inf; avoid 0 * -inf = nan at gamma = 0
    return (gamma * L if gamma > 0 else 0.0) + step


def localized_step(det: LocalizedDetector, y_t: int, models: dict):
    """Feed one symbol to every class track.

    Returns ``(detector, scores, detections)`` with detections ordered by
    descending score.
    """
    tracks, scores = {}, {}
    for label, (L, state) in det.tracks.items():
        state, step = filter_step(state, y_t, models[label])
        L = localized_update(L, step, det.gamma)
        tracks[label] = (L, state)
        scores[label] = L
    hits = sorted((k for k, v in scores.items() if v > det.threshold), key=lambda k: -scores[k])
    return replace(det, tracks=tracks), scores, hits


def track_localized(symbols, det: LocalizedDetector, models: dict, reset_on_detect=True):
    """Run ``localized_step`` over a whole symbol stream.

    Returns a list of ``(t, scores, detections)``. A detected class restarts
    its track when ``reset_on_detect`` is set.
    """
    out = []
    for t, y in enumerate(symbols):
        det, s, hits = localized_step(det, int(y), models)
        out.append((t, s, hits))
        if hits and reset_on_detect:
            det = det.reset(models, hits)
    return out


@dataclass(frozen=True)
class KeyGestureDetector:
    """Palm-up key gesture detector.

    ``elapsed_s`` is ``None`` while idle and the accumulated palm-up time
    otherwise.
    """

    e_palm: tuple = (0.0, 1.0, 0.0)
    up: tuple = (0.0, 0.0, 1.0)
    cos_threshold: float = math.cos(math.radians(30.0))
    min_duration_s: float = 1.0
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    elapsed_s: float | None = None

    def __post_init__(self):
        if not 0.0 < self.cos_threshold < 1.0:
            raise InvalidInputError("cos_threshold must lie in (0, 1)")
        if not self.min_duration_s > 0:
            raise InvalidInputError("min_duration_s must be positive")
        if not self.sample_rate_hz > 0:
            raise InvalidInputError("sample_rate_hz must be positive")
        if self.elapsed_s is not None and self.elapsed_s < 0:
            raise InvalidInputError("elapsed_s must be nonnegative")
        for name in ("e_palm", "up"):
            v = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, tuple(float(c) for c in v / np.linalg.norm(v)))

    @property
    def is_up(self) -> bool:
        return self.elapsed_s is not None

    def palm_up(self, q_comp: Quat) -> bool:
        return float(np.dot(palm_vector(q_comp, self.e_palm), self.up)) > self.cos_threshold


def key_step(det: KeyGestureDetector, q_comp: Quat, dt_s: float):
    """Advance the key detector by one sample of duration ``dt_s``.

    Returns ``(detector, event)`` where ``event`` is ``TRIGGERED`` or ``None``.
    The event fires on the sample where the palm leaves the up position.
    """
    if not dt_s > 0:
        raise InvalidInputError(f"dt_s must be positive, got {dt_s}")
    if det.palm_up(q_comp):
        elapsed = (det.elapsed_s or 0.0) + dt_s
        return replace(det, elapsed_s=elapsed), None
    if det.is_up:
        fired = det.elapsed_s >= det.min_duration_s
        return replace(det, elapsed_s=None), TRIGGERED if fired else None
    return det, None


@dataclass(frozen=True, eq=False)
class StreamResult:
    time_s: float
    label: str
    scores: dict
    n_samples: int


def run_stream(
    stream,
    key_det: KeyGestureDetector,
    reg: ClassRegistry,
    window_s: float = DEFAULT_WINDOW_S,
    q_ref: Quat | None = None,
) -> list:
    """Key-gesture gated classification over ``(timestamp_s, Quat)`` samples.

    After each trigger, the samples in ``(t_trigger, t_trigger + window_s]``
    are quantized and classified; key detection resumes after the window.
    """
    stream = list(stream)
    times = [t for t, _ in stream]
    for i in range(1, len(times)):
        if not times[i] > times[i - 1]:
            raise NonMonotonicTimestampsError(
                f"timestamp {times[i]} at sample {i} does not follow {times[i - 1]}"
            )
    q_ref = Quat.identity() if q_ref is None else q_ref
    results = []
    det = replace(key_det, elapsed_s=None)
    i = 0
    while i < len(stream):
        t, q = stream[i]
        dt = t - times[i - 1] if i > 0 else 1.0 / det.sample_rate_hz
        det, event = key_step(det, compensate(q, q_ref), dt)
        i += 1
        if event != TRIGGERED:
            continue
        j = i
        while j < len(stream) and times[j] <= t + window_s:
            j += 1
        if j > i:
            y = quantize_stream([s for _, s in stream[i:j]], q_ref, reg.quantizer)
            label, scores = classify(reg, y)
            results.append(StreamResult(t, label, scores, j - i))
        i = j
        det = replace(det, elapsed_s=None)
    return results


def models_of(reg: ClassRegistry) -> dict:
    """Label -> expected-parameter HMM, as consumed by the localized detector."""
    return {label: m.point for label, m in reg.classes.items()}

