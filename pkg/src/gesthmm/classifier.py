"""Gesture class registry, recognition and recognition-rate evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np

from .errors import (
    AlphabetMismatchError,
    DuplicateLabelError,
    EmptyDatasetError,
    EmptyRegistryError,
    InvalidDimensionsError,
    MissingClassError,
)
from .hmm import HmmPointParams, ObsSeq, forward_loglik
from .quantizer import QuantizerGrid, default_grid
from .vb import (
    DEFAULT_STATES,
    DirichletHmm,
    VbConfig,
    dirichlet_mean,
    learn_class,
    learn_shared_prior,
    uninformative_prior,
)


@dataclass(frozen=True, eq=False)
class GestureClassModel:
    label: str
    posterior: DirichletHmm
    point: HmmPointParams = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "point", dirichlet_mean(self.posterior))


@dataclass(frozen=True, eq=False)
class ClassRegistry:
    """Immutable set of labelled class models sharing one learned prior.

    ``classes`` preserves registration order, which also breaks ties during
    classification.
    """

    shared_prior: DirichletHmm
    quantizer: QuantizerGrid = field(default_factory=default_grid)
    classes: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    def __post_init__(self):
        if self.quantizer.size != self.shared_prior.n_symbols:
            raise InvalidDimensionsError(
                f"grid has {self.quantizer.size} symbols, prior expects "
                f"{self.shared_prior.n_symbols}"
            )
        classes = dict(self.classes)
        for label, model in classes.items():
            if model.posterior.hA.shape != self.shared_prior.hA.shape or (
                model.posterior.hC.shape != self.shared_prior.hC.shape
            ):
                raise InvalidDimensionsError(f"class {label!r} has inconsistent dimensions")
        object.__setattr__(self, "classes", MappingProxyType(classes))

    @property
    def K(self) -> int:
        return len(self.classes)

    @property
    def labels(self) -> list:
        return list(self.classes)

    def with_class(self, model: GestureClassModel) -> ClassRegistry:
        if model.label in self.classes:
            raise DuplicateLabelError(f"class {model.label!r} already registered")
        return replace(self, classes=MappingProxyType({**self.classes, model.label: model}))


def register_class(reg: ClassRegistry, label: str, class_data, cfg: VbConfig = VbConfig()):
    """Return a new registry with ``label`` trained from ``class_data``."""
    if label in reg.classes:
        raise DuplicateLabelError(f"class {label!r} already registered")
    class_data = list(class_data)
    if not class_data:
        raise EmptyDatasetError(f"no training data for class {label!r}")
    posterior = learn_class(reg.shared_prior, class_data, cfg)
    return reg.with_class(GestureClassModel(label, posterior))


def scores(reg: ClassRegistry, y: ObsSeq) -> dict:
    """Log evidence of ``y`` under each class's expected parameters."""
    if reg.K == 0:
        raise EmptyRegistryError("no classes registered")
    if y.alphabet_size != reg.shared_prior.n_symbols:
        raise AlphabetMismatchError(
            f"sequence alphabet {y.alphabet_size} != registry alphabet "
            f"{reg.shared_prior.n_symbols}"
        )
    return {label: forward_loglik(y, m.point) for label, m in reg.classes.items()}


def classify(reg: ClassRegistry, y: ObsSeq):
    """Most probable class under a uniform class prior.

    Returns ``(label, scores)``; ties go to the earliest registered class.
    """
    s = scores(reg, y)
    best = None
    for label, v in s.items():
        if best is None or v > s[best]:
            best = label
    return best, s


def similarity_check(reg: ClassRegistry, y: ObsSeq, threshold: float) -> list:
    """Labels whose evidence for ``y`` exceeds ``threshold``, best first.

    An empty result means ``y`` is distinct enough to become a new class.
    """
    ranked = sorted(scores(reg, y).items(), key=lambda kv: -kv[1])
    return [label for label, v in ranked if v > threshold]


@dataclass(frozen=True, eq=False)
class EvalResult:
    rate: float
    labels: list
    confusion: np.ndarray  # confusion[true, predicted]
    predictions: list

    @property
    def n_correct(self) -> int:
        return int(np.trace(self.confusion))


def recognition_rate(confusion) -> float:
    """Correctly classified over total samples."""
    confusion = np.asarray(confusion)
    return float(np.trace(confusion) / confusion.sum())


def build_registry(
    train: dict,
    prior_data=None,
    cfg: VbConfig = VbConfig(),
    n_states: int = DEFAULT_STATES,
    grid: QuantizerGrid | None = None,
) -> ClassRegistry:
    """Learn (or default) the shared prior, then register every class in ``train``."""
    if not train:
        raise EmptyDatasetError("no training classes")
    N = next(iter(y for ys in train.values() for y in ys)).alphabet_size
    if prior_data:
        prior = learn_shared_prior(prior_data, n_states, cfg)
    else:
        prior = uninformative_prior(n_states, N, cfg.alpha0)
    reg = ClassRegistry(prior, grid if grid is not None else _grid_for(N))
    for label, data in train.items():
        reg = register_class(reg, label, data, cfg)
    return reg


def _grid_for(N: int) -> QuantizerGrid:
    grid = default_grid()
    if grid.size == N:
        return grid
    # no geometric meaning needed for symbol-only data; spread points on a circle
    ang = 2 * np.pi * np.arange(N) / N
    return QuantizerGrid(
        tuple((float(np.cos(a)), float(np.sin(a)), 0.0) for a in ang), grid_id=f"circle{N}"
    )


def confusion_matrix(labels: list, truth: list, predicted: list) -> np.ndarray:
    pos = {label: i for i, label in enumerate(labels)}
    conf = np.zeros((len(labels), len(labels)), dtype=int)
    for t, p in zip(truth, predicted):
        conf[pos[t], pos[p]] += 1
    return conf


def evaluate(
    train: dict,
    test: list,
    prior_data=None,
    cfg: VbConfig = VbConfig(),
    n_states: int = DEFAULT_STATES,
) -> EvalResult:
    """Train on ``train`` (label -> sequences) and score ``test`` (label, seq) pairs.

    ``prior_data`` of ``None`` or empty uses the uninformative prior.
    """
    if not test:
        raise EmptyDatasetError("empty test set")
    missing = sorted({label for label, _ in test} - set(train))
    if missing:
        raise MissingClassError(f"test labels without training data: {missing}")
    reg = build_registry(train, prior_data, cfg, n_states)
    predicted = [classify(reg, y)[0] for _, y in test]
    truth = [label for label, _ in test]
    conf = confusion_matrix(reg.labels, truth, predicted)
    return EvalResult(recognition_rate(conf), reg.labels, conf, predicted)
