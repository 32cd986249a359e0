"""Repeated random-split comparison of the HMM, HMM-prior and DTW classifiers.

Every repetition draws one split per class and evaluates all arms on it, so
the arms are paired. The learned prior is built from one randomly chosen
training recording of each class.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .classifier import confusion_matrix, evaluate, recognition_rate
from .dtw import DtwTemplateSet, dtw_classify
from .errors import InsufficientDataError, InvalidSpecError
from .quantizer import QuantizerGrid, default_grid
from .vb import DEFAULT_STATES, VbConfig

log = logging.getLogger(__name__)

POLICIES = ("learned", "uninformative")
ARM_NAMES = {"uninformative": "hmm", "learned": "hmm-prior", "dtw": "dtw"}
CSV_COLUMNS = ("repetition", "arm", "prior_policy", "rate", "n_correct", "n_test")


@dataclass(frozen=True)
class ExperimentSpec:
    classes: tuple | None = None  # None: every class in the dataset
    train_per_class: int = 5
    test_per_class: int = 15
    repetitions: int = 6
    prior_policies: tuple = POLICIES
    seed: int = 0
    vb: VbConfig = field(default_factory=VbConfig)
    n_states: int = DEFAULT_STATES
    run_dtw: bool = True
    # drop the prior-building recording from the class training set
    exclude_prior_recordings: bool = False
    dtw_metric: str = "euclidean"

    def __post_init__(self):
        if self.train_per_class < 1 or self.test_per_class < 1 or self.repetitions < 1:
            raise InvalidSpecError("counts and repetitions must be >= 1")
        bad = set(self.prior_policies) - set(POLICIES)
        if bad:
            raise InvalidSpecError(f"unknown prior policies {sorted(bad)}")
        if self.exclude_prior_recordings and self.train_per_class < 2:
            raise InvalidSpecError("excluding prior recordings needs train_per_class >= 2")


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    rows: list  # dicts keyed by CSV_COLUMNS

    def rates(self, arm: str) -> np.ndarray:
        return np.array([r["rate"] for r in self.rows if r["arm"] == arm])

    @property
    def arms(self) -> list:
        return list(dict.fromkeys(r["arm"] for r in self.rows))

    def summary(self) -> dict:
        """Per arm: mean, sample standard deviation and standard error."""
        out = {}
        for arm in self.arms:
            x = self.rates(arm)
            sd = float(x.std(ddof=1)) if len(x) > 1 else 0.0
            out[arm] = {"mean": float(x.mean()), "std": sd, "sem": sd / math.sqrt(len(x)), "n": len(x)}
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r[c] if c != "rate" else repr(r[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("arm", "mean", "std", "sem", "n"))
        for arm, s in self.summary().items():
            w.writerow((arm, repr(s["mean"]), repr(s["std"]), repr(s["sem"]), s["n"]))
        return buf.getvalue()


def split(by_class: dict, spec: ExperimentSpec, rng):
    """One random train/test split plus the per-class prior recordings."""
    train, test, prior = {}, [], []
    need = spec.train_per_class + spec.test_per_class
    for label, seqs in by_class.items():
        if len(seqs) < need:
            raise InsufficientDataError(
                f"class {label!r} has {len(seqs)} recordings, need {need}"
            )
        order = rng.permutation(len(seqs))
        tr = [seqs[i] for i in order[: spec.train_per_class]]
        test += [(label, seqs[i]) for i in order[spec.train_per_class : need]]
        pick = int(rng.integers(len(tr)))
        prior.append(tr[pick])
        if spec.exclude_prior_recordings:
            tr = tr[:pick] + tr[pick + 1 :]
        train[label] = tr
    return train, test, prior


def _dtw_rate(train, test, grid, metric):
    templates = DtwTemplateSet(
        tuple((label, y) for label, ys in train.items() for y in ys), grid, metric
    )
    predicted = [dtw_classify(templates, y)[0] for _, y in test]
    conf = confusion_matrix(list(train), [l for l, _ in test], predicted)
    return recognition_rate(conf), int(np.trace(conf))


def run_experiment(by_class: dict, spec: ExperimentSpec, grid: QuantizerGrid | None = None):
    """Evaluate every arm on ``spec.repetitions`` seeded random splits.

    ``by_class`` maps label -> list of sequences.
    """
    if spec.classes is not None:
        missing = [c for c in spec.classes if c not in by_class]
        if missing:
            raise InsufficientDataError(f"dataset lacks classes {missing}")
        by_class = {c: by_class[c] for c in spec.classes}
    if not by_class:
        raise InsufficientDataError("dataset has no classes")
    N = next(iter(by_class.values()))[0].alphabet_size
    grid = grid if grid is not None else default_grid()
    if spec.run_dtw and grid.size != N:
        raise InvalidSpecError(f"grid has {grid.size} symbols but data uses {N}")
    rows = []
    for rep, ss in enumerate(np.random.SeedSequence(spec.seed).spawn(spec.repetitions)):
        rng = np.random.default_rng(ss)
        train, test, prior = split(by_class, spec, rng)
        for policy in spec.prior_policies:
            res = evaluate(
                train, test, prior if policy == "learned" else None, spec.vb, spec.n_states
            )
            rows.append(_row(rep, ARM_NAMES[policy], policy, res.rate, res.n_correct, len(test)))
        if spec.run_dtw:
            rate, correct = _dtw_rate(train, test, grid, spec.dtw_metric)
            rows.append(_row(rep, "dtw", "", rate, correct, len(test)))
        log.info("repetition %d: %s", rep, {r["arm"]: r["rate"] for r in rows if r["repetition"] == rep})
    return ExperimentResult(rows)


def _row(rep, arm, policy, rate, correct, n):
    return {
        "repetition": rep,
        "arm": arm,
        "prior_policy": policy,
        "rate": float(rate),
        "n_correct": int(correct),
        "n_test": int(n),
    }
