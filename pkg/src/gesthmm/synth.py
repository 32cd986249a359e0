"""Synthetic gesture datasets with known generating parameters.

Class HMMs are drawn from a master Dirichlet: emissions share a common
state-to-direction structure across classes (every class sees the same
quantizer), while transitions and initial states are class specific and
sparse. Sequences are then sampled from each class HMM.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidSpecError
from .hmm import HmmPointParams, sample_sequence
from .vb import DirichletHmm


@dataclass(frozen=True)
class SyntheticSpec:
    n_classes: int = 8
    n_states: int = 6
    n_symbols: int = 6
    min_len: int = 15
    max_len: int = 30
    per_class: int = 20
    seed: int = 0
    # master Dirichlet shape
    emission_noise: float = 0.5
    emission_strength: float = 20.0
    transition_noise: float = 0.1
    self_transition: float = 2.0
    initial_concentration: float = 0.2

    def __post_init__(self):
        if self.n_classes < 1 or self.n_states < 1 or self.n_symbols < 2:
            raise InvalidSpecError("need n_classes >= 1, n_states >= 1, n_symbols >= 2")
        if not 1 <= self.min_len <= self.max_len:
            raise InvalidSpecError("need 1 <= min_len <= max_len")
        if self.per_class < 1:
            raise InvalidSpecError("per_class must be >= 1")
        for name in ("emission_noise", "transition_noise", "initial_concentration"):
            if not getattr(self, name) > 0:
                raise InvalidSpecError(f"{name} must be positive")
        if self.emission_strength < 0 or self.self_transition < 0:
            raise InvalidSpecError("emission_strength and self_transition must be >= 0")


def master_prior(spec: SyntheticSpec) -> DirichletHmm:
    """The Dirichlet every class HMM is drawn from."""
    M, N = spec.n_states, spec.n_symbols
    hC = np.full((N, M), spec.emission_noise)
    hC[np.arange(M) % N, np.arange(M)] += spec.emission_strength
    hA = np.full((M, M), spec.transition_noise) + spec.self_transition * np.eye(M)
    hpi = np.full(M, spec.initial_concentration)
    return DirichletHmm(hA, hC, hpi)


def _draw_columns(rng, h):
    # gamma draws can underflow to exact zeros for tiny concentrations
    g = rng.gamma(h) + 1e-12
    return g / g.sum(axis=0)


def sample_class_params(master: DirichletHmm, rng) -> HmmPointParams:
    return HmmPointParams(
        _draw_columns(rng, master.hA),
        _draw_columns(rng, master.hC),
        _draw_columns(rng, master.hpi),
    )


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    spec: SyntheticSpec
    labels: list
    params: dict  # label -> HmmPointParams
    sequences: list  # (label, ObsSeq), grouped by class in label order

    def by_class(self) -> dict:
        out = {label: [] for label in self.labels}
        for label, y in self.sequences:
            out[label].append(y)
        return out


def class_label(k: int) -> str:
    return f"g{k + 1:02d}"


def generate(spec: SyntheticSpec) -> SyntheticDataset:
    """Deterministic (given ``spec.seed``) synthetic dataset."""
    root = np.random.SeedSequence(spec.seed)
    param_seed, seq_seed = root.spawn(2)
    rng = np.random.default_rng(param_seed)
    master = master_prior(spec)
    labels = [class_label(k) for k in range(spec.n_classes)]
    params = {label: sample_class_params(master, rng) for label in labels}
    len_rng = np.random.default_rng(seq_seed)
    seeds = seq_seed.spawn(spec.n_classes * spec.per_class)
    sequences = []
    for k, label in enumerate(labels):
        for r in range(spec.per_class):
            T = int(len_rng.integers(spec.min_len, spec.max_len + 1))
            sequences.append((label, sample_sequence(params[label], T, seeds[k * spec.per_class + r])))
    return SyntheticDataset(spec, labels, params, sequences)


def params_to_dict(p: HmmPointParams) -> dict:
    return {"A": p.A.T.tolist(), "C": p.C.T.tolist(), "pi": p.pi.tolist()}


def manifest(ds: SyntheticDataset) -> dict:
    """JSON-ready description of the true generating parameters."""
    return {
        "spec": asdict(ds.spec),
        "layout": "column-major: A[j] and C[j] are the distributions for hidden state j",
        "classes": [{"label": label, **params_to_dict(ds.params[label])} for label in ds.labels],
        "recordings": [
            {"index": i, "class_label": label, "length": len(y)}
            for i, (label, y) in enumerate(ds.sequences)
        ],
    }


def params_from_dict(d: dict) -> HmmPointParams:
    return HmmPointParams(np.array(d["A"]).T, np.array(d["C"]).T, np.array(d["pi"]))

