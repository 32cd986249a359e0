"""Discrete-observation HMMs with point parameters.

Conventions follow column-stochastic matrices: ``A[i, j] = p(x_{t+1}=i | x_t=j)``
and ``C[i, j] = p(y_t=i | x_t=j)``. Observed symbols are 1-based; arrays are
indexed with ``symbol - 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphabetMismatchError,
    EmptyInputError,
    InvalidDimensionsError,
    InvalidInputError,
    InvalidLengthError,
    TooLargeError,
)

STOCHASTIC_TOL = 1e-9
BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class ObsSeq:
    """Nonempty sequence of symbols drawn from ``1..alphabet_size``."""

    symbols: tuple
    alphabet_size: int

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        if not syms:
            raise EmptyInputError("observation sequence must be nonempty")
        if self.alphabet_size < 1:
            raise InvalidInputError("alphabet_size must be positive")
        bad = [s for s in syms if not 1 <= s <= self.alphabet_size]
        if bad:
            raise InvalidInputError(
                f"symbols {bad[:5]} outside alphabet 1..{self.alphabet_size}"
            )
        object.__setattr__(self, "symbols", syms)

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    @property
    def index(self) -> np.ndarray:
        """Zero-based symbol indices."""
        return np.asarray(self.symbols, dtype=np.intp) - 1


@dataclass(frozen=True, eq=False)
class HmmPointParams:
    """Point-estimate HMM parameters ``(A, C, pi)``.

    With ``stochastic=False`` columns may sum to less than one, which is the
    case for the geometric-mean parameters used during variational learning.
    """

    A: np.ndarray
    C: np.ndarray
    pi: np.ndarray
    stochastic: bool = True

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        C = np.array(self.C, dtype=float)
        pi = np.array(self.pi, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidDimensionsError(f"A must be square, got shape {A.shape}")
        M = A.shape[0]
        if C.ndim != 2 or C.shape[1] != M:
            raise InvalidDimensionsError(f"C must be N x {M}, got shape {C.shape}")
        if pi.shape != (M,):
            raise InvalidDimensionsError(f"pi must have length {M}, got shape {pi.shape}")
        for name, arr in (("A", A), ("C", C), ("pi", pi)):
            if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0 + STOCHASTIC_TOL:
                raise InvalidInputError(f"{name} entries must lie in [0, 1]")
        sums = np.concatenate([A.sum(axis=0), C.sum(axis=0), [pi.sum()]])
        if self.stochastic:
            if np.any(np.abs(sums - 1.0) > STOCHASTIC_TOL):
                raise InvalidInputError("stochastic parameters need columns summing to 1")
        elif np.any(sums > 1.0 + STOCHASTIC_TOL):
            raise InvalidInputError("column sums may not exceed 1")
        for arr in (A, C, pi):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "pi", pi)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.C.shape[0]

    def permuted(self, perm) -> HmmPointParams:
        """Relabel hidden states: new state ``k`` is old state ``perm[k]``."""
        perm = np.asarray(perm)
        return HmmPointParams(
            self.A[np.ix_(perm, perm)], self.C[:, perm], self.pi[perm], self.stochastic
        )


@dataclass(frozen=True, eq=False)
class FilterState:
    """One-step-ahead state of the forward filter.

    ``predictive`` is ``p(x_t | y_{1:t-1})`` normalized to sum to one. Any
    probability mass lost by sub-stochastic parameters is carried in
    ``log_scale`` and charged to the next observation.
    """

    predictive: np.ndarray
    t: int = 0
    log_scale: float = 0.0


def _check_alphabet(y: ObsSeq, params: HmmPointParams):
    if y.alphabet_size != params.n_symbols:
        raise AlphabetMismatchError(
            f"sequence alphabet {y.alphabet_size} != model alphabet {params.n_symbols}"
        )


def forward_loglik(y: ObsSeq, params: HmmPointParams) -> float:
    """Log evidence ``log p(y | params)`` via the scaled forward recursion.

    Returns ``-inf`` when the sequence is impossible under the model.
    """
    _check_alphabet(y, params)
    A, C = params.A, params.C
    obs = y.index
    alpha = params.pi * C[obs[0]]
    total = 0.0
    for t in range(len(obs)):
        if t > 0:
            alpha = C[obs[t]] * (A @ alpha)
        c = alpha.sum()
        if c <= 0.0:
            return -math.inf
        total += math.log(c)
        alpha = alpha / c
    return total


def initial_filter_state(params: HmmPointParams) -> FilterState:
    mass = params.pi.sum()
    if mass <= 0.0:
        raise InvalidInputError("initial distribution has no mass")
    return FilterState(params.pi / mass, 0, math.log(mass))


def filter_step(state: FilterState, y_t: int, params: HmmPointParams):
    """Advance the filter by one symbol.

    Returns ``(next_state, log p(y_t | y_{1:t-1}))``. An impossible symbol
    yields ``-inf`` and resets the predictive distribution to uniform.
    """
    if not 1 <= y_t <= params.n_symbols:
        raise AlphabetMismatchError(f"symbol {y_t} outside alphabet 1..{params.n_symbols}")
    joint = params.C[y_t - 1] * state.predictive
    c = joint.sum()
    M = params.n_states
    if c <= 0.0:
        return FilterState(np.full(M, 1.0 / M), state.t + 1, 0.0), -math.inf
    step = math.log(c) + state.log_scale
    pred = params.A @ (joint / c)
    mass = pred.sum()
    if mass <= 0.0:
        return FilterState(np.full(M, 1.0 / M), state.t + 1, 0.0), step
    return FilterState(pred / mass, state.t + 1, math.log(mass)), step


def sample_sequence(params: HmmPointParams, T: int, seed) -> ObsSeq:
    """Ancestral sample of ``T`` observations; deterministic given ``seed``."""
    if T < 1:
        raise InvalidLengthError(f"sequence length must be >= 1, got {T}")
    if not params.stochastic:
        raise InvalidInputError("sampling requires stochastic parameters")
    rng = np.random.default_rng(seed)
    M, N = params.n_states, params.n_symbols
    out = np.empty(T, dtype=int)
    x = rng.choice(M, p=params.pi)
    for t in range(T):
        if t > 0:
            x = rng.choice(M, p=params.A[:, x])
        out[t] = rng.choice(N, p=params.C[:, x])
    return ObsSeq(out + 1, N)


def brute_force_loglik(y: ObsSeq, params: HmmPointParams) -> float:
    """Log evidence by explicit summation over every hidden path.

    Test oracle only; refuses problems with more than ``BRUTE_FORCE_LIMIT``
    paths.
    """
    _check_alphabet(y, params)
    M, T = params.n_states, len(y)
    if M**T > BRUTE_FORCE_LIMIT:
        raise TooLargeError(f"{M}^{T} paths exceeds the enumeration limit")
    obs = y.index
    total = 0.0
    for path in itertools.product(range(M), repeat=T):
        p = params.pi[path[0]] * params.C[obs[0], path[0]]
        for t in range(1, T):
            p *= params.A[path[t], path[t - 1]] * params.C[obs[t], path[t]]
        total += p
    return math.log(total) if total > 0.0 else -math.inf
