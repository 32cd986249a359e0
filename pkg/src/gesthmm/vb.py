"""Variational Bayesian learning of Dirichlet hyperparameters over HMMs.

The posterior over ``(A, C, pi)`` is kept in mean-field form, one Dirichlet
per column of ``A`` and ``C`` plus one for ``pi``. Learning alternates a
forward-backward pass under the geometric-mean parameters with the
conjugate count update ``h_post = h_prior + expected counts``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from .errors import (
    AlphabetMismatchError,
    DegenerateSequenceError,
    EmptyDatasetError,
    InvalidDimensionsError,
    InvalidInputError,
)
from .hmm import HmmPointParams, ObsSeq

DEFAULT_STATES = 6


@dataclass(frozen=True, eq=False)
class DirichletHmm:
    """Dirichlet hyperparameters for every column of ``A``, ``C`` and for ``pi``.

    Column ``j`` of ``hA`` parameterizes the transitions out of state ``j``;
    column ``j`` of ``hC`` the emissions of state ``j``.
    """

    hA: np.ndarray
    hC: np.ndarray
    hpi: np.ndarray

    def __post_init__(self):
        hA = np.array(self.hA, dtype=float)
        hC = np.array(self.hC, dtype=float)
        hpi = np.array(self.hpi, dtype=float)
        if hA.ndim != 2 or hA.shape[0] != hA.shape[1]:
            raise InvalidDimensionsError(f"hA must be square, got {hA.shape}")
        M = hA.shape[0]
        if hC.ndim != 2 or hC.shape[1] != M:
            raise InvalidDimensionsError(f"hC must have {M} columns, got {hC.shape}")
        if hpi.shape != (M,):
            raise InvalidDimensionsError(f"hpi must have length {M}, got {hpi.shape}")
        for name, arr in (("hA", hA), ("hC", hC), ("hpi", hpi)):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
                raise InvalidInputError(f"{name} entries must be positive and finite")
            arr.setflags(write=False)
        object.__setattr__(self, "hA", hA)
        object.__setattr__(self, "hC", hC)
        object.__setattr__(self, "hpi", hpi)

    @property
    def n_states(self) -> int:
        return self.hA.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.hC.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DirichletHmm):
            return NotImplemented
        return (
            np.array_equal(self.hA, other.hA)
            and np.array_equal(self.hC, other.hC)
            and np.array_equal(self.hpi, other.hpi)
        )

    def __add__(self, stats: SufficientStats) -> DirichletHmm:
        return DirichletHmm(self.hA + stats.WA, self.hC + stats.WC, self.hpi + stats.wpi)

    def max_abs_diff(self, other: DirichletHmm) -> float:
        return float(
            max(
                np.abs(self.hA - other.hA).max(),
                np.abs(self.hC - other.hC).max(),
                np.abs(self.hpi - other.hpi).max(),
            )
        )

    def permuted(self, perm) -> DirichletHmm:
        perm = np.asarray(perm)
        return DirichletHmm(self.hA[np.ix_(perm, perm)], self.hC[:, perm], self.hpi[perm])


@dataclass(frozen=True, eq=False)
class SufficientStats:
    """Posterior-expected counts: initial state, transitions, emissions."""

    wpi: np.ndarray
    WA: np.ndarray
    WC: np.ndarray
    log_norm: float = 0.0

    def __add__(self, other: SufficientStats) -> SufficientStats:
        return SufficientStats(
            self.wpi + other.wpi,
            self.WA + other.WA,
            self.WC + other.WC,
            self.log_norm + other.log_norm,
        )

    @classmethod
    def zeros(cls, M: int, N: int) -> SufficientStats:
        return cls(np.zeros(M), np.zeros((M, M)), np.zeros((N, M)))


@dataclass(frozen=True)
class VbConfig:
    max_iters: int = 100
    tol: float = 1e-4
    alpha0: float = 1.0
    # relative spread of the symmetry-breaking perturbation; small values
    # leave the fit near the symmetric saddle for many iterations
    jitter: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive")
        if not self.alpha0 > 0:
            raise InvalidInputError("alpha0 must be positive")
        if not 0.0 <= self.jitter < 2.0:
            raise InvalidInputError("jitter must lie in [0, 2)")


def uninformative_prior(M: int, N: int, alpha0: float = 1.0) -> DirichletHmm:
    """All hyperparameters equal to ``alpha0``."""
    if M < 1 or N < 1:
        raise InvalidDimensionsError(f"need M, N >= 1, got M={M}, N={N}")
    if not alpha0 > 0 or not math.isfinite(alpha0):
        raise InvalidDimensionsError(f"alpha0 must be positive and finite, got {alpha0}")
    return DirichletHmm(np.full((M, M), alpha0), np.full((N, M), alpha0), np.full(M, alpha0))


def dirichlet_mean(dh: DirichletHmm) -> HmmPointParams:
    """Expected parameters ``E[A], E[C], E[pi]`` under the Dirichlets."""
    return HmmPointParams(
        dh.hA / dh.hA.sum(axis=0),
        dh.hC / dh.hC.sum(axis=0),
        dh.hpi / dh.hpi.sum(),
    )


def _geometric(h: np.ndarray) -> np.ndarray:
    return np.exp(digamma(h) - digamma(h.sum(axis=0)))


def geometric_params(dh: DirichletHmm) -> HmmPointParams:
    """Geometric means ``exp E[log theta]``; columns sum to at most one."""
    return HmmPointParams(
        _geometric(dh.hA), _geometric(dh.hC), _geometric(dh.hpi), stochastic=False
    )


def expected_counts(y: ObsSeq, point: HmmPointParams) -> SufficientStats:
    """Forward-backward posterior marginals of ``q(x)``, summed into counts.

    ``q(x)`` is proportional to ``pi*_{x_1} prod A*_{x_{t+1} x_t} prod C*_{y_t x_t}``;
    ``point`` may be sub-stochastic. ``log_norm`` of the result is the log of
    the normalizer of ``q(x)``.
    """
    if y.alphabet_size != point.n_symbols:
        raise AlphabetMismatchError(
            f"sequence alphabet {y.alphabet_size} != model alphabet {point.n_symbols}"
        )
    A, C = point.A, point.C
    obs = y.index
    T, M = len(obs), point.n_states
    emit = C[obs]  # (T, M)

    alpha = np.empty((T, M))
    scale = np.empty(T)
    a = point.pi * emit[0]
    for t in range(T):
        if t > 0:
            a = emit[t] * (A @ alpha[t - 1])
        c = a.sum()
        if not c > 0.0:
            raise DegenerateSequenceError(f"q(x) has zero mass at step {t + 1}")
        scale[t] = c
        alpha[t] = a / c

    beta = np.empty((T, M))
    beta[-1] = 1.0
    for t in range(T - 2, -1, -1):
        beta[t] = A.T @ (emit[t + 1] * beta[t + 1]) / scale[t + 1]

    gamma = alpha * beta
    WC = np.zeros((point.n_symbols, M))
    np.add.at(WC, obs, gamma)
    if T > 1:
        # xi[t, i, j] = q(x_{t+1}=i, x_t=j)
        xi = (
            (emit[1:] * beta[1:] / scale[1:, None])[:, :, None]
            * A[None, :, :]
            * alpha[:-1, None, :]
        )
        WA = xi.sum(axis=0)
    else:
        WA = np.zeros((M, M))
    return SufficientStats(gamma[0].copy(), WA, WC, float(np.log(scale).sum()))


def _jittered(point: HmmPointParams, jitter: float, rng) -> HmmPointParams:
    def shake(arr):
        sums = arr.sum(axis=0)
        out = arr * (1.0 + jitter * rng.uniform(-0.5, 0.5, size=arr.shape))
        return out * (sums / out.sum(axis=0))

    return HmmPointParams(
        shake(point.A), shake(point.C), shake(point.pi), stochastic=False
    )


def _check_data(data, N: int):
    if not data:
        raise EmptyDatasetError("no training sequences")
    for y in data:
        if y.alphabet_size != N:
            raise AlphabetMismatchError(
                f"sequence alphabet {y.alphabet_size} != model alphabet {N}"
            )


def accumulate_counts(data, point: HmmPointParams) -> SufficientStats:
    total = SufficientStats.zeros(point.n_states, point.n_symbols)
    for y in data:
        total = total + expected_counts(y, point)
    return total


def vb_fit_trace(data, prior: DirichletHmm, cfg: VbConfig = VbConfig()):
    """Run variational learning and also return the per-iteration changes.

    Returns ``(posterior, deltas)`` where ``deltas[k]`` is the largest absolute
    hyperparameter change made by iteration ``k + 1``.
    """
    data = list(data)
    _check_data(data, prior.n_symbols)
    rng = np.random.default_rng(cfg.seed)
    post = prior
    deltas = []
    for it in range(cfg.max_iters):
        point = geometric_params(post)
        if it == 0 and cfg.jitter > 0:
            point = _jittered(point, cfg.jitter, rng)
        new = prior + accumulate_counts(data, point)
        deltas.append(new.max_abs_diff(post))
        post = new
        if deltas[-1] < cfg.tol:
            break
    return post, deltas


def vb_fit(data, prior: DirichletHmm, cfg: VbConfig = VbConfig()) -> DirichletHmm:
    """Variational posterior hyperparameters given ``data`` and ``prior``.

    Stops when no hyperparameter moves by ``cfg.tol`` or more, or after
    ``cfg.max_iters`` iterations.
    """
    return vb_fit_trace(data, prior, cfg)[0]


def learn_shared_prior(one_per_class, M: int = DEFAULT_STATES, cfg: VbConfig = VbConfig()):
    """Class-independent prior learned from a pooled set of sequences.

    Typically one sequence per class, starting from the uninformative prior.
    """
    data = list(one_per_class)
    if not data:
        raise EmptyDatasetError("no sequences to learn a shared prior from")
    N = data[0].alphabet_size
    return vb_fit(data, uninformative_prior(M, N, cfg.alpha0), cfg)


def learn_class(prior: DirichletHmm, class_data, cfg: VbConfig = VbConfig()) -> DirichletHmm:
    """Refine ``prior`` with examples of one class. No data returns ``prior``."""
    class_data = list(class_data)
    if not class_data:
        return prior
    return vb_fit(class_data, prior, cfg)
