"""Dynamic time warping 1-nearest-neighbour baseline on symbol sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import AlphabetMismatchError, EmptyInputError, EmptyTemplateSetError, InvalidInputError
from .hmm import ObsSeq
from .quantizer import QuantizerGrid

COSTS = ("euclidean", "mismatch")


@numba.njit(cache=True)
def _dtw(a, b, cost):
    n, m = a.shape[0], b.shape[0]
    D = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            c = cost[a[i], b[j]]
            if i == 0 and j == 0:
                D[i, j] = c
            elif i == 0:
                D[i, j] = c + D[i, j - 1]
            elif j == 0:
                D[i, j] = c + D[i - 1, j]
            else:
                best = D[i - 1, j - 1]
                if D[i - 1, j] < best:
                    best = D[i - 1, j]
                if D[i, j - 1] < best:
                    best = D[i, j - 1]
                D[i, j] = c + best
    return D[n - 1, m - 1]


def symbol_costs(grid: QuantizerGrid, metric: str = "euclidean") -> np.ndarray:
    """``N x N`` local cost between symbols (0-based indices)."""
    if metric == "euclidean":
        V = grid.vectors
        return np.linalg.norm(V[:, None, :] - V[None, :, :], axis=2)
    if metric == "mismatch":
        return 1.0 - np.eye(grid.size)
    raise InvalidInputError(f"unknown DTW cost {metric!r}; expected one of {COSTS}")


def dtw_distance(a: ObsSeq, b: ObsSeq, grid: QuantizerGrid, metric: str = "euclidean") -> float:
    """Unnormalized cumulative DTW cost with the symmetric three-step pattern."""
    return _distance(a, b, grid, symbol_costs(grid, metric))


def _distance(a, b, grid, cost):
    if len(a) == 0 or len(b) == 0:
        raise EmptyInputError("DTW needs nonempty sequences")
    if a.alphabet_size != grid.size or b.alphabet_size != grid.size:
        raise AlphabetMismatchError("sequences must use the grid's alphabet")
    return float(_dtw(a.index, b.index, cost))


@dataclass(frozen=True, eq=False)
class DtwTemplateSet:
    templates: tuple  # of (label, ObsSeq)
    grid: QuantizerGrid
    metric: str = "euclidean"

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple((str(l), y) for l, y in self.templates))
        object.__setattr__(self, "_cost", symbol_costs(self.grid, self.metric))


def dtw_classify(ts: DtwTemplateSet, y: ObsSeq):
    """Label of the nearest template and its distance; ties go to the earliest."""
    if not ts.templates:
        raise EmptyTemplateSetError("no DTW templates")
    best_label, best = None, np.inf
    for label, tpl in ts.templates:
        d = _distance(y, tpl, ts.grid, ts._cost)
        if d < best:
            best_label, best = label, d
    return best_label, best
