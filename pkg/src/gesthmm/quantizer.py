"""Nearest-basis-vector quantization of arm directions.

Symbols are 1-based throughout the public API: ``quantize`` returns a value
in ``1..N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, InvalidInputError
from .geometry import Quat, arm_direction, compensate
from .hmm import ObsSeq

UNIT_TOLERANCE = 1e-6
# distances closer than this to the minimum count as a tie
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class QuantizerGrid:
    """Ordered set of ``N >= 2`` distinct unit basis vectors."""

    basis: tuple
    grid_id: str = "custom"
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vecs = np.array([np.asarray(b, dtype=float) for b in self.basis])
        if vecs.ndim != 2 or vecs.shape[1] != 3:
            raise InvalidInputError("basis vectors must be 3-dimensional")
        if len(vecs) < 2:
            raise InvalidInputError("a grid needs at least two basis vectors")
        norms = np.linalg.norm(vecs, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE):
            raise InvalidInputError("basis vectors must be unit length")
        for i in range(len(vecs)):
            for j in range(i + 1, len(vecs)):
                if np.linalg.norm(vecs[i] - vecs[j]) <= UNIT_TOLERANCE:
                    raise InvalidInputError(f"basis vectors {i + 1} and {j + 1} coincide")
        vecs.setflags(write=False)
        object.__setattr__(self, "basis", tuple(tuple(float(c) for c in b) for b in vecs))
        object.__setattr__(self, "_matrix", vecs)

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def vectors(self) -> np.ndarray:
        """Read-only ``(N, 3)`` array of basis vectors."""
        return self._matrix

    def vector(self, symbol: int) -> np.ndarray:
        return self._matrix[symbol - 1]


def default_grid() -> QuantizerGrid:
    """The six signed coordinate axes, ordered +x, -x, +y, -y, +z, -z."""
    return QuantizerGrid(
        basis=(
            (1.0, 0.0, 0.0),
            (-1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (0.0, -1.0, 0.0),
            (0.0, 0.0, 1.0),
            (0.0, 0.0, -1.0),
        ),
        grid_id="axes6",
    )


def quantize(d, grid: QuantizerGrid) -> int:
    """Index (1-based) of the basis vector nearest to direction ``d``.

    ``d`` is normalized first. Ties go to the lowest index.
    """
    d = np.asarray(d, dtype=float)
    n = np.linalg.norm(d)
    if n == 0.0 or not np.isfinite(n):
        raise InvalidInputError("direction must be a nonzero finite vector")
    dist = np.linalg.norm(grid.vectors - d / n, axis=1)
    return int(np.flatnonzero(dist <= dist.min() + TIE_TOLERANCE)[0]) + 1


def quantize_stream(quats, q_ref: Quat, grid: QuantizerGrid) -> ObsSeq:
    """Quantize raw orientation samples into a symbol sequence."""
    quats = list(quats)
    if not quats:
        raise EmptyInputError("cannot quantize an empty orientation stream")
    symbols = [quantize(arm_direction(compensate(q, q_ref)), grid) for q in quats]
    return ObsSeq(symbols, grid.size)
