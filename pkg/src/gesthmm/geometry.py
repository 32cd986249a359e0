"""Quaternion algebra and arm-direction extraction.

Quaternions are stored as ``(w, x, y, z)``. Vectors are plain numpy arrays
of shape ``(3,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Inputs further than this from unit norm are rejected rather than normalized.
NORM_TOLERANCE = 1e-3

SYNC_DIRECTION = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class Quat:
    """Unit quaternion ``w + xi + yj + zk``.

    The constructor renormalizes inputs whose norm is within
    ``NORM_TOLERANCE`` of one. Use :meth:`from_any` for arbitrary nonzero
    input.
    """

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        comps = (float(self.w), float(self.x), float(self.y), float(self.z))
        if not all(math.isfinite(c) for c in comps):
            raise InvalidInputError(f"non-finite quaternion {comps}")
        n = math.sqrt(sum(c * c for c in comps))
        if n == 0.0:
            raise InvalidInputError("zero quaternion has no rotation")
        if abs(n - 1.0) > NORM_TOLERANCE:
            raise InvalidInputError(
                f"quaternion norm {n:.6g} is not within {NORM_TOLERANCE} of 1"
            )
        for name, c in zip("wxyz", comps):
            object.__setattr__(self, name, c / n)

    @classmethod
    def from_any(cls, w, x, y, z) -> Quat:
        """Normalize any nonzero 4-vector into a unit quaternion."""
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n == 0.0 or not math.isfinite(n):
            raise InvalidInputError("cannot normalize zero or non-finite quaternion")
        return cls(w / n, x / n, y / n, z / n)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> Quat:
        axis = np.asarray(axis, dtype=float)
        n = np.linalg.norm(axis)
        if n == 0.0:
            raise InvalidInputError("rotation axis must be nonzero")
        s = math.sin(angle / 2.0) / n
        return cls(math.cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s)

    @classmethod
    def identity(cls) -> Quat:
        return cls(1.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def conjugate(self) -> Quat:
        return Quat(self.w, -self.x, -self.y, -self.z)

    # unit quaternion: inverse is the conjugate
    inverse = conjugate

    def __mul__(self, other: Quat) -> Quat:
        if not isinstance(other, Quat):
            return NotImplemented
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quat.from_any(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )


def quat_rotate(q: Quat, v) -> np.ndarray:
    """Rotate vector ``v`` by ``q``, i.e. the vector part of ``q v q^-1``."""
    v = np.asarray(v, dtype=float)
    u = np.array([q.x, q.y, q.z])
    # q v q* = v + 2w (u x v) + 2 u x (u x v)
    t = 2.0 * np.cross(u, v)
    return v + q.w * t + np.cross(u, t)


def compensate(q_raw: Quat, q_ref: Quat) -> Quat:
    """Express ``q_raw`` relative to the reference pose ``q_ref``."""
    return q_raw * q_ref.inverse()


def arm_direction(q_comp: Quat) -> np.ndarray:
    """Direction the arm points, starting from the sync pose ``(1, 0, 0)``."""
    d = quat_rotate(q_comp, SYNC_DIRECTION)
    return d / np.linalg.norm(d)


def palm_vector(q_comp: Quat, e_palm) -> np.ndarray:
    """Palm normal in the global frame, given its sensor-frame axis."""
    k = quat_rotate(q_comp, e_palm)
    return k / np.linalg.norm(k)
