"""Rigid-transform algebra: unit quaternions and 6D poses.

Units are fixed package-wide: millimetres for lengths, radians for angles.
Rotations are stored as unit quaternions ``(w, x, y, z)`` with ``w >= 0``
and are renormalized after every composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _canonical(w, x, y, z):
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0 or not math.isfinite(n):
        raise ValueError("quaternion must have finite non-zero norm")
    if w < 0.0 or (w == 0.0 and next(c for c in (x, y, z) if c != 0.0) < 0.0):
        n = -n
    return (w / n, x / n, y / n, z / n)


@dataclass(frozen=True, init=False)
class Rotation:
    """A 3D rotation stored as a canonical unit quaternion."""

    w: float
    x: float
    y: float
    z: float

    def __init__(self, w=1.0, x=0.0, y=0.0, z=0.0):
        w, x, y, z = _canonical(float(w), float(x), float(y), float(z))
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def identity(cls) -> Rotation:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> Rotation:
        ax, ay, az = (float(v) for v in axis)
        n = math.sqrt(ax * ax + ay * ay + az * az)
        if n == 0.0:
            raise ValueError("rotation axis must be non-zero")
        s = math.sin(0.5 * angle) / n
        return cls(math.cos(0.5 * angle), ax * s, ay * s, az * s)

    @classmethod
    def from_matrix(cls, m) -> Rotation:
        m = np.asarray(m, dtype=float)
        tr = m[0, 0] + m[1, 1] + m[2, 2]
        # Shepperd's method: pivot on the largest diagonal term
        if tr > 0.0:
            s = 2.0 * math.sqrt(tr + 1.0)
            return cls(0.25 * s, (m[2, 1] - m[1, 2]) / s,
                       (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
        i = int(np.argmax([m[0, 0], m[1, 1], m[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = 2.0 * math.sqrt(1.0 + m[i, i] - m[j, j] - m[k, k])
        q = [0.0, 0.0, 0.0, 0.0]
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
        return cls(*q)

    @property
    def quat(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    def norm(self) -> float:
        return math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)

    def __mul__(self, other: Rotation) -> Rotation:
        if not isinstance(other, Rotation):
            return NotImplemented
        aw, ax, ay, az = self.quat
        bw, bx, by, bz = other.quat
        return Rotation(
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        )

    def inverse(self) -> Rotation:
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def rotate(self, v):
        """Rotate a 3-vector; returns a tuple of floats."""
        vx, vy, vz = v
        w, x, y, z = self.quat
        # v' = v + 2w (u x v) + 2 u x (u x v)
        cx = y * vz - z * vy
        cy = z * vx - x * vz
        cz = x * vy - y * vx
        ccx = y * cz - z * cy
        ccy = z * cx - x * cz
        ccz = x * cy - y * cx
        return (vx + 2.0 * (w * cx + ccx),
                vy + 2.0 * (w * cy + ccy),
                vz + 2.0 * (w * cz + ccz))

    def as_matrix(self) -> np.ndarray:
        w, x, y, z = self.quat
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])


@dataclass(frozen=True, init=False)
class Pose:
    """Rigid transform mapping points from a source frame into a target frame."""

    rotation: Rotation
    translation: tuple[float, float, float]

    def __init__(self, rotation: Rotation | None = None, translation=(0.0, 0.0, 0.0)):
        if rotation is None:
            rotation = Rotation.identity()
        t = tuple(float(v) for v in translation)
        if len(t) != 3:
            raise ValueError("translation must have three components")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> Pose:
        return cls()

    @classmethod
    def translate(cls, x: float, y: float, z: float) -> Pose:
        return cls(Rotation.identity(), (x, y, z))

    @classmethod
    def from_matrix(cls, m) -> Pose:
        m = np.asarray(m, dtype=float)
        return cls(Rotation.from_matrix(m[:3, :3]), m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation.as_matrix()
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other: Pose) -> Pose:
        return compose(self, other)


def rz(angle: float, translation=(0.0, 0.0, 0.0)) -> Pose:
    """Rotation about the z axis followed by ``translation``."""
    return Pose(Rotation.from_axis_angle((0.0, 0.0, 1.0), angle), translation)


def compose(a: Pose, b: Pose) -> Pose:
    """Return ``a ∘ b``: maps points from b's source frame into a's target frame."""
    rt = a.rotation.rotate(b.translation)
    ta = a.translation
    return Pose(a.rotation * b.rotation, (rt[0] + ta[0], rt[1] + ta[1], rt[2] + ta[2]))


def invert(p: Pose) -> Pose:
    r_inv = p.rotation.inverse()
    t = r_inv.rotate(p.translation)
    return Pose(r_inv, (-t[0], -t[1], -t[2]))


def transform_point(p: Pose, q) -> np.ndarray:
    """Return ``R q + t`` in millimetres."""
    r = p.rotation.rotate(q)
    t = p.translation
    return np.array([r[0] + t[0], r[1] + t[1], r[2] + t[2]])
