"""Small 3-vector helpers used by the simulator.

Vectors are plain float tuples: cheap, hashable, and JSON-friendly. The
simulator's scenes are tiny, so there is no need for numpy here.
"""

from __future__ import annotations

import math

Vec3 = tuple[float, float, float]

UP: Vec3 = (0.0, 1.0, 0.0)


def add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def norm(a: Vec3) -> float:
    return math.sqrt(dot(a, a))


def normalize(a: Vec3) -> Vec3:
    n = norm(a)
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return scale(a, 1.0 / n)


def plane_basis(normal: Vec3) -> tuple[Vec3, Vec3]:
    """Deterministic in-plane axes (u, v) for a unit plane normal.

    Extents are measured along u (width) and v (height). The construction is
    fixed so that serialized scenes replay identically everywhere.
    """
    if abs(dot(normal, UP)) > 0.999:
        u: Vec3 = (1.0, 0.0, 0.0)
    else:
        u = normalize(cross(UP, normal))
    v = cross(normal, u)
    return u, v
