"""Point-cloud generators for the study harness.

The hypercylinder (3-ball extruded in time) is sampled on its boundary:
quasi-uniform generalized-spiral points on the lateral 2-sphere replicated
at every time level, plus concentric spherical shells filling the two end
caps.  Sampling is deterministic for a fixed seed; the seed only feeds the
random rotations applied to cap shells, which break structured alignments
without moving points off the hypercylinder.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "generate_hypercylinder_points",
    "sphere_spiral_points",
]


def sphere_spiral_points(n: int, phase: float = 0.0) -> np.ndarray:
    """n quasi-uniform points on the unit 2-sphere (generalized spiral).

    ``phase`` offsets the spiral azimuth; every point satisfies
    x^2+y^2+z^2 = 1 to roundoff regardless.
    """
    if n < 1:
        raise ValueError("need at least one point")
    if n == 1:
        return np.array([[0.0, 0.0, 1.0]])
    pts = np.empty((n, 3))
    phi = phase
    for k in range(n):
        h = -1.0 + 2.0 * k / (n - 1)
        theta = math.acos(max(-1.0, min(1.0, h)))
        if k in (0, n - 1):
            phi = phase
        else:
            phi += 3.6 / math.sqrt(n * (1.0 - h * h))
        pts[k] = (math.sin(theta) * math.cos(phi),
                  math.sin(theta) * math.sin(phi),
                  math.cos(theta))
    return pts


def _sphere_count(radius: float, h: float) -> int:
    return max(6, int(round(4.0 * math.pi * (radius / h) ** 2)))


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def generate_hypercylinder_points(R: float, L: float, h_sphere: float,
                                  h_time: float, seed: int = 0) -> np.ndarray:
    """Boundary samples of the hypercylinder {x^2+y^2+z^2 <= R^2} x [0, L].

    Lateral surface: a spiral layout with about 4 pi (R/h_sphere)^2 points
    per level, repeated (with a seeded spiral phase) at ceil(L/h_time)+1
    uniform time levels.  End
    caps: concentric shells of spacing ~h_sphere (randomly rotated, seeded)
    plus the cap centers, at t = 0 and t = L.  Every sample lies on the
    hypercylinder boundary, so the convex hull is inscribed.
    """
    if min(R, L, h_sphere, h_time) <= 0.0:
        raise ValueError("R, L, h_sphere and h_time must be positive")
    rng = np.random.default_rng(seed)
    n_levels = int(math.ceil(L / h_time)) + 1
    times = np.linspace(0.0, L, n_levels)
    n_sphere = _sphere_count(R, h_sphere)

    chunks = []
    for t in times:
        # a fresh spiral phase per level avoids exactly-replicated spheres,
        # which would flood the kernel with cospherical tie cases
        sphere = R * sphere_spiral_points(n_sphere, phase=rng.uniform(0.0, 2.0 * math.pi))
        chunk = np.empty((len(sphere), 4))
        chunk[:, :3] = sphere
        chunk[:, 3] = t
        chunks.append(chunk)

    n_shells = max(1, int(round(R / h_sphere)))
    for t in (0.0, L):
        cap = [np.array([[0.0, 0.0, 0.0, t]])]
        for j in range(1, n_shells):
            r = R * j / n_shells
            shell = r * sphere_spiral_points(_sphere_count(r, h_sphere))
            shell = shell @ _random_rotation(rng).T
            chunk = np.empty((len(shell), 4))
            chunk[:, :3] = shell
            chunk[:, 3] = t
            cap.append(chunk)
        chunks.extend(cap)
    return np.vstack(chunks)
