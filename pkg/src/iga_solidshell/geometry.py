"""Exact solid geometries for the benchmark problems.

Every builder returns a coarse single-element patch, linear through the
thickness (third parametric direction), with circular arcs as single
rational quadratic segments. Callers elevate and refine as needed.
"""

from __future__ import annotations

import numpy as np

from .splines import KnotVector, NurbsPatch3d, elevate_to, refine_uniform


def arc_segment(theta0: float, theta1: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-radius rational quadratic arc from ``theta0`` to ``theta1`` (radians).

    Returns ``(cos, sin)`` coordinate pairs of the three control points and
    their weights. Sweep must stay below pi.
    """
    sweep = theta1 - theta0
    if not 0 < sweep < np.pi:
        raise ValueError("arc sweep must lie in (0, pi)")
    half = 0.5 * sweep
    mid = theta0 + half
    pts = np.array([[np.cos(theta0), np.sin(theta0)],
                    [np.cos(mid) / np.cos(half), np.sin(mid) / np.cos(half)],
                    [np.cos(theta1), np.sin(theta1)]])
    return pts, np.array([1.0, np.cos(half), 1.0])


def _lin() -> KnotVector:
    return KnotVector(1, [0, 0, 1, 1])


def _quad() -> KnotVector:
    return KnotVector(2, [0, 0, 0, 1, 1, 1])


def box(length: float, width: float, thickness: float) -> NurbsPatch3d:
    """Trilinear box ``[0, L] x [0, w] x [0, t]``."""
    g = [np.array([0.0, length]), np.array([0.0, width]), np.array([0.0, thickness])]
    cp = np.stack(np.meshgrid(*g, indexing="ij"), axis=-1)
    return NurbsPatch3d(_lin(), _lin(), _lin(), cp)


def ring_sector(radius: float, thickness: float, width: float,
                theta0: float = 0.0, theta1: float = np.pi / 2) -> NurbsPatch3d:
    """Planar curved beam in the x-y plane.

    Directions: xi along the arc, eta along z (width), zeta radial outward.
    """
    arc, aw = arc_segment(theta0, theta1)
    radii = [radius - 0.5 * thickness, radius + 0.5 * thickness]
    cp = np.empty((3, 2, 2, 3))
    w = np.empty((3, 2, 2))
    for i in range(3):
        for j, z in enumerate((0.0, width)):
            for k, r in enumerate(radii):
                cp[i, j, k] = (r * arc[i, 0], r * arc[i, 1], z)
                w[i, j, k] = aw[i]
    return NurbsPatch3d(_quad(), _lin(), _lin(), cp, w)


def cylinder_sector(radius: float, thickness: float, length: float,
                    theta0: float, theta1: float) -> NurbsPatch3d:
    """Cylindrical shell about the x-axis, ``x in [0, length]``.

    A point at angle ``theta`` sits at ``(x, r sin theta, r cos theta)``, so
    ``theta = 0`` is the crown (top). Directions: xi axial, eta
    circumferential, zeta radial outward.
    """
    arc, aw = arc_segment(theta0, theta1)
    radii = [radius - 0.5 * thickness, radius + 0.5 * thickness]
    cp = np.empty((2, 3, 2, 3))
    w = np.empty((2, 3, 2))
    for i, x in enumerate((0.0, length)):
        for j in range(3):
            c, s = arc[j]
            for k, r in enumerate(radii):
                cp[i, j, k] = (x, r * s, r * c)
                w[i, j, k] = aw[j]
    return NurbsPatch3d(_lin(), _quad(), _lin(), cp, w)


def sphere_octant(radius: float, thickness: float) -> NurbsPatch3d:
    """Octant ``x, y, z >= 0`` of a spherical shell as a degenerate patch.

    Directions: xi azimuth (x-axis to y-axis), eta latitude (equator to the
    pole, where the patch collapses), zeta radial outward.
    """
    az, azw = arc_segment(0.0, np.pi / 2)
    mer, merw = arc_segment(0.0, np.pi / 2)  # (cos, sin) = (planar radius, height)
    radii = [radius - 0.5 * thickness, radius + 0.5 * thickness]
    cp = np.empty((3, 3, 2, 3))
    w = np.empty((3, 3, 2))
    for i in range(3):
        for j in range(3):
            rho, h = mer[j]
            for k, r in enumerate(radii):
                cp[i, j, k] = (r * rho * az[i, 0], r * rho * az[i, 1], r * h)
                w[i, j, k] = azw[i] * merw[j]
    return NurbsPatch3d(_quad(), _quad(), _lin(), cp, w)


def discretize(patch: NurbsPatch3d, degree: int, n_elems: tuple[int, int, int]) -> NurbsPatch3d:
    """Elevate to ``degree`` everywhere, then split into ``n_elems`` spans."""
    patch = elevate_to(patch, degree)
    for d, n in enumerate(n_elems):
        patch = refine_uniform(patch, d, n)
    return patch
