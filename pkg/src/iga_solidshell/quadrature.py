"""Gauss-Legendre rules on [-1, 1] and their tensor products."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_POINTS = 16


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class TensorRule:
    """Flattened 3D rule; ``points[q] = (t_xi, t_eta, t_zeta)``.

    Ordering is lexicographic with the first direction fastest:
    ``q = i_xi + n_xi * (i_eta + n_eta * i_zeta)``.
    """

    points: np.ndarray
    weights: np.ndarray
    shape: tuple[int, int, int]

    def __len__(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureRule:
    """``n``-point Gauss-Legendre rule, exact for polynomials of degree ``2n - 1``."""
    if not 1 <= n <= MAX_POINTS:
        raise ValueError(f"number of Gauss points must be in [1, {MAX_POINTS}], got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w)


def tensor_rule(rules) -> TensorRule:
    r_xi, r_eta, r_zeta = rules
    tz, ty, tx = np.meshgrid(r_zeta.points, r_eta.points, r_xi.points, indexing="ij")
    wz, wy, wx = np.meshgrid(r_zeta.weights, r_eta.weights, r_xi.weights, indexing="ij")
    pts = np.stack([tx.ravel(), ty.ravel(), tz.ravel()], axis=1)
    return TensorRule(pts, (wx * wy * wz).ravel(), (len(r_xi), len(r_eta), len(r_zeta)))


@lru_cache(maxsize=None)
def element_rule(degree: int) -> TensorRule:
    """Full ``(p + 1)``-point rule in every direction."""
    g = gauss_legendre(degree + 1)
    return tensor_rule((g, g, g))
