"""Element-local L2 projections onto reduced tensor-product polynomial spaces.

A projection acts on point values at the ``(p + 1)^3`` Gauss points of one
element. With ``Theta`` sampling a basis of the reduced space at those points
and ``W`` the diagonal of quadrature weights, the operator is

    P = Theta (Theta^T W Theta)^{-1} Theta^T W

The inner product lives on the parametric element, so the same ``P`` serves
every element of a patch.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from .quadrature import element_rule


@dataclass(frozen=True)
class ReducedSpace:
    """Polynomials of degree ``<= degrees[d]`` along parametric direction ``d``."""

    degrees: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(q) for q in self.degrees))
        if len(self.degrees) != 3 or min(self.degrees) < 0:
            raise ValueError(f"invalid reduced-space degrees {self.degrees}")

    @property
    def dim(self) -> int:
        q, r, s = self.degrees
        return (q + 1) * (r + 1) * (s + 1)


def space_11(p: int) -> ReducedSpace:
    return ReducedSpace((p - 1, p, p))


def space_22(p: int) -> ReducedSpace:
    return ReducedSpace((p, p - 1, p))


def space_12(p: int) -> ReducedSpace:
    return ReducedSpace((p - 1, p - 1, p))


@dataclass(frozen=True, eq=False)
class ProjectionOperator:
    matrix: np.ndarray
    space: ReducedSpace
    degree: int

    @property
    def n_q(self) -> int:
        return self.matrix.shape[0]

    @property
    def block(self) -> np.ndarray | None:
        """Repeated diagonal block when the third direction is unreduced."""
        if self.space.degrees[2] != self.degree:
            return None
        m = (self.degree + 1) ** 2
        return self.matrix[:m, :m]


def legendre_vandermonde(points: np.ndarray, degrees) -> np.ndarray:
    """Tensor Legendre basis of ``Q_degrees`` sampled at 3D ``points``."""
    cols = []
    V = [legendre.legvander(points[:, d], degrees[d]) for d in range(3)]
    for c in range(degrees[2] + 1):
        for b in range(degrees[1] + 1):
            for a in range(degrees[0] + 1):
                cols.append(V[0][:, a] * V[1][:, b] * V[2][:, c])
    return np.stack(cols, axis=1)


def projector_from_points(points: np.ndarray, weights: np.ndarray, degrees) -> np.ndarray:
    """Discrete L2 projector matrix for an arbitrary point set."""
    theta = legendre_vandermonde(points, degrees)
    if theta.shape[1] > len(weights):
        raise ValueError(f"reduced space of dimension {theta.shape[1]} exceeds {len(weights)} points")
    gram = theta.T @ (weights[:, None] * theta)
    return theta @ np.linalg.solve(gram, theta.T * weights[None, :])


@lru_cache(maxsize=None)
def build_projector(p: int, space: ReducedSpace) -> ProjectionOperator:
    """Projector onto ``space`` at the ``(p + 1)``-point tensor Gauss rule."""
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    if max(space.degrees) > p:
        raise ValueError(f"reduced space {space.degrees} exceeds degree {p}")
    rule = element_rule(p)
    if space.dim > len(rule):
        raise ValueError("projection underdetermined: reduced space larger than point set")
    P = projector_from_points(rule.points, rule.weights, space.degrees)
    P.setflags(write=False)
    return ProjectionOperator(P, space, p)


def apply_projector(op: ProjectionOperator, samples) -> np.ndarray:
    """Project point values; ``samples`` has the quadrature axis first."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] != op.n_q:
        raise ValueError(f"expected {op.n_q} samples, got {samples.shape[0]}")
    return np.tensordot(op.matrix, samples, axes=(1, 0))


@dataclass(frozen=True)
class FormulationProjectors:
    p11: ProjectionOperator
    p22: ProjectionOperator
    p12: ProjectionOperator

    @property
    def degree(self) -> int:
        return self.p11.degree


@lru_cache(maxsize=None)
def projectors_for_degree(p: int) -> FormulationProjectors:
    return FormulationProjectors(build_projector(p, space_11(p)),
                                 build_projector(p, space_22(p)),
                                 build_projector(p, space_12(p)))


# Closed forms for the 1D-reduced blocks; rows indexed xi-fastest.
_F = Fraction

_CLOSED_FORM = {
    1: {
        "11": [[_F(v, 2) for v in row] for row in
               [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]]],
        "22": [[_F(v, 2) for v in row] for row in
               [[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1]]],
        "12": [[_F(1, 4)] * 4 for _ in range(4)],
    },
    2: {
        "11": [[_F(v, 18) for v in row] for row in [
            [14, 8, -4, 0, 0, 0, 0, 0, 0],
            [5, 8, 5, 0, 0, 0, 0, 0, 0],
            [-4, 8, 14, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 14, 8, -4, 0, 0, 0],
            [0, 0, 0, 5, 8, 5, 0, 0, 0],
            [0, 0, 0, -4, 8, 14, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 14, 8, -4],
            [0, 0, 0, 0, 0, 0, 5, 8, 5],
            [0, 0, 0, 0, 0, 0, -4, 8, 14]]],
        "22": [[_F(v, 18) for v in row] for row in [
            [14, 0, 0, 8, 0, 0, -4, 0, 0],
            [0, 14, 0, 0, 8, 0, 0, -4, 0],
            [0, 0, 14, 0, 0, 8, 0, 0, -4],
            [5, 0, 0, 8, 0, 0, 5, 0, 0],
            [0, 5, 0, 0, 8, 0, 0, 5, 0],
            [0, 0, 5, 0, 0, 8, 0, 0, 5],
            [-4, 0, 0, 8, 0, 0, 14, 0, 0],
            [0, -4, 0, 0, 8, 0, 0, 14, 0],
            [0, 0, -4, 0, 0, 8, 0, 0, 14]]],
        "12": [[_F(v, 324) for v in row] for row in [
            [196, 112, -56, 112, 64, -32, -56, -32, 16],
            [70, 112, 70, 40, 64, 40, -20, -32, -20],
            [-56, 112, 196, -32, 64, 112, 16, -32, -56],
            [70, 40, -20, 112, 64, -32, 70, 40, -20],
            [25, 40, 25, 40, 64, 40, 25, 40, 25],
            [-20, 40, 70, -32, 64, 112, -20, 40, 70],
            [-56, -32, 16, 112, 64, -32, 196, 112, -56],
            [-20, -32, -20, 40, 64, 40, 70, 112, 70],
            [16, -32, -56, -32, 64, 112, -56, 112, 196]]],
    },
}


def appendix_constants(p: int, exact: bool = False) -> dict[str, np.ndarray]:
    """Closed-form diagonal blocks ``{"11", "22", "12"}`` for ``p`` in {1, 2}.

    With ``exact=True`` the entries are returned as ``Fraction`` objects in
    nested lists instead of float arrays.
    """
    if p not in _CLOSED_FORM:
        raise ValueError(f"closed-form projectors exist only for p in (1, 2); use build_projector for p={p}")
    if exact:
        return {k: [row[:] for row in v] for k, v in _CLOSED_FORM[p].items()}
    return {k: np.array([[float(x) for x in row] for row in v]) for k, v in _CLOSED_FORM[p].items()}


def expand_block(block: np.ndarray, p: int) -> np.ndarray:
    """Block-diagonal operator with ``p + 1`` copies of ``block``."""
    return np.kron(np.eye(p + 1), block)
