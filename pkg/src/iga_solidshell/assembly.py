"""Global DOF numbering, load vectors, constraints and the sparse solve.

Global DOF ``3 * k + c`` is component ``c`` of control point ``k`` (global
function numbering of :class:`~iga_solidshell.splines.NurbsPatch3d`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elements import Formulation, PatchElements, stiffness
from .projection import projectors_for_degree
from .quadrature import gauss_legendre
from .splines import NurbsPatch3d, basis_values, eval_basis_derivs

log = logging.getLogger(__name__)


class SingularSystemError(RuntimeError):
    def __init__(self, message: str, n_zero_modes: int):
        super().__init__(message)
        self.n_zero_modes = n_zero_modes


class AssemblyError(RuntimeError):
    """Element-level failure; carries the offending element id."""

    def __init__(self, message: str, element: int | None = None):
        super().__init__(message)
        self.element = element


# --- DOF bookkeeping --------------------------------------------------------

@dataclass
class DofMap:
    n_dofs: int
    constrained: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        c = np.asarray(self.constrained, dtype=int)
        v = np.broadcast_to(np.asarray(self.values, dtype=float), c.shape)
        c, first = np.unique(c, return_index=True)
        if c.size and (c[0] < 0 or c[-1] >= self.n_dofs):
            raise ValueError("constrained DOF out of range")
        self.constrained = c
        self.values = np.array(v[first], dtype=float)
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[c] = False
        self.free = np.nonzero(mask)[0]

    @classmethod
    def for_patch(cls, patch: NurbsPatch3d, fixed: list[tuple[np.ndarray, tuple[int, ...]]] = ()) -> "DofMap":
        """Homogeneous constraints from ``(control point ids, components)`` pairs."""
        dofs = [3 * np.asarray(ids)[:, None] + np.asarray(comps)[None, :] for ids, comps in fixed]
        dofs = np.concatenate([d.ravel() for d in dofs]) if dofs else np.zeros(0, dtype=int)
        return cls(3 * patch.n_control_points, dofs, np.zeros(len(dofs)))

    @property
    def n_free(self) -> int:
        return len(self.free)


def face_control_points(patch: NurbsPatch3d, direction: int, side: int) -> np.ndarray:
    """Global ids of control points on the face ``xi_direction = start/end``."""
    n = patch.shape
    idx = [np.arange(m) for m in n]
    idx[direction] = np.array([0 if side == 0 else n[direction] - 1])
    ii, jj, ll = np.meshgrid(*idx, indexing="ij")
    return np.sort(patch.global_index(ii, jj, ll).ravel())


@dataclass
class LinearSystem:
    """Stiffness, load and solution of one patch.

    ``F`` and ``U`` always hold control-point forces and displacements. With
    ``shape`` set, ``K`` is expressed in the hierarchical thickness basis of
    :class:`~iga_solidshell.elements.PatchElements` for a patch of that
    control-net shape, and :func:`solve` converts on the way in and out.
    """

    K: sp.csr_matrix
    F: np.ndarray
    U: np.ndarray | None = None
    shape: tuple[int, int, int] | None = None


def to_hierarchical(v: np.ndarray, shape, dual: bool) -> np.ndarray:
    """Map control-point DOF values to the hierarchical thickness basis.

    ``dual=True`` transforms forces (sum over each thickness column into the
    constant mode), ``dual=False`` displacements (offsets from layer 0).
    """
    n0, n1, n2 = shape
    a = np.array(v, dtype=float).reshape(n2, n1, n0, 3)
    if dual:
        a[0] = a.sum(axis=0)
    else:
        a[1:] -= a[0]
    return a.ravel()


def from_hierarchical(v: np.ndarray, shape, dual: bool) -> np.ndarray:
    n0, n1, n2 = shape
    a = np.array(v, dtype=float).reshape(n2, n1, n0, 3)
    if dual:
        a[0] -= a[1:].sum(axis=0)
    else:
        a[1:] += a[0]
    return a.ravel()


def _check_columns(dofmap: DofMap, shape) -> None:
    n0, n1, n2 = shape
    mask = np.zeros(dofmap.n_dofs, dtype=bool)
    mask[dofmap.constrained] = True
    mask = mask.reshape(n2, n1 * n0 * 3)
    if np.any(mask != mask[:1]):
        raise ValueError("constraints must cover whole thickness columns in the hierarchical basis")


# --- assembly ---------------------------------------------------------------

def element_matrices(patch: NurbsPatch3d, formulation, D, chunk: int = 128,
                     hierarchical_thickness: bool = False):
    """Yield ``(dofs, k_e)`` batches over the whole patch."""
    form = Formulation.parse(formulation)
    pe = PatchElements(patch, hierarchical_thickness)
    projectors = projectors_for_degree(pe.degree) if form.projected else None
    for kin in pe.chunks(chunk):
        yield kin.dofs(), stiffness(form, kin, D, projectors)


def assemble(patch: NurbsPatch3d, formulation, D, dofmap: DofMap | None = None,
             chunk: int = 128, hierarchical_thickness: bool = False) -> LinearSystem:
    """Global stiffness ``K = sum_e scatter(k_e)`` and a zero load vector.

    ``hierarchical_thickness`` assembles in the thickness basis described in
    :class:`~iga_solidshell.elements.PatchElements`; it keeps thin-shell
    bending accurate at large slenderness.
    """
    n = 3 * patch.n_control_points
    if dofmap is not None and dofmap.n_dofs != n:
        raise ValueError("DOF map does not match the patch")
    shape = patch.shape if hierarchical_thickness else None
    if shape is not None and dofmap is not None:
        _check_columns(dofmap, shape)
    K = sp.csr_matrix((n, n))
    for dofs, ke in element_matrices(patch, formulation, D, chunk, hierarchical_thickness):
        m = dofs.shape[1]
        rows = np.broadcast_to(dofs[:, :, None], (len(dofs), m, m)).ravel()
        cols = np.broadcast_to(dofs[:, None, :], (len(dofs), m, m)).ravel()
        K = K + sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))
    return LinearSystem(K.tocsr(), np.zeros(n), shape=shape)


def body_load(patch: NurbsPatch3d, f) -> np.ndarray:
    """Consistent load of a constant force density ``f`` (force / volume)."""
    f = np.asarray(f, dtype=float)
    F = np.zeros((patch.n_control_points, 3))
    if not np.any(f):
        return F.ravel()
    for kin in PatchElements(patch).chunks():
        ne = np.einsum("eqk,eq->ek", kin.N, kin.wdet)
        np.add.at(F, kin.connectivity.ravel(), ne.ravel()[:, None] * f[None, :])
    return F.ravel()


@dataclass(frozen=True)
class Edge:
    """Parametric edge: free ``direction``, the other two coordinates at ``at``.

    ``at`` lists the fixed parameter values in increasing direction order and
    must sit on the domain boundary.
    """

    direction: int
    at: tuple[float, float]


def _edge_points(patch: NurbsPatch3d, edge: Edge):
    if edge.direction not in (0, 1, 2):
        raise ValueError(f"invalid edge direction {edge.direction}")
    others = [d for d in range(3) if d != edge.direction]
    if len(edge.at) != 2:
        raise ValueError("edge needs two fixed parameter values")
    for d, v in zip(others, edge.at):
        if v not in patch.kvs[d].domain:
            raise ValueError(f"edge coordinate {v} is not on the boundary of direction {d}")
    kv = patch.kvs[edge.direction]
    g = gauss_legendre(kv.degree + 2)
    brk = kv.breaks
    for a, b in zip(brk[:-1], brk[1:]):
        for r, w in zip(g.points, g.weights):
            xi = np.empty(3)
            xi[edge.direction] = a + 0.5 * (r + 1) * (b - a)
            xi[others] = edge.at
            yield xi, 0.5 * (b - a) * w


def edge_load(patch: NurbsPatch3d, edge: Edge, total_force=None, *, radial: float | None = None,
              axis_point=(0.0, 0.0, 0.0), axis_direction=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Uniform line load along ``edge``.

    Either a fixed vector ``total_force`` (the resultant), or a load of
    total magnitude ``radial`` directed away from the axis through
    ``axis_point`` along ``axis_direction`` at every point of the edge.
    """
    if (total_force is None) == (radial is None):
        raise ValueError("give exactly one of total_force or radial")
    samples = []
    length = 0.0
    for xi, w in _edge_points(patch, edge):
        active, R, dR, X = eval_basis_derivs(patch, xi)
        ds = np.linalg.norm(X.T @ dR[:, edge.direction]) * w
        samples.append((active, R, R @ X, ds))
        length += ds
    F = np.zeros((patch.n_control_points, 3))
    a0 = np.asarray(axis_point, float)
    ad = np.asarray(axis_direction, float)
    ad = ad / np.linalg.norm(ad)
    for active, R, x, ds in samples:
        if radial is None:
            q = np.asarray(total_force, float) / length
        else:
            r = x - a0
            r = r - (r @ ad) * ad
            q = radial / length * r / np.linalg.norm(r)
        F[active] += (R * ds)[:, None] * q[None, :]
    return F.ravel()


def point_load(patch: NurbsPatch3d, xi, force) -> np.ndarray:
    """Consistent point load ``F_k = N_k(xi) force``."""
    active, R = basis_values(patch, xi)
    F = np.zeros((patch.n_control_points, 3))
    F[active] = R[:, None] * np.asarray(force, float)[None, :]
    return F.ravel()


def evaluate_displacement(patch: NurbsPatch3d, U, xi) -> np.ndarray:
    active, R = basis_values(patch, xi)
    return R @ np.asarray(U).reshape(-1, 3)[active]


# --- constraints and solve -------------------------------------------------

def _hat(system: LinearSystem, dofmap: DofMap) -> tuple[np.ndarray, np.ndarray]:
    """Load vector and prescribed values in the basis of ``system.K``."""
    uc = np.zeros(dofmap.n_dofs)
    uc[dofmap.constrained] = dofmap.values
    if system.shape is None:
        return np.asarray(system.F, float), uc
    _check_columns(dofmap, system.shape)
    return (to_hierarchical(system.F, system.shape, dual=True),
            to_hierarchical(uc, system.shape, dual=False))


def apply_constraints(system: LinearSystem, dofmap: DofMap) -> tuple[sp.csc_matrix, np.ndarray]:
    """Eliminate constrained rows/columns; returns ``(K_ff, F_f - K_fc u_c)``."""
    K = system.K.tocsr()
    f, c = dofmap.free, dofmap.constrained
    F, uc = _hat(system, dofmap)
    Kff = K[f][:, f]
    rhs = F[f].copy()
    if c.size and np.any(uc[c]):
        rhs -= K[f][:, c] @ uc[c]
    return Kff.tocsc(), rhs


def _count_zero_modes(A: sp.spmatrix, pivots: np.ndarray | None = None, tol: float = 1e-12) -> int:
    """Zero-energy modes of the Jacobi-scaled matrix ``A``."""
    if A.shape[0] <= 3000:
        ev = np.linalg.eigvalsh(A.toarray())
        return int(np.sum(np.abs(ev) <= tol * np.abs(ev).max()))
    if pivots is None:
        return -1
    return int(np.sum(np.abs(pivots) <= tol * np.abs(pivots).max()))


def _scaled(Kff: sp.csc_matrix) -> tuple[sp.csc_matrix, np.ndarray]:
    d = Kff.diagonal()
    if np.any(d <= 0):
        bad = int(np.sum(d <= 0))
        raise SingularSystemError(f"singular stiffness matrix ({bad} DOFs without stiffness)", bad)
    s = 1.0 / np.sqrt(d)
    S = sp.diags(s)
    return (S @ Kff @ S).tocsc(), s


def solve(system: LinearSystem, dofmap: DofMap, rtol: float = 1e-10, refine_steps: int = 3,
          pivot_tol: float = 1e-12) -> np.ndarray:
    """Direct sparse solve of the constrained system; fills ``system.U``.

    The reduced matrix is symmetrically Jacobi-scaled and factorized with
    SuperLU. A scaled pivot below ``pivot_tol`` times the largest one marks a
    zero-energy mode and raises :class:`SingularSystemError`. A few steps of
    iterative refinement follow; a warning is logged if the normwise backward
    error ``|r| / (|K| |u| + |f|)`` stays above ``rtol``.
    """
    Kff, rhs = apply_constraints(system, dofmap)
    As, s = _scaled(Kff)
    try:
        lu = spla.splu(As, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        n = _count_zero_modes(As)
        raise SingularSystemError(f"singular stiffness matrix ({n} zero-energy modes): {exc}", n) from exc
    piv = np.abs(lu.U.diagonal())
    if np.any(piv <= pivot_tol * piv.max()):
        n = max(_count_zero_modes(As, piv, pivot_tol), 1)
        raise SingularSystemError(f"singular stiffness matrix ({n} zero-energy modes)", n)
    b = s * rhs
    y = lu.solve(b)
    for _ in range(refine_steps):
        r = b - As @ y
        if np.linalg.norm(r) <= 0.1 * rtol * np.linalg.norm(b):
            break
        y += lu.solve(r)
    u = s * y
    err = _backward_error(Kff, u, rhs)
    if err > rtol:
        log.warning("backward error %.3e exceeds %.1e", err, rtol)
    U = np.zeros(dofmap.n_dofs)
    U[dofmap.free] = u
    if system.shape is not None:
        U[dofmap.constrained] = 0.0
        U = from_hierarchical(U, system.shape, dual=False)
    U[dofmap.constrained] = dofmap.values
    system.U = U
    return U


def _backward_error(A, u, b) -> float:
    r = b - A @ u
    scale = spla.norm(A, 1) * np.linalg.norm(u, 1) + np.linalg.norm(b, 1)
    return float(np.linalg.norm(r, 1) / scale) if scale else 0.0


def residual(system: LinearSystem, dofmap: DofMap) -> float:
    """Normwise backward error of ``system.U`` for the constrained system."""
    Kff, rhs = apply_constraints(system, dofmap)
    u = system.U
    if system.shape is not None:
        u = to_hierarchical(u, system.shape, dual=False)
    return _backward_error(Kff, u[dofmap.free], rhs)
