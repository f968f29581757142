"""Element kinematics, material law and the four stiffness formulations.

All kernels are vectorized over a leading batch of elements: arrays carry
shapes like ``(n_el, n_q, ...)``. A single element is just a batch of one.

Voigt order is ``(xx, yy, zz, xy, xz, yz)`` with engineering shears. Local
DOFs of an element are ordered ``3 * k + component`` where ``k`` follows the
xi-fastest ordering of the element's ``(p + 1)^3`` active functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .projection import FormulationProjectors, ProjectionOperator
from .quadrature import gauss_legendre
from .splines import NurbsPatch3d, SingularGeometryError, _basis_derivs

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


class Formulation(str, Enum):
    STD = "std"
    CURV = "curv"
    SS_ANS = "ss_ans"
    SS = "ss"

    @classmethod
    def parse(cls, value) -> "Formulation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown formulation {value!r}; "
                             f"expected one of {[f.value for f in cls]}") from None

    @property
    def projected(self) -> bool:
        return self in (Formulation.SS_ANS, Formulation.SS)


@dataclass(frozen=True, eq=False)
class ElasticityMatrix:
    E: float
    nu: float
    D: np.ndarray

    @property
    def lame(self) -> tuple[float, float]:
        lam = self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))
        return lam, self.E / (2 * (1 + self.nu))


def material_matrix(E: float, nu: float) -> ElasticityMatrix:
    """Isotropic Hooke law in Voigt form (engineering shear strains)."""
    if E <= 0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if not -1.0 < nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in (-1, 0.5), got {nu}")
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[[0, 1, 2], [0, 1, 2]] = lam + 2 * mu
    D[[3, 4, 5], [3, 4, 5]] = mu
    D.setflags(write=False)
    return ElasticityMatrix(float(E), float(nu), D)


# --- kinematics -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpanTable:
    """1D B-spline data at the Gauss points of every span of one direction."""

    first: np.ndarray      # (n_spans,) first active function
    values: np.ndarray     # (n_spans, n_g, p + 1)
    derivs: np.ndarray     # (n_spans, n_g, p + 1), d/dt in knot coordinates
    half_length: np.ndarray  # (n_spans,) dt/d(reference)


def span_table(kv, n_gauss: int) -> SpanTable:
    g = gauss_legendre(n_gauss)
    p = kv.degree
    spans = kv.span_indices()
    vals = np.empty((len(spans), n_gauss, p + 1))
    ders = np.empty_like(vals)
    half = np.empty(len(spans))
    for s, i in enumerate(spans):
        a, b = kv.knots[i], kv.knots[i + 1]
        half[s] = 0.5 * (b - a)
        for q, r in enumerate(g.points):
            t = a + (r + 1.0) * half[s]
            d = _basis_derivs(kv.knots, p, int(i), t, 1)
            vals[s, q], ders[s, q] = d[0], d[1]
    return SpanTable(spans - p, vals, ders, half)


@dataclass(frozen=True, eq=False)
class ElementKinematics:
    """Basis data and geometry at the Gauss points of a batch of elements.

    ``weights`` already includes the reference-to-parametric scaling, so an
    integral over the physical element is ``sum(f * det_j * weights)``.
    """

    element_ids: np.ndarray   # (n_el,)
    connectivity: np.ndarray  # (n_el, n_e) global function indices
    N: np.ndarray             # (n_el, n_q, n_e)
    dN_param: np.ndarray      # (n_el, n_q, n_e, 3)
    x: np.ndarray             # (n_el, n_q, 3)
    J: np.ndarray             # (n_el, n_q, 3, 3), columns g_1, g_2, g_3
    weights: np.ndarray       # (n_el, n_q)
    degree: int

    @cached_property
    def det_j(self) -> np.ndarray:
        return np.linalg.det(self.J)

    @cached_property
    def dN_cart(self) -> np.ndarray:
        # rows of dN_param are J^T grad_x N
        Jinv = np.linalg.inv(self.J)
        return np.einsum("eqkj,eqja->eqka", self.dN_param, Jinv)

    @property
    def g(self) -> np.ndarray:
        """Covariant basis, ``g[..., i, :]`` is ``g_{i+1}``."""
        return np.swapaxes(self.J, -1, -2)

    @cached_property
    def R(self) -> np.ndarray:
        return r_matrix(self.J)

    @property
    def wdet(self) -> np.ndarray:
        return self.det_j * self.weights

    @property
    def n_q(self) -> int:
        return self.N.shape[1]

    @property
    def n_e(self) -> int:
        return self.N.shape[2]

    def dofs(self) -> np.ndarray:
        c = self.connectivity
        return (3 * c[:, :, None] + np.arange(3)).reshape(len(c), -1)

    def __getitem__(self, idx) -> "ElementKinematics":
        idx = np.atleast_1d(np.arange(len(self.element_ids))[idx])
        return ElementKinematics(self.element_ids[idx], self.connectivity[idx], self.N[idx],
                                 self.dN_param[idx], self.x[idx], self.J[idx],
                                 self.weights[idx], self.degree)


def thickness_basis_available(patch: NurbsPatch3d, rtol: float = 1e-12) -> bool:
    """True if the patch has a single span through the thickness and weights
    that do not vary along it (up to ``rtol``, to absorb refinement round-off)."""
    if patch.kv_zeta.n_spans != 1:
        return False
    w = patch.weights
    return bool(np.all(np.abs(w - w[:, :, :1]) <= rtol * np.abs(w[:, :, :1])))


class PatchElements:
    """Element iterator over a patch, caching the per-direction span tables.

    Parameters
    ----------
    patch : NurbsPatch3d
    hierarchical_thickness : bool, optional
        Replace the through-thickness B-splines ``B_0 .. B_p`` by
        ``1, B_1 .. B_p``. The functions span the same space but the
        constant one has an exactly zero thickness derivative, so bending
        modes of thin shells no longer rely on cancellation between the
        large thickness-stretch entries of the stiffness matrix. Function
        ``(i, j, 0)`` then carries the column translation and ``(i, j, l)``
        the offset of layer ``l`` from it. Needs a single thickness span and
        weights constant through the thickness.
    """

    def __init__(self, patch: NurbsPatch3d, hierarchical_thickness: bool = False):
        degs = set(patch.degrees)
        if len(degs) != 1:
            raise ValueError(f"equal degree in all directions required, got {patch.degrees}")
        if hierarchical_thickness and not thickness_basis_available(patch):
            raise ValueError("hierarchical thickness basis needs one thickness span and "
                             "weights constant through the thickness")
        self.patch = patch
        self.degree = degs.pop()
        self.hierarchical = hierarchical_thickness
        self.tables = tuple(span_table(kv, self.degree + 1) for kv in patch.kvs)
        self.counts = tuple(len(t.first) for t in self.tables)

    @property
    def n_elements(self) -> int:
        return int(np.prod(self.counts))

    def element_index(self, e) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        e = np.asarray(e)
        n0, n1, _ = self.counts
        return e % n0, (e // n0) % n1, e // (n0 * n1)

    def kinematics(self, elements=None) -> ElementKinematics:
        if elements is None:
            elements = np.arange(self.n_elements)
        elements = np.atleast_1d(np.asarray(elements, dtype=int))
        p = self.degree
        tx, ty, tz = self.tables
        ex, ey, ez = self.element_index(elements)
        k = np.arange(p + 1)
        ix = tx.first[ex][:, None] + k
        iy = ty.first[ey][:, None] + k
        iz = tz.first[ez][:, None] + k

        def tens(a, b, c):
            # (E, qz, qy, qx, kz, ky, kx) -> (E, nq, ne)
            t = np.einsum("ezc,eyb,exa->ezyxcba", c, b, a)
            E = t.shape[0]
            return t.reshape(E, (p + 1) ** 3, (p + 1) ** 3)

        Ax, dAx = tx.values[ex], tx.derivs[ex]
        Ay, dAy = ty.values[ey], ty.derivs[ey]
        Az, dAz = tz.values[ez], tz.derivs[ez]
        if self.hierarchical:
            Az, dAz = Az.copy(), dAz.copy()
            Az[..., 0] = 1.0
            dAz[..., 0] = 0.0
        val = tens(Ax, Ay, Az)
        dval = np.stack([tens(dAx, Ay, Az), tens(Ax, dAy, Az), tens(Ax, Ay, dAz)], axis=-1)

        gi, gj, gl = np.broadcast_arrays(ix[:, None, None, :], iy[:, None, :, None],
                                         iz[:, :, None, None])
        E = len(elements)
        w = self.patch.weights[gi, gj, gl].reshape(E, -1)
        X = self.patch.control_points[gi, gj, gl].reshape(E, -1, 3)
        conn = self.patch.global_index(gi, gj, gl).reshape(E, -1)

        if self.hierarchical:
            w = self.patch.weights[gi, gj, 0].reshape(E, -1)
        Nw = val * w[:, None, :]
        dNw = dval * w[:, None, :, None]
        if self.hierarchical:
            # the weight function is sum_ij N_i N_j w_ij, i.e. the constant mode only
            lead = (gl == 0).reshape(E, -1)
            W = np.where(lead[:, None, :], Nw, 0.0).sum(axis=2)
            dW = np.where(lead[:, None, :, None], dNw, 0.0).sum(axis=2)
            X = self.patch.control_points[gi, gj, gl] - self.patch.control_points[gi, gj, 0]
            X = np.where((gl == 0)[..., None], self.patch.control_points[gi, gj, gl], X)
            X = X.reshape(E, -1, 3)
        else:
            W = Nw.sum(axis=2)
            dW = dNw.sum(axis=2)
        N = Nw / W[..., None]
        dN = (dNw - N[..., None] * dW[:, :, None, :]) / W[..., None, None]

        x = np.einsum("eqk,ekd->eqd", N, X)
        J = np.einsum("eqki,ekd->eqdi", dN, X)

        g = gauss_legendre(p + 1).weights
        wq = np.einsum("c,b,a->cba", g, g, g).reshape(-1)
        scale = tx.half_length[ex] * ty.half_length[ey] * tz.half_length[ez]
        kin = ElementKinematics(elements, conn, N, dN, x, J, scale[:, None] * wq[None, :], p)
        det = kin.det_j
        bad = det <= 0
        if np.any(bad):
            e_bad, q_bad = np.argwhere(bad)[0]
            raise SingularGeometryError(
                f"non-positive Jacobian in element {elements[e_bad]} at Gauss point {q_bad} "
                f"(det J = {det[e_bad, q_bad]:.3e})", float(det[e_bad, q_bad]))
        return kin

    def chunks(self, size: int = 128):
        for start in range(0, self.n_elements, size):
            yield self.kinematics(np.arange(start, min(start + size, self.n_elements)))


# --- strain-displacement operators -------------------------------------------

def _b_from_gradients(dN: np.ndarray) -> np.ndarray:
    """Assemble the sparse Cartesian layout from ``dN[..., k, i] = dN_k/dx_i``."""
    shape = dN.shape[:-2]
    ne = dN.shape[-2]
    B = np.zeros(shape + (6, 3 * ne))
    dx, dy, dz = dN[..., 0], dN[..., 1], dN[..., 2]
    B[..., 0, 0::3] = dx
    B[..., 1, 1::3] = dy
    B[..., 2, 2::3] = dz
    B[..., 3, 0::3] = dy
    B[..., 3, 1::3] = dx
    B[..., 4, 0::3] = dz
    B[..., 4, 2::3] = dx
    B[..., 5, 1::3] = dz
    B[..., 5, 2::3] = dy
    return B


def b_cartesian(kin: ElementKinematics) -> np.ndarray:
    """Cartesian strain-displacement matrices, shape ``(n_el, n_q, 6, 3 n_e)``."""
    return _b_from_gradients(kin.dN_cart)


def b_curvilinear_rows(kin: ElementKinematics) -> np.ndarray:
    """Covariant strain-displacement matrices built row-wise from ``g_i``."""
    dN = kin.dN_param
    g = kin.g  # (E, q, i, 3)
    n = [dN[..., i] for i in range(3)]  # (E, q, k)

    def outer(a, gi):
        return a[..., :, None] * gi[..., None, :]  # (E, q, k, 3)

    g1, g2, g3 = g[..., 0, :], g[..., 1, :], g[..., 2, :]
    rows = np.stack([
        outer(n[0], g1),
        outer(n[1], g2),
        outer(n[2], g3),
        outer(n[0], g2) + outer(n[1], g1),
        outer(n[0], g3) + outer(n[2], g1),
        outer(n[1], g3) + outer(n[2], g2),
    ], axis=-3)
    return rows.reshape(rows.shape[:-2] + (-1,))


def r_matrix(J: np.ndarray) -> np.ndarray:
    """Map from Cartesian to covariant Voigt strains: ``eps_cov = R eps_cart``.

    ``R[I, K] = (J_ai J_bj + J_bi J_aj) * (1/2 if I is a normal row else 1)``
    with ``I = (i, j)`` and ``K = (a, b)`` Voigt pairs; this is the explicit
    6x6 matrix written entry by entry in terms of the Jacobian.
    """
    pairs = np.array(VOIGT_PAIRS)
    i, j = pairs[:, 0][:, None], pairs[:, 1][:, None]
    a, b = pairs[:, 0][None, :], pairs[:, 1][None, :]
    sym = J[..., a, i] * J[..., b, j] + J[..., b, i] * J[..., a, j]
    factor = np.where(i == j, 0.5, 1.0)
    return sym * factor


def d_curvilinear(R: np.ndarray, D: np.ndarray) -> np.ndarray:
    """``R^{-T} D R^{-1}`` for each point."""
    Rinv = np.linalg.inv(R)
    return np.swapaxes(Rinv, -1, -2) @ D @ Rinv


def b_curvilinear(kin: ElementKinematics, D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Covariant ``B~`` and the matching material matrix ``D~``."""
    R = kin.R
    det = np.linalg.det(R)
    if np.any(det == 0) or not np.all(np.isfinite(det)):
        raise SingularGeometryError("singular strain transformation R")
    return b_curvilinear_rows(kin), d_curvilinear(R, D)


def _project_q(P: np.ndarray, field: np.ndarray) -> np.ndarray:
    """Apply ``P`` along the quadrature axis (axis 1) of a batched field."""
    return np.einsum("qp,ep...->eq...", P, field)


def b_projected_curvilinear(kin: ElementKinematics, projectors: FormulationProjectors,
                            Bt: np.ndarray | None = None) -> np.ndarray:
    """Row-wise projection of ``B~``.

    Rows ``eps^11`` and ``2 eps^13`` use the 11 operator, ``eps^22`` and
    ``2 eps^23`` the 22 operator, ``2 eps^12`` the 12 operator; ``eps^33`` is
    left as is.
    """
    if projectors.degree != kin.degree or projectors.p11.n_q != kin.n_q:
        raise ValueError(f"projectors for p={projectors.degree} do not match elements of p={kin.degree}")
    if Bt is None:
        Bt = b_curvilinear_rows(kin)
    Bbar = np.empty_like(Bt)
    row_ops = {0: projectors.p11, 4: projectors.p11, 1: projectors.p22, 5: projectors.p22,
               3: projectors.p12}
    for r in range(6):
        op = row_ops.get(r)
        Bbar[:, :, r] = Bt[:, :, r] if op is None else _project_q(op.matrix, Bt[:, :, r])
    return Bbar


def projected_cartesian_gradients(kin: ElementKinematics, projector_12: ProjectionOperator) -> np.ndarray:
    if projector_12.n_q != kin.n_q:
        raise ValueError("projector does not match the element quadrature")
    return _project_q(projector_12.matrix, kin.dN_cart)


def b_projected_cartesian(kin: ElementKinematics, projector_12: ProjectionOperator) -> np.ndarray:
    """Cartesian layout built from projected basis-function gradients."""
    return _b_from_gradients(projected_cartesian_gradients(kin, projector_12))


def _integrate(B: np.ndarray, DB: np.ndarray, wdet: np.ndarray) -> np.ndarray:
    E, nq, _, ndof = B.shape
    Bw = (B * wdet[:, :, None, None]).reshape(E, nq * 6, ndof)
    return np.swapaxes(Bw, 1, 2) @ DB.reshape(E, nq * 6, ndof)


def stiffness(formulation, kin: ElementKinematics, D: np.ndarray,
              projectors: FormulationProjectors | None = None) -> np.ndarray:
    """Element stiffness matrices, shape ``(n_el, 3 n_e, 3 n_e)``."""
    form = Formulation.parse(formulation)
    D = np.asarray(getattr(D, "D", D))
    if form.projected and projectors is None:
        raise ValueError(f"{form.value} requires projection operators")
    if form is Formulation.STD:
        B = b_cartesian(kin)
        DB = D @ B
    elif form is Formulation.SS:
        B = b_projected_cartesian(kin, projectors.p12)
        DB = D @ B
    else:
        Bt, Dt = b_curvilinear(kin, D)
        B = Bt if form is Formulation.CURV else b_projected_curvilinear(kin, projectors, Bt)
        DB = Dt @ B
    return _integrate(B, DB, kin.wdet)
