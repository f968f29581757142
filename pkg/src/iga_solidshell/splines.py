"""Univariate B-splines and trivariate tensor-product NURBS patches.

Evaluation follows the usual span-local recurrences: only the ``p + 1``
functions that are nonzero on a knot span are ever computed. Rational
quantities are obtained from the B-spline ones with the quotient rule, to
first order.

Refinement (knot insertion, degree elevation) works on homogeneous control
points ``(w x, w y, w z, w)`` so that rational geometry is preserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Parametric coordinate outside the patch domain."""


class SingularGeometryError(ValueError):
    """Jacobian of the geometric map is singular or inverted."""

    def __init__(self, message: str, det_j: float | None = None):
        super().__init__(message)
        self.det_j = det_j


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Open (clamped) knot vector of degree ``degree``.

    Parameters
    ----------
    degree : int
        Polynomial degree ``p >= 1``.
    knots : array_like
        Non-decreasing knot values; first and last repeated ``p + 1`` times.
    """

    degree: int
    knots: np.ndarray = field(repr=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        knots.setflags(write=False)
        p = self.degree
        if p < 1:
            raise ValueError(f"degree must be >= 1, got {p}")
        if knots.ndim != 1 or np.any(np.diff(knots) < 0):
            raise ValueError("knots must be a non-decreasing 1D sequence")
        if len(knots) - p - 1 < p + 1:
            raise ValueError("too few knots for the requested degree")
        a, b = knots[0], knots[-1]
        if np.count_nonzero(knots == a) != p + 1 or np.count_nonzero(knots == b) != p + 1:
            raise ValueError("knot vector must be open: end knots repeated exactly p + 1 times")

    @classmethod
    def uniform(cls, degree: int, n_spans: int, a: float = 0.0, b: float = 1.0) -> "KnotVector":
        inner = np.linspace(a, b, n_spans + 1)[1:-1]
        return cls(degree, np.concatenate([[a] * (degree + 1), inner, [b] * (degree + 1)]))

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def breaks(self) -> np.ndarray:
        """Distinct knot values (element boundaries)."""
        return np.unique(self.knots)

    @property
    def n_spans(self) -> int:
        return len(self.breaks) - 1

    def span_indices(self) -> np.ndarray:
        """Index ``i`` with ``knots[i] < knots[i+1]`` for every nonempty span."""
        k = self.knots
        return np.nonzero(k[1:] > k[:-1])[0]

    def find_span(self, t: float) -> int:
        a, b = self.domain
        if not (a <= t <= b):
            raise DomainError(f"parameter {t} outside [{a}, {b}]")
        if t == b:
            return int(self.span_indices()[-1])
        return int(np.searchsorted(self.knots, t, side="right") - 1)

    def multiplicity(self, t: float) -> int:
        return int(np.count_nonzero(np.isclose(self.knots, t, rtol=0.0, atol=1e-14)))

    def greville(self) -> np.ndarray:
        p, k = self.degree, self.knots
        return np.array([k[i + 1 : i + p + 1].mean() for i in range(self.n_basis)])


def _basis_derivs(knots: np.ndarray, p: int, span: int, t: float, n: int) -> np.ndarray:
    """Values and derivatives up to order ``n`` of the nonzero functions on ``span``.

    Returns an array of shape ``(n + 1, p + 1)``.
    """
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = t - knots[span + 1 - j]
        right[j] = knots[span + j] - t
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((n + 1, p + 1))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n + 1):
            d = 0.0
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, n + 1):
        ders[k] *= fac
        fac *= p - k
    return ders


def eval_bspline_basis(kv: KnotVector, t: float, n_derivs: int = 0) -> tuple[int, np.ndarray]:
    """Evaluate the ``p + 1`` nonzero B-splines (and derivatives) at ``t``.

    Returns
    -------
    first : int
        Global index of the first nonzero function.
    ders : ndarray, shape (n_derivs + 1, p + 1)
        ``ders[k, j]`` is the ``k``-th derivative of function ``first + j``.
    """
    span = kv.find_span(float(t))
    n = min(n_derivs, kv.degree)
    ders = _basis_derivs(kv.knots, kv.degree, span, float(t), n)
    if n_derivs > n:
        ders = np.vstack([ders, np.zeros((n_derivs - n, kv.degree + 1))])
    return span - kv.degree, ders


def collocation_matrix(kv: KnotVector, ts) -> np.ndarray:
    """Dense matrix ``A[i, j] = N_j(ts[i])``."""
    ts = np.atleast_1d(ts)
    A = np.zeros((len(ts), kv.n_basis))
    for i, t in enumerate(ts):
        first, ders = eval_bspline_basis(kv, t)
        A[i, first : first + kv.degree + 1] = ders[0]
    return A


@dataclass(frozen=True, eq=False)
class BasisEval:
    """Rational basis data at one parametric point.

    ``grads_param[k]`` and ``grads_cart[k]`` hold the gradient of function
    ``active_indices[k]`` with respect to ``(xi, eta, zeta)`` and ``(x, y, z)``.
    """

    active_indices: np.ndarray
    values: np.ndarray
    grads_param: np.ndarray
    grads_cart: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class PointEval:
    basis: BasisEval
    x: np.ndarray
    jacobian: np.ndarray

    @property
    def det_j(self) -> float:
        return float(np.linalg.det(self.jacobian))


class NurbsPatch3d:
    """Trivariate NURBS patch.

    Control points are stored as an ``(n_xi, n_eta, n_zeta, 3)`` array and
    weights as ``(n_xi, n_eta, n_zeta)``. Global function numbering is
    lexicographic with ``xi`` running fastest:
    ``k = i + n_xi * (j + n_eta * l)``.
    """

    def __init__(self, kv_xi: KnotVector, kv_eta: KnotVector, kv_zeta: KnotVector,
                 control_points, weights=None):
        self.kvs = (kv_xi, kv_eta, kv_zeta)
        shape = tuple(kv.n_basis for kv in self.kvs)
        cp = np.array(control_points, dtype=float)
        if cp.shape != shape + (3,):
            raise ValueError(f"control point grid {cp.shape} does not match {shape + (3,)}")
        w = np.ones(shape) if weights is None else np.array(weights, dtype=float)
        if w.shape != shape:
            raise ValueError(f"weight grid {w.shape} does not match {shape}")
        if np.any(w <= 0):
            raise ValueError("all weights must be positive")
        cp.setflags(write=False)
        w.setflags(write=False)
        self.control_points = cp
        self.weights = w

    @classmethod
    def from_homogeneous(cls, kvs, pw: np.ndarray) -> "NurbsPatch3d":
        w = pw[..., 3]
        return cls(*kvs, pw[..., :3] / w[..., None], w)

    @property
    def kv_xi(self) -> KnotVector:
        return self.kvs[0]

    @property
    def kv_eta(self) -> KnotVector:
        return self.kvs[1]

    @property
    def kv_zeta(self) -> KnotVector:
        return self.kvs[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.weights.shape

    @property
    def degrees(self) -> tuple[int, int, int]:
        return tuple(kv.degree for kv in self.kvs)

    @property
    def n_control_points(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_elements(self) -> int:
        return int(np.prod([kv.n_spans for kv in self.kvs]))

    def homogeneous(self) -> np.ndarray:
        return np.concatenate([self.control_points * self.weights[..., None],
                               self.weights[..., None]], axis=-1)

    def flat_control_points(self) -> np.ndarray:
        """Control points in global (xi-fastest) order, shape ``(n, 3)``."""
        return self.control_points.transpose(2, 1, 0, 3).reshape(-1, 3)

    def flat_weights(self) -> np.ndarray:
        return self.weights.transpose(2, 1, 0).reshape(-1)

    def global_index(self, i, j, l):
        n0, n1, _ = self.shape
        return np.asarray(i) + n0 * (np.asarray(j) + n1 * np.asarray(l))

    def translated(self, c) -> "NurbsPatch3d":
        return NurbsPatch3d(*self.kvs, self.control_points + np.asarray(c, float), self.weights)


def eval_basis_derivs(patch: NurbsPatch3d, xi) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Active indices, rational values, parametric gradients and control points.

    Needs no Jacobian inverse, so it also works on degenerate edges.
    """
    xi = np.asarray(xi, dtype=float)
    tabs = [eval_bspline_basis(kv, t, 1) for kv, t in zip(patch.kvs, xi)]
    (a, A), (b, Bt), (c, C) = tabs
    pa, pb, pc = A.shape[1], Bt.shape[1], C.shape[1]

    # tensor tables indexed [l, j, i] so that flattening is xi-fastest
    val = np.einsum("l,j,i->lji", C[0], Bt[0], A[0])
    dxi = np.einsum("l,j,i->lji", C[0], Bt[0], A[1])
    deta = np.einsum("l,j,i->lji", C[0], Bt[1], A[0])
    dzeta = np.einsum("l,j,i->lji", C[1], Bt[0], A[0])

    w = patch.weights[a : a + pa, b : b + pb, c : c + pc].transpose(2, 1, 0)
    X = patch.control_points[a : a + pa, b : b + pb, c : c + pc].transpose(2, 1, 0, 3)

    Nw = (val * w).reshape(-1)
    dNw = np.stack([(d * w).reshape(-1) for d in (dxi, deta, dzeta)], axis=1)
    W = Nw.sum()
    dW = dNw.sum(axis=0)
    R = Nw / W
    dR = (dNw * W - np.outer(Nw, dW)) / W**2
    ii, jj, ll = np.meshgrid(np.arange(a, a + pa), np.arange(b, b + pb), np.arange(c, c + pc), indexing="ij")
    active = patch.global_index(ii, jj, ll).transpose(2, 1, 0).reshape(-1)
    return active, R, dR, X.reshape(-1, 3)


def eval_nurbs_3d(patch: NurbsPatch3d, xi) -> PointEval:
    """Rational basis, geometric point and Jacobian at parametric point ``xi``.

    Raises
    ------
    DomainError
        If ``xi`` lies outside the parametric domain.
    SingularGeometryError
        If the Jacobian is singular at ``xi``. Cartesian gradients are then
        unavailable; the error carries ``det_j``.
    """
    active, R, dR, X = eval_basis_derivs(patch, xi)
    x = R @ X
    J = X.T @ dR
    det = float(np.linalg.det(J))
    scale = max(np.abs(J).max(), 1e-300) ** 3
    if abs(det) <= 1e-14 * scale:
        raise SingularGeometryError(f"singular Jacobian at {np.asarray(xi).tolist()} (det J = {det:.3e})", det)
    grads_cart = np.linalg.solve(J.T, dR.T).T
    return PointEval(BasisEval(active, R, dR, grads_cart), x, J)


def eval_point(patch: NurbsPatch3d, xi) -> np.ndarray:
    """Geometric point only; works at degenerate points too."""
    xi = np.asarray(xi, dtype=float)
    vals = []
    for kv, t in zip(patch.kvs, xi):
        first, ders = eval_bspline_basis(kv, t)
        vals.append((first, ders[0]))
    (a, A), (b, Bv), (c, C) = vals
    pw = patch.homogeneous()[a : a + len(A), b : b + len(Bv), c : c + len(C)]
    h = np.einsum("i,j,l,ijld->d", A, Bv, C, pw)
    return h[:3] / h[3]


def basis_values(patch: NurbsPatch3d, xi) -> tuple[np.ndarray, np.ndarray]:
    """Active global indices and rational basis values at ``xi`` (no derivatives)."""
    xi = np.asarray(xi, dtype=float)
    vals = []
    for kv, t in zip(patch.kvs, xi):
        first, ders = eval_bspline_basis(kv, t)
        vals.append((first, ders[0]))
    (a, A), (b, Bv), (c, C) = vals
    w = patch.weights[a : a + len(A), b : b + len(Bv), c : c + len(C)]
    Nw = np.einsum("i,j,l->ijl", A, Bv, C) * w
    R = (Nw / Nw.sum()).transpose(2, 1, 0).reshape(-1)
    ii, jj, ll = np.meshgrid(np.arange(a, a + len(A)), np.arange(b, b + len(Bv)),
                             np.arange(c, c + len(C)), indexing="ij")
    active = patch.global_index(ii, jj, ll).transpose(2, 1, 0).reshape(-1)
    return active, R


# --- refinement -------------------------------------------------------------

def _insert_one(knots: np.ndarray, p: int, pw: np.ndarray, u: float) -> tuple[np.ndarray, np.ndarray]:
    """Boehm insertion of ``u`` into the leading axis of ``pw``."""
    k = int(np.searchsorted(knots, u, side="right") - 1)
    n = pw.shape[0]
    new = np.empty((n + 1,) + pw.shape[1:])
    new[: k - p + 1] = pw[: k - p + 1]
    new[k + 1 :] = pw[k:]
    for i in range(k - p + 1, k + 1):
        alpha = (u - knots[i]) / (knots[i + p] - knots[i])
        new[i] = alpha * pw[i] + (1.0 - alpha) * pw[i - 1]
    return np.insert(knots, k + 1, u), new


def insert_knots(patch: NurbsPatch3d, direction: int, new_knots) -> NurbsPatch3d:
    """Insert ``new_knots`` along ``direction`` (0, 1 or 2); geometry is unchanged.

    Raises ``ValueError`` for knots not strictly inside the domain or that
    would exceed multiplicity ``p``.
    """
    kv = patch.kvs[direction]
    p = kv.degree
    a, b = kv.domain
    knots = kv.knots.copy()
    pw = np.moveaxis(patch.homogeneous(), direction, 0)
    for u in sorted(float(u) for u in np.atleast_1d(new_knots)):
        if not (a < u < b):
            raise ValueError(f"knot {u} is not inside the open interval ({a}, {b})")
        if np.count_nonzero(np.abs(knots - u) <= 1e-14) >= p:
            raise ValueError(f"knot {u} already has full multiplicity {p}")
        knots, pw = _insert_one(knots, p, pw, u)
    kvs = list(patch.kvs)
    kvs[direction] = KnotVector(p, knots)
    return NurbsPatch3d.from_homogeneous(kvs, np.moveaxis(pw, 0, direction))


def refine_uniform(patch: NurbsPatch3d, direction: int, n_spans: int) -> NurbsPatch3d:
    """Split each existing span along ``direction`` into ``n_spans`` equal parts.

    Only meaningful for single-span directions, which is how all benchmark
    geometries start.
    """
    kv = patch.kvs[direction]
    if kv.n_spans != 1:
        raise ValueError("uniform refinement expects a single-span direction")
    if n_spans < 1:
        raise ValueError("n_spans must be >= 1")
    if n_spans == 1:
        return patch
    a, b = kv.domain
    return insert_knots(patch, direction, np.linspace(a, b, n_spans + 1)[1:-1])


def elevate_degree(patch: NurbsPatch3d, direction: int) -> NurbsPatch3d:
    """Raise the degree along ``direction`` by one, preserving the geometry.

    Every distinct knot gains one multiplicity, so the new spline space
    contains the old one. The homogeneous control points of the elevated
    representation are recovered by collocation at the Greville abscissae of
    the new knot vector, which reproduces the old map exactly.
    """
    kv = patch.kvs[direction]
    p = kv.degree
    brk = kv.breaks
    mult = [kv.multiplicity(t) for t in brk]
    knots = np.repeat(brk, [m + 1 for m in mult])
    new_kv = KnotVector(p + 1, knots)
    taus = new_kv.greville()
    A_new = collocation_matrix(new_kv, taus)
    A_old = collocation_matrix(kv, taus)
    pw = np.moveaxis(patch.homogeneous(), direction, 0)
    rhs = np.tensordot(A_old, pw, axes=(1, 0))
    flat = np.linalg.solve(A_new, rhs.reshape(len(taus), -1))
    pw_new = flat.reshape((new_kv.n_basis,) + pw.shape[1:])
    kvs = list(patch.kvs)
    kvs[direction] = new_kv
    return NurbsPatch3d.from_homogeneous(kvs, np.moveaxis(pw_new, 0, direction))


def elevate_to(patch: NurbsPatch3d, degree: int) -> NurbsPatch3d:
    for d in range(3):
        while patch.kvs[d].degree < degree:
            patch = elevate_degree(patch, d)
    return patch
