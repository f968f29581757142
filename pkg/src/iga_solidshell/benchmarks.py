"""The five solid-shell benchmark problems and a single-run driver.

Each builder returns a :class:`BenchmarkCase`: a degree-parametrized patch
factory plus material, supports, loads, the measured point/direction and the
value used to normalize the result. The third parametric direction is always
the thickness direction; the measured point lies on the midsurface unless the
problem says otherwise (beam faces).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry
from .assembly import (DofMap, Edge, assemble, body_load, edge_load, evaluate_displacement,
                       face_control_points, point_load, residual, solve)
from .elements import ElasticityMatrix, Formulation, material_matrix, thickness_basis_available
from .splines import KnotVector, NurbsPatch3d, SingularGeometryError, elevate_to

BENCHMARKS = ("straight", "curved", "scordelis", "hemisphere", "cylinder")


@dataclass(frozen=True)
class Support:
    """Zero displacement of ``components`` on the face ``direction = side``."""

    direction: int
    side: int
    components: tuple[int, ...]


@dataclass(frozen=True)
class FixedEdge:
    """Zero displacement of every control point on a parametric edge line.

    ``index`` gives the control-point index along the two fixed directions
    (``-1`` for the last one).
    """

    direction: int
    index: tuple[int, int]
    components: tuple[int, ...]


@dataclass(frozen=True)
class BodyLoad:
    f: tuple[float, float, float]


@dataclass(frozen=True)
class EdgeLoad:
    edge: Edge
    force: tuple[float, float, float] | None = None
    radial: float | None = None
    axis_point: tuple[float, float, float] = (0.0, 0.0, 0.0)
    axis_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class PointLoad:
    xi: tuple[float, float, float]
    force: tuple[float, float, float]


@dataclass
class BenchmarkCase:
    name: str
    build_patch: Callable[[int], NurbsPatch3d]
    material: ElasticityMatrix
    supports: list
    loads: list
    measure_point: tuple[float, float, float]
    measure_direction: tuple[float, float, float]
    reference: float
    n_elems: int
    slenderness: float = float("nan")
    distortion_deg: float = 0.0
    notes: dict = field(default_factory=dict)

    def patch(self, degree: int) -> NurbsPatch3d:
        return self.build_patch(degree)

    def dofmap(self, patch: NurbsPatch3d) -> DofMap:
        fixed = []
        n = patch.shape
        for s in self.supports:
            if isinstance(s, Support):
                fixed.append((face_control_points(patch, s.direction, s.side), s.components))
            else:
                idx = [None, None, None]
                others = [d for d in range(3) if d != s.direction]
                for d, i in zip(others, s.index):
                    idx[d] = np.array([i % n[d]])
                idx[s.direction] = np.arange(n[s.direction])
                ii, jj, ll = np.meshgrid(*idx, indexing="ij")
                fixed.append((patch.global_index(ii, jj, ll).ravel(), s.components))
        return DofMap.for_patch(patch, fixed)

    def load_vector(self, patch: NurbsPatch3d) -> np.ndarray:
        F = np.zeros(3 * patch.n_control_points)
        for ld in self.loads:
            if isinstance(ld, BodyLoad):
                F += body_load(patch, ld.f)
            elif isinstance(ld, EdgeLoad):
                F += edge_load(patch, ld.edge, ld.force, radial=ld.radial,
                               axis_point=ld.axis_point, axis_direction=ld.axis_direction)
            elif isinstance(ld, PointLoad):
                F += point_load(patch, ld.xi, ld.force)
            else:
                raise TypeError(f"unknown load {ld!r}")
        return F


@dataclass
class RunResult:
    benchmark: str
    formulation: str
    degree: int
    n_elems: int
    slenderness: float
    distortion_deg: float
    raw_deflection: float
    normalized_deflection: float
    wall_time_s: float
    n_dofs: int = 0
    residual: float = 0.0


# --- straight cantilever ----------------------------------------------------

def distortion_angle(s: np.ndarray, length: float, max_deg: float) -> np.ndarray:
    """Tilt angle (radians) peaking at mid-length and vanishing at both ends."""
    return np.radians(max_deg) * (1.0 - np.abs(2.0 * np.asarray(s) / length - 1.0))


def distorted_box(length: float, width: float, thickness: float, n_elems: int,
                  max_deg: float, degree: int) -> NurbsPatch3d:
    """Beam box whose element edges across the width tilt in the x-y plane.

    The edge at ``x_i = i L / n`` is the straight segment through
    ``(x_i, w / 2)`` inclined by ``distortion_angle(x_i)``; elements are
    straight-sided trapezoids. The mesh is built trilinear with ``n_elems``
    spans along the length and then elevated, so the element edges stay C0
    lines of the basis.
    """
    if not 0 <= max_deg < 90:
        raise ValueError("distortion angle must lie in [0, 90) degrees")
    xs = np.linspace(0.0, length, n_elems + 1)
    c = np.tan(distortion_angle(xs, length, max_deg))
    y = np.array([0.0, width])
    z = np.array([0.0, thickness])
    cp = np.empty((n_elems + 1, 2, 2, 3))
    cp[..., 0] = xs[:, None, None] + c[:, None, None] * (y[None, :, None] - 0.5 * width)
    cp[..., 1] = y[None, :, None]
    cp[..., 2] = z[None, None, :]
    kv = KnotVector(1, np.r_[0.0, np.linspace(0.0, 1.0, n_elems + 1), 1.0])
    lin = KnotVector(1, [0, 0, 1, 1])
    return elevate_to(NurbsPatch3d(kv, lin, lin, cp), degree)


def straight_beam(n_elems: int = 8, slenderness: float = 100.0, distortion_deg: float = 0.0,
                  length: float = 100.0, width: float = 1.0, E: float = 1000.0, force: float = 1.0
                  ) -> BenchmarkCase:
    """Cantilever along x, width along y, thickness along z.

    Clamped at ``x = 0``; line load of resultant ``force`` along the top edge of
    the free face, pointing down; deflection measured at the middle of the
    bottom edge of the free face. Normalized by ``F L^3 / (3 E I)``.
    """
    if n_elems < 1:
        raise ValueError("n_elems must be >= 1")
    t = length / slenderness
    inertia = width * t**3 / 12.0

    def build(degree: int) -> NurbsPatch3d:
        if distortion_deg:
            return distorted_box(length, width, t, n_elems, distortion_deg, degree)
        return geometry.discretize(geometry.box(length, width, t), degree, (n_elems, 1, 1))

    return BenchmarkCase(
        name="straight", build_patch=build, material=material_matrix(E, 0.0),
        supports=[Support(0, 0, (0, 1, 2))],
        loads=[EdgeLoad(Edge(1, (1.0, 1.0)), force=(0.0, 0.0, -force))],
        measure_point=(1.0, 0.5, 0.0), measure_direction=(0.0, 0.0, -1.0),
        reference=force * length**3 / (3.0 * E * inertia),
        n_elems=n_elems, slenderness=slenderness, distortion_deg=distortion_deg)


# --- curved cantilever ------------------------------------------------------

def curved_beam(n_elems: int = 10, slenderness: float = 100.0, radius: float = 10.0,
                width: float = 1.0, E: float = 1000.0, force: float = 1.0) -> BenchmarkCase:
    """Quarter ring in the x-y plane, clamped at ``theta = 0``.

    Radial line load of resultant ``force`` on the exterior edge of the free
    end (``theta = 90 deg``); radial deflection measured at the interior edge.
    Normalized by ``pi F R^3 / (4 E I)``.
    """
    if n_elems < 1:
        raise ValueError("n_elems must be >= 1")
    t = radius / slenderness
    inertia = width * t**3 / 12.0

    def build(degree: int) -> NurbsPatch3d:
        return geometry.discretize(geometry.ring_sector(radius, t, width), degree, (n_elems, 1, 1))

    return BenchmarkCase(
        name="curved", build_patch=build, material=material_matrix(E, 0.0),
        supports=[Support(0, 0, (0, 1, 2))],
        loads=[EdgeLoad(Edge(1, (1.0, 1.0)), radial=force)],
        measure_point=(1.0, 0.5, 0.0), measure_direction=(0.0, 1.0, 0.0),
        reference=np.pi * force * radius**3 / (4.0 * E * inertia),
        n_elems=n_elems, slenderness=slenderness)


# --- shell obstacle course --------------------------------------------------

SCORDELIS_REFERENCE = 0.3024
HEMISPHERE_REFERENCE = 0.0924
CYLINDER_REFERENCE = 1.8248e-5


def scordelis_lo(n_elems: int = 8, radius: float = 25.0, length: float = 50.0,
                 thickness: float = 0.25, half_angle_deg: float = 40.0) -> BenchmarkCase:
    """Quarter Scordelis-Lo roof.

    x in ``[0, L/2]`` from the mid-span symmetry plane to the diaphragm; the
    arc runs from the crown (symmetry plane ``y = 0``) to the free edge.
    Self-weight 360 per unit volume; vertical deflection at the mid-span point
    of the free edge.
    """
    if n_elems < 1:
        raise ValueError("n_elems must be >= 1")
    phi = np.radians(half_angle_deg)

    def build(degree: int) -> NurbsPatch3d:
        base = geometry.cylinder_sector(radius, thickness, 0.5 * length, 0.0, phi)
        return geometry.discretize(base, degree, (n_elems, n_elems, 1))

    return BenchmarkCase(
        name="scordelis", build_patch=build, material=material_matrix(4.32e8, 0.0),
        supports=[Support(0, 1, (1, 2)),   # rigid diaphragm
                  Support(0, 0, (0,)),     # mid-span symmetry
                  Support(1, 0, (1,))],    # crown symmetry
        loads=[BodyLoad((0.0, 0.0, -360.0))],
        measure_point=(0.0, 1.0, 0.5), measure_direction=(0.0, 0.0, -1.0),
        reference=SCORDELIS_REFERENCE, n_elems=n_elems, slenderness=radius / thickness,
        notes={"volume": 0.5 * length * phi * radius * thickness})


def pinched_hemisphere(n_elems: int = 8, radius: float = 10.0, thickness: float = 0.04,
                       force: float = 1.0) -> BenchmarkCase:
    """Quarter hemisphere (x, y >= 0) with a fixed apex.

    Outward load at A = (R, 0, 0), inward load at B = (0, R, 0), both on the
    midsurface; radial deflection measured at A. Each point load carries the
    full ``force`` in the quarter model.
    """
    if n_elems < 1:
        raise ValueError("n_elems must be >= 1")

    def build(degree: int) -> NurbsPatch3d:
        base = geometry.sphere_octant(radius, thickness)
        return geometry.discretize(base, degree, (n_elems, n_elems, 1))

    return BenchmarkCase(
        name="hemisphere", build_patch=build, material=material_matrix(6.825e7, 0.3),
        supports=[Support(0, 0, (1,)),   # plane y = 0
                  Support(0, 1, (0,)),   # plane x = 0
                  Support(1, 1, (0, 1, 2))],  # apex (collapsed edge)
        loads=[PointLoad((0.0, 0.0, 0.5), (force, 0.0, 0.0)),
               PointLoad((1.0, 0.0, 0.5), (0.0, -force, 0.0))],
        measure_point=(0.0, 0.0, 0.5), measure_direction=(1.0, 0.0, 0.0),
        reference=HEMISPHERE_REFERENCE, n_elems=n_elems, slenderness=radius / thickness)


def pinched_cylinder(n_elems: int = 8, radius: float = 300.0, length: float = 600.0,
                     thickness: float = 3.0, force: float = 1.0) -> BenchmarkCase:
    """One eighth of the pinched cylinder with rigid end diaphragms.

    x in ``[0, L/2]`` from the centre plane to the diaphragm, arc from the
    top (load point) to the plane ``z = 0``. Load ``force / 4`` at the top of
    the centre section; radial deflection measured there.
    """
    if n_elems < 1:
        raise ValueError("n_elems must be >= 1")

    def build(degree: int) -> NurbsPatch3d:
        base = geometry.cylinder_sector(radius, thickness, 0.5 * length, 0.0, 0.5 * np.pi)
        return geometry.discretize(base, degree, (n_elems, n_elems, 1))

    return BenchmarkCase(
        name="cylinder", build_patch=build, material=material_matrix(3e6, 0.3),
        supports=[Support(0, 1, (1, 2)),   # rigid diaphragm
                  Support(0, 0, (0,)),     # plane x = 0
                  Support(1, 0, (1,)),     # plane y = 0
                  Support(1, 1, (2,))],    # plane z = 0
        loads=[PointLoad((0.0, 0.0, 0.5), (0.0, 0.0, -0.25 * force))],
        measure_point=(0.0, 0.0, 0.5), measure_direction=(0.0, 0.0, -1.0),
        reference=CYLINDER_REFERENCE, n_elems=n_elems, slenderness=radius / thickness)


def make_case(name: str, n_elems: int | None = None, slenderness: float | None = None,
              distortion_deg: float = 0.0) -> BenchmarkCase:
    kw = {} if n_elems is None else {"n_elems": n_elems}
    if name == "straight":
        return straight_beam(slenderness=slenderness or 100.0, distortion_deg=distortion_deg, **kw)
    if distortion_deg:
        raise ValueError("mesh distortion is only defined for the straight beam")
    if name == "curved":
        return curved_beam(slenderness=slenderness or 100.0, **kw)
    if slenderness is not None:
        raise ValueError(f"slenderness is fixed for the {name} problem")
    if name == "scordelis":
        return scordelis_lo(**kw)
    if name == "hemisphere":
        return pinched_hemisphere(**kw)
    if name == "cylinder":
        return pinched_cylinder(**kw)
    raise ValueError(f"unknown benchmark {name!r}; expected one of {BENCHMARKS}")


def solve_case(case: BenchmarkCase, formulation, degree: int = 2):
    """Assemble and solve; returns ``(patch, system, dofmap)``."""
    form = Formulation.parse(formulation)
    patch = case.patch(degree)
    dofmap = case.dofmap(patch)
    try:
        system = assemble(patch, form, case.material.D, dofmap,
                          hierarchical_thickness=thickness_basis_available(patch))
    except SingularGeometryError as exc:
        raise SingularGeometryError(f"{case.name}: {exc}", exc.det_j) from exc
    system.F = case.load_vector(patch)
    solve(system, dofmap)
    return patch, system, dofmap


def run(case: BenchmarkCase, formulation, degree: int = 2) -> RunResult:
    """Solve ``case`` with one formulation and degree and measure the deflection."""
    form = Formulation.parse(formulation)
    t0 = time.perf_counter()
    patch, system, dofmap = solve_case(case, form, degree)
    u = evaluate_displacement(patch, system.U, case.measure_point)
    raw = float(u @ np.asarray(case.measure_direction))
    elapsed = time.perf_counter() - t0
    return RunResult(case.name, form.value, degree, case.n_elems, case.slenderness,
                     case.distortion_deg, raw, raw / case.reference if case.reference else float("nan"),
                     elapsed,
                     n_dofs=dofmap.n_free, residual=residual(system, dofmap))
