"""Self-checks behind ``iga-solidshell verify``.

Each check returns a :class:`CheckResult`; :func:`run_checks` collects them.
The closed-form projector blocks can be swapped for a perturbed copy through
the ``constants`` argument, which is how the sensitivity of the projector
check is tested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import (Formulation, PatchElements, b_cartesian, b_curvilinear_rows,
                       material_matrix, stiffness)
from .projection import (appendix_constants, build_projector, projectors_for_degree, space_11,
                         space_12, space_22)
from .splines import KnotVector, NurbsPatch3d, elevate_to

SPACES = {"11": space_11, "22": space_22, "12": space_12}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


# --- random test geometries ---------------------------------------------------

def random_element(rng: np.random.Generator, degree: int = 2, amplitude: float = 0.15,
                   rational: bool = True) -> NurbsPatch3d:
    """Single Bezier element: perturbed unit cube with random weights."""
    kv = KnotVector(degree, [0.0] * (degree + 1) + [1.0] * (degree + 1))
    g = np.linspace(0.0, 1.0, degree + 1)
    cp = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1)
    cp = cp * np.array([2.0, 1.5, 0.4]) + amplitude * rng.uniform(-1, 1, cp.shape) * 0.4
    w = rng.uniform(0.8, 1.2, cp.shape[:3]) if rational else None
    return NurbsPatch3d(kv, kv, kv, cp, w)


def distorted_patch(rng: np.random.Generator, degree: int = 2, n_elems=(2, 2, 1),
                    amplitude: float = 0.2) -> NurbsPatch3d:
    """Multi-element patch whose elements are randomly distorted hexahedra.

    Built trilinear (C0 between elements) with jittered interior vertices and
    then elevated, so every element map stays trilinear.
    """
    axes = [np.linspace(0.0, s, n + 1) for s, n in zip((2.0, 1.5, 0.5), n_elems)]
    cp = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    h = min(a[1] - a[0] for a in axes)
    cp = cp + amplitude * h * rng.uniform(-1, 1, cp.shape)
    kvs = [KnotVector(1, np.r_[0.0, np.linspace(0, 1, n + 1), 1.0]) for n in n_elems]
    return elevate_to(NurbsPatch3d(*kvs, cp), degree)


def rigid_modes(points: np.ndarray) -> np.ndarray:
    """Three translations and three infinitesimal rotations, shape ``(3 n, 6)``."""
    n = len(points)
    modes = np.zeros((n, 3, 6))
    for c in range(3):
        modes[:, c, c] = 1.0
    x, y, z = points.T
    modes[:, :, 3] = np.stack([-y, x, 0 * x], axis=1)
    modes[:, :, 4] = np.stack([z, 0 * x, -x], axis=1)
    modes[:, :, 5] = np.stack([0 * x, -z, y], axis=1)
    return modes.reshape(3 * n, 6)


def _element_data(patch: NurbsPatch3d, formulation):
    pe = PatchElements(patch)
    kin = pe.kinematics()
    form = Formulation.parse(formulation)
    proj = projectors_for_degree(pe.degree) if form.projected else None
    return kin, proj


# --- checks -------------------------------------------------------------------

def check_closed_form(constants=None, tol: float = 1e-13) -> CheckResult:
    worst = 0.0
    for p in (1, 2):
        ref = constants[p] if constants is not None else appendix_constants(p)
        for key, space in SPACES.items():
            block = build_projector(p, space(p)).block
            worst = max(worst, float(np.abs(block - np.asarray(ref[key], float)).max()))
    return CheckResult("closed-form projector blocks", worst <= tol, f"max deviation {worst:.2e}")


def check_idempotence(tol: float = 1e-12) -> CheckResult:
    worst = 0.0
    for p in (1, 2, 3):
        for space in SPACES.values():
            P = build_projector(p, space(p)).matrix
            worst = max(worst, float(np.abs(P @ P - P).max()))
    return CheckResult("projector idempotence p=1..3", worst <= tol, f"max |P^2 - P| {worst:.2e}")


def check_frame_equivalence(n: int = 100, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        kin = PatchElements(random_element(rng)).kinematics()
        Bt = b_curvilinear_rows(kin)
        RB = kin.R @ b_cartesian(kin)
        worst = max(worst, float(np.linalg.norm(Bt - RB) / np.linalg.norm(Bt)))
    return CheckResult("curvilinear B = R B", worst <= tol, f"{n} random elements, max rel. error {worst:.2e}")


def check_curv_std(n: int = 20, seed: int = 1, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(seed)
    D = material_matrix(1.0, 0.3).D
    worst = 0.0
    for _ in range(n):
        kin = PatchElements(random_element(rng)).kinematics()
        ks = stiffness(Formulation.STD, kin, D)[0]
        kc = stiffness(Formulation.CURV, kin, D)[0]
        u = rng.standard_normal(ks.shape[0])
        worst = max(worst, abs(u @ kc @ u - u @ ks @ u) / abs(u @ ks @ u))
    return CheckResult("CURV energy = STD energy", worst <= tol, f"max rel. difference {worst:.2e}")


def check_rigid_modes(seed: int = 2, tol: float = 1e-9) -> CheckResult:
    rng = np.random.default_rng(seed)
    D = material_matrix(1.0, 0.3).D
    patch = random_element(rng)
    worst = 0.0
    for form in Formulation:
        kin, proj = _element_data(patch, form)
        k = stiffness(form, kin, D, proj)[0]
        nrm = np.linalg.norm(k, 2)
        X = patch.flat_control_points()
        Q, _ = np.linalg.qr(rigid_modes(X[kin.connectivity[0]]))
        worst = max(worst, float(np.abs(np.linalg.eigvalsh(Q.T @ k @ Q)).max() / nrm))
        ev = np.sort(np.abs(np.linalg.eigvalsh(k)))
        worst = max(worst, float(ev[5] / nrm))
    return CheckResult("rigid-body nullspace", worst <= tol,
                       f"all formulations, max rel. rigid eigenvalue {worst:.2e}")


def constant_strain_energy(patch: NurbsPatch3d, formulation, eps0: np.ndarray, D) -> tuple[float, float]:
    """``(u^T K u / 2, vol * eps0 : D : eps0 / 2)`` for ``u = eps0 x``."""
    from .assembly import assemble

    K = assemble(patch, formulation, D).K
    u = (patch.flat_control_points() @ eps0.T).ravel()
    vol = sum(float(kin.wdet.sum()) for kin in PatchElements(patch).chunks())
    e = np.array([eps0[0, 0], eps0[1, 1], eps0[2, 2], 2 * eps0[0, 1], 2 * eps0[0, 2], 2 * eps0[1, 2]])
    return 0.5 * float(u @ (K @ u)), 0.5 * vol * float(e @ D @ e)


def check_patch_test(seed: int = 3, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(seed)
    D = material_matrix(1.0, 0.3).D
    worst = 0.0
    for n_elems in ((1, 1, 1), (2, 2, 1), (3, 2, 2)):
        patch = distorted_patch(rng, 2, n_elems)
        A = rng.standard_normal((3, 3))
        eps0 = 0.5 * (A + A.T)
        for form in Formulation:
            got, ref = constant_strain_energy(patch, form, eps0, D)
            worst = max(worst, abs(got - ref) / abs(ref))
    return CheckResult("constant-strain patch test", worst <= tol,
                       f"distorted patches, all formulations, max rel. error {worst:.2e}")


def run_checks(constants=None) -> list[CheckResult]:
    return [check_closed_form(constants), check_idempotence(), check_frame_equivalence(),
            check_curv_std(), check_rigid_modes(), check_patch_test()]
