import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from iga_solidshell.projection import appendix_constants, build_projector, space_11
from iga_solidshell.quadrature import element_rule, gauss_legendre, tensor_rule


def sympy_gauss(n):
    """Independent oracle: roots of P_n and w_i = 2 / ((1 - x^2) P_n'(x)^2)."""
    x = sympy.Symbol("x")
    Pn = sympy.legendre(n, x)
    dP = sympy.diff(Pn, x)
    roots = sorted(float(r) for r in sympy.Poly(Pn, x).nroots(n=30))
    w = [float(2 / ((1 - r**2) * dP.subs(x, r) ** 2)) for r in roots]
    return np.array(roots), np.array(w)


def test_one_point():
    g = gauss_legendre(1)
    np.testing.assert_allclose(g.points, [0.0])
    np.testing.assert_allclose(g.weights, [2.0])


def test_two_points():
    g = gauss_legendre(2)
    np.testing.assert_allclose(g.points, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(g.weights, [1, 1], atol=1e-15)


def test_three_points():
    g = gauss_legendre(3)
    np.testing.assert_allclose(g.points, [-np.sqrt(0.6), 0, np.sqrt(0.6)], atol=1e-15)
    np.testing.assert_allclose(g.weights, [5 / 9, 8 / 9, 5 / 9], atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 7, 10, 16])
def test_matches_legendre_oracle(n):
    x, w = sympy_gauss(n)
    g = gauss_legendre(n)
    np.testing.assert_allclose(g.points, x, atol=1e-14)
    np.testing.assert_allclose(g.weights, w, atol=1e-14)


@pytest.mark.parametrize("n", range(1, 17))
def test_invariants(n):
    g = gauss_legendre(n)
    assert abs(g.weights.sum() - 2) < 1e-14
    np.testing.assert_array_equal(g.points, -g.points[::-1])
    assert np.all(g.weights > 0)


@pytest.mark.parametrize("n", [0, 17, -1])
def test_out_of_range(n):
    with pytest.raises(ValueError):
        gauss_legendre(n)


@given(n=st.integers(1, 10), seed=st.integers(0, 2**16))
def test_polynomial_exactness(n, seed):
    coef = np.random.default_rng(seed).standard_normal(2 * n)
    g = gauss_legendre(n)
    poly = np.polynomial.Polynomial(coef)
    exact = poly.integ()(1) - poly.integ()(-1)
    assert abs(g.weights @ poly(g.points) - exact) < 1e-12 * max(1, np.abs(coef).sum())


def test_tensor_single_point():
    r = tensor_rule([gauss_legendre(1)] * 3)
    np.testing.assert_allclose(r.points, [[0, 0, 0]])
    np.testing.assert_allclose(r.weights, [8])


def test_tensor_ordering_first_direction_fastest():
    r = tensor_rule([gauss_legendre(2)] * 3)
    a = 1 / np.sqrt(3)
    assert len(r) == 8
    np.testing.assert_allclose(r.points[0], [-a, -a, -a])
    np.testing.assert_allclose(r.points[1], [a, -a, -a])
    np.testing.assert_allclose(r.points[2], [-a, a, -a])
    np.testing.assert_allclose(r.points[4], [-a, -a, a])
    assert abs(r.weights.sum() - 8) < 1e-14


def test_tensor_mixed_counts():
    r = tensor_rule([gauss_legendre(2), gauss_legendre(3), gauss_legendre(1)])
    assert r.shape == (2, 3, 1)
    gx, gy = gauss_legendre(2), gauss_legendre(3)
    for iy in range(3):
        for ix in range(2):
            q = ix + 2 * iy
            np.testing.assert_allclose(r.points[q], [gx.points[ix], gy.points[iy], 0.0])


def test_ordering_is_load_bearing():
    """Swapping to eta-fastest ordering breaks the closed-form block match."""
    rule = element_rule(2)
    P = build_projector(2, space_11(2)).matrix
    block = appendix_constants(2)["11"]
    assert np.abs(P[:9, :9] - block).max() < 1e-13
    perm = np.arange(27).reshape(3, 3, 3).transpose(0, 2, 1).ravel()
    assert np.abs(P[perm][:, perm][:9, :9] - block).max() > 0.1
    assert len(rule) == 27
