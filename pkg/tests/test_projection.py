from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iga_solidshell.projection import (ReducedSpace, appendix_constants, apply_projector,
                                       build_projector, expand_block, legendre_vandermonde,
                                       projectors_for_degree, space_11, space_12, space_22)
from iga_solidshell.quadrature import element_rule

SPACES = {"11": space_11, "22": space_22, "12": space_12}


@pytest.mark.parametrize("p", [1, 2])
@pytest.mark.parametrize("key", ["11", "22", "12"])
def test_general_construction_matches_closed_form(p, key):
    op = build_projector(p, SPACES[key](p))
    ref = appendix_constants(p)[key]
    if key == "12":
        np.testing.assert_allclose(op.matrix, expand_block(ref, p), atol=1e-13)
    else:
        np.testing.assert_allclose(op.block, ref, atol=1e-13)
        np.testing.assert_allclose(op.matrix, expand_block(ref, p), atol=1e-13)


def test_p1_blocks_exact():
    c = appendix_constants(1, exact=True)
    assert c["11"][0] == [Fraction(1, 2), Fraction(1, 2), 0, 0]
    assert c["22"] == [[Fraction(v, 2) for v in r] for r in
                       [[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1]]]
    assert all(v == Fraction(1, 4) for r in c["12"] for v in r)


def test_p2_first_rows():
    c = appendix_constants(2)
    np.testing.assert_allclose(c["11"][0], np.array([14, 8, -4, 0, 0, 0, 0, 0, 0]) / 18)
    np.testing.assert_allclose(c["22"][0], np.array([14, 0, 0, 8, 0, 0, -4, 0, 0]) / 18)
    np.testing.assert_allclose(build_projector(2, space_11(2)).block[0], np.array([14, 8, -4, 0, 0, 0, 0, 0, 0]) / 18,
                               atol=1e-15)


def test_p2_s12_rows_sum_to_one():
    c = appendix_constants(2, exact=True)
    assert all(sum(r) == 1 for r in c["12"])


@pytest.mark.parametrize("p", [0, 3, 4])
def test_closed_form_unsupported(p):
    with pytest.raises(ValueError):
        appendix_constants(p)


def test_apply_p1_s11_by_hand():
    op = build_projector(1, space_11(1))
    samples = np.r_[[1, 3, 5, 9], [1, 3, 5, 9]]
    np.testing.assert_allclose(apply_projector(op, samples), [2, 2, 7, 7, 2, 2, 7, 7], atol=1e-14)


def test_apply_length_mismatch():
    with pytest.raises(ValueError):
        apply_projector(build_projector(2, space_12(2)), np.ones(8))


def test_full_space_is_identity():
    for p in (1, 2, 3):
        op = build_projector(p, ReducedSpace((p, p, p)))
        np.testing.assert_allclose(op.matrix, np.eye((p + 1) ** 3), atol=1e-12)


def test_degree_above_p_rejected():
    with pytest.raises(ValueError):
        build_projector(1, ReducedSpace((2, 1, 1)))


def test_negative_degree_rejected():
    with pytest.raises(ValueError):
        ReducedSpace((-1, 1, 1))


def test_s11_projects_xi_squared_to_mean():
    """Best linear fit of xi^2 on [-1, 1] is the constant 1/3."""
    rule = element_rule(2)
    op = build_projector(2, space_11(2))
    out = apply_projector(op, rule.points[:, 0] ** 2)
    np.testing.assert_allclose(out, 1 / 3, atol=1e-14)


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("key", ["11", "22", "12"])
def test_operator_properties(p, key):
    op = build_projector(p, SPACES[key](p))
    P = op.matrix
    W = np.diag(element_rule(p).weights)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)
    np.testing.assert_allclose(W @ P, P.T @ W, atol=1e-13)
    np.testing.assert_allclose(P @ np.ones(op.n_q), 1.0, atol=1e-13)
    # reproduces its own space
    theta = legendre_vandermonde(element_rule(p).points, op.space.degrees)
    np.testing.assert_allclose(P @ theta, theta, atol=1e-12)
    assert np.linalg.matrix_rank(P, tol=1e-10) == op.space.dim


@given(p=st.integers(1, 3), seed=st.integers(0, 10**6))
def test_l2_orthogonality(p, seed):
    """Residual of the projection is W-orthogonal to the reduced space."""
    rule = element_rule(p)
    f = np.random.default_rng(seed).standard_normal(len(rule))
    for key, space in SPACES.items():
        op = build_projector(p, space(p))
        theta = legendre_vandermonde(rule.points, op.space.degrees)
        r = f - apply_projector(op, f)
        assert np.abs(theta.T @ (rule.weights * r)).max() < 1e-12


def test_block_none_when_third_direction_reduced():
    assert build_projector(2, ReducedSpace((1, 1, 1))).block is None


def test_operators_cached():
    assert projectors_for_degree(2) is projectors_for_degree(2)
    assert projectors_for_degree(2).degree == 2
