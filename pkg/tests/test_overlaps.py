"""Displaced-frame overlap integrals: closed form vs quadrature, the
normalized displacement matrix, and the diagonal ratio."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabispec.errors import InsufficientNodes, PrecisionError
from rabispec.overlaps import (
    OverlapResult,
    diagonal_overlap_ratio,
    displacement_matrix,
    overlap_closed,
    overlap_quadrature,
    required_nodes,
    weighted_norm_squared,
)
from test_specfun import lag_exact

# values frozen from a run cross-checked against quadrature and hand algebra
FROZEN_OVERLAPS = {
    (0, 0, 1.0): 0.6520493321732922,
    (0, 1, 1.0): 0.9221370088957892,
    (1, 1, 1.0): -0.6520493321732922,
    (2, 5, 0.5): 7.442625490765275,
    (3, 3, 2.0): -2.402308226329747,
    (10, 10, 1.0): -731296.7998083055,
    (7, 2, 0.3): -0.8798387907587474,
}

FROZEN_RATIOS = {
    (1, 1.0): -0.36787944117144233,
    (4, 1.0): 0.12262648039048078,
    (12, 0.5): -0.18040892014667445,
}


def test_closed_form_frozen_values():
    for (N, k, a), ref in FROZEN_OVERLAPS.items():
        assert overlap_closed(N, k, a) == pytest.approx(ref, rel=1e-13)


def test_closed_form_hand_checked_points():
    # O(0,0,a) = sqrt(pi) exp(-a^2), O(1,1,a) = sqrt(pi) exp(-a^2) L_1(2a^2)
    a = 1.0
    base = math.sqrt(math.pi) * math.exp(-1.0)
    assert overlap_closed(0, 0, a) == pytest.approx(base, rel=1e-15)
    assert overlap_closed(1, 1, a) == pytest.approx(base * (1 - 2.0), rel=1e-15)
    assert overlap_closed(0, 0, 0.0) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    # degree-(0,1) overlap is linear in a times the ground overlap
    assert overlap_closed(0, 1, a) / overlap_closed(0, 0, a) == pytest.approx(
        math.sqrt(2.0), rel=1e-14
    )


def test_closed_matches_quadrature_grid():
    for a in (0.3, 1.0, 2.0):
        for N in range(6):
            for k in range(6):
                c = overlap_closed(N, k, a)
                q = overlap_quadrature(N, k, a)
                assert q == pytest.approx(c, rel=1e-12, abs=1e-13)


def test_quadrature_node_threshold():
    assert required_nodes(3, 2) == 3
    assert required_nodes(0, 0) == 1
    with pytest.raises(InsufficientNodes):
        overlap_quadrature(3, 2, 0.5, nodes=2)
    # extra nodes change nothing beyond roundoff
    lo = overlap_quadrature(4, 3, 0.8)
    hi = overlap_quadrature(4, 3, 0.8, nodes=required_nodes(4, 3) + 9)
    assert hi == pytest.approx(lo, rel=1e-13)


def test_coefficient_scale_calibration():
    # the closed form's odd-degree scale factor is pinned by quadrature:
    # dividing it out would miss by a factor sqrt(2), far outside tolerance
    a = 1.0
    c = overlap_closed(0, 1, a)
    q = overlap_quadrature(0, 1, a)
    assert c == pytest.approx(q, rel=1e-13)
    assert abs(c / math.sqrt(2.0) - q) > 0.2 * abs(q)


def test_degree_cap_raises():
    with pytest.raises(PrecisionError):
        overlap_closed(61, 60, 0.5)
    with pytest.raises(ValueError):
        overlap_closed(-1, 0, 0.5)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=0, max_value=12),
    st.integers(min_value=0, max_value=12),
    st.integers(min_value=-32, max_value=32),
)
def test_overlap_antisymmetry(N, k, num):
    a = num / 16.0
    # exact integer core makes the swap relation hold bitwise
    assert overlap_closed(k, N, a) == (-1.0) ** (N + k) * overlap_closed(N, k, a)


def test_overlap_result_normalization():
    v = overlap_closed(1, 1, 1.0)
    res = OverlapResult(N=1, k=1, alpha=1.0, value=v, method="closed")
    assert res.normalized == pytest.approx(diagonal_overlap_ratio(1, 1.0), rel=1e-14)
    assert weighted_norm_squared(0) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert weighted_norm_squared(3) == pytest.approx(
        6.0 * math.sqrt(math.pi), rel=1e-15
    )


# ------------------------------------------------------- diagonal ratio


def test_diagonal_ratio_frozen_values():
    for (N, a), ref in FROZEN_RATIOS.items():
        assert diagonal_overlap_ratio(N, a) == pytest.approx(ref, rel=1e-13)


def test_diagonal_ratio_is_gaussian_laguerre():
    for N in (0, 1, 4, 12, 20):
        for a in (0.3, 0.5, 1.0):
            z = Fraction(2) * Fraction(a).limit_denominator(10 ** 12) ** 2
            ref = math.exp(-a * a) * float(lag_exact(N, z))
            assert diagonal_overlap_ratio(N, a) == pytest.approx(ref, rel=1e-11)


def test_diagonal_ratio_beyond_closed_form_cap():
    # degrees past the exact-arithmetic cap switch to direct evaluation
    v = diagonal_overlap_ratio(70, 0.5)
    ref = math.exp(-0.25) * float(lag_exact(70, Fraction(1, 2)))
    assert v == pytest.approx(ref, rel=1e-9)


# ---------------------------------------------------- displacement matrix


def test_displacement_matrix_zero_shift_is_identity():
    D = displacement_matrix(7, 0.0)
    assert np.array_equal(D, np.eye(8))


def test_displacement_matrix_matches_closed_form():
    a = 0.7
    D = displacement_matrix(6, a)
    for N in range(7):
        for k in range(7):
            ref = overlap_closed(N, k, a) / math.sqrt(
                weighted_norm_squared(N) * weighted_norm_squared(k)
            )
            assert D[N, k] == pytest.approx(ref, rel=1e-13, abs=1e-15)


def test_displacement_matrix_negative_shift_checkerboard():
    Dp = displacement_matrix(5, 0.8)
    Dm = displacement_matrix(5, -0.8)
    idx = np.arange(6)
    sign = (-1.0) ** (idx[:, None] + idx[None, :])
    assert np.array_equal(Dm, sign * Dp)


def test_displacement_matrix_swap_relation():
    D = displacement_matrix(9, 1.3)
    idx = np.arange(10)
    sign = (-1.0) ** (idx[:, None] + idx[None, :])
    assert np.max(np.abs(D.T - sign * D)) == 0.0


def test_displacement_matrix_leading_block_orthogonality():
    # truncation of an orthogonal matrix: the leading block of D^T D is
    # close to the identity once the cutoff clears the displacement scale
    D = displacement_matrix(80, 1.0)
    g = D.T @ D
    assert np.max(np.abs(g[:15, :15] - np.eye(15))) < 1e-10
    # column norms never exceed 1 by more than roundoff
    assert np.max(np.sum(D * D, axis=0)) < 1.0 + 1e-12


def test_displacement_matrix_high_degree_entries():
    # recurrence route vs exact closed form at degrees the cap still allows
    D = displacement_matrix(300, 1.0)
    for N, k in ((55, 60), (60, 60), (20, 100), (3, 117)):
        ref = overlap_closed(N, k, 1.0) / math.sqrt(
            weighted_norm_squared(N) * weighted_norm_squared(k)
        )
        assert D[N, k] == pytest.approx(ref, rel=1e-11, abs=1e-290)


def test_displacement_matrix_rejects_negative_cutoff():
    with pytest.raises(ValueError):
        displacement_matrix(-1, 0.5)
