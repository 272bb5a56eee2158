"""Discretized multiplication-minus-integration operator on the circle.

Oracles: geometric sums for the quadrature on constants, the continuum
limit zeta - 1, first-order error halving, and dense linear algebra for
the matrix path.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperlab import (
    CircleFunction,
    DegenerateAngleError,
    MatrixSizeError,
    apply_J,
    apply_M,
    apply_T,
    chi,
    eigen_residual,
    exact_eigenvector,
    func_norm,
    grid_angles,
    inner_product,
    kalish_matrix,
    kalish_solve,
    nearest_grid_index,
)
from hyperlab.seeding import complex_standard_normal, rng_for

TWO_PI = 2.0 * np.pi


def _random_function(seed: int, M: int) -> CircleFunction:
    rng = rng_for(seed, "kalish-test-function")
    return CircleFunction.from_values(complex_standard_normal(rng, M))


# -- grid and construction ---------------------------------------------

def test_grid_angles_are_left_endpoints():
    t = grid_angles(8)
    np.testing.assert_allclose(t, np.arange(8) * TWO_PI / 8)


def test_circle_function_round_trip():
    f = _random_function(0, 32)
    again = CircleFunction.from_dict(f.to_dict())
    assert again == f


def test_constant_factory():
    f = CircleFunction.constant(2.0 + 1.0j, 16)
    assert f.grid_size == 16
    assert np.all(f.values == 2.0 + 1.0j)


# -- multiplication operator -------------------------------------------

def test_apply_M_is_pointwise_rotation():
    f = _random_function(1, 64)
    out = apply_M(f)
    t = grid_angles(64)
    np.testing.assert_allclose(out.values, np.exp(1j * t) * f.values, atol=1e-15)


def test_apply_M_preserves_norm():
    f = _random_function(2, 128)
    assert func_norm(apply_M(f)) == pytest.approx(func_norm(f), abs=1e-12)


# -- quadrature operator -----------------------------------------------

def test_apply_J_constant_matches_geometric_sum():
    # independent oracle: i w sum_{j<k} e^{i j w} in closed form
    M = 256
    w = TWO_PI / M
    f = CircleFunction.constant(1.0, M)
    out = apply_J(f)
    k = np.arange(M)
    oracle = 1j * w * (np.exp(1j * k * w) - 1.0) / (np.exp(1j * w) - 1.0)
    oracle[0] = 0.0
    np.testing.assert_allclose(out.values, oracle, atol=1e-12)


def test_apply_J_constant_converges_to_zeta_minus_one():
    # continuum limit of the line integral from 0: e^{i theta} - 1
    errors = []
    for M in (256, 512, 1024):
        out = apply_J(CircleFunction.constant(1.0, M))
        t = grid_angles(M)
        errors.append(np.max(np.abs(out.values - (np.exp(1j * t) - 1.0))))
    assert errors[0] <= 2.0 * TWO_PI / 256
    # first-order scheme: error halves when the grid doubles
    assert errors[1] / errors[0] == pytest.approx(0.5, abs=0.1)
    assert errors[2] / errors[1] == pytest.approx(0.5, abs=0.1)


def test_apply_J_starts_at_zero():
    f = _random_function(3, 64)
    assert apply_J(f).values[0] == 0.0


# -- the operator itself -----------------------------------------------

def test_apply_T_fixes_constants_to_first_order():
    for M in (512, 1024, 2048):
        out = apply_T(CircleFunction.constant(1.0, M))
        err = np.max(np.abs(out.values - 1.0))
        # the max error is one bin width up to a second-order correction
        assert err <= 1.05 * TWO_PI / M, M


def test_apply_T_is_M_minus_J():
    f = _random_function(4, 128)
    direct = apply_T(f).values
    split = apply_M(f).values - apply_J(f).values
    np.testing.assert_allclose(direct, split, atol=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**20),
       st.complex_numbers(max_magnitude=5.0, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=5.0, allow_nan=False, allow_infinity=False))
def test_apply_T_linearity_exact(seedval, a, b):
    f = _random_function(seedval, 64)
    g = _random_function(seedval + 1, 64)
    combo = CircleFunction.from_values(a * f.values + b * g.values)
    lhs = apply_T(combo).values
    rhs = a * apply_T(f).values + b * apply_T(g).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**20))
def test_operator_norm_bound(seedval):
    # ||Tf|| <= (1 + 2 pi) ||f||: multiplier is unitary, quadrature is a
    # contraction times the circumference
    f = _random_function(seedval, 128)
    assert func_norm(apply_T(f)) <= (1.0 + TWO_PI) * func_norm(f) + 1e-12


def test_inner_product_conventions():
    f = CircleFunction.constant(1.0, 64)
    assert inner_product(f, f) == pytest.approx(TWO_PI)
    g = CircleFunction.from_values(1j * np.ones(64))
    # conjugate-linear in the first slot
    assert inner_product(g, f) == pytest.approx(-1j * TWO_PI)


# -- arc indicators ----------------------------------------------------

def test_chi_zero_is_zero_function():
    v = chi(0.0, 64)
    assert np.all(v.values == 0.0)


def test_chi_node_convention_strict_inequality():
    M = 8
    lam = grid_angles(M)[3]
    v = chi(lam, M)
    # the node at lam itself is excluded; later nodes are included
    assert v.values[3] == 0.0
    assert np.all(v.values[4:] == 1.0)
    assert np.all(v.values[:3] == 0.0)


def test_chi_norm_squared_approximates_arc_length():
    for M in (512, 1024):
        v = chi(np.pi, M)
        assert abs(func_norm(v) ** 2 - np.pi) <= TWO_PI / M + 1e-12


def test_chi_rejects_out_of_range():
    with pytest.raises(ValueError):
        chi(-0.1, 64)
    with pytest.raises(ValueError):
        chi(TWO_PI, 64)


# -- eigenvector residuals ---------------------------------------------

def test_eigen_residual_frozen_values():
    # regression anchors for the three reference angles
    assert eigen_residual(2 * np.pi / 3, 1024) == pytest.approx(3.027e-3, rel=1e-3)
    assert eigen_residual(np.pi, 1024) == pytest.approx(4.342e-3, rel=1e-3)
    assert eigen_residual(2 * np.pi * 0.811, 1024) == pytest.approx(3.243e-3, rel=1e-3)


def test_eigen_residual_small_at_reference_angle():
    assert eigen_residual(2 * np.pi / 3, 4096) <= 0.05


def test_eigen_residual_halves_with_grid():
    for lam in (2 * np.pi / 3, np.pi, 2 * np.pi * 0.811):
        prev = eigen_residual(lam, 1024)
        for M in (2048, 4096):
            cur = eigen_residual(lam, M)
            assert cur / prev <= 0.75, (lam, M)
            prev = cur


def test_eigen_residual_sixteen_point_set():
    # off-node angles so the arc indicator is a genuine approximation
    M = 512
    for k in range(16):
        lam = TWO_PI * (k + 0.5) / 16
        ratio = eigen_residual(lam, 2 * M) / eigen_residual(lam, M)
        assert ratio <= 0.75, k


def test_eigen_residual_rejects_degenerate():
    with pytest.raises(DegenerateAngleError):
        eigen_residual(0.0, 64)
    with pytest.raises(DegenerateAngleError):
        # arc beyond the last grid node captures nothing
        eigen_residual(TWO_PI - 1e-9, 64)


# -- dense matrix path -------------------------------------------------

def test_kalish_matrix_is_lower_triangular():
    mat = kalish_matrix(32)
    assert np.all(np.triu(mat, k=1) == 0.0)
    t = grid_angles(32)
    np.testing.assert_allclose(np.diag(mat), np.exp(1j * t), atol=1e-15)


def test_kalish_matrix_size_limit():
    with pytest.raises(MatrixSizeError):
        kalish_matrix(8192)


def test_matrix_agrees_with_operator():
    M = 256
    f = _random_function(7, M)
    mat = kalish_matrix(M)
    np.testing.assert_allclose(mat @ f.values, apply_T(f).values, atol=1e-12)


def test_solve_recovers_random_function():
    M = 512
    f = _random_function(8, M)
    b = apply_T(f)
    x = kalish_solve(b)
    assert np.max(np.abs(x.values - f.values)) <= 1e-6


def test_solve_matches_dense_solver():
    # oracle: numpy's general solver on the dense matrix
    M = 128
    b = _random_function(9, M)
    mat = kalish_matrix(M)
    oracle = np.linalg.solve(mat, b.values)
    x = kalish_solve(b)
    np.testing.assert_allclose(x.values, oracle, atol=1e-10)


# -- exact eigenvectors ------------------------------------------------

def test_exact_eigenvector_residual_is_machine_level():
    M = 512
    for k0 in (1, 37, 200, 511):
        v = exact_eigenvector(k0, M)
        lam = np.exp(1j * grid_angles(M)[k0])
        r = apply_T(v).values - lam * v.values
        rel = np.linalg.norm(r) / np.linalg.norm(v.values)
        assert rel <= 1e-12, k0


def test_exact_eigenvector_leading_zeros():
    v = exact_eigenvector(5, 64)
    assert np.all(v.values[:5] == 0.0)
    assert v.values[5] == 1.0


def test_exact_eigenvector_range_check():
    with pytest.raises(ValueError):
        exact_eigenvector(64, 64)
    with pytest.raises(ValueError):
        exact_eigenvector(-1, 64)


def test_nearest_grid_index_wraps():
    M = 64
    assert nearest_grid_index(0.0, M) == 0
    assert nearest_grid_index(TWO_PI - 1e-9, M) == 0
    assert nearest_grid_index(grid_angles(M)[17] + 1e-9, M) == 17
