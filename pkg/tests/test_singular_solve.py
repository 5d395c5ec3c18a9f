import random

import pytest
from hypothesis import given, settings, strategies as st

from instances import rand_c, rand_nonlinear_A, rand_series, rand_theta, rand_u0
from segrejet.linalg_homog import reduce_linear, reduce_nonlinear
from segrejet.series_core import Series, compose, linear_part_matrix, matvec, stack
from segrejet.singular_solve import (
    compose_matrix,
    solve_block_system,
    solve_linear,
    solve_linear_composed,
    solve_nonlinear,
    solve_nonlinear_tangent_identity,
)

SETTINGS = settings(max_examples=15, deadline=None)
ID2 = [[1, 0], [0, 1]]


def cubes(D):
    w1, w2 = Series.variables(2, D)
    return stack([w1 ** 3, w2 ** 3])


# --------------------------------------------------------------------------
# nonlinear


def test_tangent_identity_solver_on_its_own_map():
    A = cubes(12)
    u, missing = solve_nonlinear_tangent_identity(A, A, 9)
    assert not missing
    assert u == Series.identity(2, 9)


def test_tangent_identity_solver_recovers_a_germ_through_cubes():
    z1, z2 = Series.variables(2, 12)
    u0 = stack([z1 + z2 * z2, z2])
    A = cubes(12)
    u, missing = solve_nonlinear_tangent_identity(A, compose(A, u0), 9)
    assert not missing
    assert u == u0.truncate(9)


def test_tangent_identity_solver_flags_data_outside_the_image():
    z1, z2 = Series.variables(2, 12)
    A = cubes(12)
    # with u'(0) = id the cubic part of b must equal A itself
    b = stack([z1 ** 3 + z1 * z2 * z2 * 5, z2 ** 3])
    _, missing = solve_nonlinear_tangent_identity(A, b, 4)
    assert missing


def test_solve_nonlinear_returns_the_identity_for_b_equal_to_a():
    rng = random.Random(2)
    A = rand_nonlinear_A(rng, 2, 10)
    r = solve_nonlinear(A, A, ID2, 4)
    assert r.residual_zero
    assert r.u == Series.identity(2, 4)


def test_solve_nonlinear_through_the_reduction_path():
    z1, z2 = Series.variables(2, 20)
    A = stack([z1 * z1, z1 * z1 + z2 ** 3])
    rng = random.Random(4)
    u0 = rand_u0(rng, 2, 20)
    r = solve_nonlinear(A, compose(A, u0), linear_part_matrix(u0), 8)
    assert r.reduction.steps
    assert r.residual_zero and r.certified_degree == 8
    assert r.u == u0.truncate(8)


def test_solve_nonlinear_with_an_inconsistent_one_jet():
    z1, z2 = Series.variables(2, 14)
    A = stack([z1 * z1, z2 * z2])
    u0 = stack([z1 + z2 * z2, z2])
    # swapping the coordinates is not the 1-jet of any solution
    r = solve_nonlinear(A, compose(A, u0), [[0, 1], [1, 0]], 6)
    assert not r.residual_zero


@SETTINGS
@given(st.integers(0, 10 ** 6), st.integers(1, 2), st.integers(1, 6))
def test_nonlinear_round_trip(seed, n, D):
    rng = random.Random(seed)
    A = rand_nonlinear_A(rng, n, 10, reduce=bool(seed % 2))
    l0 = reduce_nonlinear(A)[1].ell0
    A = A.extend(D + l0)
    u0 = rand_u0(rng, n, D + l0)
    r = solve_nonlinear(A, compose(A, u0), linear_part_matrix(u0), D)
    assert r.residual_zero
    assert r.u == u0.truncate(D)
    # the degree-one part is always the prescribed matrix
    assert linear_part_matrix(r.u) == linear_part_matrix(u0)


@SETTINGS
@given(st.integers(0, 10 ** 6), st.integers(1, 5))
def test_nonlinear_solution_depends_only_on_the_needed_jet_of_b(seed, ell):
    rng = random.Random(seed)
    n = 2
    A = rand_nonlinear_A(rng, n, 10, reduce=bool(seed % 2))
    l0 = reduce_nonlinear(A)[1].ell0
    D = ell + 2
    A = A.extend(l0 + D)
    u0 = rand_u0(rng, n, l0 + D)
    b = compose(A, u0)
    noise = rand_series(rng, n, n, l0 + D, l0 + ell + 1, l0 + D, density=0.5)
    lam = linear_part_matrix(u0)
    u_a = solve_nonlinear(A, b, lam, D).u
    u_b = solve_nonlinear(A, b + noise, lam, D).u
    assert u_a.truncate(ell) == u_b.truncate(ell)


def test_solve_nonlinear_rejects_a_singular_lambda():
    A = cubes(10)
    with pytest.raises(ValueError):
        solve_nonlinear(A, A, [[1, 0], [0, 0]], 3)


def test_block_system_recovers_a_stacked_unknown():
    x1, x2, y = Series.variables(3, 14)
    A = stack([x1, x2 * x2 * x2, y * y])
    u0 = stack([x1 + x2 * y, x2, y + x1 * x1])
    r = solve_block_system(A, compose(A, u0), linear_part_matrix(u0), 6)
    assert r.residual_zero and r.u == u0.truncate(6)


def test_block_system_flags_an_inconsistent_stack():
    x1, x2 = Series.variables(2, 12)
    A = stack([x1, x2 * x2])
    b = stack([x1, x2 * x2 + x1 * x2 * x2 * 3 + x1 ** 3])
    r = solve_block_system(A, b, ID2, 5)
    assert not r.residual_zero


# --------------------------------------------------------------------------
# linear


def test_linear_identity_matrix_returns_b():
    rng = random.Random(1)
    one, zero = Series.constant(1, 2, 6), Series.zero(2, 1, 6)
    b = rand_series(rng, 2, 2, 6)
    r = solve_linear([[one, zero], [zero, one]], b, 6)
    assert r.residual_zero and r.u == b


def test_linear_diagonal_singular_matrix():
    z1, z2 = Series.variables(2, 8)
    one, zero = Series.constant(1, 2, 8), Series.zero(2, 1, 8)
    Theta = [[z1, zero], [zero, one]]
    u0 = stack([z1, one + z2])
    r = solve_linear(Theta, matvec(Theta, u0), 6)
    assert r.residual_zero and r.u == u0.truncate(6)


def test_linear_system_without_a_power_series_solution():
    z1, z2 = Series.variables(2, 8)
    zero = Series.zero(2, 1, 8)
    r = solve_linear([[z1, zero], [zero, z2]], stack([z2, z1]), 6)
    assert not r.residual_zero


def test_linear_composed_with_a_quadratic_change_of_variables():
    z1, z2 = Series.variables(2, 10)
    one, zero = Series.constant(1, 2, 10), Series.zero(2, 1, 10)
    Theta = [[z1, zero], [zero, one]]
    c = stack([z1 + z2 * z2, z2])
    u0 = stack([one + z2, z1])
    b = matvec(compose_matrix(Theta, c), u0)
    r = solve_linear_composed(Theta, c, b, 6)
    assert r.residual_zero and r.u == u0.truncate(6)


def test_linear_composed_with_identity_matches_the_plain_solver():
    rng = random.Random(3)
    Theta = rand_theta(rng, 2, 10)
    b = matvec(Theta, rand_series(rng, 2, 2, 10, 0, 3, density=0.5))
    a = solve_linear(Theta, b, 5)
    c = solve_linear_composed(Theta, Series.identity(2, 10), b, 5)
    assert a.u == c.u


def test_linear_composed_rejects_a_singular_change_of_variables():
    z1, z2 = Series.variables(2, 6)
    one, zero = Series.constant(1, 2, 6), Series.zero(2, 1, 6)
    with pytest.raises((ValueError, ZeroDivisionError)):
        solve_linear_composed([[one, zero], [zero, one]], stack([z1, z1 + z2 * z2]), stack([z1, z2]), 3)


@SETTINGS
@given(st.integers(0, 10 ** 6), st.integers(1, 3), st.integers(1, 6))
def test_linear_round_trip(seed, n, D):
    rng = random.Random(seed)
    D = min(D, 4) if n == 3 else D
    Theta = rand_theta(rng, n, D + 6)
    u0 = rand_series(rng, n, n, D + 6, 0, 3, density=0.4)
    r = solve_linear(Theta, matvec(Theta, u0), D)
    assert r.residual_zero
    assert r.u == u0.truncate(D)


@SETTINGS
@given(st.integers(0, 10 ** 6))
def test_linear_solutions_are_linear_in_b(seed):
    rng = random.Random(seed)
    Theta = rand_theta(rng, 2, 9)
    b1 = matvec(Theta, rand_series(rng, 2, 2, 9, 0, 3, density=0.4))
    b2 = matvec(Theta, rand_series(rng, 2, 2, 9, 0, 3, density=0.4))
    al, be = rand_c(rng), rand_c(rng)
    r1, r2 = solve_linear(Theta, b1, 4), solve_linear(Theta, b2, 4)
    r = solve_linear(Theta, b1 * al + b2 * be, 4)
    assert r1.residual_zero and r2.residual_zero
    assert r.u == r1.u * al + r2.u * be


@SETTINGS
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_linear_solution_depends_only_on_the_needed_jet_of_b(seed, ell):
    rng = random.Random(seed)
    Theta = rand_theta(rng, 2, 12)
    l0 = reduce_linear(Theta)[1].ell0
    D = ell + 2
    b = matvec(Theta, rand_series(rng, 2, 2, 12, 0, 3, density=0.4)).truncate(l0 + D)
    noise = rand_series(rng, 2, 2, l0 + D, l0 + ell + 1, l0 + D, density=0.5)
    assert solve_linear(Theta, b, D).u.truncate(ell) == solve_linear(Theta, b + noise, D).u.truncate(ell)
