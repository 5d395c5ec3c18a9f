import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from instances import rand_c, rand_invertible, rand_series, rand_u0, series_from_list
from segrejet.series_core import (
    Jet,
    Scalar,
    Series,
    coefficient_in,
    compose,
    conjugate_series,
    derivative,
    evaluate,
    faa_di_bruno,
    homogeneous_part,
    invert_map,
    jet_pushforward,
    linear_part_matrix,
    multi_indices,
    norm_one,
    reciprocal,
    rename,
    stack,
)

SETTINGS = settings(max_examples=25, deadline=None)


def naive_expand(f: Series, g: Series, D):
    """Compose by expanding every monomial of f as a plain product of the components of g."""
    n = g.nvars
    out = []
    for c in range(f.ncomps):
        acc = Series.zero(n, 1, D)
        for e, v in f.terms(c):
            term = Series.constant(v.pair, n, D)
            for j, p in enumerate(e):
                for _ in range(p):
                    term = term * g.component(j).truncate(D)
            acc = acc + term
        out.append(acc)
    return stack(out)


# --------------------------------------------------------------------------
# construction and basic structure


def test_homogeneous_part_picks_out_one_degree():
    f = Series(2, 1, 4, [{(1, 0): 1, (1, 1): 1}])
    assert homogeneous_part(f, 2) == Series(2, 1, 4, [{(1, 1): 1}])
    assert homogeneous_part(f, 0).is_zero()


def test_homogeneous_parts_reassemble_the_series():
    rng = random.Random(3)
    f = rand_series(rng, 3, 2, 6)
    acc = Series.zero(3, 2, 6)
    for d in range(7):
        acc = acc + homogeneous_part(f, d)
    assert acc == f


def test_terms_beyond_truncation_are_dropped():
    f = Series(1, 1, 2, [{(1,): 1, (3,): 5}])
    assert f.max_degree() == 1


def test_group_caps_bound_the_degree_in_a_variable_group():
    caps = (((1,), 1),)
    x = Series.variable(2, 0, 6, caps)
    y = Series.variable(2, 1, 6, caps)
    p = (x + y) ** 3
    assert all(e[1] <= 1 for e, _ in p.terms())
    assert p.coeff((2, 1)) == Scalar(3)


def test_scalar_arithmetic_is_exact():
    a = Scalar(Fraction(1, 3), 2)
    b = Scalar(-1, Fraction(1, 2))
    assert (a * b) / b == a
    assert (a + b).conj() == a.conj() + b.conj()
    assert Scalar(0, 1) ** 2 == Scalar(-1)


def test_json_round_trip_reproduces_the_series():
    rng = random.Random(5)
    f = rand_series(rng, 2, 3, 5)
    assert Series.from_json(f.to_json(), 2, 5) == f


# --------------------------------------------------------------------------
# ring axioms


@st.composite
def series_triples(draw):
    seed = draw(st.integers(0, 10 ** 6))
    n = draw(st.integers(1, 3))
    D = draw(st.integers(0, 5))
    rng = random.Random(seed)
    return tuple(rand_series(rng, n, 1, D, density=0.4) for _ in range(3))


@SETTINGS
@given(series_triples())
def test_multiplication_is_associative_and_commutative(t):
    f, g, h = t
    assert (f * g) * h == f * (g * h)
    assert f * g == g * f


@SETTINGS
@given(series_triples())
def test_multiplication_distributes_over_addition(t):
    f, g, h = t
    assert f * (g + h) == f * g + f * h
    assert (f - f).is_zero()


@SETTINGS
@given(series_triples())
def test_conjugation_is_a_ring_involution(t):
    f, g, _ = t
    assert conjugate_series(f * g) == conjugate_series(f) * conjugate_series(g)
    assert conjugate_series(conjugate_series(f)) == f


def test_reciprocal_inverts_units():
    rng = random.Random(8)
    for _ in range(5):
        f = rand_series(rng, 2, 1, 6, 1) + Series.constant((2, 1), 2, 6)
        assert reciprocal(f) * f == Series.constant(1, 2, 6)


def test_reciprocal_rejects_non_units():
    with pytest.raises(ZeroDivisionError):
        reciprocal(Series.variable(1, 0, 3))


# --------------------------------------------------------------------------
# composition


def test_compose_square_of_sum():
    f = Series(1, 1, 2, [{(2,): 1}])
    g = Series(2, 1, 2, [{(1, 0): 1, (0, 1): 1}])
    assert compose(f, g) == Series(2, 1, 2, [{(2, 0): 1, (1, 1): 2, (0, 2): 1}])


def test_compose_matches_direct_expansion():
    rng = random.Random(11)
    for _ in range(8):
        f = rand_series(rng, 2, 2, 5, density=0.5)
        g = rand_series(rng, 2, 2, 5, 1, density=0.5)
        assert compose(f, g) == naive_expand(f, g, 5)


def test_compose_rejects_constant_inner_terms():
    with pytest.raises(ValueError):
        compose(Series.variable(1, 0, 2), Series.constant(1, 1, 2))


@SETTINGS
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_compose_is_associative(seed, n):
    rng = random.Random(seed)
    D = 4
    f = rand_series(rng, n, 1, D, density=0.4)
    g = rand_series(rng, n, n, D, 1, density=0.4)
    h = rand_series(rng, n, n, D, 1, density=0.4)
    assert compose(compose(f, g), h) == compose(f, compose(g, h))


def test_compose_relabels_bare_variables_without_multiplying():
    rng = random.Random(2)
    f = rand_series(rng, 3, 1, 5)
    g = stack([Series.variable(3, 2, 5), Series.variable(3, 0, 5), Series.variable(3, 1, 5) * (0, 1)])
    assert compose(f, g) == naive_expand(f, g, 5)


@SETTINGS
@given(st.integers(0, 10 ** 6), st.integers(1, 3), st.integers(1, 10))
def test_invert_map_round_trip(seed, n, D):
    rng = random.Random(seed)
    D = min(D, {1: 10, 2: 7, 3: 5}[n])
    u = rand_u0(rng, n, D)
    v = invert_map(u)
    ident = Series.identity(n, D)
    assert compose(u, v) == ident
    assert compose(v, u) == ident


def test_invert_map_with_a_quadratic_term():
    z1, z2 = Series.variables(2, 8)
    u = stack([z2, z1 + z1 * z1])
    assert compose(u, invert_map(u)) == Series.identity(2, 8)


def test_invert_map_rejects_a_singular_linear_part():
    z1, z2 = Series.variables(2, 3)
    with pytest.raises((ValueError, ZeroDivisionError)):
        invert_map(stack([z1, z1 + z2 * z2]))


# --------------------------------------------------------------------------
# calculus and restructuring


def test_derivative_of_a_monomial():
    f = Series(2, 1, 4, [{(2, 1): 3}])
    assert derivative(f, 0) == Series(2, 1, 3, [{(1, 1): 6}]).extend(3)


def test_evaluate_at_a_point():
    f = Series(2, 1, 3, [{(1, 0): 1, (1, 1): (0, 1)}])
    assert evaluate(f, [(2, 0), (3, 0)]) == [(2, 6)]


def test_linear_part_matrix_reads_the_jacobian_at_zero():
    L = [[(1, 0), (2, 1)], [(0, 0), (3, 0)]]
    f = Series.linear(L, 3) + Series(2, 2, 3, [{(2, 0): 1}, {}])
    assert [[Scalar.coerce(x) for x in row] for row in linear_part_matrix(f)] == \
        [[Scalar.coerce(x) for x in row] for row in L]


def test_rename_swaps_variables():
    f = Series(2, 1, 3, [{(2, 1): 1}])
    assert rename(f, 2, [1, 0]) == Series(2, 1, 3, [{(1, 2): 1}])


def test_coefficient_in_extracts_a_slice():
    f = Series(3, 1, 5, [{(1, 2, 0): 4, (0, 2, 1): 1, (1, 0, 0): 7}])
    got = coefficient_in(f, [1, 2], (2, 0))
    assert got.nvars == 1
    assert got.terms() == [((1,), Scalar(4))]


def test_multi_indices_enumerates_a_degree():
    assert sorted(multi_indices(2, 2)) == [(0, 2), (1, 1), (2, 0)]


def test_jet_pushforward_is_composition_with_the_linear_map():
    rng = random.Random(4)
    f = rand_series(rng, 2, 2, 4, 1)
    N = rand_invertible(rng, 2)
    j = jet_pushforward(N, 4, Jet(f, 4))
    assert j.series == compose(f, Series.linear(N, 4))


# --------------------------------------------------------------------------
# combinatorics and norms


def test_faa_di_bruno_matches_univariate_composition():
    rng = random.Random(12)
    for _ in range(10):
        r = 9
        g = [rand_c(rng) for _ in range(r + 1)]
        h = [(0, 0)] + [rand_c(rng) for _ in range(r)]
        comp = compose(series_from_list(g, r), series_from_list(h, r))
        for k in range(1, r + 1):
            assert faa_di_bruno(g, h, k) == comp.coeff((k,))


def test_faa_di_bruno_by_hand():
    # exp-like toy: g = 1 + t + t^2, h = t + t^2; coefficient of t^2 is 1 + 1 = 2
    assert faa_di_bruno([1, 1, 1], [0, 1, 1], 2) == Scalar(2)


def test_norm_one_uses_the_modulus_surrogate():
    assert norm_one(Series(1, 1, 1, [{(1,): (1, 1)}])) == 2
    assert norm_one(Series.zero(2, 1, 3)) == 0


@SETTINGS
@given(st.integers(0, 10 ** 6))
def test_norm_one_is_submultiplicative(seed):
    rng = random.Random(seed)
    f = rand_series(rng, 2, 1, 6, density=0.5)
    g = rand_series(rng, 2, 1, 6, density=0.5)
    # untruncated product: give the product room for every term
    F, G = f.extend(12), g.extend(12)
    assert norm_one(F * G) <= norm_one(f) * norm_one(g)


def test_variable_products_cover_all_exponents():
    x, y = Series.variables(2, 4)
    s = (x + y) ** 4
    binom = {0: 1, 1: 4, 2: 6, 3: 4, 4: 1}
    for a, b in product(range(5), repeat=2):
        if a + b == 4:
            assert s.coeff((a, b)) == Scalar(binom[a])
