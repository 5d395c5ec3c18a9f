import pytest

from segrejet import catalog
from segrejet.cr_geometry import (
    ManifoldError,
    ManifoldNormalForm,
    analyze,
    check_involution,
    check_normality,
    essential_finiteness_necessary_check,
    finite_nondegeneracy_order,
    holomorphic_nondegeneracy,
    is_automorphism,
    kappa,
    minimality_order,
    normal_form_from_complex,
    normal_form_from_graph,
    qbar_coefficient,
    segre_map,
    segre_pair_on_complexification,
)
from segrejet.series_core import Series, stack


def flat(D):
    return ManifoldNormalForm(1, 1, Series.variable(3, 2, D))


# --------------------------------------------------------------------------
# normal forms


def test_heisenberg_normal_form_is_tau_plus_2i_z_chi():
    M = catalog.heisenberg(8)
    assert M.Q == Series(3, 1, 8, [{(0, 0, 1): 1, (1, 1, 0): (0, 2)}])


def test_weighted_normal_form_matches_its_closed_form():
    D = 12
    assert catalog.weighted(D).Q == catalog.weighted_closed_form(D)


def test_graph_input_must_be_real():
    with pytest.raises(ManifoldError, match="reality"):
        normal_form_from_graph(Series(3, 1, 4, [{(2, 0, 0): 1}]), 1, 1, 4)


def test_graph_input_must_be_normal():
    # |z|^2 + Re(z) is real but not normal
    phi = Series(3, 1, 4, [{(1, 1, 0): 1, (1, 0, 0): "1/2", (0, 1, 0): "1/2"}])
    with pytest.raises(ManifoldError, match="normality"):
        normal_form_from_graph(phi, 1, 1, 4)


def test_complex_input_is_checked_for_involution():
    # Q = tau + z chi (no factor i) is not the complexification of a real hypersurface
    with pytest.raises(ManifoldError):
        normal_form_from_complex(Series(3, 1, 6, [{(0, 0, 1): 1, (1, 1, 0): 1}]), 1, 1).validate()


def test_normal_forms_satisfy_normality_and_involution():
    for M in (catalog.heisenberg(8), catalog.weighted(8), catalog.k_nondegenerate(3, 8),
              catalog.essentially_finite(3, 8)):
        assert check_normality(M)
        assert check_involution(M)


def test_qbar_coefficient_of_heisenberg():
    M = catalog.heisenberg(6)
    # Qbar(chi, z, w) = w - 2i chi z, so qbar_(1)(z, w) = -2i z
    q = qbar_coefficient(M, (1,))
    assert q.terms() == [((1, 0), q.coeff((1, 0)))]
    assert q.coeff((1, 0)).pair == (0, -2)


# --------------------------------------------------------------------------
# invariants


def test_heisenberg_invariants():
    M = catalog.heisenberg(8)
    assert kappa(M, 4) == 1
    assert finite_nondegeneracy_order(M, 4) == 1
    assert holomorphic_nondegeneracy(M, 4) == (True, 1)
    assert minimality_order(M) == 2


def test_weighted_hypersurface_invariants():
    r = analyze(catalog.weighted(8), kmax=6)
    assert r.kappa == 2
    assert r.ell_p == 4
    assert r.finite_nondeg_order is None
    assert r.minimality_k1 == 2
    assert r.class_c


@pytest.mark.parametrize("k", [2, 3, 4])
def test_k_nondegenerate_family(k):
    r = analyze(catalog.k_nondegenerate(k, 10), kmax=6)
    assert r.kappa == 1
    assert r.finite_nondeg_order == k


@pytest.mark.parametrize("k", [3, 4])
def test_essentially_finite_family(k):
    r = analyze(catalog.essentially_finite(k, 12), kmax=6)
    assert r.kappa == 2
    assert r.finite_nondeg_order is None
    assert not r.essentially_finite_screen["witness_found"]


def test_flat_hyperplane_is_degenerate_in_every_sense():
    r = analyze(flat(8), kmax=4)
    assert r.kappa is None
    assert r.finite_nondeg_order is None
    assert r.holo_nondeg is False
    assert r.minimality_k1 is None
    assert r.essentially_finite_screen["witness_found"]


def test_weighted_hypersurface_has_a_line_of_non_finiteness():
    passes, witness = essential_finiteness_necessary_check(catalog.weighted(10), 6)
    assert not passes
    assert witness["direction"] == [0, 1]
    assert witness["equations"] == ["z1 = 0"]


def test_analyze_report_serializes_deterministically():
    M = catalog.weighted(8)
    assert analyze(M).to_json(sort_keys=True) == analyze(M).to_json(sort_keys=True)


# --------------------------------------------------------------------------
# Segre maps


def test_heisenberg_second_segre_map():
    v2 = segre_map(catalog.heisenberg(6), 2, 6)
    assert v2 == Series(2, 2, 6, [{(0, 1): 1}, {(1, 1): (0, 2)}])


def test_first_segre_map_is_the_coordinate_plane():
    v1 = segre_map(catalog.weighted(6), 1, 6)
    assert v1 == Series(2, 3, 6, [{(1, 0): 1}, {(0, 1): 1}, {}])


@pytest.mark.parametrize("j", [1, 2, 3])
def test_segre_pairs_lie_on_the_complexification(j):
    for M in (catalog.heisenberg(8), catalog.weighted(8)):
        assert segre_pair_on_complexification(M, j, 8)


def test_minimality_of_the_weighted_hypersurface():
    assert minimality_order(catalog.weighted(8)) == 2


# --------------------------------------------------------------------------
# automorphisms


def test_heisenberg_dilations():
    M = catalog.heisenberg(8)
    assert is_automorphism(M, catalog.heisenberg_linear((2, 0)), 8)
    assert not is_automorphism(M, Series.linear([[2, 0], [0, 2]], 8), 8)
    assert is_automorphism(M, Series.identity(2, 8), 8)


def test_heisenberg_mobius_maps():
    M = catalog.heisenberg(10)
    for lam, a, r in [((1, 0), (1, 0), 0), ((2, 1), ("1/2", -1), 3), ((0, 1), (0, 2), -1)]:
        assert is_automorphism(M, catalog.heisenberg_mobius(lam, a, r, 10), 10)


def test_perturbed_mobius_map_is_rejected():
    M = catalog.heisenberg(8)
    H = catalog.heisenberg_mobius((1, 0), (1, 0), 0, 8)
    z, w = Series.variables(2, 8)
    assert not is_automorphism(M, H + stack([z * w * w, Series.zero(2, 1, 8)]), 8)


def test_weighted_hypersurface_linear_automorphisms():
    M = catalog.weighted(8)
    assert is_automorphism(M, catalog.weighted_linear((2, 0), ("3/5", "4/5")), 8)
    assert not is_automorphism(M, catalog.weighted_linear((2, 0), (2, 0)), 8)


def test_automorphism_check_rejects_singular_maps():
    with pytest.raises(ValueError):
        is_automorphism(catalog.heisenberg(4), Series.linear([[1, 0], [0, 0]], 4), 4)
