from fractions import Fraction

import pytest

from segrejet import catalog
from segrejet.cr_geometry import ManifoldNormalForm
from segrejet.jet_param import (
    PipelineError,
    first_segre_parametrize,
    prepare,
    reconstruct_from_jet,
    segre_map_two,
)
from segrejet.series_core import Jet, Series, compose, stack


@pytest.fixture(scope="module")
def heis():
    M = catalog.heisenberg(20)
    return M, prepare(M)


@pytest.fixture(scope="module")
def weighted():
    M0 = catalog.weighted(10)
    E = 4
    M = catalog.weighted(prepare(M0).degrees(E)["manifold_degree"])
    return M, prepare(M), E


def test_plan_of_the_heisenberg_group(heis):
    _, plan = heis
    assert plan.kappa == 1
    assert plan.jet_order == 2
    assert plan.segre_order == 2


def test_plan_of_the_weighted_hypersurface(weighted):
    _, plan, _ = weighted
    assert plan.kappa == 2
    assert plan.jet_order == 4
    assert len(plan.witness) == 2


def test_degree_budget_is_monotone(heis):
    _, plan = heis
    degs = [plan.degrees(E)["manifold_degree"] for E in range(1, 8)]
    assert degs == sorted(degs)
    assert plan.max_target(plan.degrees(5)["manifold_degree"]) == 5


def test_prepare_rejects_degenerate_and_higher_codimension_input():
    with pytest.raises(PipelineError):
        prepare(ManifoldNormalForm(1, 1, Series.variable(3, 2, 8)))
    with pytest.raises(PipelineError):
        prepare(ManifoldNormalForm(1, 2, Series(4, 2, 4, [{(0, 0, 1, 0): 1}, {(0, 0, 0, 1): 1}])))


@pytest.mark.parametrize("lam", [(1, 0), (2, 0), (1, 1), (0, Fraction(1, 3)), (-3, 2)])
def test_heisenberg_linear_maps_from_their_two_jets(heis, lam):
    M, plan = heis
    H = catalog.heisenberg_linear(lam, 12)
    rep = reconstruct_from_jet(M, Jet(H, 2), 6, plan=plan)
    assert rep.is_automorphism and rep.jet_agreement and rep.residual_zero
    assert rep.certified_degree >= 6
    assert rep.H == H.truncate(rep.certified_degree)


@pytest.mark.parametrize("lam,a,r", [((1, 0), (1, 0), 0), ((2, 1), (Fraction(1, 2), -1), 3),
                                     ((0, 1), (0, 2), -1)])
def test_heisenberg_mobius_maps_from_their_two_jets(heis, lam, a, r):
    M, plan = heis
    H = catalog.heisenberg_mobius(lam, a, r, 20)
    rep = reconstruct_from_jet(M, Jet(H, 2), 6, plan=plan)
    assert rep.is_automorphism and rep.jet_agreement and rep.residual_zero
    assert rep.H == H.truncate(rep.certified_degree)


def test_reconstruction_reads_only_the_two_jet(heis):
    M, plan = heis
    H = catalog.heisenberg_mobius((1, 0), (1, 0), 2, 20)
    z, w = Series.variables(2, 20)
    junk = stack([z ** 3 * 7 + w * w * z, w ** 3 * (0, 5)])
    a = reconstruct_from_jet(M, Jet(H, 2), 6, plan=plan)
    b = reconstruct_from_jet(M, Jet(H + junk, 2), 6, plan=plan)
    assert a.H == b.H


def test_jet_that_is_not_of_an_automorphism_is_flagged(heis):
    M, plan = heis
    # 2z, 2w has the wrong weight: no automorphism has this 1-jet
    rep = reconstruct_from_jet(M, Jet(Series.linear([[2, 0], [0, 2]], 4), 2), 4, plan=plan)
    assert not (rep.is_automorphism and rep.jet_agreement and rep.residual_zero)


def test_too_short_jet_is_rejected(heis):
    M, plan = heis
    with pytest.raises(PipelineError):
        reconstruct_from_jet(M, Jet(Series.identity(2, 4), 1), 4, plan=plan)


def test_singular_linear_part_is_rejected(heis):
    M, plan = heis
    with pytest.raises(PipelineError):
        reconstruct_from_jet(M, Jet(Series.linear([[0, 0], [0, 1]], 4), 2), 4, plan=plan)


@pytest.mark.parametrize("a,b", [((2, 0), (1, 0)), ((1, 1), (Fraction(3, 5), Fraction(4, 5))),
                                 ((Fraction(1, 2), 0), (0, 1))])
def test_weighted_linear_maps_from_their_four_jets(weighted, a, b):
    M, plan, E = weighted
    H = catalog.weighted_linear(a, b, 8)
    rep = reconstruct_from_jet(M, Jet(H, 4), E, plan=plan)
    assert rep.certified_degree == E
    assert rep.is_automorphism and rep.jet_agreement and rep.residual_zero
    assert rep.H == H.truncate(E)


def test_weighted_jet_with_non_unimodular_second_factor_is_flagged(weighted):
    M, plan, E = weighted
    rep = reconstruct_from_jet(M, Jet(catalog.weighted_linear((1, 0), (2, 0), 8), 4), E, plan=plan)
    assert not (rep.is_automorphism and rep.jet_agreement and rep.residual_zero)


def test_first_step_recovers_the_map_along_the_first_segre_set(heis):
    M, plan = heis
    H = catalog.heisenberg_mobius((1, 0), (1, 0), 0, 20)
    s1 = first_segre_parametrize(plan, Jet(H, 2), 6)
    assert s1.residual_zero
    # at m = 0 the data is H(t, 0)
    t = Series.variable(1, 0, 6)
    expected = compose(H.truncate(6), stack([t, Series.zero(1, 1, 6)]))
    got = s1.taylor(0)
    D = min(got.trunc, 6)
    assert got.truncate(D) == expected.truncate(D)


def test_second_segre_map_of_the_heisenberg_group():
    v2 = segre_map_two(catalog.heisenberg(6), 6)
    assert v2.ncomps == 2 and v2.nvars == 2
    assert v2.coeff((1, 1), 1).pair == (0, 2)


def test_report_serializes(heis):
    M, plan = heis
    rep = reconstruct_from_jet(M, Jet(catalog.heisenberg_linear((2, 0)), 2), 3, plan=plan)
    obj = rep.to_json_obj()
    assert obj["certified_degree"] == 3 and obj["is_automorphism"]
    assert Series.from_json_obj(obj["series"], 2, 3) == rep.H
