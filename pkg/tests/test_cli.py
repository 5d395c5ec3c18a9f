import io
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from segrejet import catalog
from segrejet.cli import run, series_from_json
from segrejet.cr_geometry import ManifoldError
from segrejet.dsl import DimensionError, ParseError, evaluate, parse_input, to_text
from segrejet.series_core import Series

HEIS = "graph n=1 d=1: Im(w) = z*conj(z)\n"
WEIGHTED = "graph n=2 d=1: Im(w) = z1*conj(z1) + Re(w)*z2*conj(z2)\n"
SOLVE = "series n=2\nA = [z1^2, z1*z2 + z2^3]\nu0 = [z1 + z2^2, 2*z2 - z1^2]\n"
NO_SOLUTION = "series n=2\nTheta = [[z1, 0], [0, z2]]\nb = [z2, z1]\n"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def doc(tmp_path):
    def write(text, name="in.txt"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


# --------------------------------------------------------------------------
# the document language


def test_parse_graph_document():
    d = parse_input(WEIGHTED)
    assert (d.mode, d.n, d.d) == ("graph", 2, 1)
    assert d.graph_phi() == catalog.weighted_phi()


def test_complex_document_gives_the_same_manifold_as_the_graph():
    d = parse_input("complex n=1 d=1: w = conj(w) + 2*i*z*conj(z)")
    assert d.complex_q(6) == catalog.heisenberg(6).Q


def test_canonical_text_is_a_fixed_point():
    for text in (HEIS, WEIGHTED, SOLVE, NO_SOLUTION, "jet n=1 d=1 degree=4: H = [2*z - (1/3)*z^2, 4*w]"):
        c = parse_input(text).canonical()
        assert parse_input(c).canonical() == c


def test_comments_semicolons_and_header_options():
    d = parse_input("series n=1 degree=5 seed=3  # header\nA = [z^2]; u0 = [z + z^3]\n")
    assert d.options == {"degree": 5, "seed": 3}
    assert [lhs for lhs, _ in d.statements] == ["A", "u0"]


def test_parse_error_carries_line_and_column():
    with pytest.raises(ParseError) as e:
        parse_input("series n=1\nA = [z^2,, z]\n")
    assert (e.value.line, e.value.col) == (2, 10)


def test_non_rational_literal_is_rejected():
    with pytest.raises(ParseError, match="non-rational"):
        parse_input("series n=1\nA = [1.5*z]\n")


@pytest.mark.parametrize("text", [
    "series n=1\nA = [z2]\n",
    "graph n=1 d=1: Im(w2) = z*conj(z)\n",
    "series n=1\nA = [conj(z)]\n",
    "jet n=1 d=1: H = [conj(w), w]\n",
])
def test_dimension_errors(text):
    with pytest.raises(DimensionError):
        parse_input(text)


def test_graph_reality_is_checked_at_parse_time():
    with pytest.raises(ManifoldError, match="reality"):
        parse_input("graph n=1 d=1: Im(w) = i*z*conj(z)\n")


@st.composite
def expressions(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        kind = draw(st.sampled_from(["num", "var", "i"]))
        if kind == "num":
            q = Fraction(draw(st.integers(0, 9)), draw(st.integers(1, 4)))
            return ("num", q)
        if kind == "i":
            return ("i",)
        return ("var", "z", draw(st.integers(1, 2)))
    kind = draw(st.sampled_from(["add", "mul", "pow"]))
    if kind == "add":
        terms = draw(st.lists(expressions(depth=depth - 1), min_size=2, max_size=3))
        signs = [1] + draw(st.lists(st.sampled_from([1, -1]), min_size=len(terms) - 1,
                                    max_size=len(terms) - 1))
        return ("add", tuple(zip(signs, terms)))
    if kind == "mul":
        return ("mul", tuple(draw(st.lists(expressions(depth=depth - 1), min_size=2, max_size=3))))
    return ("pow", draw(expressions(depth=depth - 1)), draw(st.integers(0, 3)))


@settings(max_examples=60, deadline=None)
@given(expressions())
def test_print_then_parse_preserves_meaning(node):
    env = {"mode": "series", "n": 2, "d": 0}
    text = f"series n=2\nf = {to_text(node)}\n"
    back = parse_input(text).get("f")
    assert evaluate(back, env, 2, 6) == evaluate(node, env, 2, 6)
    # printing is idempotent after one round
    assert to_text(parse_input(f"series n=2\nf = {to_text(back)}\n").get("f")) == to_text(back)


# --------------------------------------------------------------------------
# commands


def test_analyze_weighted_hypersurface(doc):
    code, out, _ = call("analyze", doc(WEIGHTED))
    assert code == 0
    rep = json.loads(out)
    assert rep["kappa"] == 2


def test_analyze_rejects_a_non_normal_graph(doc):
    code, out, err = call("analyze", doc("graph n=1 d=1: Im(w) = z*conj(z) + Re(z)\n"))
    assert code == 1 and out == ""
    assert json.loads(err)["error"]["code"] == "manifold_error"


def test_parse_errors_exit_with_one(doc):
    code, _, err = call("analyze", doc("graph n=1 d=1: Im(w) = z*\n"))
    assert code == 1
    assert json.loads(err)["error"]["code"] == "parse_error"


def test_missing_file_is_an_io_error():
    code, _, err = call("analyze", "/nonexistent/file")
    assert code == 1 and json.loads(err)["error"]["code"] == "io_error"


def test_bad_usage_exits_with_one(capsys):
    assert run(["frobnicate"]) == 1


def test_solve_nonlinear_round_trip(doc):
    code, out, _ = call("solve", doc(SOLVE), "--degree", "5")
    assert code == 0
    rep = json.loads(out)
    assert rep["residual_zero"] and rep["kind"] == "nonlinear"
    u = series_from_json(rep)
    z1, z2 = Series.variables(2, 5)
    assert u.component(0) == z1 + z2 * z2
    assert u.component(1) == z2 * 2 - z1 * z1


def test_solve_without_a_solution_is_a_negative_verdict(doc):
    code, out, err = call("solve", doc(NO_SOLUTION), "--degree", "4")
    assert code == 2
    assert json.loads(out)["residual_zero"] is False
    assert "negative" in err


def test_segre_map_of_the_heisenberg_group(doc):
    code, out, _ = call("segre", doc(HEIS), "--j", "2", "--degree", "4")
    assert code == 0
    rep = json.loads(out)
    assert rep["complexification_identity"] is True
    assert series_from_json(rep) == Series(2, 2, 4, [{(0, 1): 1}, {(1, 1): (0, 2)}])


def test_reconstruct_from_a_jet_document(doc):
    jet = doc("jet n=1 d=1: H = [2*z, 4*w]\n", "jet.txt")
    code, out, _ = call("reconstruct", doc(HEIS), "--jet", jet, "--degree", "6")
    assert code == 0
    rep = json.loads(out)
    assert rep["certified_degree"] == 6
    assert series_from_json({"num_vars": 2, "trunc": 6, "series": rep["series"]}) == \
        catalog.heisenberg_linear((2, 0), 6)


def test_reconstruct_from_a_json_jet(doc):
    H = catalog.heisenberg_mobius((1, 0), (1, 0), 0, 4)
    jet = doc(json.dumps({"num_vars": 2, "trunc": 4, "series": H.to_json_obj()}), "jet.json")
    code, out, _ = call("reconstruct", doc(HEIS), "--jet", jet, "--degree", "4")
    assert code == 0 and json.loads(out)["is_automorphism"]


def test_reconstruct_flags_a_jet_of_no_automorphism(doc):
    jet = doc("jet n=1 d=1: H = [2*z, 2*w]\n", "jet.txt")
    code, _, _ = call("reconstruct", doc(HEIS), "--jet", jet, "--degree", "4")
    assert code == 2


def test_output_is_byte_identical_across_runs(doc):
    path = doc(WEIGHTED)
    assert call("analyze", path)[1] == call("analyze", path)[1]


def test_environment_overrides_the_default_and_flags_override_the_environment(doc, monkeypatch):
    path = doc(SOLVE)
    monkeypatch.setenv("SEGREJET_DEGREE", "3")
    assert json.loads(call("solve", path)[1])["trunc"] == 3
    assert json.loads(call("solve", path, "--degree", "4")[1])["trunc"] == 4


def test_bad_environment_value_is_a_usage_error(doc, monkeypatch):
    monkeypatch.setenv("SEGREJET_SEED", "many")
    code, _, err = call("analyze", doc(HEIS))
    assert code == 1 and json.loads(err)["error"]["code"] == "usage_error"


def test_out_flag_writes_the_report(doc, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = call("analyze", doc(HEIS), "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["kappa"] == 1


def test_text_format(doc):
    code, out, _ = call("analyze", doc(HEIS), "--format", "text")
    assert code == 0
    assert "kappa: 1" in out


def test_text_format_errors(doc):
    code, _, err = call("analyze", doc("series n=1\nA = [z]\n"), "--format", "text")
    assert code == 1 and err.startswith("segrejet: error [dimension_error]")
