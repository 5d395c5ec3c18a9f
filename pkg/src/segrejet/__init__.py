"""Exact jet parametrization of CR automorphisms along Segre sets.

The package is layered: ``series_core`` (truncated power series over Q(i)),
``linalg_homog`` (homogeneous-space linear algebra and reductions of singular
systems), ``singular_solve`` (degree-by-degree solvers), ``cr_geometry``
(normal forms, Segre maps, invariants), ``jet_param`` (reconstruction of
automorphisms from jets) and ``cli``.
"""

from .cr_geometry import ManifoldNormalForm, analyze, is_automorphism, normal_form_from_graph
from .jet_param import prepare, reconstruct_from_jet
from .series_core import Jet, Scalar, Series, compose, invert_map
from .singular_solve import solve_linear, solve_linear_composed, solve_nonlinear

__all__ = [
    "Jet", "ManifoldNormalForm", "Scalar", "Series", "analyze", "compose", "invert_map",
    "is_automorphism", "normal_form_from_graph", "prepare", "reconstruct_from_jet",
    "solve_linear", "solve_linear_composed", "solve_nonlinear",
]
__version__ = "0.1.0"
