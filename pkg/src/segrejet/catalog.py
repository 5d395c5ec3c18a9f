"""Standard real hypersurfaces and automorphisms used by tests and demos.

Each manifold is given by its graph ``Im w = phi(z, conj z, Re w)`` and
converted to normal form through :func:`normal_form_from_graph`.
"""

from __future__ import annotations

from fractions import Fraction

from .cr_geometry import ManifoldNormalForm, normal_form_from_graph
from .series_core import Series, reciprocal, stack


def heisenberg_phi() -> Series:
    """``|z|^2`` on ``(z, chi, s)``."""
    return Series(3, 1, 2, [{(1, 1, 0): 1}])


def weighted_phi() -> Series:
    """``|z1|^2 + Re(w) |z2|^2``: of class C with kappa 2 but not essentially finite."""
    return Series(5, 1, 3, [{(1, 0, 1, 0, 0): 1, (0, 1, 0, 1, 1): 1}])


def k_nondegenerate_phi(k: int) -> Series:
    """``|z1|^2 + Re(z1 conj(z2)^k) + Re(z2 conj(z2)^k)``, finitely nondegenerate of order ``k``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    h = Fraction(1, 2)
    return Series(5, 1, k + 1, [{(1, 0, 1, 0, 0): 1, (1, 0, 0, k, 0): h, (0, k, 1, 0, 0): h,
                                 (0, 1, 0, k, 0): h, (0, k, 0, 1, 0): h}])


def essentially_finite_phi(k: int) -> Series:
    """``|z1|^2 + |z1 z2|^2 + |z2|^(2k)``: essentially finite, not finitely nondegenerate."""
    if k < 2:
        raise ValueError("k must be at least 2")
    return Series(5, 1, max(4, 2 * k), [{(1, 0, 1, 0, 0): 1, (1, 1, 1, 1, 0): 1, (0, k, 0, k, 0): 1}])


def heisenberg(D: int) -> ManifoldNormalForm:
    return normal_form_from_graph(heisenberg_phi().extend(D), 1, 1, D)


def weighted(D: int) -> ManifoldNormalForm:
    return normal_form_from_graph(weighted_phi().extend(D), 2, 1, D)


def k_nondegenerate(k: int, D: int) -> ManifoldNormalForm:
    return normal_form_from_graph(k_nondegenerate_phi(k).extend(D), 2, 1, D)


def essentially_finite(k: int, D: int) -> ManifoldNormalForm:
    return normal_form_from_graph(essentially_finite_phi(k).extend(D), 2, 1, D)


def weighted_closed_form(D: int) -> Series:
    """``Q`` of the weighted hypersurface, expanded from
    ``w (1 - i z2 chi2) = conj(w) (1 + i z2 chi2) + 2 i z1 chi1``."""
    v = Series.variables(5, D)
    z1, z2, c1, c2, tau = v
    u = z2 * c2 * (0, 1)
    inv = reciprocal(Series.constant(1, 5, D) - u)
    return (tau * (Series.constant(1, 5, D) + u) + z1 * c1 * (0, 2)) * inv


def heisenberg_linear(lam, D: int = 8) -> Series:
    """``(lam z, |lam|^2 w)``."""
    lam = (Fraction(lam[0]), Fraction(lam[1]))
    return Series.linear([[lam, 0], [0, lam[0] ** 2 + lam[1] ** 2]], D)


def heisenberg_mobius(lam, a, r, D: int) -> Series:
    """Heisenberg automorphism ``(lam (z + a w), |lam|^2 w) / delta`` with
    ``delta = 1 - 2i conj(a) z - (r + i|a|^2) w`` and real ``r``.

    Exact as a rational map; returned through degree ``D``."""
    lam = (Fraction(lam[0]), Fraction(lam[1]))
    a = (Fraction(a[0]), Fraction(a[1]))
    r = Fraction(r)
    z, w = Series.variables(2, D)
    a2 = a[0] ** 2 + a[1] ** 2
    delta = Series.constant(1, 2, D) + z * (-2 * a[1], -2 * a[0]) - w * (r, a2)
    inv = reciprocal(delta)
    f = (z + w * a) * lam * inv
    g = w * (lam[0] ** 2 + lam[1] ** 2) * inv
    return stack([f, g])


def weighted_linear(a, b, D: int = 8) -> Series:
    """``(a z1, b z2, |a|^2 w)``; an automorphism of the weighted hypersurface when ``|b| = 1``."""
    a = (Fraction(a[0]), Fraction(a[1]))
    b = (Fraction(b[0]), Fraction(b[1]))
    return Series.linear([[a, 0, 0], [0, b, 0], [0, 0, a[0] ** 2 + a[1] ** 2]], D)
