"""Real-analytic generic submanifolds in normal coordinates.

A submanifold of codimension ``d`` in ``C^N = C^n x C^d`` is given by the
complex defining equation ``w = Q(z, chi, tau)`` where ``(chi, tau)`` stand
for the conjugates of ``(z, w)``.  All invariants below are computed from the
coefficients ``qbar_alpha(z, w)`` of the conjugate function

    Qbar(chi, z, w) = sum_alpha qbar_alpha(z, w) chi^alpha

on the degree-``D`` truncation, so every negative verdict is "up to the
truncation", never a theorem.

Variable conventions: ``Q`` lives on ``(z, chi, tau)`` (``2n + d`` variables);
``Qbar`` is the same table with conjugated coefficients read on
``(chi, z, w)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import product

from ._qi import mat_rank
from .linalg_homog import generic_rank
from .series_core import (
    Series,
    coefficient_in,
    compose,
    conjugate_series,
    linear_part_matrix,
    multi_indices_upto,
    rename,
    stack,
)


class ManifoldError(ValueError):
    """Input does not describe a real submanifold in normal coordinates."""


@dataclass(frozen=True)
class ManifoldNormalForm:
    """``w = Q(z, chi, tau)`` with ``Q`` a ``d``-component series in ``2n + d`` variables."""

    n: int
    d: int
    Q: Series

    @property
    def N(self) -> int:
        return self.n + self.d

    @property
    def D(self) -> int:
        return self.Q.trunc

    def validate(self):
        if self.Q.nvars != 2 * self.n + self.d or self.Q.ncomps != self.d:
            raise ManifoldError("Q has the wrong shape")
        if not check_normality(self):
            raise ManifoldError("Q is not in normal form: Q(z,0,tau) = Q(0,chi,tau) = tau fails")
        if not check_involution(self):
            raise ManifoldError("reality fails: Q(z, chi, Qbar(chi, z, w)) != w")
        return self


def _tau(n, d, D):
    return stack([Series.variable(2 * n + d, 2 * n + k, D) for k in range(d)])


def check_normality(M: ManifoldNormalForm) -> bool:
    n, d = M.n, M.d
    no_chi = rename(M.Q, n + d, list(range(n)) + [None] * n + [n + k for k in range(d)])
    no_z = rename(M.Q, n + d, [None] * n + list(range(n)) + [n + k for k in range(d)])
    tau_nd = rename(_tau(n, d, M.D), n + d, [None] * (2 * n) + [n + k for k in range(d)])
    return no_chi == tau_nd and no_z == tau_nd


def qbar_series(M: ManifoldNormalForm) -> Series:
    """``Qbar`` as a series in slot order ``(chi, z, w)``."""
    return conjugate_series(M.Q)


def check_involution(M: ManifoldNormalForm) -> bool:
    """``Q(z, chi, Qbar(chi, z, w)) = w`` through degree ``D``."""
    n, d, D = M.n, M.d, M.D
    Qb = rename(qbar_series(M), 2 * n + d, list(range(n, 2 * n)) + list(range(n)) + list(range(2 * n, 2 * n + d)))
    zc = [Series.variable(2 * n + d, j, D) for j in range(2 * n)]
    inner = stack(zc + [Qb])
    lhs = compose(M.Q, inner)
    return lhs.agrees(_tau(n, d, D), D)


def normal_form_from_graph(phi: Series, n: int, d: int, D: int | None = None) -> ManifoldNormalForm:
    """Complex defining function of ``Im w = phi(z, zbar, Re w)``.

    ``phi`` is a ``d``-component series on ``(z, chi, s)``.  ``Q`` solves
    ``w = tau + 2i phi(z, chi, (w + tau)/2)`` by fixed-point substitution.
    Each pass gains at least two degrees because every term of ``phi`` has
    positive degree in both ``z`` and ``chi``.
    """
    if phi.nvars != 2 * n + d or phi.ncomps != d:
        raise ManifoldError("phi must be a d-component series in 2n + d variables")
    if D is None:
        D = phi.trunc
    phi = phi.truncate(D) if phi.trunc >= D else phi
    swap = list(range(n, 2 * n)) + list(range(n)) + list(range(2 * n, 2 * n + d))
    if rename(conjugate_series(phi), 2 * n + d, swap) != phi:
        raise ManifoldError("reality violated: phi is not real-valued")
    lay = phi.layout
    for c in range(d):
        for k in list(phi.re[c]) + list(phi.im[c]):
            e = lay.unpack(k)
            if sum(e[:n]) == 0 or sum(e[n:2 * n]) == 0:
                raise ManifoldError("normality violated: phi(z,0,s) and phi(0,chi,s) must vanish")
    D = phi.trunc
    nv = 2 * n + d
    tau = _tau(n, d, D)
    zc = [Series.variable(nv, j, D) for j in range(2 * n)]
    Q = tau
    for _ in range(D + 2):
        half = (Q + tau) * "1/2"
        new = tau + compose(phi, stack(zc + [half])) * (0, 2)
        if new == Q:
            break
        Q = new
    return ManifoldNormalForm(n, d, Q).validate()


def normal_form_from_complex(Q: Series, n: int, d: int) -> ManifoldNormalForm:
    return ManifoldNormalForm(n, d, Q).validate()


# --------------------------------------------------------------------------
# qbar data


def qbar_coefficient(M: ManifoldNormalForm, alpha) -> Series:
    """``qbar_alpha(z, w)`` as a ``d``-component series on ``(z, w)``."""
    n = M.n
    return coefficient_in(qbar_series(M), range(n), tuple(alpha))


def qbar_map(M: ManifoldNormalForm, k: int, at_w0: bool = True) -> Series:
    """Stacked ``(qbar_alpha)_{|alpha| <= k}``, components in (degree, lex) alpha order.

    With ``at_w0`` the map is ``z -> (qbar_alpha(z, 0))`` on ``C^n``; otherwise
    ``(z, w) -> (qbar_alpha(z, w))`` on ``C^N``."""
    if k > M.D:
        raise ValueError("k exceeds the truncation degree")
    n, d = M.n, M.d
    parts = []
    for alpha in multi_indices_upto(n, k):
        q = qbar_coefficient(M, alpha).truncate(M.D - k)
        if at_w0:
            q = rename(q, n, list(range(n)) + [None] * d)
        parts.append(q)
    return stack(parts)


def qbar_labels(M: ManifoldNormalForm, k: int):
    """``(alpha, i)`` label of every component of :func:`qbar_map`."""
    return [(alpha, i) for alpha in multi_indices_upto(M.n, k) for i in range(M.d)]


def kappa(M: ManifoldNormalForm, kmax: int, seed: int = 0):
    """Least ``k`` with ``z -> (qbar_alpha(z,0))_{|alpha|<=k}`` of generic rank ``n`` (or ``None``)."""
    for k in range(0, min(kmax, M.D - 1) + 1):
        if generic_rank(qbar_map(M, k, True), expected=M.n, seed=seed) == M.n:
            return k
    return None


def finite_nondegeneracy_order(M: ManifoldNormalForm, kmax: int):
    """Least ``k`` with the same map immersive at ``z = 0`` (or ``None``)."""
    for k in range(0, min(kmax, M.D - 1) + 1):
        F = qbar_map(M, k, True)
        if F.trunc < 1:
            break
        if mat_rank(linear_part_matrix(F), M.n) == M.n:
            return k
    return None


def holomorphic_nondegeneracy(M: ManifoldNormalForm, kmax: int, seed: int = 0):
    """``(True, k)`` for the least ``k`` with ``(z,w) -> (qbar_alpha(z,w))`` of generic rank ``N``."""
    for k in range(0, min(kmax, M.D - 1) + 1):
        if generic_rank(qbar_map(M, k, False), expected=M.N, seed=seed) == M.N:
            return True, k
    return False, None


# --------------------------------------------------------------------------
# Segre maps


def segre_map(M: ManifoldNormalForm, j: int, D: int | None = None) -> Series:
    """``v^j`` on ``(t^1, ..., t^j)``: ``v^1 = (t, 0)``, ``v^{j+1} = (t^{j+1}, Q(t^{j+1}, conj(v^j)))``."""
    if j < 1:
        raise ValueError("j must be at least 1")
    n, d = M.n, M.d
    if D is None:
        D = M.D
    D = min(D, M.D)
    v = stack([Series.variable(n, i, D) for i in range(n)] + [Series.zero(n, 1, D)] * d)
    Q = M.Q.truncate(D)
    for step in range(1, j):
        nv = n * (step + 1)
        vbar = rename(conjugate_series(v), nv, list(range(n * step)))
        t_new = [Series.variable(nv, n * step + i, D) for i in range(n)]
        w = compose(Q, stack(t_new + [vbar]))
        v = stack(t_new + [w])
    return v


def segre_pair_on_complexification(M: ManifoldNormalForm, j: int, D: int | None = None) -> bool:
    """``(v^{j+1}, conj(v^j))`` satisfies ``tau = Qbar(chi, z, w)`` through degree ``D``."""
    n = M.n
    if D is None:
        D = M.D
    v_next = segre_map(M, j + 1, D)
    nv = n * (j + 1)
    vbar = rename(conjugate_series(segre_map(M, j, D)), nv, list(range(n * j)))
    chi = stack(vbar.components()[:n])
    tau = stack(vbar.components()[n:])
    lhs = compose(qbar_series(M).truncate(D), stack([chi, v_next]))
    return lhs.agrees(tau, D)


def minimality_order(M: ManifoldNormalForm, D: int | None = None, seed: int = 0):
    """Least ``k1 <= d + 1`` with ``v^{k1}`` of generic rank ``N`` (or ``None``)."""
    for k in range(1, M.d + 2):
        if generic_rank(segre_map(M, k, D), expected=M.N, seed=seed) == M.N:
            return k
    return None


# --------------------------------------------------------------------------
# automorphisms


def is_automorphism(M: ManifoldNormalForm, H: Series, D: int | None = None) -> bool:
    """Exact truth of ``g(z,w) = Q(f(z,w), fbar(chi,tau), gbar(chi,tau))`` with ``tau = Qbar(chi,z,w)``."""
    n, N = M.n, M.N
    if H.nvars != N or H.ncomps != N:
        raise ValueError("H must map C^N to C^N")
    if mat_rank(linear_part_matrix(H), N) < N:
        raise ValueError("singular linear part")
    if D is None:
        D = min(M.D, H.trunc)
    if D > min(M.D, H.trunc):
        raise ValueError("requested degree exceeds known data")
    nv = N + n
    Qb = rename(qbar_series(M).truncate(D), nv, list(range(N, N + n)) + list(range(n)) + list(range(n, N)))
    chi = [Series.variable(nv, N + i, D) for i in range(n)]
    Hzw = rename(H.truncate(D), nv, list(range(N)))
    Hbar = compose(conjugate_series(H.truncate(D)), stack(chi + [Qb]))
    f = stack(Hzw.components()[:n])
    g = stack(Hzw.components()[n:])
    rhs = compose(M.Q.truncate(D), stack([f, Hbar]))
    return rhs.agrees(g, D)


# --------------------------------------------------------------------------
# essential finiteness screen


def _candidate_directions(n, radius=2):
    dirs = []
    for j in range(n):
        e = [0] * n
        e[j] = 1
        dirs.append(tuple(e))
    for v in product(range(-radius, radius + 1), repeat=n):
        if any(v) and tuple(v) not in dirs:
            first = next(x for x in v if x)
            if first > 0:
                dirs.append(tuple(v))
    return dirs


def _vanishes_on_line(q, v):
    D = q.trunc
    line = stack([Series.constant(x, 1, D) * Series.variable(1, 0, D) for x in v])
    return compose(q, line).is_zero()


def essential_finiteness_necessary_check(M: ManifoldNormalForm, kmax: int, D: int | None = None):
    """Search a line through 0 on which every ``qbar_alpha(., 0)``, ``|alpha| <= kmax``, vanishes.

    Each ``qbar_alpha`` is checked through its own known degree ``D - |alpha|``.
    Returns ``(passes, witness)``: ``passes`` is false when a witness line was
    found (the map is then not finite up to the truncation); otherwise the
    screen is inconclusive and ``witness`` is ``None``."""
    n, d = M.n, M.d
    top = M.D if D is None else min(D, M.D)
    parts = []
    for alpha in multi_indices_upto(n, min(kmax, top)):
        q = qbar_coefficient(M, alpha).truncate(top - sum(alpha))
        parts.append(rename(q, n, list(range(n)) + [None] * d))
    for v in _candidate_directions(n):
        if all(_vanishes_on_line(q, v) for q in parts):
            eqs = [f"z{i + 1} = 0" for i in range(n) if v[i] == 0] if sum(1 for x in v if x) == 1 else []
            return False, {"direction": list(v), "equations": eqs, "checked_degree": top}
    return True, None


# --------------------------------------------------------------------------
# report


@dataclass
class InvariantReport:
    kappa: int | None
    finite_nondeg_order: int | None
    holo_nondeg: bool
    holo_nondeg_order: int | None
    minimality_k1: int | None
    ell_p: int | None
    class_c: bool
    essentially_finite_screen: dict = field(default_factory=dict)
    n: int = 0
    d: int = 0
    kmax: int = 0
    degree: int = 0
    seed: int = 0

    def to_json_obj(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_json_obj(), **kw)


def analyze(M: ManifoldNormalForm, kmax: int = 6, D: int | None = None, seed: int = 0) -> InvariantReport:
    if D is None:
        D = M.D
    kmax = min(kmax, D - 1)
    k = kappa(M, kmax, seed)
    fn = finite_nondegeneracy_order(M, kmax)
    hn, hk = holomorphic_nondegeneracy(M, kmax, seed)
    k1 = minimality_order(M, D, seed)
    passes, witness = essential_finiteness_necessary_check(M, kmax, D)
    return InvariantReport(
        kappa=k,
        finite_nondeg_order=fn,
        holo_nondeg=hn,
        holo_nondeg_order=hk,
        minimality_k1=k1,
        ell_p=None if k is None else (M.d + 1) * k,
        class_c=k is not None,
        essentially_finite_screen={"witness_found": not passes, "witness": witness},
        n=M.n, d=M.d, kmax=kmax, degree=D, seed=seed,
    )
