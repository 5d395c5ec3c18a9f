"""Degree-by-degree solvers for singular analytic systems.

Nonlinear systems ``A(u(z)) = b(z)`` are solved for the germ ``u`` with a
prescribed invertible 1-jet ``u'(0) = lam``.  The map ``A`` only needs full
generic rank: it is first reduced (see :func:`segrejet.linalg_homog.reduce_nonlinear`)
so that its lowest order part ``B0`` has an invertible Jacobian at generic
points; then every homogeneous part of ``u`` is obtained from a left inverse
of multiplication by ``B0'``.

Linear systems ``Theta(z) u(z) = b(z)`` (and ``Theta(c(z)) u(z) = b(z)``) are
handled in the same spirit after row reduction.

Every result is verified against the original, unreduced system; the verdict
is reported in ``residual_zero``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ._qi import mat_inverse
from .linalg_homog import (
    MultiplicationOperator,
    ReductionError,
    ReductionRecord,
    generic_rank,
    reduce_linear,
    reduce_nonlinear,
)
from .series_core import (
    Series,
    _pair,
    compose,
    derivative,
    invert_map,
    matvec,
    stack,
)


@dataclass
class NonlinearSolveResult:
    u: Series
    certified_degree: int
    residual_zero: bool
    reduction: ReductionRecord
    not_in_image: list = field(default_factory=list)

    def to_json_obj(self):
        return {"series": self.u.to_json_obj(), "num_vars": self.u.nvars,
                "certified_degree": self.certified_degree, "residual_zero": self.residual_zero,
                "not_in_image_degrees": list(self.not_in_image),
                "reduction": self.reduction.to_json_obj()}

    def to_json(self):
        return json.dumps(self.to_json_obj())


@dataclass
class LinearSolveResult:
    u: Series
    certified_degree: int
    residual_zero: bool
    reduction: ReductionRecord
    not_in_image: list = field(default_factory=list)

    to_json_obj = NonlinearSolveResult.to_json_obj
    to_json = NonlinearSolveResult.to_json


def _lowest_jacobian(A: Series, ell0: int):
    n = A.nvars
    A0 = stack([A.component(c).homogeneous_part(ell0 + 1) for c in range(n)]).extend(ell0 + 1)
    J = [[derivative(A0, j).component(i) for j in range(n)] for i in range(n)]
    return A0, J


def solve_nonlinear_tangent_identity(A_reduced: Series, b: Series, D: int, ell0: int | None = None,
                                     evaluate=None):
    """Solve ``A_reduced(u) = b`` with ``u'(0) = id``.

    ``A_reduced`` must have all components of order ``ell0 + 1`` and a lowest
    order part of full generic rank.  ``b`` is consumed through degree
    ``ell0 + D``.  ``evaluate(U, W)``, if given, must return
    ``A_reduced o U`` through degree ``W``; it lets callers use a cheaper
    route than composing the reduced map directly.  Returns
    ``(u, not_in_image_degrees)``.
    """
    n = A_reduced.nvars
    orders = [A_reduced.component_order(c) for c in range(n)]
    if None in orders or len(set(orders)) != 1:
        raise ReductionError("reduced form requires equal component orders")
    if ell0 is None:
        ell0 = orders[0] - 1
    if orders[0] != ell0 + 1:
        raise ReductionError("stated l0 disagrees with the component orders")
    A0, J = _lowest_jacobian(A_reduced, ell0)
    if generic_rank(A0, expected=n) < n:
        raise ReductionError("lowest order part is not of full generic rank")
    op = MultiplicationOperator(J)
    U = Series.identity(n, 1)
    missing = []
    # with u'(0) = id the degree l0 + 1 part of b must be A0 itself
    if not (b.homogeneous_part(ell0 + 1).truncate(ell0 + 1) - A0.truncate(ell0 + 1)).is_zero():
        missing.append(1)
    for l in range(2, D + 1):
        W = ell0 + l
        if evaluate is None:
            AU = compose(A_reduced, U.extend(W), D=W)
        else:
            AU = evaluate(U.extend(W), W)
        AU = AU.homogeneous_part(W)
        rhs = b.homogeneous_part(W).truncate(W) - AU
        if rhs.is_zero():
            continue
        ul, ok = op.solve(rhs, l)
        if not ok:
            missing.append(l)
        U = U.extend(l) + ul.extend(l)
    return U.extend(D), missing


def _residual_ok(A: Series, u: Series, b: Series, D: int) -> bool:
    """Check ``A(u) = b`` componentwise through degree ``D + ord(A_j) - 1``."""
    for c in range(A.ncomps):
        o = A.component_order(c)
        if o is None:
            if not b.component(c).truncate(min(b.trunc, D)).is_zero():
                return False
            continue
        top = min(D + o - 1, A.trunc, b.trunc)
        lhs = compose(A.component(c).truncate(top), u.extend(top), D=top)
        if not lhs.agrees(b.component(c), top):
            return False
    return True


def _as_matrix(lam, n):
    if lam is None:
        return [[(1 if i == j else 0, 0) for j in range(n)] for i in range(n)]
    return [[_pair(x) for x in row] for row in lam]


def solve_nonlinear(A: Series, b: Series, lam, D: int, seed: int = 0) -> NonlinearSolveResult:
    """Solve ``A(u) = b`` for the germ ``u`` with ``u'(0) = lam``, exact through degree ``D``.

    Parameters
    ----------
    A : Series
        Square map of full generic rank with ``A(0) = 0``.
    b : Series
        Right-hand side; its degree-``k`` part is consumed only for
        ``k <= l0 + D`` where ``l0`` comes from the reduction.
    lam : matrix
        Invertible ``n x n`` matrix (scalars or ``(re, im)`` pairs).
    D : int
        Target degree.

    Returns
    -------
    NonlinearSolveResult
        ``residual_zero`` is true when ``A(u) = b`` holds for the original
        system through the checked degree.
    """
    n = A.nvars
    if A.ncomps != n or b.ncomps != n or b.nvars != n:
        raise ValueError("A and b must be maps C^n -> C^n")
    L = _as_matrix(lam, n)
    try:
        Linv = mat_inverse(L)
    except ZeroDivisionError:
        raise ValueError("singular 1-jet") from None
    B, rec = reduce_nonlinear(A, seed=seed)
    ell0 = rec.ell0
    certified = min(D, b.trunc - ell0, A.trunc - ell0)
    if certified < 1:
        raise ValueError("not enough terms of A or b for degree 1")
    W = ell0 + certified
    if any(not c.is_zero() for c in b.constant_term()):
        u = Series.linear(L, certified)
        return NonlinearSolveResult(u, certified, False, rec, [0])
    b_red = rec.apply(b.truncate(W))
    bt = compose(b_red, Series.linear(Linv, W))
    AW = A.truncate(W)

    def through_record(U, top):
        # the reduction is polynomial in the components, so B o v = rec(A o v)
        return rec.apply(compose(AW, U, D=top))

    v, missing = solve_nonlinear_tangent_identity(B.truncate(W), bt, certified, ell0,
                                                  evaluate=through_record if rec.steps or any(
                                                      e != 1 for e in rec.equalization) else None)
    u = compose(v, Series.linear(L, certified))
    ok = not missing and _residual_ok(A, u, b, certified)
    return NonlinearSolveResult(u, certified, ok, rec, missing)


def solve_block_system(A_big: Series, b_big: Series, lam_big, D: int, seed: int = 0) -> NonlinearSolveResult:
    """Solver entry point for stacked unknowns; same contract as :func:`solve_nonlinear`."""
    return solve_nonlinear(A_big, b_big, lam_big, D, seed=seed)


# --------------------------------------------------------------------------
# linear systems


def _matrix_part(N, ks, nu):
    out = []
    for row, k in zip(N, ks):
        out.append([e.homogeneous_part(k + nu).extend(k + nu) if k + nu <= e.trunc
                    else Series.zero(e.nvars, 1, k + nu) for e in row])
    return out


def _linear_residual_ok(Theta, u: Series, b: Series, D: int) -> bool:
    for j, row in enumerate(Theta):
        orders = [e.order() for e in row if not e.is_zero()]
        k = min(orders) if orders else 0
        top = min([D + k, b.trunc] + [e.trunc for e in row])
        acc = None
        for e, c in zip(row, u.components()):
            if e.is_zero():
                continue
            t = e.truncate(top) * c.extend(top)
            acc = t if acc is None else acc + t
        if acc is None:
            acc = Series.zero(u.nvars, 1, top)
        if not acc.agrees(b.component(j), top):
            return False
    return True


def solve_linear(Theta, b: Series, D: int, seed: int = 0) -> LinearSolveResult:
    """Solve ``Theta(z) u(z) = b(z)`` degree by degree, exact through degree ``D``.

    ``Theta`` is a square matrix (list of rows) of scalar series with
    ``det Theta`` not identically zero; ``b`` maps ``C^n -> C^m``.
    """
    m = len(Theta)
    if b.ncomps != m:
        raise ValueError("b must have one component per row of Theta")
    N, rec = reduce_linear(Theta, seed=seed)
    ell0 = rec.ell0
    ks = [ell0] * m
    trunc_N = min(e.trunc for row in N for e in row)
    certified = min(D, b.trunc - ell0, trunc_N - ell0)
    if certified < 0:
        raise ValueError("not enough terms of Theta or b")
    W = ell0 + certified
    bb = rec.apply(b.truncate(W)) if (rec.steps or any(rec.equalization)) else b.truncate(W)
    low_bad = ell0 > 0 and not bb.degree_range(0, ell0 - 1).is_zero()
    N0 = _matrix_part(N, ks, 0)
    op = MultiplicationOperator(N0)
    n = b.nvars
    missing = []
    Nfull = [[e.truncate(W) for e in row] for row in N]
    U = Series.zero(n, m, W)
    for l in range(0, certified + 1):
        target = ell0 + l
        rhs = bb.homogeneous_part(target).truncate(target)
        if l > 0:
            rhs = rhs - matvec(Nfull, U.extend(target)).homogeneous_part(target).truncate(target)
        if rhs.is_zero():
            continue
        q, ok = op.solve(rhs, l)
        if not ok:
            missing.append(l)
        U = U + q.extend(W)
    u = U.truncate(certified)
    ok = not missing and not low_bad and _linear_residual_ok(Theta, u, b, certified)
    return LinearSolveResult(u, certified, ok, rec, missing)


def compose_matrix(Theta, c: Series):
    return [[compose(e, c) for e in row] for row in Theta]


def solve_linear_composed(Theta, c: Series, b: Series, D: int, seed: int = 0) -> LinearSolveResult:
    """Solve ``Theta(c(z)) u(z) = b(z)`` for a biholomorphic germ ``c``.

    Computed as ``solve_linear(Theta, b o c^{-1}) o c`` and verified against
    the composed system."""
    if c.nvars != c.ncomps:
        raise ValueError("c must be a square map")
    # only degrees up to l0 + D of b and c can matter
    _, rec = reduce_linear(Theta, seed=seed)
    W = min(rec.ell0 + D, b.trunc, c.trunc)
    cW = c.truncate(W)
    cinv = invert_map(cW)
    r = solve_linear(Theta, compose(b.truncate(W), cinv), D, seed=seed)
    u = compose(r.u, cW.truncate(r.certified_degree))
    ThetaC = compose_matrix([[e.truncate(min(e.trunc, W)) for e in row] for row in Theta], cW)
    ok = r.residual_zero and _linear_residual_ok(ThetaC, u, b, r.certified_degree)
    return LinearSolveResult(u, r.certified_degree, ok, r.reduction, r.not_in_image)
