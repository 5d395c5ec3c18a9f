"""Linear algebra on spaces of homogeneous polynomials.

The central object is :class:`MultiplicationOperator`: for a square matrix
``M(z)`` whose rows are homogeneous (row ``j`` of degree ``k_j``), it maps a
tuple ``p`` of degree-``d`` homogeneous polynomials to ``M p``.  When
``det M`` is not identically zero this map is injective, and
:meth:`MultiplicationOperator.solve` returns its exact left inverse on the
image.  Everything is done with sparse exact elimination over Q(i); the
factorization for a given ``d`` is cached so that repeated right-hand sides
are cheap.

The two reductions that make singular systems solvable degree by degree also
live here: :func:`reduce_nonlinear` (annihilating relations among lowest order
parts, then order equalization by powers) and :func:`reduce_linear`
(homogeneous row syzygies, then row equalization).
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from math import comb, lcm

from ._qi import ONE, ZERO, cconj, cinv, cmul, mat_rank, rref
from .series_core import (
    Series,
    compose,
    derivative,
    evaluate,
    layout,
    mul,
    multi_indices,
    power,
    stack,
)

ZP = (ZERO, ZERO)


class ReductionError(ValueError):
    """Raised when a system cannot be brought into reduced form."""


# --------------------------------------------------------------------------
# homogeneous spaces


@dataclass(frozen=True)
class HomogSpace:
    """Homogeneous polynomials of degree ``degree`` in ``num_vars`` variables."""

    num_vars: int
    degree: int

    @property
    def basis(self):
        return multi_indices(self.num_vars, self.degree)

    @property
    def dimension(self) -> int:
        return comb(self.degree + self.num_vars - 1, self.num_vars - 1)


# --------------------------------------------------------------------------
# sparse exact elimination


class SparseElimination:
    """Gaussian elimination of a sparse matrix over Q(i), replayable on right-hand sides.

    ``rows`` is a list of ``{column: (re, im)}`` dictionaries.  Pivots are
    chosen column by column, taking the sparsest column and then the sparsest
    row, which keeps fill-in small for the banded multiplication matrices
    arising here.
    """

    def __init__(self, rows, ncols):
        self.nrows = len(rows)
        self.ncols = ncols
        self.original = [dict(r) for r in rows]
        R = [dict(r) for r in rows]
        colrows = defaultdict(set)
        for i, r in enumerate(R):
            for c in r:
                colrows[c].add(i)
        remaining = set(c for c, s in colrows.items() if s)
        ops = []
        pivots = []
        while remaining:
            c = min(remaining, key=lambda c: (len(colrows[c]), c))
            rows_c = colrows[c]
            remaining.discard(c)
            if not rows_c:
                continue
            p = min(rows_c, key=lambda i: (len(R[i]), i))
            prow = R[p]
            inv = cinv(prow[c])
            for i in list(rows_c):
                if i == p:
                    continue
                ri = R[i]
                f = cmul(ri[c], inv)
                for cc, v in prow.items():
                    old = ri.get(cc)
                    t = cmul(f, v)
                    if old is None:
                        ri[cc] = (-t[0], -t[1])
                        colrows[cc].add(i)
                    else:
                        nv = (old[0] - t[0], old[1] - t[1])
                        if nv[0] or nv[1]:
                            ri[cc] = nv
                        else:
                            del ri[cc]
                            colrows[cc].discard(i)
                ops.append((i, p, f))
            for cc in prow:
                colrows[cc].discard(p)
            pivots.append((p, c))
        self.R = R
        self.ops = ops
        self.pivots = pivots
        self.rank = len(pivots)
        self._pivot_rows = {p for p, _ in pivots}

    @property
    def full_column_rank(self) -> bool:
        return self.rank == self.ncols

    def solve(self, rhs):
        """Return ``(x, consistent)``; ``x`` is a dict column -> pair."""
        r = {k: v for k, v in rhs.items() if v[0] or v[1]}
        for i, p, f in self.ops:
            vp = r.get(p)
            if vp is None:
                continue
            t = cmul(f, vp)
            old = r.get(i, ZP)
            nv = (old[0] - t[0], old[1] - t[1])
            if nv[0] or nv[1]:
                r[i] = nv
            else:
                r.pop(i, None)
        consistent = all(i in self._pivot_rows for i in r)
        x = {}
        for p, c in reversed(self.pivots):
            row = self.R[p]
            val = r.get(p, ZP)
            for cc, a in row.items():
                if cc != c and cc in x:
                    t = cmul(a, x[cc])
                    val = (val[0] - t[0], val[1] - t[1])
            if val[0] or val[1]:
                x[c] = cmul(val, cinv(row[c]))
        return x, consistent

    def least_squares(self, rhs):
        """Exact solution of the normal equations ``M* M x = M* s``."""
        AtA = defaultdict(dict)
        Ats = {}
        for i, row in enumerate(self.original):
            items = list(row.items())
            s = rhs.get(i)
            for a, va in items:
                ca = cconj(va)
                if s is not None:
                    t = cmul(ca, s)
                    o = Ats.get(a, ZP)
                    Ats[a] = (o[0] + t[0], o[1] + t[1])
                for b, vb in items:
                    t = cmul(ca, vb)
                    o = AtA[a].get(b, ZP)
                    AtA[a][b] = (o[0] + t[0], o[1] + t[1])
        rows = [{b: v for b, v in AtA[a].items() if v[0] or v[1]} for a in range(self.ncols)]
        normal = SparseElimination(rows, self.ncols)
        x, _ = normal.solve(Ats)
        return x


# --------------------------------------------------------------------------
# multiplication operators


def _row_degrees(M):
    degs = []
    for row in M:
        orders = [e.order() for e in row if not e.is_zero()]
        if not orders:
            raise ReductionError("zero row: determinant vanishes identically")
        degs.append(min(orders))
    return degs


class MultiplicationOperator:
    """``p -> M p`` on tuples of homogeneous polynomials of a fixed degree.

    ``M`` is a list of rows of scalar-valued :class:`Series`; row ``j`` must
    be homogeneous of degree ``k_j``.
    """

    def __init__(self, M):
        self.M = [list(r) for r in M]
        self.m = len(M)
        if any(len(r) != self.m for r in M):
            raise ValueError("multiplication matrix must be square")
        self.n = M[0][0].nvars
        self.lay = layout(self.n)
        self.row_degrees = _row_degrees(M)
        for j, row in enumerate(M):
            for e in row:
                if not e.is_zero() and (e.order() != self.row_degrees[j] or e.max_degree() != self.row_degrees[j]):
                    raise ValueError("rows of the multiplication matrix must be homogeneous")
        self._cache = {}

    def _system(self, d):
        if d in self._cache:
            return self._cache[d]
        basis = [self.lay.pack(a) for a in multi_indices(self.n, d)]
        rowid = {}
        rows = []
        ncols = len(basis) * self.m
        for i in range(self.m):
            for t, ka in enumerate(basis):
                col = i * len(basis) + t
                for j in range(self.m):
                    e = self.M[j][i]
                    for tab, part in ((e.re[0], 0), (e.im[0], 1)):
                        for k, v in tab.items():
                            key = (j, k + ka)
                            r = rowid.get(key)
                            if r is None:
                                r = rowid[key] = len(rows)
                                rows.append({})
                            old = rows[r].get(col, ZP)
                            rows[r][col] = (old[0] + v, old[1]) if part == 0 else (old[0], old[1] + v)
        rows = [{c: v for c, v in r.items() if v[0] or v[1]} for r in rows]
        elim = SparseElimination(rows, ncols)
        if not elim.full_column_rank:
            raise ReductionError("multiplication operator is not injective (det M vanishes identically)")
        sysd = (basis, rowid, elim)
        self._cache[d] = sysd
        return sysd

    def apply(self, p: Series) -> Series:
        """Forward multiplication ``M p``."""
        top = p.trunc + max(self.row_degrees)
        rows = []
        for j in range(self.m):
            acc = Series.zero(self.n, 1, top)
            for i in range(self.m):
                if self.M[j][i].is_zero():
                    continue
                acc = acc + mul(self.M[j][i].extend(top), p.component(i).extend(top))
            rows.append(acc)
        return stack(rows)

    def solve(self, s, d: int, trunc: int | None = None):
        """Left inverse applied to ``s`` (homogeneous rows of degree ``k_j + d``).

        Returns ``(p, in_image)``.  Outside the image, ``p`` solves the
        normal equations exactly."""
        basis, rowid, elim = self._system(d)
        rhs = {}
        stray = False
        for j in range(self.m):
            for tab, part in ((s.re[j], 0), (s.im[j], 1)):
                for k, v in tab.items():
                    r = rowid.get((j, k))
                    if r is None:
                        stray = True
                        continue
                    old = rhs.get(r, ZP)
                    rhs[r] = (old[0] + v, old[1]) if part == 0 else (old[0], old[1] + v)
        x, consistent = elim.solve(rhs)
        in_image = consistent and not stray
        if not in_image:
            x = elim.least_squares(rhs)
        nb = len(basis)
        re = [dict() for _ in range(self.m)]
        im = [dict() for _ in range(self.m)]
        for col, v in x.items():
            i, t = divmod(col, nb)
            if v[0]:
                re[i][basis[t]] = v[0]
            if v[1]:
                im[i][basis[t]] = v[1]
        D = d if trunc is None else trunc
        return Series._raw(self.lay, self.m, D, re, im), in_image


def left_inverse_apply(M, s: Series, d: int):
    """Solve ``M p = s`` for ``p`` homogeneous of degree ``d``; returns ``(p, in_image)``."""
    op = MultiplicationOperator(M)
    if generic_rank_matrix(M) < op.m:
        raise ReductionError("det M vanishes identically")
    return op.solve(s, d)


# --------------------------------------------------------------------------
# generic rank


def sample_points(n, count, seed=0, radius=29):
    """Deterministic small nonzero integer sample points."""
    rng = random.Random(1_000_003 * seed + 17 * n + 5)
    pts = []
    for _ in range(count):
        pts.append([(mpq_int(rng.choice([-1, 1]) * rng.randint(1, radius)), ZERO) for _ in range(n)])
    return pts


def mpq_int(x):
    from gmpy2 import mpq

    return mpq(x)


def _rank_at(derivs, point, m):
    cols = [evaluate(dj, point) for dj in derivs]
    mat = [[cols[j][i] for j in range(len(derivs))] for i in range(m)]
    return mat_rank(mat)


def generic_rank(F: Series, expected: int | None = None, seed: int = 0, samples: int = 3) -> int:
    """Generic rank of the Jacobian of the truncated polynomial ``F``.

    Evaluates the Jacobian exactly at ``samples`` deterministic integer points
    (plus one confirmation point when the rank hits ``expected``) and returns
    the maximum rank found."""
    n, m = F.nvars, F.ncomps
    top = min(n, m)
    Fp = F.extend(max(F.trunc, 1))
    derivs = [derivative(Fp, j).extend(Fp.trunc) for j in range(n)]
    pts = sample_points(n, samples + 1, seed)
    best = 0
    for p in pts[:samples]:
        best = max(best, _rank_at(derivs, p, m))
        if best == top:
            break
    if expected is not None and best == expected and best < top:
        best = max(best, _rank_at(derivs, pts[samples], m))
    return best


def generic_rank_matrix(M, seed: int = 0, samples: int = 3) -> int:
    """Generic rank of a matrix (list of rows) of scalar series."""
    n = M[0][0].nvars
    rows = len(M)
    cols = len(M[0])
    top = min(rows, cols)
    best = 0
    for p in sample_points(n, samples, seed + 101):
        vals = [[evaluate(e.extend(max(e.trunc, 0)), p)[0] for e in row] for row in M]
        best = max(best, mat_rank(vals, cols))
        if best == top:
            break
    return best


def series_det(M, D: int) -> Series:
    """Determinant of a small matrix of scalar series (entries read as polynomials to ``D``)."""
    m = len(M)
    E = [[e.extend(max(D, e.trunc)).truncate(D) for e in row] for row in M]
    if m == 1:
        return E[0][0]
    total = None
    for j in range(m):
        if E[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in E[1:]]
        t = mul(E[0][j], series_det(minor, D))
        if j % 2:
            t = -t
        total = t if total is None else total + t
    if total is None:
        total = Series.zero(E[0][0].nvars, 1, D)
    return total


def generic_rank_exact(F: Series) -> int:
    """Generic rank by symbolic minors of the Jacobian (for ``n + m <= 6``)."""
    n, m = F.nvars, F.ncomps
    if n + m > 6:
        raise ValueError("exact minor computation is limited to n + m <= 6")
    from itertools import combinations

    J = [[derivative(F.extend(max(F.trunc, 1)), j).component(i) for j in range(n)] for i in range(m)]
    deg = max(F.trunc - 1, 0)
    for r in range(min(n, m), 0, -1):
        for rs in combinations(range(m), r):
            for cs in combinations(range(n), r):
                sub = [[J[i][j] for j in cs] for i in rs]
                if not series_det(sub, r * deg).is_zero():
                    return r
    return 0


# --------------------------------------------------------------------------
# annihilating polynomials


class ScanBoundExceeded(ReductionError):
    pass


def weighted_monomials(weights, f):
    out = []
    n = len(weights)

    def rec(j, rem, acc):
        if j == n:
            if rem == 0:
                out.append(tuple(acc))
            return
        w = weights[j]
        for a in range(rem // w + 1):
            rec(j + 1, rem - a * w, acc + [a])

    rec(0, f, [])
    return sorted(out, key=lambda e: tuple(-x for x in e))


def _kernel_rref(columns, nrows_hint=None):
    """Reduced-echelon kernel basis of the matrix with the given sparse columns."""
    rowkeys = sorted({k for col in columns for k in col})
    idx = {k: i for i, k in enumerate(rowkeys)}
    ncols = len(columns)
    rows = [[ZP] * ncols for _ in rowkeys]
    for c, col in enumerate(columns):
        for k, v in col.items():
            rows[idx[k]][c] = v
    R, piv = rref(rows, ncols) if rows else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for fcol in free:
        v = [ZP] * ncols
        v[fcol] = (ONE, ZERO)
        for r, pc in enumerate(piv):
            a = R[r][fcol]
            v[pc] = (-a[0], -a[1])
        basis.append(v)
    if not basis:
        return []
    K, _ = rref(basis, ncols)
    return [row for row in K if any(x[0] or x[1] for x in row)]


def _dict_of(s: Series, c=0):
    out = {}
    for k, v in s.re[c].items():
        out[k] = (v, ZERO)
    for k, v in s.im[c].items():
        o = out.get(k, ZP)
        out[k] = (o[0], v)
    return out


def annihilating_polynomial(F, weights, bound: int | None = None, seed: int = 0):
    """Lowest weighted-degree relation ``p(F_1, ..., F_n) = 0``.

    ``F`` is a list of homogeneous scalar series with degrees ``weights``.
    Returns a polynomial :class:`Series` in ``len(F)`` variables, or ``None``
    when the ``F_j`` are algebraically independent (Jacobian of full rank).
    Raises :class:`ScanBoundExceeded` if a relation must exist but none is
    found up to ``bound`` (default ``2 * sum(weights)``).
    """
    F = list(F)
    n = len(F)
    weights = list(weights)
    if any(w < 1 for w in weights):
        raise ValueError("weights must be positive")
    nv = F[0].nvars
    if bound is None:
        bound = 2 * sum(weights)
    if n <= nv:
        Fs = stack([f.extend(max(f.trunc, weights[j])) .truncate(max(weights)) for j, f in enumerate(F)])
        if generic_rank(Fs, expected=n, seed=seed) == n:
            return None
    powers = {}

    def fpow(j, a, D):
        key = (j, a, D)
        if key not in powers:
            powers[key] = power(F[j].extend(D), a)
        return powers[key]

    for f in range(1, bound + 1):
        monos = weighted_monomials(weights, f)
        if not monos:
            continue
        cols = []
        for alpha in monos:
            prod = Series.constant(1, nv, f)
            for j, a in enumerate(alpha):
                if a:
                    prod = mul(prod, fpow(j, a, f))
            cols.append(_dict_of(prod.homogeneous_part(f)))
        K = _kernel_rref(cols)
        if K:
            vec = K[0]
            terms = {alpha: vec[t] for t, alpha in enumerate(monos) if vec[t][0] or vec[t][1]}
            maxdeg = max(sum(a) for a in terms)
            return Series(n, 1, maxdeg, [terms])
    raise ScanBoundExceeded(f"no relation found up to weighted degree {bound}")


# --------------------------------------------------------------------------
# reduction records


def _poly_json(p: Series):
    return p.to_json_obj()[0]


@dataclass
class ReductionRecord:
    """Replayable description of a reduction.

    ``kind`` is ``"nonlinear"`` or ``"linear"``.  Nonlinear steps hold
    ``(p, weights, index)``: component ``index`` is replaced by ``p(A)``.
    Linear steps hold ``(row, coefficients)``: row ``row`` is replaced by
    ``sum_j coefficients[j] * row_j``.  ``equalization`` holds the powers
    (nonlinear) or the ``z_1`` exponents (linear) applied at the end.
    """

    kind: str
    steps: list = field(default_factory=list)
    equalization: list = field(default_factory=list)
    ell0: int = 0
    initial_deficiency: int | None = None

    def apply_nonlinear(self, b: Series) -> Series:
        comps = b.components()
        for p, _w, j in self.steps:
            comps[j] = compose(p.extend(b.trunc), stack(comps))
        comps = [power(c, e) for c, e in zip(comps, self.equalization)]
        return stack(comps)

    def apply_linear_rows(self, rows):
        """Replay on a list of row objects supporting ``+`` and ``mul`` by scalar series."""
        rows = list(rows)
        for j, coeffs in self.steps:
            acc = None
            for c, r in zip(coeffs, rows):
                if c.is_zero():
                    continue
                t = _row_scale(c, r)
                acc = t if acc is None else _row_add(acc, t)
            rows[j] = acc
        out = []
        for r, e in zip(rows, self.equalization):
            if e:
                out.append(_row_scale(_z1_power(r, e), r))
            else:
                out.append(r)
        return out

    def apply(self, b: Series) -> Series:
        if self.kind == "nonlinear":
            return self.apply_nonlinear(b)
        return stack(self.apply_linear_rows(b.components()))

    def to_json_obj(self):
        if self.kind == "nonlinear":
            steps = [{"relation": _poly_json(p), "weights": list(w), "component": j} for p, w, j in self.steps]
        else:
            steps = [{"row": j, "coefficients": [_poly_json(c) for c in cs]} for j, cs in self.steps]
        return {"kind": self.kind, "steps": steps, "equalization": list(self.equalization),
                "ell0": self.ell0, "initial_deficiency": self.initial_deficiency}

    def to_json(self):
        return json.dumps(self.to_json_obj())


def _z1_power(r, e):
    s = r if isinstance(r, Series) else r[0]
    exps = [0] * s.nvars
    exps[0] = e
    return Series.monomial(s.nvars, exps, 1, trunc=s.trunc)


def _row_scale(c: Series, r):
    if isinstance(r, Series):
        return mul(c.extend(max(c.trunc, r.trunc)), r)
    return [mul(c.extend(max(c.trunc, x.trunc)), x) for x in r]


def _row_add(a, b):
    if isinstance(a, Series):
        return a + b
    return [x + y for x, y in zip(a, b)]


# --------------------------------------------------------------------------
# nonlinear reduction


def lowest_parts(A: Series):
    orders = [A.component_order(c) for c in range(A.ncomps)]
    if any(o is None for o in orders):
        raise ReductionError("a component vanishes identically")
    parts = [A.component(c).homogeneous_part(o) for c, o in enumerate(orders)]
    return orders, parts


def jacobian_det_order(A: Series):
    """Order of vanishing of ``det A'`` (``None`` if zero through the known degree)."""
    n = A.nvars
    J = [[derivative(A, j).component(i) for j in range(n)] for i in range(n)]
    d = series_det(J, A.trunc - 1)
    return d.order()


def reduce_nonlinear(A: Series, seed: int = 0, bound: int | None = None):
    """Bring ``A`` to a form with equal component orders ``l0 + 1`` and a
    lowest order part of full generic rank.  Returns ``(B, record)``."""
    n = A.nvars
    if A.ncomps != n:
        raise ReductionError("reduce_nonlinear needs a square map")
    if any(not c.is_zero() for c in A.constant_term()):
        raise ReductionError("A must vanish at the origin")
    if generic_rank(A, expected=n, seed=seed) < n:
        raise ReductionError("A is not of generic rank n")
    rec = ReductionRecord("nonlinear")
    comps = A.components()
    cur = A
    deficiency = None
    cap = None
    it = 0
    while True:
        orders, parts = lowest_parts(cur)
        B0 = stack([p.extend(max(orders)) for p in parts])
        if generic_rank(B0, expected=n, seed=seed) == n:
            break
        if deficiency is None:
            e = jacobian_det_order(cur)
            if e is None:
                raise ReductionError("det A' vanishes through the known degree; supply more terms")
            deficiency = e - sum(o - 1 for o in orders)
            rec.initial_deficiency = deficiency
            cap = deficiency + 1
        it += 1
        if it > cap:
            raise ReductionError(f"reduction did not terminate within {cap} steps")
        p = annihilating_polynomial(parts, orders, bound=bound, seed=seed)
        if p is None:
            raise ReductionError("lowest parts independent but Jacobian degenerate")
        j = next(i for i in range(n) if not derivative(p.extend(p.trunc + 1), i).is_zero())
        comps[j] = compose(p.extend(cur.trunc), cur)
        cur = stack(comps)
        rec.steps.append((p, tuple(orders), j))
        e = jacobian_det_order(cur)
        new_orders = [cur.component_order(c) for c in range(n)]
        if e is None or None in new_orders:
            raise ReductionError("precision exhausted during reduction; supply more terms")
        new_def = e - sum(o - 1 for o in new_orders)
        if new_def >= deficiency:
            raise ReductionError("deficiency did not decrease (internal error)")
        deficiency = new_def
    L = lcm(*orders)
    rec.equalization = [L // o for o in orders]
    rec.ell0 = L - 1
    B = stack([power(c, e) for c, e in zip(cur.components(), rec.equalization)])
    return B, rec


# --------------------------------------------------------------------------
# linear reduction


def matrix_row_orders(Theta):
    return _row_degrees(Theta)


def lowest_rows(Theta):
    ks = _row_degrees(Theta)
    low = [[e.homogeneous_part(k) if not e.is_zero() and k <= e.trunc else Series.zero(e.nvars, 1, e.trunc)
            for e in row] for row, k in zip(Theta, ks)]
    return ks, low


def _row_syzygy(low, ks, bound):
    """Homogeneous ``p_j`` (degree ``delta - k_j``) with ``sum p_j low_j = 0``."""
    m = len(low)
    n = low[0][0].nvars
    lay = layout(n)
    for delta in range(min(ks), bound + 1):
        cols = []
        labels = []
        for j in range(m):
            if delta < ks[j]:
                continue
            for a in multi_indices(n, delta - ks[j]):
                ka = lay.pack(a)
                col = {}
                for i in range(m):
                    e = low[j][i]
                    for k, v in e.re[0].items():
                        key = (i, k + ka)
                        o = col.get(key, ZP)
                        col[key] = (o[0] + v, o[1])
                    for k, v in e.im[0].items():
                        key = (i, k + ka)
                        o = col.get(key, ZP)
                        col[key] = (o[0], o[1] + v)
                cols.append({k: v for k, v in col.items() if v[0] or v[1]})
                labels.append((j, a))
        if not cols:
            continue
        K = _kernel_rref(cols)
        if K:
            vec = K[0]
            coeffs = [dict() for _ in range(m)]
            for t, (j, a) in enumerate(labels):
                if vec[t][0] or vec[t][1]:
                    coeffs[j][a] = vec[t]
            polys = [Series(n, 1, max(delta - ks[j], 0), [coeffs[j]]) for j in range(m)]
            return delta, polys
    raise ScanBoundExceeded(f"no row syzygy found up to degree {bound}")


def reduce_linear(Theta, seed: int = 0, bound: int | None = None):
    """Row-reduce ``Theta`` so that its lowest order rows have full generic rank
    and equal degree ``l0``.  Returns ``(N, record)``."""
    m = len(Theta)
    if any(len(r) != m for r in Theta):
        raise ReductionError("Theta must be square")
    if generic_rank_matrix(Theta, seed=seed) < m:
        raise ReductionError("det Theta vanishes identically")
    rec = ReductionRecord("linear")
    cur = [list(r) for r in Theta]
    trunc = min(e.trunc for row in Theta for e in row)
    if bound is None:
        bound = trunc
    deficiency = None
    it = 0
    while True:
        ks, low = lowest_rows(cur)
        if generic_rank_matrix(low, seed=seed) == m:
            break
        if deficiency is None:
            e = series_det(cur, trunc).order()
            if e is None:
                raise ReductionError("det Theta vanishes through the known degree; supply more terms")
            deficiency = e - sum(ks)
            rec.initial_deficiency = deficiency
        it += 1
        if it > deficiency + 1:
            raise ReductionError("row reduction did not terminate")
        delta, polys = _row_syzygy(low, ks, bound)
        nz = [j for j in range(m) if not polys[j].is_zero()]
        r = max(nz, key=lambda j: (ks[j], -j))
        new_row = None
        for j in nz:
            t = [mul(polys[j].extend(trunc), e) for e in cur[j]]
            new_row = t if new_row is None else [a + b for a, b in zip(new_row, t)]
        cur[r] = new_row
        rec.steps.append((r, [p.extend(p.trunc) for p in polys]))
        if any(e.is_zero() for e in new_row) and all(e.is_zero() for e in new_row):
            raise ReductionError("precision exhausted during row reduction")
    l0 = max(ks)
    rec.equalization = [l0 - k for k in ks]
    rec.ell0 = l0
    N = []
    for row, e in zip(cur, rec.equalization):
        if e:
            z = _z1_power(row[0], e)
            N.append([mul(z.extend(x.trunc), x) for x in row])
        else:
            N.append(row)
    return N, rec
