"""Exact truncated multivariate power series over the Gaussian rationals.

A :class:`Series` is a map ``C^n -> C^m`` known modulo monomials of total
degree greater than its ``trunc`` bound.  Coefficients are exact elements of
Q(i), stored as separate real and imaginary sparse tables so that real or
purely imaginary data costs a single convolution per product.

Monomials are packed into Python integers: each exponent occupies a fixed
bit field, the total degree sits in the most significant field, so adding two
keys multiplies the monomials and sorting keys gives the (degree, lex) order.

Optionally a series carries *group caps*: disjoint sets of variables whose
joint degree is bounded as well.  Such a series is exact modulo the monomial
ideal generated by total degree ``trunc + 1`` and by every group monomial of
degree ``cap + 1``.  This keeps auxiliary expansion variables (a small jet
direction, say) cheap while the main variables run to high degree.

Example
-------
>>> z1, z2 = Series.variables(2, 3)
>>> f = (z1 + z2) * (z1 + z2)
>>> f.coeff((1, 1))
Scalar(2, 0)
"""

from __future__ import annotations

import json
from bisect import bisect_left
from fractions import Fraction
from functools import lru_cache
from itertools import product as _iproduct
from math import factorial

from gmpy2 import mpq

from ._qi import ONE, ZERO, cinv, cmul, mat_inverse, to_mpq

_W = 10
_MASK = (1 << _W) - 1
MAX_DEGREE = 400


# --------------------------------------------------------------------------
# scalars


class Scalar:
    """Exact Gaussian rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, Scalar):
            re, im = re.re, re.im + to_mpq(im)
        elif isinstance(re, complex):
            raise TypeError("floating complex values are not exact")
        self.re = to_mpq(re)
        self.im = to_mpq(im)

    @classmethod
    def coerce(cls, x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, tuple):
            return cls(x[0], x[1])
        return cls(x)

    @property
    def pair(self):
        return (self.re, self.im)

    def __add__(self, o):
        o = Scalar.coerce(o)
        return Scalar(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = Scalar.coerce(o)
        return Scalar(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return Scalar.coerce(o) - self

    def __mul__(self, o):
        if isinstance(o, Series):
            return NotImplemented
        o = Scalar.coerce(o)
        return Scalar(*cmul(self.pair, o.pair))

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = Scalar.coerce(o)
        return Scalar(*cmul(self.pair, cinv(o.pair)))

    def __rtruediv__(self, o):
        return Scalar.coerce(o) / self

    def __neg__(self):
        return Scalar(-self.re, -self.im)

    def __pow__(self, k: int):
        if k < 0:
            return (ONE_S / self) ** (-k)
        r = Scalar(1)
        for _ in range(k):
            r = r * self
        return r

    def conj(self) -> "Scalar":
        return Scalar(self.re, -self.im)

    def modulus_surrogate(self):
        """``|re| + |im|``, an exact submultiplicative absolute value."""
        return abs(self.re) + abs(self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, o):
        try:
            o = Scalar.coerce(o)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"Scalar({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}*i"
        return f"({self.re}+{self.im}*i)"


ONE_S = Scalar(1)
I = Scalar(0, 1)


def _pair(x):
    if isinstance(x, tuple):
        return (to_mpq(x[0]), to_mpq(x[1]))
    s = Scalar.coerce(x)
    return (s.re, s.im)


def qstr(q) -> str:
    """Canonical reduced fraction string of a rational."""
    return str(Fraction(int(q.numerator), int(q.denominator)))


# --------------------------------------------------------------------------
# monomial layouts


class Layout:
    """Bit-field packing of exponent vectors (and optional group degrees)."""

    def __init__(self, n: int, caps: tuple = ()):
        if n < 1:
            raise ValueError("a series needs at least one variable")
        self.n = n
        self.caps = tuple((tuple(vs), int(c)) for vs, c in caps)
        seen = set()
        for vs, c in self.caps:
            if not vs or seen.intersection(vs) or c < 0:
                raise ValueError("cap groups must be nonempty, disjoint, nonnegative")
            seen.update(vs)
            if max(vs) >= n or min(vs) < 0:
                raise ValueError("cap group variable out of range")
        ng = len(self.caps)
        self.gshift = [_W * g for g in range(ng)]
        self.vshift = [_W * (ng + n - 1 - i) for i in range(n)]
        self.dshift = _W * (ng + n)
        self.unit = []
        for i in range(n):
            k = (1 << self.dshift) | (1 << self.vshift[i])
            for g, (vs, _) in enumerate(self.caps):
                if i in vs:
                    k |= 1 << self.gshift[g]
            self.unit.append(k)
        self.capchecks = tuple((self.gshift[g], c) for g, (_, c) in enumerate(self.caps))

    def pack(self, e) -> int:
        if len(e) != self.n:
            raise ValueError(f"exponent vector of length {len(e)} for {self.n} variables")
        k = 0
        for u, x in zip(self.unit, e):
            if x < 0:
                raise ValueError("negative exponent")
            k += u * x
        return k

    def unpack(self, k) -> tuple:
        return tuple((k >> s) & _MASK for s in self.vshift)

    def deg(self, k) -> int:
        return k >> self.dshift

    def within_caps(self, k) -> bool:
        for s, c in self.capchecks:
            if (k >> s) & _MASK > c:
                return False
        return True

    def group_degree(self, k, g) -> int:
        return (k >> self.gshift[g]) & _MASK

    def __repr__(self):
        return f"Layout(n={self.n}, caps={self.caps})"


@lru_cache(maxsize=None)
def _layout(n, caps):
    return Layout(n, caps)


def layout(n: int, caps=()) -> Layout:
    """Shared layout object for ``n`` variables and the given group caps."""
    return _layout(int(n), tuple((tuple(vs), int(c)) for vs, c in caps))


# --------------------------------------------------------------------------
# sparse convolution kernels


def _sorted_items(d):
    keys = sorted(d)
    return keys, [d[k] for k in keys]


def _conv(a, b, D, lay, out, negate=False):
    """Accumulate ``a*b`` (mod degree > D and caps) into ``out``."""
    if not a or not b:
        return
    if len(a) > len(b):
        a, b = b, a
    bkeys, bvals = _sorted_items(b)
    ds = lay.dshift
    caps = lay.capchecks
    get = out.get
    for ka, va in a.items():
        lim = D - (ka >> ds)
        if lim < 0:
            continue
        end = bisect_left(bkeys, (lim + 1) << ds)
        if negate:
            va = -va
        if caps:
            for kb, vb in zip(bkeys[:end], bvals[:end]):
                k = ka + kb
                ok = True
                for s, c in caps:
                    if (k >> s) & _MASK > c:
                        ok = False
                        break
                if ok:
                    out[k] = get(k, ZERO) + va * vb
        else:
            for kb, vb in zip(bkeys[:end], bvals[:end]):
                k = ka + kb
                out[k] = get(k, ZERO) + va * vb


def _clean(d):
    return {k: v for k, v in d.items() if v}


def _dsum(x, y):
    out = dict(x)
    for k, v in y.items():
        out[k] = out.get(k, ZERO) + v
    return out


def _mul_comp(ar, ai, br, bi, D, lay):
    re = {}
    im = {}
    if ar and ai and br and bi:
        # three real products instead of four
        rr, ii, ss = {}, {}, {}
        _conv(ar, br, D, lay, rr)
        _conv(ai, bi, D, lay, ii)
        _conv(_dsum(ar, ai), _dsum(br, bi), D, lay, ss)
        for k, v in rr.items():
            re[k] = v
            ss[k] = ss.get(k, ZERO) - v
        for k, v in ii.items():
            re[k] = re.get(k, ZERO) - v
            ss[k] = ss.get(k, ZERO) - v
        return _clean(re), _clean(ss)
    _conv(ar, br, D, lay, re)
    _conv(ai, bi, D, lay, re, negate=True)
    _conv(ar, bi, D, lay, im)
    _conv(ai, br, D, lay, im)
    return _clean(re), _clean(im)


def _scale_comp(c, r, i):
    cr, ci = c
    re = {}
    im = {}
    if cr:
        for k, v in r.items():
            re[k] = cr * v
        for k, v in i.items():
            im[k] = cr * v
    if ci:
        for k, v in i.items():
            re[k] = re.get(k, ZERO) - ci * v
        for k, v in r.items():
            im[k] = im.get(k, ZERO) + ci * v
    return _clean(re), _clean(im)


def _add_into(dst, src, sign=1):
    for k, v in src.items():
        dst[k] = dst.get(k, ZERO) + (v if sign > 0 else -v)


def _trunc_dict(d, D, lay):
    ds = lay.dshift
    return {k: v for k, v in d.items() if (k >> ds) <= D}


# --------------------------------------------------------------------------
# series


class Series:
    """Truncated power series map with exact Gaussian-rational coefficients.

    Parameters
    ----------
    nvars : int
        Number of input variables.
    ncomps : int
        Number of output components.
    trunc : int
        Degree bound; the series is exact modulo monomials of higher degree.
    terms : list of dict, optional
        One ``{exponent tuple: value}`` table per component.  Values may be
        :class:`Scalar`, ints, :class:`fractions.Fraction`, ``"p/q"`` strings
        or ``(re, im)`` pairs.
    caps : tuple, optional
        Group caps ``((var indices, cap), ...)``.
    """

    __slots__ = ("layout", "ncomps", "trunc", "re", "im", "_cache")

    def __init__(self, nvars, ncomps=1, trunc=0, terms=None, caps=()):
        lay = layout(nvars, tuple(caps))
        if not 0 <= trunc <= MAX_DEGREE:
            raise ValueError(f"truncation degree must lie in [0, {MAX_DEGREE}]")
        if ncomps < 1:
            raise ValueError("a series needs at least one component")
        re = [dict() for _ in range(ncomps)]
        im = [dict() for _ in range(ncomps)]
        if terms is not None:
            if len(terms) != ncomps:
                raise ValueError("one term table per component is required")
            for c, table in enumerate(terms):
                for e, v in table.items():
                    k = lay.pack(tuple(e))
                    if lay.deg(k) > trunc or not lay.within_caps(k):
                        continue
                    p = _pair(v)
                    if p[0]:
                        re[c][k] = re[c].get(k, ZERO) + p[0]
                    if p[1]:
                        im[c][k] = im[c].get(k, ZERO) + p[1]
        self._set(lay, ncomps, trunc, tuple(_clean(d) for d in re), tuple(_clean(d) for d in im))

    def _set(self, lay, m, D, re, im):
        self.layout = lay
        self.ncomps = m
        self.trunc = D
        self.re = re
        self.im = im
        self._cache = None

    @classmethod
    def _raw(cls, lay, m, D, re, im) -> "Series":
        s = cls.__new__(cls)
        s._set(lay, m, D, tuple(re), tuple(im))
        return s

    # ---- constructors ----------------------------------------------------
    @classmethod
    def zero(cls, nvars, ncomps=1, trunc=0, caps=()):
        lay = layout(nvars, tuple(caps))
        return cls._raw(lay, ncomps, trunc, [{} for _ in range(ncomps)], [{} for _ in range(ncomps)])

    @classmethod
    def constant(cls, value, nvars, trunc, caps=()):
        lay = layout(nvars, tuple(caps))
        p = _pair(value)
        re = {0: p[0]} if p[0] else {}
        im = {0: p[1]} if p[1] else {}
        return cls._raw(lay, 1, trunc, [re], [im])

    @classmethod
    def variable(cls, nvars, j, trunc, caps=()):
        lay = layout(nvars, tuple(caps))
        re = {lay.unit[j]: ONE} if trunc >= 1 and lay.within_caps(lay.unit[j]) else {}
        return cls._raw(lay, 1, trunc, [re], [{}])

    @classmethod
    def variables(cls, nvars, trunc, caps=()):
        return [cls.variable(nvars, j, trunc, caps) for j in range(nvars)]

    @classmethod
    def identity(cls, nvars, trunc, caps=()):
        return stack(cls.variables(nvars, trunc, caps))

    @classmethod
    def monomial(cls, nvars, exps, coeff=1, trunc=None, caps=()):
        if trunc is None:
            trunc = sum(exps)
        return cls(nvars, 1, trunc, [{tuple(exps): coeff}], caps)

    @classmethod
    def linear(cls, matrix, trunc, caps=()):
        """The linear map ``z -> matrix @ z``."""
        m = len(matrix)
        n = len(matrix[0])
        terms = []
        for row in matrix:
            t = {}
            for j, a in enumerate(row):
                e = [0] * n
                e[j] = 1
                t[tuple(e)] = a
            terms.append(t)
        return cls(n, m, trunc, terms, caps)

    # ---- basic properties -----------------------------------------------
    @property
    def nvars(self) -> int:
        return self.layout.n

    @property
    def caps(self) -> tuple:
        return self.layout.caps

    @property
    def num_vars(self) -> int:
        return self.layout.n

    @property
    def num_components(self) -> int:
        return self.ncomps

    @property
    def trunc_degree(self) -> int:
        return self.trunc

    def keys(self, c=None):
        comps = range(self.ncomps) if c is None else [c]
        ks = set()
        for i in comps:
            ks.update(self.re[i])
            ks.update(self.im[i])
        return sorted(ks)

    def terms(self, c=0):
        """Sorted list of ``(exponent tuple, Scalar)`` for component ``c``."""
        lay = self.layout
        r, i = self.re[c], self.im[c]
        return [(lay.unpack(k), Scalar(r.get(k, ZERO), i.get(k, ZERO))) for k in self.keys(c)]

    def as_dicts(self):
        return [dict(self.terms(c)) for c in range(self.ncomps)]

    def coeff(self, exps, c=0) -> Scalar:
        k = self.layout.pack(tuple(exps))
        return Scalar(self.re[c].get(k, ZERO), self.im[c].get(k, ZERO))

    def coeff_pair(self, key, c=0):
        return (self.re[c].get(key, ZERO), self.im[c].get(key, ZERO))

    def nterms(self) -> int:
        return sum(len(set(r) | set(i)) for r, i in zip(self.re, self.im))

    def is_zero(self) -> bool:
        return not any(self.re) and not any(self.im)

    def order(self):
        """Lowest degree of a nonzero term (``None`` for the zero series)."""
        ks = [k for d in self.re + self.im for k in d]
        if not ks:
            return None
        return self.layout.deg(min(ks))

    def component_order(self, c):
        ks = list(self.re[c]) + list(self.im[c])
        if not ks:
            return None
        return self.layout.deg(min(ks))

    def constant_term(self):
        return [Scalar(self.re[c].get(0, ZERO), self.im[c].get(0, ZERO)) for c in range(self.ncomps)]

    def max_degree(self):
        ks = [k for d in self.re + self.im for k in d]
        if not ks:
            return -1
        return self.layout.deg(max(ks))

    # ---- structural ------------------------------------------------------
    def component(self, c) -> "Series":
        return Series._raw(self.layout, 1, self.trunc, [self.re[c]], [self.im[c]])

    def components(self):
        return [self.component(c) for c in range(self.ncomps)]

    def truncate(self, D) -> "Series":
        D = min(D, self.trunc)
        lay = self.layout
        return Series._raw(lay, self.ncomps, D, [_trunc_dict(d, D, lay) for d in self.re],
                           [_trunc_dict(d, D, lay) for d in self.im])

    def extend(self, D) -> "Series":
        """Declare all coefficients between ``trunc`` and ``D`` to be zero.

        Used when the series is known to be a polynomial (a jet's Taylor
        polynomial, an exact relation)."""
        if D < self.trunc:
            return self.truncate(D)
        return Series._raw(self.layout, self.ncomps, D, self.re, self.im)

    def with_caps(self, caps) -> "Series":
        lay = layout(self.nvars, tuple(caps))
        re = [{lay.pack(self.layout.unpack(k)): v for k, v in d.items()} for d in self.re]
        im = [{lay.pack(self.layout.unpack(k)): v for k, v in d.items()} for d in self.im]
        re = [{k: v for k, v in d.items() if lay.within_caps(k)} for d in re]
        im = [{k: v for k, v in d.items() if lay.within_caps(k)} for d in im]
        return Series._raw(lay, self.ncomps, self.trunc, re, im)

    def homogeneous_part(self, l) -> "Series":
        if l > self.trunc:
            raise ValueError(f"degree {l} exceeds truncation {self.trunc}")
        ds = self.layout.dshift
        re = [{k: v for k, v in d.items() if k >> ds == l} for d in self.re]
        im = [{k: v for k, v in d.items() if k >> ds == l} for d in self.im]
        return Series._raw(self.layout, self.ncomps, self.trunc, re, im)

    def degree_range(self, lo, hi) -> "Series":
        """Terms of degree in ``[lo, hi]`` (truncation unchanged)."""
        ds = self.layout.dshift
        re = [{k: v for k, v in d.items() if lo <= k >> ds <= hi} for d in self.re]
        im = [{k: v for k, v in d.items() if lo <= k >> ds <= hi} for d in self.im]
        return Series._raw(self.layout, self.ncomps, self.trunc, re, im)

    # ---- arithmetic --------------------------------------------------------
    def _compat(self, o):
        if not isinstance(o, Series):
            raise TypeError("expected a Series")
        if o.layout is not self.layout:
            raise ValueError(f"variable mismatch: {self.layout} vs {o.layout}")

    def __add__(self, o):
        if not isinstance(o, Series):
            return self + Series.constant(o, self.nvars, self.trunc, self.caps).broadcast(self.ncomps)
        return add(self, o)

    def __radd__(self, o):
        return self + o

    def __sub__(self, o):
        if not isinstance(o, Series):
            return self + (-Scalar.coerce(o))
        return add(self, o, sign=-1)

    def __rsub__(self, o):
        return (-self) + o

    def __neg__(self):
        return Series._raw(self.layout, self.ncomps, self.trunc,
                           [{k: -v for k, v in d.items()} for d in self.re],
                           [{k: -v for k, v in d.items()} for d in self.im])

    def __mul__(self, o):
        if isinstance(o, Series):
            return mul(self, o)
        return scale(o, self)

    def __rmul__(self, o):
        return scale(o, self)

    def __pow__(self, k):
        return power(self, k)

    def __eq__(self, o):
        if not isinstance(o, Series):
            return NotImplemented
        return (self.layout is o.layout and self.ncomps == o.ncomps and self.trunc == o.trunc
                and self.re == o.re and self.im == o.im)

    def __hash__(self):
        return hash((self.nvars, self.ncomps, self.trunc, len(self.keys())))

    def agrees(self, o, D=None) -> bool:
        """Coefficientwise equality through degree ``D`` (default: common truncation)."""
        self._compat(o)
        if self.ncomps != o.ncomps:
            return False
        if D is None:
            D = min(self.trunc, o.trunc)
        if D > min(self.trunc, o.trunc):
            raise ValueError("comparison beyond the known degree")
        lay = self.layout
        for a, b in zip(self.re + self.im, o.re + o.im):
            if _trunc_dict(a, D, lay) != _trunc_dict(b, D, lay):
                return False
        return True

    def broadcast(self, m) -> "Series":
        if self.ncomps == m:
            return self
        if self.ncomps != 1:
            raise ValueError("only scalar series broadcast")
        return Series._raw(self.layout, m, self.trunc, [self.re[0]] * m, [self.im[0]] * m)

    def __repr__(self):
        return f"Series(nvars={self.nvars}, ncomps={self.ncomps}, trunc={self.trunc}, terms={self.nterms()})"

    def __str__(self):
        return "; ".join(_format_comp(self, c) for c in range(self.ncomps))

    # ---- serialization -------------------------------------------------------
    def to_json_obj(self):
        out = []
        for c in range(self.ncomps):
            out.append([{"exp": list(e), "re": qstr(v.re), "im": qstr(v.im)} for e, v in self.terms(c)])
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj, nvars, trunc, caps=()):
        terms = [{tuple(t["exp"]): (t["re"], t["im"]) for t in comp} for comp in obj]
        return cls(nvars, len(terms), trunc, terms, caps)

    @classmethod
    def from_json(cls, text, nvars, trunc, caps=()):
        return cls.from_json_obj(json.loads(text), nvars, trunc, caps)


def _format_comp(f, c):
    parts = []
    for e, v in f.terms(c):
        mono = "*".join(f"x{i + 1}" + (f"^{p}" if p > 1 else "") for i, p in enumerate(e) if p)
        parts.append(f"{v}" + (f"*{mono}" if mono else ""))
    return " + ".join(parts) if parts else "0"


# --------------------------------------------------------------------------
# ring operations


def add(f: Series, g: Series, sign=1) -> Series:
    f._compat(g)
    if f.ncomps != g.ncomps:
        if f.ncomps == 1:
            f = f.broadcast(g.ncomps)
        elif g.ncomps == 1:
            g = g.broadcast(f.ncomps)
        else:
            raise ValueError("component count mismatch")
    D = min(f.trunc, g.trunc)
    lay = f.layout
    re, im = [], []
    for a, b in zip(f.re, g.re):
        d = _trunc_dict(a, D, lay)
        _add_into(d, _trunc_dict(b, D, lay) if g.trunc > D else b, sign)
        re.append(_clean(d))
    for a, b in zip(f.im, g.im):
        d = _trunc_dict(a, D, lay)
        _add_into(d, _trunc_dict(b, D, lay) if g.trunc > D else b, sign)
        im.append(_clean(d))
    return Series._raw(lay, f.ncomps, D, re, im)


def sub(f: Series, g: Series) -> Series:
    return add(f, g, sign=-1)


def scale(c, f: Series) -> Series:
    p = _pair(c)
    re, im = [], []
    for r, i in zip(f.re, f.im):
        a, b = _scale_comp(p, r, i)
        re.append(a)
        im.append(b)
    return Series._raw(f.layout, f.ncomps, f.trunc, re, im)


def mul(f: Series, g: Series, D=None) -> Series:
    """Product; a scalar-valued factor multiplies every component of the other,
    otherwise the product is componentwise."""
    f._compat(g)
    if D is None:
        D = min(f.trunc, g.trunc)
    else:
        D = min(D, f.trunc, g.trunc)
    m = max(f.ncomps, g.ncomps)
    if f.ncomps != g.ncomps and 1 not in (f.ncomps, g.ncomps):
        raise ValueError("component count mismatch")
    re, im = [], []
    for c in range(m):
        cf = 0 if f.ncomps == 1 else c
        cg = 0 if g.ncomps == 1 else c
        a, b = _mul_comp(f.re[cf], f.im[cf], g.re[cg], g.im[cg], D, f.layout)
        re.append(a)
        im.append(b)
    return Series._raw(f.layout, m, D, re, im)


def power(f: Series, k: int) -> Series:
    if k < 0:
        raise ValueError("negative power")
    r = Series.constant(1, f.nvars, f.trunc, f.caps).broadcast(f.ncomps)
    b = f
    while k:
        if k & 1:
            r = mul(r, b)
        k >>= 1
        if k:
            b = mul(b, b)
    return r


def reciprocal(f: Series) -> Series:
    """``1/f`` for a scalar series with invertible constant term."""
    if f.ncomps != 1:
        raise ValueError("reciprocal needs a scalar series")
    c = f.constant_term()[0]
    if c.is_zero():
        raise ZeroDivisionError("constant term vanishes")
    inv_c = Scalar(1) / c
    e = Series.constant(1, f.nvars, f.trunc, f.caps) - f * inv_c.pair
    acc = term = Series.constant(1, f.nvars, f.trunc, f.caps)
    for _ in range(f.trunc):
        term = term * e
        if term.is_zero():
            break
        acc = acc + term
    return acc * inv_c.pair


def stack(parts) -> Series:
    parts = list(parts)
    lay = parts[0].layout
    for p in parts:
        if p.layout is not lay:
            raise ValueError("variable mismatch when stacking")
    D = min(p.trunc for p in parts)
    re, im = [], []
    for p in parts:
        for c in range(p.ncomps):
            re.append(_trunc_dict(p.re[c], D, lay) if p.trunc > D else p.re[c])
            im.append(_trunc_dict(p.im[c], D, lay) if p.trunc > D else p.im[c])
    return Series._raw(lay, len(re), D, re, im)


def homogeneous_part(f: Series, l: int) -> Series:
    return f.homogeneous_part(l)


def conjugate_series(f: Series) -> Series:
    """Conjugate every coefficient (the bar operator on germs)."""
    return Series._raw(f.layout, f.ncomps, f.trunc, f.re,
                       [{k: -v for k, v in d.items()} for d in f.im])


def derivative(f: Series, j: int) -> Series:
    """Partial derivative in variable ``j``; exact through degree ``trunc - 1``."""
    lay = f.layout
    if f.trunc == 0:
        raise ValueError("derivative of a degree-0 truncation is unknown")
    caps = lay.caps
    g = next((gi for gi, (vs, _) in enumerate(caps) if j in vs), None)
    if g is not None:
        if caps[g][1] == 0:
            raise ValueError("derivative along an exhausted cap group")
        caps = tuple((vs, c - 1) if gi == g else (vs, c) for gi, (vs, c) in enumerate(caps))
        nlay = layout(lay.n, caps)
    else:
        nlay = lay
    u = lay.unit[j]
    s = lay.vshift[j]

    def d(tab):
        out = {}
        for k, v in tab.items():
            e = (k >> s) & _MASK
            if e:
                nk = k - u
                if nlay is not lay:
                    nk = nlay.pack(lay.unpack(nk))
                out[nk] = v * e
        return out

    return Series._raw(nlay, f.ncomps, f.trunc - 1, [d(t) for t in f.re], [d(t) for t in f.im])


def jacobian(f: Series):
    """Matrix (list of rows) of scalar-valued partial derivative series."""
    cols = [derivative(f, j) for j in range(f.nvars)]
    return [[cols[j].component(i) for j in range(f.nvars)] for i in range(f.ncomps)]


def linear_part_matrix(f: Series):
    """Jacobian at 0 as a dense matrix of ``(re, im)`` pairs."""
    lay = f.layout
    return [[f.coeff_pair(lay.unit[j], c) for j in range(lay.n)] for c in range(f.ncomps)]


def evaluate(f: Series, point):
    """Value of the truncated polynomial at ``point`` (list of pairs/scalars)."""
    pt = [_pair(x) for x in point]
    lay = f.layout
    maxe = f.trunc
    pw = []
    for x in pt:
        row = [(ONE, ZERO)]
        for _ in range(maxe):
            row.append(cmul(row[-1], x))
        pw.append(row)
    cache = {}

    def mono(k):
        v = cache.get(k)
        if v is None:
            v = (ONE, ZERO)
            for j, e in enumerate(lay.unpack(k)):
                if e:
                    v = cmul(v, pw[j][e])
            cache[k] = v
        return v

    out = []
    for r, i in zip(f.re, f.im):
        sr, si = ZERO, ZERO
        for k, v in r.items():
            m = mono(k)
            sr += v * m[0]
            si += v * m[1]
        for k, v in i.items():
            m = mono(k)
            sr -= v * m[1]
            si += v * m[0]
        out.append((sr, si))
    return out


def jacobian_at(f: Series, point):
    """Jacobian matrix of the truncated polynomial at ``point`` (pairs)."""
    cols = [evaluate(derivative(f, j).extend(f.trunc), point) for j in range(f.nvars)]
    return [[cols[j][i] for j in range(f.nvars)] for i in range(f.ncomps)]


def rename(f: Series, nvars: int, mapping, trunc=None, caps=()) -> Series:
    """Re-express ``f`` in a new variable space.

    ``mapping[i]`` is the new index of old variable ``i``, or ``None`` to set
    that variable to zero.  Useful for embeddings, permutations and
    restrictions to coordinate subspaces.
    """
    lay = f.layout
    nlay = layout(nvars, tuple(caps))
    D = f.trunc if trunc is None else trunc
    units = [None if t is None else nlay.unit[t] for t in mapping]

    def m(tab):
        out = {}
        for k, v in tab.items():
            e = lay.unpack(k)
            nk = 0
            dead = False
            for x, u in zip(e, units):
                if x:
                    if u is None:
                        dead = True
                        break
                    nk += u * x
            if dead or nlay.deg(nk) > D or not nlay.within_caps(nk):
                continue
            out[nk] = out.get(nk, ZERO) + v
        return _clean(out)

    return Series._raw(nlay, f.ncomps, D, [m(t) for t in f.re], [m(t) for t in f.im])


def coefficient_in(f: Series, var_indices, exps, keep=None) -> Series:
    """Coefficient of ``x[var_indices]^exps`` as a series in the other variables.

    ``keep`` lists the remaining variables in their new order (default: all
    variables outside ``var_indices`` in increasing order)."""
    lay = f.layout
    var_indices = list(var_indices)
    if keep is None:
        keep = [j for j in range(lay.n) if j not in var_indices]
    nlay = layout(len(keep), ())
    target = dict(zip(var_indices, exps))
    D = f.trunc - sum(exps)
    if D < 0:
        raise ValueError("coefficient beyond truncation")

    def m(tab):
        out = {}
        for k, v in tab.items():
            e = lay.unpack(k)
            if any(e[j] != target[j] for j in var_indices):
                continue
            if any(e[j] for j in range(lay.n) if j not in target and j not in keep):
                continue
            out[nlay.pack(tuple(e[j] for j in keep))] = v
        return out

    return Series._raw(nlay, f.ncomps, D, [m(t) for t in f.re], [m(t) for t in f.im])


# --------------------------------------------------------------------------
# composition and inversion


def compose(f: Series, g: Series, D=None) -> Series:
    """``f o g`` for ``g`` without constant term.

    The output is exact through ``min(f.trunc, g.trunc)``: its degree-j part
    only involves f and g through degree j.  Components of ``g`` that are bare
    variables are substituted by relabelling instead of multiplication.  Group
    caps on ``f`` are ignored (absent terms are read as zero); the caller is
    responsible for the inner map respecting any grading.
    """
    if g.ncomps != f.nvars:
        raise ValueError(f"inner map has {g.ncomps} components, outer expects {f.nvars} variables")
    for c in range(g.ncomps):
        if g.re[c].get(0) or g.im[c].get(0):
            raise ValueError("inner map has a nonzero constant term")
    if D is None:
        D = min(f.trunc, g.trunc)
    D = min(D, f.trunc, g.trunc)
    flay, glay = f.layout, g.layout
    n = f.nvars
    ds = glay.dshift

    passthrough = {}
    used = set()
    for j in range(n):
        r, i = g.re[j], g.im[j]
        if not i and len(r) == 1:
            (k, v), = r.items()
            if v == 1 and k in glay.unit and k not in used:
                passthrough[j] = k
                used.add(k)
    moving = [j for j in range(n) if j not in passthrough]
    orders = {j: g.component_order(j) for j in moving}

    groups = {}
    for c in range(f.ncomps):
        for part, tab in ((0, f.re[c]), (1, f.im[c])):
            for k, v in tab.items():
                if (k >> flay.dshift) > D:
                    continue
                e = flay.unpack(k)
                rest = tuple(e[j] for j in moving)
                if any(rest[t] and orders[j] is None for t, j in enumerate(moving)):
                    continue
                low = sum(rest[t] * orders[j] for t, j in enumerate(moving) if rest[t])
                pk = 0
                for j, u in passthrough.items():
                    if e[j]:
                        pk += u * e[j]
                if (pk >> ds) + low > D or not glay.within_caps(pk):
                    continue
                slot = groups.setdefault(rest, [[{} for _ in range(f.ncomps)], [{} for _ in range(f.ncomps)]])
                slot[part][c][pk] = slot[part][c].get(pk, ZERO) + v

    memo = {}
    zero_rest = tuple(0 for _ in moving)

    def power_product(rest):
        if rest in memo:
            return memo[rest]
        t = max(i for i, x in enumerate(rest) if x)
        prev = list(rest)
        prev[t] -= 1
        prev = tuple(prev)
        j = moving[t]
        if prev == zero_rest:
            val = (_trunc_dict(g.re[j], D, glay), _trunc_dict(g.im[j], D, glay))
        else:
            a = power_product(prev)
            val = _mul_comp(a[0], a[1], g.re[j], g.im[j], D, glay)
        memo[rest] = val
        return val

    out_re = [{} for _ in range(f.ncomps)]
    out_im = [{} for _ in range(f.ncomps)]
    for rest in sorted(groups, key=lambda r: (sum(r), r)):
        slot = groups[rest]
        if rest == zero_rest:
            for c in range(f.ncomps):
                _add_into(out_re[c], slot[0][c])
                _add_into(out_im[c], slot[1][c])
            continue
        G = power_product(rest)
        for c in range(f.ncomps):
            pr, pi = _clean(slot[0][c]), _clean(slot[1][c])
            if not pr and not pi:
                continue
            if set(pr) <= {0} and set(pi) <= {0}:
                a, b = _scale_comp((pr.get(0, ZERO), pi.get(0, ZERO)), G[0], G[1])
            else:
                a, b = _mul_comp(pr, pi, G[0], G[1], D, glay)
            _add_into(out_re[c], a)
            _add_into(out_im[c], b)
    return Series._raw(glay, f.ncomps, D, [_clean(d) for d in out_re], [_clean(d) for d in out_im])


def matvec(M, u: Series) -> Series:
    """``M @ u`` for a matrix (list of rows) of scalar-valued series."""
    rows = []
    for row in M:
        if len(row) != u.ncomps:
            raise ValueError("matrix/vector size mismatch")
        acc = None
        for a, c in zip(row, u.components()):
            if a.is_zero():
                continue
            t = mul(a, c)
            acc = t if acc is None else add(acc, t)
        if acc is None:
            acc = Series.zero(u.nvars, 1, min(u.trunc, min(a.trunc for a in row)), u.caps)
        rows.append(acc)
    return stack(rows)


def apply_matrix(A, f: Series) -> Series:
    """Multiply a series map by a constant matrix of pairs/scalars."""
    A = [[_pair(x) for x in row] for row in A]
    comps = f.components()
    out = []
    for row in A:
        acc = Series.zero(f.nvars, 1, f.trunc, f.caps)
        for a, c in zip(row, comps):
            if a[0] or a[1]:
                acc = add(acc, scale(a, c))
        out.append(acc)
    return stack(out)


def invert_map(u: Series) -> Series:
    """Compositional inverse of a germ ``u: C^n -> C^n`` with invertible linear part.

    Degree by degree: ``v_1 = L^{-1} z`` and
    ``v_l = -L^{-1} [u_{>=2}(v_1 + ... + v_{l-1})]_l``.

    Capped layouts are accepted when every component of a capped variable
    lies in the ideal of its group; the inverse is then exact in the
    truncated quotient ring.
    """
    n = u.nvars
    if u.ncomps != n:
        raise ValueError("invert_map needs a square map")
    if any(not c.is_zero() for c in u.constant_term()):
        raise ValueError("map does not fix the origin")
    lay = u.layout
    for g, (vs, _) in enumerate(lay.caps):
        for j in vs:
            for tab in (u.re[j], u.im[j]):
                if any(lay.group_degree(k, g) == 0 for k in tab):
                    raise ValueError("capped component leaves the ideal of its group")
    L = linear_part_matrix(u)
    try:
        Linv = mat_inverse(L)
    except ZeroDivisionError:
        raise ValueError("singular linear part") from None
    D = u.trunc
    ident = Series.identity(n, D, u.caps)
    V = apply_matrix(Linv, ident)
    if D <= 1:
        return V
    nonlin = u.degree_range(2, D)
    for l in range(2, D + 1):
        w = compose(nonlin, V.truncate(l - 1).extend(l), D=l).homogeneous_part(l)
        V = V - apply_matrix(Linv, w).extend(D)
    return V


# --------------------------------------------------------------------------
# jets


class Jet:
    """Order-k Taylor data of a map at 0, identified with its Taylor polynomial."""

    __slots__ = ("order", "series")

    def __init__(self, series: Series, order: int | None = None):
        if order is None:
            order = series.trunc
        if series.trunc < order:
            raise ValueError("series does not determine the jet")
        self.order = order
        self.series = series.truncate(order)

    @property
    def num_vars(self):
        return self.series.nvars

    @property
    def num_components(self):
        return self.series.ncomps

    def extend(self, D) -> Series:
        return self.series.extend(D)

    def linear_matrix(self):
        return linear_part_matrix(self.series)

    def __eq__(self, o):
        return isinstance(o, Jet) and self.order == o.order and self.series == o.series

    def __repr__(self):
        return f"Jet(order={self.order}, {self.series!r})"


def jet(f: Series, k: int) -> Jet:
    return Jet(f, k)


def jet_pushforward(N, k: int, j: Jet) -> Jet:
    """Action of an invertible linear change ``N`` on order-k jets: ``j -> j o N``.

    Each homogeneous part is pushed through the linear substitution
    separately, which is exact since ``N`` preserves degree."""
    if isinstance(N, Jet):
        Nmat = N.linear_matrix()
    elif isinstance(N, Series):
        Nmat = linear_part_matrix(N)
    else:
        Nmat = [[_pair(x) for x in row] for row in N]
    n = len(Nmat)
    mat_inverse(Nmat)  # raises on singular N
    if j.num_vars != n:
        raise ValueError("jet and linear map dimensions differ")
    Nser = Series.linear(Nmat, k)
    src = j.series.extend(k)
    return Jet(compose(src, Nser), k)


# --------------------------------------------------------------------------
# combinatorics and norms


def _partitions_by_weight(r, maxpart=None):
    """All (k_1..k_r) with sum_j j*k_j = r."""
    out = []

    def rec(j, remaining, acc):
        if j == 0:
            if remaining == 0:
                out.append(tuple(reversed(acc)))
            return
        for kj in range(remaining // j + 1):
            rec(j - 1, remaining - j * kj, acc + [kj])

    rec(r, r, [])
    return out


def faa_di_bruno(g_coeffs, h_coeffs, r: int) -> Scalar:
    """Coefficient ``a_r`` of ``g(h(t))`` for univariate coefficient lists.

    ``a_r = sum q! b_q / (k_1! ... k_r!) c_1^k_1 ... c_r^k_r`` over
    ``k_1 + 2 k_2 + ... + r k_r = r`` with ``q = k_1 + ... + k_r``.
    """
    if r < 1:
        raise ValueError("r must be positive")
    b = [Scalar.coerce(x) for x in g_coeffs]
    c = [Scalar.coerce(x) for x in h_coeffs]
    if c and not c[0].is_zero():
        raise ValueError("inner series must vanish at 0")
    total = Scalar(0)
    for ks in _partitions_by_weight(r):
        q = sum(ks)
        if q >= len(b) or b[q].is_zero():
            continue
        coef = Fraction(factorial(q))
        term = Scalar(1)
        skip = False
        for j, kj in enumerate(ks, start=1):
            if kj:
                cj = c[j] if j < len(c) else Scalar(0)
                if cj.is_zero():
                    skip = True
                    break
                coef /= factorial(kj)
                term = term * cj ** kj
        if skip:
            continue
        total = total + b[q] * term * Scalar(coef)
    return total


def norm_one(f: Series):
    """``sum_alpha |re| + |im|`` per component, maximized over components."""
    best = mpq(0)
    for r, i in zip(f.re, f.im):
        s = sum((abs(v) for v in r.values()), mpq(0)) + sum((abs(v) for v in i.values()), mpq(0))
        best = max(best, s)
    return best


def multi_indices(n: int, d: int):
    """Exponent tuples of degree exactly ``d`` in (degree, lex) key order."""
    lay = layout(n)
    out = [e for e in _iproduct(range(d + 1), repeat=n) if sum(e) == d]
    out.sort(key=lay.pack)
    return out


def multi_indices_upto(n: int, d: int):
    out = []
    for k in range(d + 1):
        out.extend(multi_indices(n, k))
    return out
