"""A small polynomial language for manifolds, maps and jets.

A document is a header followed by statements::

    graph n=2 d=1: Im(w) = z1*conj(z1) + Re(w)*z2*conj(z2)

    complex n=1 d=1: w = conj(w) + 2*i*z*conj(z)

    series n=2
    A = [z1^2, z1^2 + z2^3]
    u0 = [z1 + z2^2, 2*z2]

    jet n=1 d=1: H = [2*z, 4*w]

Expressions follow

    expr     := term (('+' | '-') term)*
    term     := factor ('*' factor)*
    factor   := atom ('^' nat)?
    atom     := rational | 'i' | var | 'conj(' var ')' | 'Re(' var ')'
              | 'Im(' var ')' | '(' expr ')'
    rational := int ('/' nat)?
    var      := z<k> | w<k> | z | w

Statements are separated by newlines or ``;``; ``#`` starts a comment.
Right-hand sides in ``series`` and ``jet`` documents may be bracketed lists.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .series_core import Series, conjugate_series, rename, stack

MODES = ("graph", "complex", "series", "jet")
OPTION_KEYS = ("n", "d", "degree", "kmax", "seed")


class ParseError(ValueError):
    def __init__(self, message, line=None, col=None):
        self.line, self.col = line, col
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{message}{where}")


class DimensionError(ValueError):
    pass


# --------------------------------------------------------------------------
# tokens

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<sym>[-+*/^()\[\],=:;])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str):
    pos, line, col = 0, 1, 1
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "num" and "." in s:
            raise ParseError(f"non-rational literal {s!r}", line, col)
        if kind not in ("ws", "comment"):
            out.append(Tok(kind, s, line, col))
        if kind == "nl":
            line, col = line + 1, 1
        else:
            col += len(s)
        pos = m.end()
    out.append(Tok("eof", "", line, col))
    return out


# --------------------------------------------------------------------------
# expression trees
#
#   ("num", Fraction) | ("i",) | ("var", kind, k) | ("conj", kind, k)
#   ("re", kind, k) | ("im", kind, k) | ("add", ((sign, node), ...))
#   ("mul", (node, ...)) | ("pow", node, k)

_VAR = re.compile(r"^([zw])(\d*)$")


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0
        self.depth = 0

    def peek(self, skip_nl=None):
        if skip_nl is None:
            skip_nl = self.depth > 0
        j = self.i
        while skip_nl and self.toks[j].kind == "nl":
            j += 1
        return self.toks[j]

    def next(self):
        t = self.peek()
        self.i = self.toks.index(t, self.i)
        self.i += 1
        return t

    def expect(self, text):
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or t.kind!r}", t.line, t.col)
        return t

    def error(self, msg, t=None):
        t = t or self.peek()
        raise ParseError(msg, t.line, t.col)

    # expr := term (('+'|'-') term)*
    def expr(self):
        items = [(1, self.term())]
        while self.peek().text in ("+", "-"):
            sign = 1 if self.next().text == "+" else -1
            items.append((sign, self.term()))
        return items[0][1] if len(items) == 1 else ("add", tuple(items))

    def term(self):
        fs = [self.factor()]
        while self.peek().text == "*":
            self.next()
            fs.append(self.factor())
        return fs[0] if len(fs) == 1 else ("mul", tuple(fs))

    def factor(self):
        a = self.atom()
        if self.peek().text == "^":
            self.next()
            t = self.next()
            if t.kind != "num":
                self.error("exponent must be a natural number", t)
            return ("pow", a, int(t.text))
        return a

    def _var(self, t):
        m = _VAR.match(t.text)
        if not m:
            self.error(f"expected a variable, found {t.text!r}", t)
        k = int(m.group(2)) if m.group(2) else 1
        if k < 1:
            self.error("variable indices start at 1", t)
        return m.group(1), k

    def atom(self):
        t = self.next()
        if t.text == "-" or t.kind == "num":
            neg = t.text == "-"
            if neg:
                t = self.next()
                if t.kind != "num":
                    self.error("a sign is only allowed on an integer literal", t)
            val = Fraction(int(t.text))
            if self.peek().text == "/":
                self.next()
                d = self.next()
                if d.kind != "num":
                    self.error("denominator must be a natural number", d)
                if int(d.text) == 0:
                    self.error("zero denominator", d)
                val /= int(d.text)
            return ("num", -val if neg else val)
        if t.kind == "ident":
            if t.text == "i":
                return ("i",)
            if t.text in ("conj", "Re", "Im"):
                self.expect("(")
                self.depth += 1
                v = self.next()
                kind, k = self._var(v)
                self.depth -= 1
                self.expect(")")
                return ({"conj": "conj", "Re": "re", "Im": "im"}[t.text], kind, k)
            kind, k = self._var(t)
            return ("var", kind, k)
        if t.text == "(":
            self.depth += 1
            e = self.expr()
            self.depth -= 1
            self.expect(")")
            return e
        self.error(f"unexpected {t.text or t.kind!r}", t)

    def rhs(self):
        if self.peek().text == "[":
            self.next()
            self.depth += 1
            items = [self.rhs()]
            while self.peek().text == ",":
                self.next()
                items.append(self.rhs())
            self.depth -= 1
            self.expect("]")
            return ("list", tuple(items))
        return self.expr()


# --------------------------------------------------------------------------
# printing

def _fmt_num(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _var_name(kind, k):
    return f"{kind}{k}"


def to_text(node) -> str:
    tag = node[0]
    if tag == "num":
        return _fmt_num(node[1])
    if tag == "i":
        return "i"
    if tag == "var":
        return _var_name(node[1], node[2])
    if tag in ("conj", "re", "im"):
        fn = {"conj": "conj", "re": "Re", "im": "Im"}[tag]
        return f"{fn}({_var_name(node[1], node[2])})"
    if tag == "list":
        return "[" + ", ".join(to_text(x) for x in node[1]) + "]"
    if tag == "add":
        parts = []
        for j, (sign, t) in enumerate(node[1]):
            s = _wrap(t, ("add",))
            parts.append(s if j == 0 else (" + " if sign > 0 else " - ") + s)
        return "".join(parts)
    if tag == "mul":
        return "*".join(_wrap(f, ("add", "mul")) for f in node[1])
    if tag == "pow":
        base = node[1]
        s = to_text(base)
        if base[0] in ("add", "mul", "pow") or (base[0] == "num" and (base[1] < 0 or base[1].denominator != 1)):
            s = f"({s})"
        return f"{s}^{node[2]}"
    raise ValueError(f"unknown node {tag}")


def _wrap(node, tags):
    s = to_text(node)
    return f"({s})" if node[0] in tags else s


# --------------------------------------------------------------------------
# documents


@dataclass
class InputDocument:
    mode: str
    n: int
    d: int
    statements: tuple
    options: dict = field(default_factory=dict)

    def canonical(self) -> str:
        head = [self.mode, f"n={self.n}"]
        if self.mode != "series":
            head.append(f"d={self.d}")
        head += [f"{k}={self.options[k]}" for k in ("degree", "kmax", "seed") if k in self.options]
        lines = [" ".join(head) + ":"]
        for lhs, rhs in self.statements:
            lines.append(f"{_lhs_text(lhs)} = {to_text(rhs)}")
        return "\n".join(lines) + "\n"

    def get(self, name):
        for lhs, rhs in self.statements:
            if lhs == name or (isinstance(lhs, tuple) and lhs[0] == name):
                return rhs
        return None

    # ---- evaluation -----------------------------------------------------
    def graph_phi(self, D: int | None = None) -> Series:
        """``phi`` on ``(z, chi, s)`` for a graph document (exact polynomial if ``D`` is None)."""
        self._need("graph")
        nv = 2 * self.n + self.d
        exprs = self._per_w("im")
        bound = max(degree_bound(e) for e in exprs)
        D = max(bound, 0) if D is None else D
        return stack([evaluate(e, self._env("graph"), nv, max(D, bound)).truncate(D) for e in exprs])

    def complex_q(self, D: int) -> Series:
        self._need("complex")
        nv = 2 * self.n + self.d
        exprs = self._per_w("var")
        return stack([evaluate(e, self._env("complex"), nv, D) for e in exprs])

    def maps(self, D: int):
        """Series-mode statements evaluated on ``n`` variables: lists become maps or matrices."""
        self._need("series", "jet")
        nv = self.n + (self.d if self.mode == "jet" else 0)
        env = self._env(self.mode)
        out = {}
        for lhs, rhs in self.statements:
            out[lhs] = _eval_rhs(rhs, env, nv, D)
        return out

    def _need(self, *modes):
        if self.mode not in modes:
            raise DimensionError(f"operation needs a {' or '.join(modes)} document, got {self.mode}")

    def _per_w(self, kind):
        got = {}
        for lhs, rhs in self.statements:
            if not (isinstance(lhs, tuple) and lhs[0] == kind and lhs[1] == "w"):
                raise DimensionError(f"unexpected left-hand side {_lhs_text(lhs)}")
            got[lhs[2]] = rhs
        if sorted(got) != list(range(1, self.d + 1)):
            raise DimensionError(f"need exactly one equation per w1..w{self.d}")
        return [got[k] for k in range(1, self.d + 1)]

    def _env(self, mode):
        return {"mode": mode, "n": self.n, "d": self.d}


def _lhs_text(lhs):
    if isinstance(lhs, tuple):
        tag, kind, k = lhs
        if tag == "var":
            return _var_name(kind, k)
        return f"Im({_var_name(kind, k)})"
    return lhs


def parse_input(text: str, validate: bool = True) -> InputDocument:
    """Parse a document; graph documents are checked for reality and normality."""
    p = _Parser(tokenize(text))
    t = p.next()
    while t.kind == "nl":
        t = p.next()
    if t.text not in MODES:
        p.error(f"document must start with one of {', '.join(MODES)}", t)
    mode = t.text
    opts = {}
    while p.peek().kind == "ident":
        k = p.next()
        if k.text not in OPTION_KEYS:
            p.error(f"unknown option {k.text!r}", k)
        p.expect("=")
        v = p.next()
        if v.kind != "num":
            p.error("option values are natural numbers", v)
        opts[k.text] = int(v.text)
    if p.peek().text == ":":
        p.next()
    n = opts.pop("n", None)
    d = opts.pop("d", 0 if mode == "series" else None)
    if n is None or n < 1:
        p.error("header must give n >= 1", t)
    if d is None or (mode != "series" and d < 1):
        p.error("header must give d >= 1", t)
    stmts = []
    while True:
        while p.peek(skip_nl=False).kind == "nl" or p.peek().text == ";":
            p.i += 1
        if p.peek(skip_nl=False).kind == "eof":
            break
        stmts.append(_statement(p, mode))
        nxt = p.peek(skip_nl=False)
        if nxt.kind not in ("nl", "eof") and nxt.text != ";":
            p.error(f"unexpected {nxt.text!r} after statement", nxt)
    if not stmts:
        p.error("document has no statements")
    doc = InputDocument(mode, n, d, tuple(stmts), opts)
    _check_dims(doc)
    if validate and mode == "graph":
        _check_graph(doc)
    return doc


def _statement(p, mode):
    t = p.peek()
    if mode == "graph":
        if t.text != "Im":
            p.error("graph equations read Im(w) = ...", t)
        p.next()
        p.expect("(")
        kind, k = p._var(p.next())
        p.expect(")")
        if kind != "w":
            p.error("left-hand side must be Im(w<k>)", t)
        lhs = ("im", "w", k)
    elif mode == "complex":
        kind, k = p._var(p.next())
        if kind != "w":
            p.error("left-hand side must be w<k>", t)
        lhs = ("var", "w", k)
    else:
        name = p.next()
        if name.kind != "ident":
            p.error("expected a name", name)
        lhs = name.text
    p.expect("=")
    return lhs, p.rhs()


def _walk(node):
    yield node
    tag = node[0]
    if tag == "add":
        for _, t in node[1]:
            yield from _walk(t)
    elif tag in ("mul", "list"):
        for t in node[1]:
            yield from _walk(t)
    elif tag == "pow":
        yield from _walk(node[1])


def _check_dims(doc):
    for lhs, rhs in doc.statements:
        for node in _walk(rhs):
            tag = node[0]
            if tag in ("var", "conj", "re", "im"):
                kind, k = node[1], node[2]
                limit = doc.n if kind == "z" else doc.d
                if k > limit:
                    raise DimensionError(f"{_var_name(kind, k)} exceeds the declared dimensions")
                _allowed(doc.mode, tag, kind)
        if isinstance(lhs, tuple) and lhs[2] > doc.d:
            raise DimensionError(f"{_lhs_text(lhs)} exceeds d={doc.d}")


def _allowed(mode, tag, kind):
    ok = {
        "graph": {("var", "z"), ("conj", "z"), ("re", "z"), ("im", "z"), ("re", "w")},
        "complex": {("var", "z"), ("conj", "z"), ("re", "z"), ("im", "z"), ("conj", "w")},
        "series": {("var", "z")},
        "jet": {("var", "z"), ("var", "w")},
    }[mode]
    if (tag, kind) not in ok:
        shown = {"var": "{}", "conj": "conj({})", "re": "Re({})", "im": "Im({})"}[tag].format(kind)
        raise DimensionError(f"{shown} is not allowed in {mode} documents")


def _check_graph(doc):
    from .cr_geometry import ManifoldError
    phi = doc.graph_phi()
    n, d = doc.n, doc.d
    swap = list(range(n, 2 * n)) + list(range(n)) + list(range(2 * n, 2 * n + d))
    if rename(conjugate_series(phi), 2 * n + d, swap) != phi:
        raise ManifoldError("reality violated: the right-hand side is not real-valued")
    lay = phi.layout
    for c in range(d):
        for k in list(phi.re[c]) + list(phi.im[c]):
            e = lay.unpack(k)
            if sum(e[:n]) == 0 or sum(e[n:2 * n]) == 0:
                raise ManifoldError("normality violated: every term needs both z and conj(z)")


# --------------------------------------------------------------------------
# evaluation


def degree_bound(node) -> int:
    tag = node[0]
    if tag in ("num", "i"):
        return 0
    if tag in ("var", "conj", "re", "im"):
        return 1
    if tag == "add":
        return max(degree_bound(t) for _, t in node[1])
    if tag == "mul":
        return sum(degree_bound(t) for t in node[1])
    if tag == "pow":
        return degree_bound(node[1]) * node[2]
    if tag == "list":
        return max(degree_bound(t) for t in node[1])
    raise ValueError(tag)


def _slot(env, tag, kind, k, nv, D):
    n, mode = env["n"], env["mode"]
    k -= 1
    if mode in ("graph", "complex"):
        z = lambda j: Series.variable(nv, j, D)  # noqa: E731
        if kind == "z":
            if tag == "var":
                return z(k)
            if tag == "conj":
                return z(n + k)
            if tag == "re":
                return (z(k) + z(n + k)) * "1/2"
            return (z(k) - z(n + k)) * (0, Fraction(-1, 2))
        if tag == "re" and mode == "graph":
            return z(2 * n + k)
        if tag == "conj" and mode == "complex":
            return z(2 * n + k)
    if mode == "series" and kind == "z" and tag == "var":
        return Series.variable(nv, k, D)
    if mode == "jet" and tag == "var":
        return Series.variable(nv, k if kind == "z" else n + k, D)
    raise DimensionError(f"{tag} of {kind} not available in {mode} documents")


def evaluate(node, env, nv: int, D: int) -> Series:
    tag = node[0]
    if tag == "num":
        return Series.constant(node[1], nv, D)
    if tag == "i":
        return Series.constant((0, 1), nv, D)
    if tag in ("var", "conj", "re", "im"):
        return _slot(env, tag, node[1], node[2], nv, D)
    if tag == "add":
        acc = None
        for sign, t in node[1]:
            v = evaluate(t, env, nv, D)
            v = v if sign > 0 else -v
            acc = v if acc is None else acc + v
        return acc
    if tag == "mul":
        acc = evaluate(node[1][0], env, nv, D)
        for t in node[1][1:]:
            acc = acc * evaluate(t, env, nv, D)
        return acc
    if tag == "pow":
        return evaluate(node[1], env, nv, D) ** node[2]
    raise DimensionError("lists are only allowed as statement right-hand sides")


def _eval_rhs(rhs, env, nv, D):
    if rhs[0] != "list":
        return evaluate(rhs, env, nv, D)
    items = rhs[1]
    if all(x[0] == "list" for x in items):
        rows = [[evaluate(e, env, nv, D) for e in row[1]] for row in items]
        if len({len(r) for r in rows}) != 1:
            raise DimensionError("matrix rows have different lengths")
        return rows
    if any(x[0] == "list" for x in items):
        raise DimensionError("mixed list nesting")
    return stack([evaluate(e, env, nv, D) for e in items])


def constant_matrix(rows):
    """Matrix of series with only constant terms -> matrix of pairs."""
    out = []
    for row in rows:
        r = []
        for e in row:
            if e.max_degree() > 0:
                raise DimensionError("matrix entries must be constants")
            r.append(e.constant_term()[0].pair)
        out.append(r)
    return out
