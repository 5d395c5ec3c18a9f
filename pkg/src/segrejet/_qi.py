"""Gaussian-rational helpers on raw ``(re, im)`` pairs of :class:`gmpy2.mpq`.

These are the hot-path primitives behind :mod:`segrejet.series_core` and
:mod:`segrejet.linalg_homog`.  Nothing here allocates wrapper objects.
"""

from gmpy2 import mpq

ZERO = mpq(0)
ONE = mpq(1)


def to_mpq(x):
    if isinstance(x, str):
        x = x.strip()
        if "/" in x:
            p, q = x.split("/")
            return mpq(int(p), int(q))
        return mpq(int(x))
    return mpq(x)


def cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def cadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def csub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def cneg(a):
    return (-a[0], -a[1])


def cinv(a):
    n = a[0] * a[0] + a[1] * a[1]
    if n == 0:
        raise ZeroDivisionError("division by zero in Q(i)")
    return (a[0] / n, -a[1] / n)


def cconj(a):
    return (a[0], -a[1])


def iszero(a):
    return a[0] == 0 and a[1] == 0


def cpow(a, k):
    r = (ONE, ZERO)
    while k:
        if k & 1:
            r = cmul(r, a)
        a = cmul(a, a)
        k >>= 1
    return r


# --- dense matrices: lists of rows of pairs ---------------------------------

def mat_identity(n):
    return [[(ONE, ZERO) if i == j else (ZERO, ZERO) for j in range(n)] for i in range(n)]


def mat_mul(A, B):
    m, k, n = len(A), len(B), len(B[0]) if B else 0
    out = []
    for i in range(m):
        row = []
        for j in range(n):
            re = ZERO
            im = ZERO
            for t in range(k):
                a = A[i][t]
                b = B[t][j]
                if (a[0] or a[1]) and (b[0] or b[1]):
                    re += a[0] * b[0] - a[1] * b[1]
                    im += a[0] * b[1] + a[1] * b[0]
            row.append((re, im))
        out.append(row)
    return out


def rref(rows, ncols):
    """Reduced row echelon form of a dense matrix; returns (rows, pivots)."""
    R = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        p = None
        for i in range(r, len(R)):
            if R[i][c][0] or R[i][c][1]:
                p = i
                break
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        inv = cinv(R[r][c])
        R[r] = [cmul(inv, x) for x in R[r]]
        for i in range(len(R)):
            if i != r:
                f = R[i][c]
                if f[0] or f[1]:
                    R[i] = [csub(x, cmul(f, y)) for x, y in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == len(R):
            break
    return R, pivots


def mat_rank(rows, ncols=None):
    if not rows:
        return 0
    if ncols is None:
        ncols = len(rows[0])
    return len(rref(rows, ncols)[1])


def mat_inverse(A):
    n = len(A)
    aug = [list(A[i]) + [(ONE, ZERO) if i == j else (ZERO, ZERO) for j in range(n)]
           for i in range(n)]
    R, piv = rref(aug, n)
    if piv != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in R]


def mat_det(A):
    n = len(A)
    M = [list(r) for r in A]
    det = (ONE, ZERO)
    for c in range(n):
        p = next((i for i in range(c, n) if M[i][c][0] or M[i][c][1]), None)
        if p is None:
            return (ZERO, ZERO)
        if p != c:
            M[c], M[p] = M[p], M[c]
            det = cneg(det)
        det = cmul(det, M[c][c])
        inv = cinv(M[c][c])
        for i in range(c + 1, n):
            f = M[i][c]
            if f[0] or f[1]:
                f = cmul(f, inv)
                M[i] = [csub(x, cmul(f, y)) for x, y in zip(M[i], M[c])]
    return det
