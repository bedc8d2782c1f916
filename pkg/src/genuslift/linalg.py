"""Dense matrix helpers over generic coefficient rings.

Matrices are plain lists of row lists.  Entries may be exact scalars, mpmath
numbers, or :class:`TruncatedSeries` jets; the helpers only use ring
operations (+, -, *), plus explicit division hooks where inversion is
required.  Dimensions here are tiny (the Frobenius manifolds of interest
have N <= 4), so everything is straightforward O(N^3).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, List, Sequence

import mpmath

from .scalars import FloatContext
from .series import TruncatedSeries

Matrix = List[list]


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    n, m, p = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            s = a[i][0] * b[0][j]
            for k in range(1, m):
                s = s + a[i][k] * b[k][j]
            row.append(s)
        out.append(row)
    return out


def mat_vec(a: Matrix, v: Sequence) -> list:
    return [sum_entries([a[i][k] * v[k] for k in range(len(v))]) for i in range(len(a))]


def sum_entries(xs: Sequence):
    s = xs[0]
    for x in xs[1:]:
        s = s + x
    return s


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a: Matrix, c) -> Matrix:
    return [[x * c for x in row] for row in a]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def trace(a: Matrix):
    return sum_entries([a[i][i] for i in range(len(a))])


def identity(n: int, one=Fraction(1), zero=Fraction(0)) -> Matrix:
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_map(a: Matrix, f: Callable) -> Matrix:
    return [[f(x) for x in row] for row in a]


def charpoly(a: Matrix, one, divk: Callable[[object, int], object]) -> list:
    """Faddeev-LeVerrier: coefficients [1, c_1, ..., c_n] of
    det(x I - A) = x^n + c_1 x^{n-1} + ... + c_n.

    ``one`` is the ring unit; ``divk(x, k)`` divides a ring element by a
    positive integer (exact in every ring we use, which all contain Q).
    """
    n = len(a)
    zero = one - one
    coeffs = [one]
    m = identity(n, one, zero)
    for k in range(1, n + 1):
        if k > 1:
            m = mat_mul(a, mat_add(m, mat_scale(identity(n, one, zero), coeffs[-1])))
        else:
            m = [row[:] for row in a]
        ck = divk(trace(m), k)
        coeffs.append(zero - ck)
    return coeffs


def poly_eval(coeffs: Sequence, x):
    """Evaluate sum coeffs[i] * x^(n-i) (coeffs[0] is the leading term)."""
    acc = coeffs[0]
    for c in coeffs[1:]:
        acc = acc * x + c
    return acc


def mat_inv_exact(a: Matrix) -> Matrix:
    """Gauss-Jordan over Fractions."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [x / pv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def mat_inv_float(a: Matrix, ctx: FloatContext) -> Matrix:
    with ctx.guard():
        n = len(a)
        m = [[ctx.num(x) for x in row] + [ctx.num(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
        for col in range(n):
            piv = max(range(col, n), key=lambda r: mpmath.fabs(m[r][col]))
            if mpmath.fabs(m[piv][col]) == 0:
                raise ZeroDivisionError("singular matrix")
            m[col], m[piv] = m[piv], m[col]
            pv = m[col][col]
            m[col] = [x / pv for x in m[col]]
            for r in range(n):
                if r != col and m[r][col] != 0:
                    f = m[r][col]
                    m[r] = [x - f * y for x, y in zip(m[r], m[col])]
        return [row[n:] for row in m]


def mat_inv_series(a: Matrix) -> Matrix:
    """Gauss-Jordan for matrices of TruncatedSeries; pivots need invertible
    constant terms."""
    n = len(a)
    caps = a[0][0].caps
    one = TruncatedSeries.const(caps, Fraction(1))
    zero = TruncatedSeries.zero(caps)
    m = [list(row) + [one.copy() if i == j else zero.copy() for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next(
            (r for r in range(col, n) if _invertible_const(m[r][col])),
            None,
        )
        if piv is None:
            raise ZeroDivisionError("no invertible pivot in series matrix")
        m[col], m[piv] = m[piv], m[col]
        pv_inv = m[col][col].inverse()
        m[col] = [x * pv_inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def _invertible_const(s: TruncatedSeries) -> bool:
    c = s.constant_term()
    return bool(c) or c != 0


def eigenvalues_float(a: Matrix, ctx: FloatContext) -> list:
    """Roots of the characteristic polynomial, as mpc numbers."""
    with ctx.guard():
        num = [[ctx.num(x) for x in row] for row in a]
        one = ctx.num(1)
        coeffs = charpoly(num, one, lambda x, k: x / k)
        roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=ctx.prec_bits)
        return list(roots)


def max_abs_entry(a: Matrix, ctx: FloatContext | None):
    if ctx is None:
        return max((abs(Fraction(x)) for row in a for x in row), default=Fraction(0))
    return ctx.max_abs([x for row in a for x in row])
