"""Truncated multivariate Laurent series.

A :class:`TruncatedSeries` is a finite dict ``{exponent tuple: coefficient}``
over a fixed tuple of variable names, together with a :class:`Caps` object
describing which exponent tuples are retained.  Exponents are integers and
may be negative (per-variable lower bounds are part of the caps).  All
arithmetic prunes to the caps, so products and exponentials of capped series
stay finite.

Coefficients are either exact (``Fraction``/``int``) or mpmath floats; the
two backends must not be mixed within one computation.

Caps support per-variable exponent ranges plus any number of weighted total
bounds ``sum(w_i * k_i) <= b``.  Weighted bounds with mixed-sign weights are
what make exponentials of Laurent series terminate (e.g. a grading in which
every retained monomial has positive weight).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Mapping, Optional, Tuple

import mpmath

from .scalars import FloatContext, Rational

Key = Tuple[int, ...]


@dataclass(frozen=True)
class Caps:
    """Retention rule for exponent tuples."""

    names: Tuple[str, ...]
    mins: Tuple[Optional[int], ...]
    maxs: Tuple[Optional[int], ...]
    weighted: Tuple[Tuple[Tuple[int, ...], int], ...] = ()

    @staticmethod
    def total(names: Iterable[str], order: int) -> "Caps":
        """Ordinary jet caps: exponents >= 0, total degree <= order."""
        names = tuple(names)
        n = len(names)
        return Caps(names, (0,) * n, (None,) * n, (((1,) * n, order),))

    @staticmethod
    def box(
        names: Iterable[str],
        maxs: Mapping[str, Optional[int]] | None = None,
        mins: Mapping[str, int] | None = None,
        weighted: Iterable[Tuple[Mapping[str, int], int]] = (),
    ) -> "Caps":
        names = tuple(names)
        maxs = dict(maxs or {})
        mins = dict(mins or {})
        wlist = []
        for wmap, bound in weighted:
            wlist.append((tuple(int(wmap.get(nm, 0)) for nm in names), int(bound)))
        return Caps(
            names,
            tuple(mins.get(nm, 0) for nm in names),
            tuple(maxs.get(nm, None) for nm in names),
            tuple(wlist),
        )

    def index(self, name: str) -> int:
        return self.names.index(name)

    def keep(self, key: Key) -> bool:
        for k, lo, hi in zip(key, self.mins, self.maxs):
            if lo is not None and k < lo:
                return False
            if hi is not None and k > hi:
                return False
        for weights, bound in self.weighted:
            if sum(w * k for w, k in zip(weights, key)) > bound:
                return False
        return True

    def with_weighted(self, wmap: Mapping[str, int], bound: int) -> "Caps":
        w = (tuple(int(wmap.get(nm, 0)) for nm in self.names), int(bound))
        return Caps(self.names, self.mins, self.maxs, self.weighted + (w,))


class TruncatedSeries:
    __slots__ = ("caps", "c")

    def __init__(self, caps: Caps, coeffs: Dict[Key, object] | None = None):
        self.caps = caps
        self.c: Dict[Key, object] = {}
        if coeffs:
            for k, v in coeffs.items():
                if v or v != 0:
                    if caps.keep(k):
                        self.c[k] = v

    # -- constructors ----------------------------------------------------

    @staticmethod
    def zero(caps: Caps) -> "TruncatedSeries":
        return TruncatedSeries(caps)

    @staticmethod
    def const(caps: Caps, value) -> "TruncatedSeries":
        s = TruncatedSeries(caps)
        key = (0,) * len(caps.names)
        if (value or value != 0) and caps.keep(key):
            s.c[key] = value
        return s

    @staticmethod
    def var(caps: Caps, name: str, exponent: int = 1, coeff=1) -> "TruncatedSeries":
        key = tuple(exponent if nm == name else 0 for nm in caps.names)
        s = TruncatedSeries(caps)
        if caps.keep(key):
            s.c[key] = coeff
        return s

    def copy(self) -> "TruncatedSeries":
        s = TruncatedSeries(self.caps)
        s.c = dict(self.c)
        return s

    # -- inspection -------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.c)

    def terms(self):
        return self.c.items()

    def scalar_coeff(self, key: Key):
        return self.c.get(tuple(key), 0)

    def constant_term(self):
        return self.c.get((0,) * len(self.caps.names), 0)

    def coeff(self, **exps) -> "TruncatedSeries":
        """Sub-series of terms matching the given exponents, with those
        exponents reset to zero in the result keys."""
        idx = [(self.caps.index(nm), e) for nm, e in exps.items()]
        out = TruncatedSeries(self.caps)
        for key, v in self.c.items():
            if all(key[i] == e for i, e in idx):
                nk = list(key)
                for i, _ in idx:
                    nk[i] = 0
                out.c[tuple(nk)] = v
        return out

    def max_abs(self, ctx: FloatContext | None):
        if ctx is None:
            return max((abs(Fraction(v)) for v in self.c.values()), default=Fraction(0))
        return ctx.max_abs(self.c.values())

    def map_coeffs(self, f: Callable) -> "TruncatedSeries":
        out = TruncatedSeries(self.caps)
        for k, v in self.c.items():
            w = f(v)
            if w or w != 0:
                out.c[k] = w
        return out

    def repruned(self, caps: Caps) -> "TruncatedSeries":
        """Same terms under new caps (names must match)."""
        if caps.names != self.caps.names:
            raise ValueError("reprune requires identical variable names")
        return TruncatedSeries(caps, self.c)

    # -- ring operations ---------------------------------------------------

    def _binary(self, other, sign) -> "TruncatedSeries":
        out = self.copy()
        for k, v in other.c.items():
            w = out.c.get(k, 0) + sign * v
            if w or w != 0:
                out.c[k] = w
            elif k in out.c:
                del out.c[k]
        return out

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self._binary(TruncatedSeries.const(self.caps, other), 1)
        return self._binary(other, 1)

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self._binary(TruncatedSeries.const(self.caps, other), -1)
        return self._binary(other, -1)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        out = TruncatedSeries(self.caps)
        out.c = {k: -v for k, v in self.c.items()}
        return out

    def scale(self, a) -> "TruncatedSeries":
        if not a and a == 0:
            return TruncatedSeries(self.caps)
        out = TruncatedSeries(self.caps)
        out.c = {k: a * v for k, v in self.c.items()}
        return out

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        keep = self.caps.keep
        acc: Dict[Key, object] = {}
        # iterate the smaller operand outside
        a, b = (self.c, other.c) if len(self.c) <= len(other.c) else (other.c, self.c)
        for ka, va in a.items():
            for kb, vb in b.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                if keep(k):
                    if k in acc:
                        acc[k] = acc[k] + va * vb
                    else:
                        acc[k] = va * vb
        out = TruncatedSeries(self.caps)
        out.c = {k: v for k, v in acc.items() if v or v != 0}
        return out

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = TruncatedSeries.const(self.caps, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    # -- series functions ---------------------------------------------------

    _ITER_LIMIT = 2000

    def _nilpotent_part(self):
        c0 = self.constant_term()
        n = self - c0
        return c0, n

    def _powers_of_nilpotent(self, n):
        """Yield (j, n**j) for j = 1, 2, ... until n**j vanishes."""
        p = n
        j = 1
        while p:
            yield j, p
            if j > self._ITER_LIMIT:
                raise ArithmeticError("series iteration does not terminate under these caps")
            p = p * n
            j += 1

    def inverse(self) -> "TruncatedSeries":
        c0, n = self._nilpotent_part()
        if not c0 and c0 == 0:
            raise ZeroDivisionError("series has no invertible constant term")
        inv0 = Fraction(1, 1) / c0 if isinstance(c0, (int, Fraction)) else 1 / c0
        m = n.scale(-inv0)
        out = TruncatedSeries.const(self.caps, 1)
        for _, p in self._powers_of_nilpotent(m):
            out = out + p
        return out.scale(inv0)

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.inverse()
        if isinstance(other, int):
            return self.scale(Fraction(1, other))
        return self.scale(1 / other)

    def exp(self, ctx: FloatContext | None = None) -> "TruncatedSeries":
        c0, n = self._nilpotent_part()
        if c0 or c0 != 0:
            if ctx is None:
                raise ArithmeticError("exact exp requires zero constant term")
            with ctx.guard():
                pref = mpmath.exp(ctx.num(c0))
        else:
            pref = 1
        out = TruncatedSeries.const(self.caps, 1)
        fact = 1
        for j, p in self._powers_of_nilpotent(n):
            fact = fact * j
            out = out + p.scale(Fraction(1, fact) if isinstance(fact, int) else 1 / fact)
        return out.scale(pref) if pref != 1 else out

    def log(self, ctx: FloatContext | None = None) -> "TruncatedSeries":
        c0, n = self._nilpotent_part()
        if not c0 and c0 == 0:
            raise ZeroDivisionError("log of series with zero constant term")
        extra = 0
        if c0 != 1:
            if ctx is None:
                raise ArithmeticError("exact log requires constant term 1")
            with ctx.guard():
                extra = mpmath.log(ctx.num(c0))
        m = n.scale(Fraction(1, 1) / c0 if isinstance(c0, (int, Fraction)) else 1 / c0)
        out = TruncatedSeries.zero(self.caps)
        sign = 1
        for j, p in self._powers_of_nilpotent(m):
            out = out + p.scale(Fraction(sign, j))
            sign = -sign
        if extra or extra != 0:
            out = out + extra
        return out

    def _binomial_on_nilpotent(self, n: "TruncatedSeries", alpha: Fraction) -> "TruncatedSeries":
        out = TruncatedSeries.const(self.caps, 1)
        binom = Fraction(1)
        for j, p in self._powers_of_nilpotent(n):
            binom = binom * (Fraction(alpha) - (j - 1)) / j
            if binom == 0:
                break
            out = out + p.scale(binom)
        return out

    def rpow(self, alpha: Fraction) -> "TruncatedSeries":
        """(1 + n)**alpha for rational alpha; constant term must be 1."""
        c0, n = self._nilpotent_part()
        if c0 != 1:
            raise ArithmeticError("rpow requires constant term exactly 1")
        return self._binomial_on_nilpotent(n, alpha)

    def sqrt(self, ctx: FloatContext | None = None) -> "TruncatedSeries":
        """Square root with the principal branch on the constant term."""
        c0, n = self._nilpotent_part()
        if not c0 and c0 == 0:
            raise ZeroDivisionError("series sqrt requires nonzero constant term")
        if ctx is None:
            r = Fraction(c0)
            root = Fraction(_exact_sqrt(r.numerator), _exact_sqrt(r.denominator))
            m = n.scale(1 / r)
        else:
            root = ctx.sqrt(c0)
            m = n.scale(1 / ctx.num(c0))
        return self._binomial_on_nilpotent(m, Fraction(1, 2)).scale(root)

    # -- calculus -----------------------------------------------------------

    def partial(self, name: str) -> "TruncatedSeries":
        i = self.caps.index(name)
        out = TruncatedSeries(self.caps)
        lo = self.caps.mins[i]
        for key, v in self.c.items():
            k = key[i]
            if k == 0:
                continue
            nk = key[:i] + (k - 1,) + key[i + 1 :]
            if lo is not None and nk[i] < lo and (v or v != 0):
                raise ArithmeticError(f"derivative in {name} falls below the exponent floor")
            if self.caps.keep(nk):
                out.c[nk] = out.c.get(nk, 0) + k * v
        out.c = {k: v for k, v in out.c.items() if v or v != 0}
        return out

    def integrate(self, name: str) -> "TruncatedSeries":
        i = self.caps.index(name)
        out = TruncatedSeries(self.caps)
        for key, v in self.c.items():
            k = key[i]
            if k == -1:
                raise ArithmeticError(f"antiderivative in {name} hits exponent -1")
            nk = key[:i] + (k + 1,) + key[i + 1 :]
            if self.caps.keep(nk):
                out.c[nk] = v * Fraction(1, k + 1) if isinstance(v, (int, Fraction)) else v / (k + 1)
        return out

    # -- substitution and evaluation -----------------------------------------

    def substitute(self, mapping: Mapping[str, "TruncatedSeries"]) -> "TruncatedSeries":
        """Replace every variable by a series (all over one shared caps).

        Variables absent from ``mapping`` are carried across unchanged,
        provided the target caps contain a variable of the same name.
        """
        targets = list(mapping.values())
        caps = targets[0].caps if targets else self.caps
        subs: list[TruncatedSeries] = []
        for nm in self.caps.names:
            if nm in mapping:
                subs.append(mapping[nm])
            else:
                subs.append(TruncatedSeries.var(caps, nm))
        pow_cache: list[dict[int, TruncatedSeries]] = [dict() for _ in subs]

        def var_power(i: int, k: int) -> TruncatedSeries:
            cache = pow_cache[i]
            if k not in cache:
                cache[k] = subs[i] ** k
            return cache[k]

        out = TruncatedSeries.zero(caps)
        for key, v in self.c.items():
            term = TruncatedSeries.const(caps, v)
            for i, k in enumerate(key):
                if k:
                    term = term * var_power(i, k)
            out = out + term
        return out

    def evaluate(self, assignment: Mapping[str, object], ctx: FloatContext | None):
        vals = []
        for nm in self.caps.names:
            if nm not in assignment:
                raise KeyError(f"no value for variable {nm}")
            vals.append(assignment[nm])
        total = Fraction(0) if ctx is None else ctx.num(0)
        for key, v in self.c.items():
            term = v
            for x, k in zip(vals, key):
                if k:
                    if ctx is None:
                        term = term * Fraction(x) ** k
                    else:
                        term = term * ctx.num(x) ** k
            total = total + term
        return total


def _exact_sqrt(n: int) -> int:
    import math

    r = math.isqrt(n)
    if r * r != n:
        raise ArithmeticError(f"{n} is not a perfect square")
    return r


def singular_quotient(
    num: TruncatedSeries, zname: str, wname: str
) -> tuple[TruncatedSeries, TruncatedSeries]:
    """Divide ``num`` by ``(z + w)``, treating it as a polynomial in ``w``.

    Returns ``(quotient, remainder)`` with ``num = (z+w) * quotient +
    remainder`` and the remainder independent of ``w``.  When the numerator
    vanishes on the antidiagonal ``w = -z`` the remainder is zero up to the
    working truncation; its magnitude is the caller's divisibility residual.

    If the numerator is trusted to total degree ``K`` in ``(z, w)``, the
    quotient's coefficients are trustworthy to total degree ``K - 1``.
    """
    zi = num.caps.index(zname)
    wi = num.caps.index(wname)
    if not num.c:
        return TruncatedSeries.zero(num.caps), TruncatedSeries.zero(num.caps)
    wmax = max(k[wi] for k in num.c)
    if min(k[wi] for k in num.c) < 0 or min((k[zi] for k in num.c), default=0) < 0:
        raise ValueError("singular_quotient needs nonnegative exponents in z and w")

    def wslice(m: int) -> Dict[Key, object]:
        return {k[:wi] + (0,) + k[wi + 1 :]: v for k, v in num.c.items() if k[wi] == m}

    def zshift(d: Dict[Key, object]) -> Dict[Key, object]:
        return {k[:zi] + (k[zi] + 1,) + k[zi + 1 :]: v for k, v in d.items()}

    def wlift(d: Dict[Key, object], m: int) -> Dict[Key, object]:
        return {k[:wi] + (m,) + k[wi + 1 :]: v for k, v in d.items()}

    def dsub(a: Dict[Key, object], b: Dict[Key, object]) -> Dict[Key, object]:
        out = dict(a)
        for k, v in b.items():
            w = out.get(k, 0) - v
            if w or w != 0:
                out[k] = w
            elif k in out:
                del out[k]
        return out

    q_parts: Dict[Key, object] = {}
    qm: Dict[Key, object] = {}
    for m in range(wmax, 0, -1):
        qm = dsub(wslice(m), zshift(qm)) if m < wmax else wslice(m)
        q_parts.update(wlift(qm, m - 1))
    remainder_terms = dsub(wslice(0), zshift(qm))
    quotient = TruncatedSeries(num.caps, q_parts)
    remainder = TruncatedSeries(num.caps, remainder_terms)
    return quotient, remainder


def jet_caps(names: Iterable[str], order: int) -> Caps:
    return Caps.total(names, order)
