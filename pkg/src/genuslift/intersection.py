"""Intersection numbers of psi-classes on moduli of stable curves.

``IntersectionTable`` memoizes the correlators

    <tau_{k_1} ... tau_{k_n}>_g = integral of psi_1^{k_1} ... psi_n^{k_n}
                                  over the genus-g, n-pointed moduli space,

exact rationals throughout.  The value is zero unless sum(k) = 3g - 3 + n.
Evaluation order: the string equation removes tau_0 insertions, the dilaton
equation removes tau_1 insertions, and when every index is >= 2 the KdV
(Virasoro) recursion applies with n = k_max - 1:

  (2n+3)!! <tau_{n+1} prod_S tau_d>_g =
      sum_j (2d_j+1)(2d_j+3)...(2d_j+2n+1) <tau_{d_j+n} prod_{S-j}>_g
    + 1/2 sum_{a+b=n-1} (2a+1)!!(2b+1)!! [ <tau_a tau_b prod_S>_{g-1}
        + sum <tau_a S_1>_{g_1} <tau_b S_2>_{g_2} ]

where the inner sum runs over ordered stable splittings g_1+g_2 = g,
S_1 + S_2 = S.  Seeds: <tau_0^3>_0 = 1 and <tau_1>_1 = 1/24.  Every
reduction lowers (g, n) lexicographically, so the recursion terminates.

``vertex_correlator`` dresses a correlator with tail insertions: the sum
over extra tau_a legs, each weighted by a tail value T_a with T_0 = T_1 = 0,
truncates because a_j >= 2 forces at most 3g - 3 + m - sum(edge ks) legs.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Dict, Iterator, Optional, Sequence, Tuple

IntersectionKey = Tuple[int, Tuple[int, ...]]


def _odd_double_factorial(m: int) -> int:
    # (-1)!! = 1!! = 1
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def _stable(g: int, n: int) -> bool:
    return 2 * g - 2 + n > 0


class IntersectionTable:
    """Shared memo table.  Fill it single-threaded before any parallel use;
    lookups never mutate existing entries."""

    def __init__(self) -> None:
        self._cache: Dict[IntersectionKey, Fraction] = {
            (0, (0, 0, 0)): Fraction(1),
            (1, (1,)): Fraction(1, 24),
        }

    def __len__(self) -> int:
        return len(self._cache)

    def keys(self):
        return self._cache.keys()

    def value(self, g: int, ks: Sequence[int]) -> Fraction:
        g = int(g)
        ks = tuple(sorted(int(k) for k in ks))
        if g < 0 or (ks and ks[0] < 0):
            raise ValueError("psi powers and genus must be nonnegative")
        n = len(ks)
        if not _stable(g, n):
            raise ValueError(f"unstable moduli space: genus {g} with {n} points")
        if sum(ks) != 3 * g - 3 + n:
            return Fraction(0)
        key = (g, ks)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._compute(g, ks)
            self._cache[key] = hit
        return hit

    def _compute(self, g: int, ks: Tuple[int, ...]) -> Fraction:
        if ks[0] == 0:
            rest = ks[1:]
            total = Fraction(0)
            for j, d in enumerate(rest):
                if d == 0:
                    continue
                total += self.value(g, rest[:j] + (d - 1,) + rest[j + 1:])
            return total
        if ks[0] == 1:
            return (2 * g - 2 + len(ks) - 1) * self.value(g, ks[1:])

        kmax = ks[-1]
        others = ks[:-1]
        nop = kmax - 1
        total = Fraction(0)
        for j, d in enumerate(others):
            coeff = 1
            for t in range(d, d + nop + 1):
                coeff *= 2 * t + 1
            total += coeff * self.value(g, others[:j] + (d + nop,) + others[j + 1:])
        half = Fraction(0)
        for a in range(nop):
            b = nop - 1 - a
            weight = _odd_double_factorial(2 * a + 1) * _odd_double_factorial(2 * b + 1)
            if g >= 1 and _stable(g - 1, len(others) + 2):
                half += weight * self.value(g - 1, others + (a, b))
            for g1 in range(g + 1):
                g2 = g - g1
                for mask in range(1 << len(others)):
                    s1 = tuple(x for t, x in enumerate(others) if mask >> t & 1)
                    s2 = tuple(x for t, x in enumerate(others) if not mask >> t & 1)
                    if not (_stable(g1, len(s1) + 1) and _stable(g2, len(s2) + 1)):
                        continue
                    half += weight * self.value(g1, (a,) + s1) * self.value(g2, (b,) + s2)
        total += half / 2
        return total / _odd_double_factorial(2 * kmax + 1)

    def identity_failures(self) -> list:
        """Check the string and dilaton equations against every cached entry;
        returns a list of (kind, g, ks) triples that fail (expected empty)."""
        bad = []
        for (g, ks) in list(self._cache.keys()):
            n = len(ks)
            lowered = Fraction(0)
            for j, d in enumerate(ks):
                if d == 0:
                    continue
                lowered += self.value(g, ks[:j] + (d - 1,) + ks[j + 1:])
            if self.value(g, (0,) + ks) != lowered:
                bad.append(("string", g, ks))
            if self.value(g, (1,) + ks) != (2 * g - 2 + n + 1 - 1) * self.value(g, ks):
                bad.append(("dilaton", g, ks))
        return bad


_DEFAULT_TABLE = IntersectionTable()


def psi_intersection(g: int, ks: Sequence[int], table: Optional[IntersectionTable] = None) -> Fraction:
    return (_DEFAULT_TABLE if table is None else table).value(g, ks)


def _ascending_tuples(count: int, total: int, minimum: int) -> Iterator[Tuple[int, ...]]:
    if count == 0:
        if total == 0:
            yield ()
        return
    # last entry is at least the average, so the prefix stays ascending
    for first in range(minimum, total - minimum * (count - 1) + 1):
        for rest in _ascending_tuples(count - 1, total - first, first):
            yield (first,) + rest


def vertex_correlator(
    g: int,
    edge_ks: Sequence[int],
    tails,
    hbar_delta,
    table: Optional[IntersectionTable] = None,
    ctx=None,
):
    """Correlator of a single graph vertex: edge insertions tau_{k} plus the
    tail sum, times (hbar*Delta)^(g-1).

    ``tails`` maps index a >= 2 to the tail value T_a (anything else is
    treated as zero).  Unstable or dimension-starved configurations return
    0 rather than raising, so callers can sum blindly over graphs.
    """
    if ctx is not None:
        with ctx.guard():
            return _vertex_impl(g, edge_ks, tails, hbar_delta, table)
    return _vertex_impl(g, edge_ks, tails, hbar_delta, table)


def _vertex_impl(g, edge_ks, tails, hbar_delta, table):
    table = _DEFAULT_TABLE if table is None else table
    edge_ks = tuple(int(k) for k in edge_ks)
    m = len(edge_ks)
    budget = 3 * g - 3 + m - sum(edge_ks)
    if isinstance(hbar_delta, int):
        hbar_delta = Fraction(hbar_delta)
    total = Fraction(0)
    for n in range(0, max(budget, 0) + 1):
        if not _stable(g, m + n):
            continue
        legs = 3 * g - 3 + m + n - sum(edge_ks)
        if legs < 2 * n:
            continue
        for assignment in _ascending_tuples(n, legs, 2):
            tvals = [tails.get(a, 0) for a in assignment]
            if any(v == 0 for v in tvals):
                continue
            corr = table.value(g, edge_ks + assignment)
            if corr == 0:
                continue
            # ascending tuples stand for unordered leg sets: the 1/n! of the
            # exponential collapses to 1/prod(multiplicities!)
            coeff = corr
            seen = {}
            for a in assignment:
                seen[a] = seen.get(a, 0) + 1
            for c in seen.values():
                coeff /= factorial(c)
            for v in tvals:
                coeff = v * coeff
            total = total + coeff
    return total * hbar_delta ** (g - 1)
