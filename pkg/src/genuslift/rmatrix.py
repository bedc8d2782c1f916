"""The asymptotic solution R(z) = 1 + R_1 z + R_2 z^2 + ... at a semisimple
point, and the edge/tail data extracted from it.

In the canonical frame the flatness equations determine R recursively.
Writing W_a = (d_a Psi) Psi^{-1} and D_a = diag(d_a u), the order-z^k part
of the horizontality condition reads

    R_k D_a - D_a R_k = d_a R_{k-1} + R_{k-1} W_a,

which fixes the off-diagonal entries of R_k ((d_a u^j - d_a u^i) is
invertible for some direction a whenever the point is semisimple).  The same
equation one order up forces the diagonal derivative rule
d_a (R_k)_{ii} = -(R_k^{off} W_a)_{ii}, leaving only integration constants.
Those are fixed either by Euler homogeneity (conformal models: the k-th
coefficient scales with weight -k along E) or, for "constants" mode, by the
unitarity normalization R(z) R(-z)^T = 1 with vanishing odd diagonal
constants; remaining gauge freedom is an exponential of odd powers of z
acting diagonally, applied via :func:`twist_R`.

Edge coefficients V and tail values T come from R by

    sum_s R(z)^i_s R(w)^j_s  = delta_ij + (z+w) * sum_kl (-1)^{k+l} V^{ij}_{kl} z^k w^l
    T^i_{m+1} = (-1)^{m+1} sqrt(Delta_i) sum_j Delta_j^{-1/2} (R_m)^i_j,

with T_0 = T_1 = 0.  The pure exponential prefactor e^{u/z + u/w} is never
folded into V.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath

from .expressions import t_names
from .frame import CanonicalFrame, DegenerateFrameError
from .linalg import mat_mul, transpose
from .scalars import FloatContext, Rational
from .series import Caps, TruncatedSeries, singular_quotient


@dataclass
class RSeries:
    frame: CanonicalFrame
    order: int
    mats: List[List[List[TruncatedSeries]]]
    mode: str
    cross_residual: object = None
    gauge: Optional[list] = None

    @property
    def dimension(self):
        return len(self.mats[0])

    def constants(self, k: int) -> list:
        return [[e.constant_term() for e in row] for row in self.mats[k]]

    def all_constants(self) -> list:
        return [self.constants(k) for k in range(self.order + 1)]


def compute_R(frame: CanonicalFrame, order: int, mode: str | None = None) -> RSeries:
    """Solve for R_1 .. R_order as jets at the frame's point.

    ``mode`` is "conformal" (Euler-anchored diagonal constants; requires
    Euler data) or "constants" (unitarity normalization, odd diagonal
    constants zero).  Default: conformal when the frame was built from the
    Euler multiplication, else constants.
    """
    ctx = frame.ctx
    if mode is None:
        mode = "conformal" if frame.conformal else "constants"
    if mode == "conformal" and frame.model.euler is None:
        raise ValueError("conformal normalization requires Euler data")
    if frame.order < order:
        raise ValueError(f"frame jets of order {frame.order} cannot support R through z^{order}")
    with ctx.guard():
        return _compute_r_impl(frame, order, mode)


def _compute_r_impl(frame: CanonicalFrame, order: int, mode: str) -> RSeries:
    ctx = frame.ctx
    n = frame.dimension
    names = t_names(n)
    caps = frame.u[0].caps
    # R_k is trustworthy only to t-order (order - k): taper the jet caps as
    # k climbs so the series products stay small
    ladder = [Caps.total(names, c) for c in range(order + 1)]
    w = frame.rotation_jets()
    du = frame.du

    # denominators (d_a u^j - d_a u^i) and the usable directions per pair
    sep_floor = max(ctx.tol, mpmath.mpf(2) ** (16 - ctx.prec_bits // 2))
    du_scale = max(
        mpmath.mpf(1),
        ctx.max_abs([du[i][a].constant_term() for i in range(n) for a in range(n)]),
    )
    denom_inv: Dict[Tuple[int, int], List[Tuple[int, TruncatedSeries]]] = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            usable = []
            for a in range(n):
                d = du[j][a] - du[i][a]
                if mpmath.fabs(d.constant_term()) > sep_floor * du_scale:
                    usable.append((a, d.inverse()))
            if not usable:
                raise DegenerateFrameError(
                    f"no coordinate direction separates branches {i} and {j}"
                )
            denom_inv[(i, j)] = usable

    evec = None
    if mode == "conformal":
        evec = frame.model.euler.components(frame.point, ctx)

    zero = TruncatedSeries.zero(caps)
    one = TruncatedSeries.const(caps, ctx.num(1))
    mats = [[[one.copy() if i == j else zero.copy() for j in range(n)] for i in range(n)]]
    cross = ctx.num(0)

    for k in range(1, order + 1):
        content = order - k
        caps_k = ladder[content]
        zero_k = TruncatedSeries.zero(caps_k)
        prev = mats[k - 1]
        prev_k = [[e.repruned(caps_k) for e in row] for row in prev]
        w_k = [[[e.repruned(caps_k) for e in row] for row in w[a]] for a in range(n)]
        sources = []
        for a in range(n):
            dprev = [[e.partial(names[a]).repruned(caps_k) for e in row] for row in prev]
            sources.append(_mat_add(dprev, mat_mul(prev_k, w_k[a])))

        rk = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                candidates = []
                for a, dinv in denom_inv[(i, j)]:
                    candidates.append(sources[a][i][j] * dinv.repruned(caps_k))
                rk[i][j] = candidates[0]
                for other in candidates[1:]:
                    diff = rk[i][j] - other
                    for key, v in diff.c.items():
                        if sum(key) <= content:
                            cross = max(cross, mpmath.fabs(v))

        # diagonal: derivative rule gives all non-constant jet coefficients
        off = [[rk[i][j] if i != j else zero_k for j in range(n)] for i in range(n)]
        ddiag = []
        for a in range(n):
            m = mat_mul(off, w_k[a])
            ddiag.append([-m[i][i] for i in range(n)])
        for i in range(n):
            diag = TruncatedSeries.zero(caps_k)
            for key in _keys_up_to(n, content):
                total = sum(key)
                if total == 0 or total > content:
                    continue
                a = next(ai for ai, e in enumerate(key) if e > 0)
                src = ddiag[a][i]
                down = key[:a] + (key[a] - 1,) + key[a + 1 :]
                v = src.scalar_coeff(down)
                if v or v != 0:
                    diag = diag + TruncatedSeries(caps_k, {key: v / key[a]})
            const = _diagonal_constant(mode, k, i, ddiag, evec, mats, ctx, n)
            rk[i][i] = diag + const
        mats.append(rk)

    return RSeries(frame=frame, order=order, mats=mats, mode=mode, cross_residual=cross)


def _diagonal_constant(mode, k, i, ddiag, evec, mats, ctx, n):
    if mode == "conformal":
        acc = ctx.num(0)
        for a in range(n):
            acc = acc - evec[a] * ddiag[a][i].constant_term()
        return acc / k
    # constants mode: odd coefficients vanish, even ones come from unitarity
    # (diagonal of sum_{p+q=k} (-1)^q R_p R_q^T with the p,q in {0,k} terms
    # isolated: 2 (R_k)_{ii} = -sum_{p,q>=1})
    if k % 2 == 1:
        return ctx.num(0)
    total = ctx.num(0)
    for p in range(1, k):
        q = k - p
        sign = (-1) ** q
        entry = ctx.num(0)
        for j in range(n):
            entry = entry + mats[p][i][j].constant_term() * mats[q][i][j].constant_term()
        total = total + sign * entry
    return -total / 2


def _mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _keys_up_to(n: int, order: int):
    if n == 1:
        for t in range(order + 1):
            yield (t,)
        return
    for t in range(order + 1):
        for first in range(t + 1):
            for rest in _keys_up_to_fixed(n - 1, t - first):
                yield (first,) + rest


def _keys_up_to_fixed(n: int, total: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _keys_up_to_fixed(n - 1, total - first):
            yield (first,) + rest


def unitarity_residual(r: RSeries) -> object:
    """Max entry of sum_{p+q=m} (-1)^q R_p R_q^T - delta_{m,0} over m <= order,
    evaluated on the constant terms."""
    ctx = r.frame.ctx
    n = r.dimension
    with ctx.guard():
        consts = r.all_constants()
        worst = ctx.num(0)
        for m in range(r.order + 1):
            acc = [[ctx.num(0)] * n for _ in range(n)]
            for p in range(m + 1):
                q = m - p
                sign = (-1) ** q
                rp, rq = consts[p], consts[q]
                for i in range(n):
                    for j in range(n):
                        acc[i][j] = acc[i][j] + sign * _dot(rp, rq, i, j, n)
            for i in range(n):
                for j in range(n):
                    target = 1 if (m == 0 and i == j) else 0
                    worst = max(worst, mpmath.fabs(acc[i][j] - target))
        return worst


def _dot(rp, rq, i, j, n):
    s = rp[i][0] * rq[j][0]
    for t in range(1, n):
        s = s + rp[i][t] * rq[j][t]
    return s


def twist_R(r: RSeries, gauge: Sequence[Sequence]) -> RSeries:
    """Apply the diagonal gauge R(z) -> diag_i exp(sum_m a^i_m z^{2m-1}) R(z).

    ``gauge[i]`` lists the odd coefficients (a^i_1, a^i_2, ...) for canonical
    index i; the exponential scales row i.  Left multiplication is the
    residual freedom of the recursion: for two solutions, C = R' R^{-1}
    satisfies dC = (1/z)[C, diag(du)], which forces C diagonal and constant.
    Unitarity is preserved because the exponent is odd in z.
    """
    ctx = r.frame.ctx
    n = r.dimension
    with ctx.guard():
        zcaps = Caps.total(("z",), r.order)
        dseries = []
        for i in range(n):
            expo = TruncatedSeries.zero(zcaps)
            for m, am in enumerate(gauge[i], start=1):
                if 2 * m - 1 > r.order:
                    break
                expo = expo + TruncatedSeries.var(zcaps, "z", 2 * m - 1, ctx.num(am))
            dseries.append(expo.exp(ctx))
        caps = r.mats[0][0][0].caps
        mats = []
        for k in range(r.order + 1):
            rk = []
            for i in range(n):
                row = []
                for j in range(n):
                    acc = TruncatedSeries.zero(caps)
                    for p in range(k + 1):
                        dcoef = dseries[i].scalar_coeff((k - p,))
                        if dcoef or dcoef != 0:
                            acc = acc + r.mats[p][i][j].scale(dcoef)
                    row.append(acc)
                rk.append(row)
            mats.append(rk)
        return RSeries(
            frame=r.frame,
            order=r.order,
            mats=mats,
            mode=r.mode,
            cross_residual=r.cross_residual,
            gauge=[list(g) for g in gauge],
        )


def bernoulli_numbers(nmax: int) -> List[Fraction]:
    """B_0 .. B_nmax with B_1 = -1/2."""
    out = [Fraction(1)]
    for m in range(1, nmax + 1):
        s = Fraction(0)
        for j in range(m):
            s += _binom_int(m + 1, j) * out[j]
        out.append(-s / _binom_int(m + 1, m))
    return out


def _binom_int(n: int, k: int) -> Fraction:
    from math import comb

    return Fraction(comb(n, k))


def bernoulli_constants(chars: Sequence[Sequence], kmax: int) -> List[List[Fraction]]:
    """Gauge constants a^i_m = -N_{2m-1}(1/chi^i) B_{2m} / ((2m-1) 2m) for
    m = 1..kmax, where N_p is the p-th power sum of the reciprocals of the
    entries of chi^i."""
    bern = bernoulli_numbers(2 * kmax)
    out = []
    for chi in chars:
        inv = [Fraction(1) / Fraction(x) for x in chi]
        row = []
        for m in range(1, kmax + 1):
            power_sum = sum(x ** (2 * m - 1) for x in inv)
            row.append(-power_sum * bern[2 * m] / ((2 * m - 1) * (2 * m)))
        out.append(row)
    return out


# -- edge and tail data -----------------------------------------------------------


@dataclass
class EdgeTailData:
    """Everything a graph sum needs: per-index normalizations and the V/T
    tables.  Decoupled from frames so synthetic rational instances can drive
    the exact pipeline."""

    dimension: int
    delta: list
    sqrt_delta: list
    v: Dict[Tuple[int, int, int, int], object]
    t: List[Dict[int, object]]
    v_cutoff: int
    t_cutoff: int
    residuals: dict = field(default_factory=dict)

    def v_entry(self, i, j, k, l):
        key = (i, j, k, l)
        if key in self.v:
            return self.v[key]
        return self.v.get((j, i, l, k), 0)

    def t_entry(self, i, k):
        if k < 2:
            return 0
        return self.t[i].get(k, 0)


def compute_V(r: RSeries, cutoff: int | None = None) -> Tuple[Dict, dict]:
    """Edge coefficients V^{ij}_{kl} for k+l <= cutoff (default order-1),
    from the constants of R.  Returns (table, residuals)."""
    ctx = r.frame.ctx
    n = r.dimension
    if cutoff is None:
        cutoff = r.order - 1
    if cutoff > r.order - 1:
        raise ValueError("V cutoff exceeds the trustworthy range of R")
    with ctx.guard():
        consts = r.all_constants()
        caps = Caps.total(("z", "w"), r.order)
        table: Dict[Tuple[int, int, int, int], object] = {}
        div_resid = ctx.num(0)
        sym_resid = ctx.num(0)
        for i in range(n):
            for j in range(n):
                num = TruncatedSeries.zero(caps)
                for p in range(r.order + 1):
                    for q in range(r.order + 1 - p):
                        s = _dot(consts[p], consts[q], i, j, n)
                        if i == j and p == 0 and q == 0:
                            s = s - 1
                        if s or s != 0:
                            num = num + TruncatedSeries(caps, {(p, q): s})
                quot, rem = singular_quotient(num, "z", "w")
                div_resid = max(div_resid, rem.max_abs(ctx))
                for (k, l), v in quot.c.items():
                    if k + l <= cutoff:
                        table[(i, j, k, l)] = v * (-1) ** (k + l)
        for (i, j, k, l), v in table.items():
            mirror = table.get((j, i, l, k), 0)
            sym_resid = max(sym_resid, mpmath.fabs(v - mirror))
        return table, {"divisibility": div_resid, "v_symmetry": sym_resid}


def compute_T(r: RSeries, cutoff: int | None = None) -> List[Dict[int, object]]:
    """Tail values T^i_k for 2 <= k <= cutoff (default order+1)."""
    ctx = r.frame.ctx
    n = r.dimension
    frame = r.frame
    if cutoff is None:
        cutoff = r.order + 1
    if cutoff > r.order + 1:
        raise ValueError("T cutoff exceeds the trustworthy range of R")
    with ctx.guard():
        sd = frame.sqrt_delta_values()
        inv_sd = [1 / x for x in sd]
        out = [dict() for _ in range(n)]
        for k in range(2, cutoff + 1):
            m = k - 1
            rm = r.constants(m)
            for i in range(n):
                s = ctx.num(0)
                for j in range(n):
                    s = s + inv_sd[j] * rm[i][j]
                out[i][k] = (-1) ** k * sd[i] * s
        return out


def edge_tail_data(r: RSeries, v_cutoff: int | None = None, t_cutoff: int | None = None) -> EdgeTailData:
    frame = r.frame
    v, resid = compute_V(r, v_cutoff)
    t = compute_T(r, t_cutoff)
    resid = dict(resid)
    resid["cross_direction"] = r.cross_residual
    resid["unitarity"] = unitarity_residual(r)
    return EdgeTailData(
        dimension=r.dimension,
        delta=frame.delta_values(),
        sqrt_delta=frame.sqrt_delta_values(),
        v=v,
        t=t,
        v_cutoff=v_cutoff if v_cutoff is not None else r.order - 1,
        t_cutoff=t_cutoff if t_cutoff is not None else r.order + 1,
        residuals=resid,
    )
