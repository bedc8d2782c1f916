"""Gravitational descendents of a semisimple Frobenius manifold.

The calibration is the 1/z fundamental solution S(z) = 1 + S_1/z + S_2/z^2
+ ... of the flat pencil, built order by order from

    d_a S_k = C_a S_{k-1},        S_k(base) = 0  (k >= 1),

by symbolic antidifferentiation along coordinate paths; closedness of each
step's gradient is exactly the flatness of the pencil (WDVV), so the result
is path-independent and the construction double-checks itself by
re-integrating along a permuted coordinate order.  The entries of S_k are
one-point descendent correlators, and the two-point functions come from the
1/(z+w) expansion

    g/(z+w) + sum W_{ml} z^{-m-1} w^{-l-1}  "="  S^T(1/z) g S(1/w) / (z+w),

which in coefficients reads W_{ml} = sum_{i=0..l} (-1)^i N_{m+1+i, l-i} with
N_{ab} = S_a^T g S_b.  Unitarity S*(-1/z) S(1/z) = 1 makes the division
exact.

A curve-space point tau = t_0 + t_1 c + ... + t_K c^K maps to the manifold
through the critical point t(tau) of (t_0, t) + <tau(c) - c, 1>', solved
here from the fixed-point form

    t = t_0 + sum_{m>=1} S_m(t) t_m

by Newton iteration (or, in the formal regime, by nilpotent iteration with
the couplings graded by a bookkeeping variable, which is exact).  The
genus-0 potential is then

    F0(tau) = (1/2) <tau(c) - c, tau(c) - c>'(t(tau)),

whose first and second t_m-derivatives are the one- and two-point tables.

Higher genus reuses the stable-graph sum with bold edge and tail data: V is
simply evaluated at t(tau), while D_i and T^i_k are extracted by matching
z-coefficients in

    e^{u_i/z} D_i^{-1/2} (z + sum_k T^i_k (-z)^k)
        = sum_mu S^i_mu(z) g^{mu nu} { <phi_nu, 1, tau(c)-c>
            + (-z) <phi_nu, 1, 1, tau(c)-c> + ... },

where the brackets are unit-direction derivatives of the criticality
residual: the z^0 coefficient vanishes at the critical point (a checked
invariant), z^1 gives D_i^{-1/2}, and z^k for k >= 2 give the tails.  At
t_1 = t_2 = ... = 0 the data degenerates to (Delta, T, V) and the
descendent potential to F^g(t_0).

Genus one has two independent differentials: the curve-space one-form
sum_i (V^{ii}_{00}/2 du^i + dD_i/(48 D_i)) and the pullback
d{F^1(t(tau)) + (1/24) ln det[dt/dt_0]}, where [dt/dt_0]^{-1} is quantum
multiplication by the second bracket vector, with eigenvalues
sqrt(Delta_i / D_i).  Both are computed and compared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import mpmath

from .expressions import Expression
from .frame import CanonicalFrame, canonical_frame
from .frobenius import FrobeniusModel
from .genus import GenusReport, evaluate_graph, genus1_differential
from .graphs import enumerate_graphs
from .intersection import IntersectionTable, psi_intersection
from .linalg import identity, mat_inv_float, mat_mul, mat_vec, transpose
from .rmatrix import EdgeTailData, RSeries, compute_R, compute_V, twist_R, unitarity_residual
from .scalars import FloatContext
from .series import Caps, TruncatedSeries

_EPS = "e"


# -- expression plumbing ---------------------------------------------------------


def _restrict(expr: Expression, i: int, value) -> Expression:
    """Substitute the rational constant ``value`` for coordinate ``i``.

    Exponentials in the restricted direction force value = 0: e^{lam v} with
    lam, v rational and nonzero leaves the coefficient field."""
    value = Fraction(value)
    out = Expression(expr.nvars)
    acc: Dict = {}
    out.terms = acc
    for (mono, expo), (c, p) in expr.terms.items():
        m, lam = mono[i], expo[i]
        if lam != 0 and value != 0:
            raise ArithmeticError(
                "restriction of an exponential direction to a nonzero base is not rational"
            )
        if value == 0:
            if m < 0:
                raise ZeroDivisionError("negative power restricted to zero")
            if m > 0:
                continue
            factor = Fraction(1)
        else:
            factor = value**m
        key = (
            mono[:i] + (0,) + mono[i + 1 :],
            expo[:i] + (Fraction(0),) + expo[i + 1 :],
        )
        out._merged(key, c * factor, p, acc)
    return out


def _path_integral(grad: List[Expression], base: Tuple[Fraction, ...], path) -> Expression:
    """Integrate the closed form sum_a grad[a] dt^a from base along the
    coordinate staircase visiting directions in ``path`` order."""
    n = grad[0].nvars
    total = Expression.zero(n)
    path = list(path)
    for pos, a in enumerate(path):
        piece = grad[a]
        for later in path[pos + 1 :]:
            piece = _restrict(piece, later, base[later])
        anti = piece.antidiff(a)
        total = total + anti - _restrict(anti, a, base[a])
    return total


def _coeff_norm(expr: Expression) -> Fraction:
    m = Fraction(0)
    for c, _ in expr.terms.values():
        m = max(m, abs(c))
    return m


def _structure_expressions(model: FrobeniusModel) -> List[List[List[Expression]]]:
    """Multiplication operators (C_a)^i_j = F_{ajm} g^{mi} as expressions,
    parameters bound."""
    n = model.dimension
    pot = model.potential.bind(model.parameters) if model.potential.parameters() else model.potential
    ginv = model.metric_inverse
    third = {}
    for a in range(n):
        da = pot.diff(a)
        for j in range(a, n):
            third[(a, j)] = [da.diff(j).diff(m) for m in range(n)]
    ops = []
    for a in range(n):
        mat = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = Expression.zero(n)
                cols = third[(a, j) if a <= j else (j, a)]
                for m in range(n):
                    if ginv[m][i]:
                        acc = acc + cols[m].scale(ginv[m][i])
                row.append(acc)
            mat.append(row)
        ops.append(mat)
    return ops


def _mat_mul_expr(a, b, n: int):
    out = []
    for i in range(len(a)):
        row = []
        for j in range(len(b[0])):
            acc = Expression.zero(n)
            for k in range(len(b)):
                acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


# -- the calibration -------------------------------------------------------------


@dataclass
class Calibration:
    """1/z fundamental solution with the gauge S_k(base) = 0.

    ``s[k-1]`` holds S_k as an N x N matrix of expressions; S_0 is the
    identity and is supplied on the fly by :meth:`s_values`."""

    model: FrobeniusModel
    base: Tuple[Fraction, ...]
    order: int
    s: List[List[List[Expression]]]

    @property
    def dimension(self) -> int:
        return self.model.dimension

    def matrix(self, k: int) -> List[List[Expression]]:
        if not 1 <= k <= self.order:
            raise ValueError(f"S_{k} not stored; calibration order is {self.order}")
        return self.s[k - 1]

    def s_values(self, point, ctx: FloatContext | None, order: Optional[int] = None) -> list:
        """[S_0, S_1(point), ..., S_order(point)] as scalar matrices.

        ``ctx=None`` evaluates in exact rationals (polynomial potentials
        only)."""
        n = self.dimension
        if order is None:
            order = self.order
        if order > self.order:
            raise ValueError(f"calibration order {self.order} < requested {order}")
        if ctx is None:
            out = [identity(n)]
            pt = tuple(Fraction(x) for x in point)
        else:
            one, zero = ctx.num(1), ctx.num(0)
            out = [identity(n, one, zero)]
            pt = tuple(point)
        for k in range(1, order + 1):
            mat = self.s[k - 1]
            out.append([[mat[i][j].evaluate(pt, ctx) for j in range(n)] for i in range(n)])
        return out

    def unitarity_residual(self, point, ctx: FloatContext):
        """max_k |coefficient of z^{-k} in S*(-1/z) S(1/z) - 1| at a point."""
        n = self.dimension
        with ctx.guard():
            svals = self.s_values(point, ctx)
            g = [[ctx.num(x) for x in row] for row in self.model.metric]
            ginv = [[ctx.num(x) for x in row] for row in self.model.metric_inverse]
            adj = [mat_mul(ginv, mat_mul(transpose(s), g)) for s in svals]
            worst = ctx.num(0)
            for k in range(1, self.order + 1):
                acc = None
                for a in range(k + 1):
                    term = mat_mul(adj[a], svals[k - a])
                    if a % 2:
                        term = [[-x for x in row] for row in term]
                    acc = term if acc is None else [
                        [x + y for x, y in zip(ra, rb)] for ra, rb in zip(acc, term)
                    ]
                for row in acc:
                    for x in row:
                        worst = max(worst, mpmath.fabs(x))
            return worst


def compute_calibration(model: FrobeniusModel, base=None, order: int = 6) -> Calibration:
    """Solve d_a S_k = C_a S_{k-1} by antidifferentiation, fixing constants
    by S_k(base) = 0.

    Each S_k is integrated twice, along the coordinate staircase and along
    the reversed one; any discrepancy means the step's gradient was not
    closed, i.e. WDVV fails, and is raised rather than averaged away."""
    n = model.dimension
    if order < 1:
        raise ValueError("calibration order must be at least 1")
    if base is None:
        base = (Fraction(0),) * n
    base = tuple(Fraction(x) for x in base)
    if len(base) != n:
        raise ValueError("base point dimension mismatch")
    ops = _structure_expressions(model)
    forward = list(range(n))
    backward = forward[::-1]
    prev = [
        [Expression.term(n, 1) if i == j else Expression.zero(n) for j in range(n)]
        for i in range(n)
    ]
    mats = []
    for k in range(1, order + 1):
        grads = [_mat_mul_expr(ops[a], prev, n) for a in range(n)]
        cur = []
        for i in range(n):
            row = []
            for j in range(n):
                grad_ij = [grads[a][i][j] for a in range(n)]
                entry = _path_integral(grad_ij, base, forward)
                check = _path_integral(grad_ij, base, backward)
                resid = _coeff_norm(entry - check)
                if resid != 0:
                    raise ArithmeticError(
                        f"path-dependence residual {resid} in S_{k}[{i}][{j}]: WDVV violation"
                    )
                row.append(entry)
            cur.append(row)
        mats.append(cur)
        prev = cur
    return Calibration(model=model, base=base, order=order, s=mats)


# -- curve-space points ----------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    """tau = t_0 + t_1 c + ... + t_K c^K; ``times[m]`` is the vector t_m."""

    times: Tuple[Tuple[object, ...], ...]

    def __post_init__(self):
        if not self.times:
            raise ValueError("a curve-space point needs at least t_0")
        n = len(self.times[0])
        times = tuple(tuple(row) for row in self.times)
        if any(len(row) != n for row in times):
            raise ValueError("coupling vectors must share the dimension of t_0")
        object.__setattr__(self, "times", times)

    @property
    def kmax(self) -> int:
        return len(self.times) - 1

    @property
    def dimension(self) -> int:
        return len(self.times[0])

    def coupling(self, m: int) -> tuple:
        if 0 <= m <= self.kmax:
            return self.times[m]
        return (0,) * self.dimension

    def bumped(self, m: int, alpha: int, h) -> "CurvePoint":
        rows = [list(row) for row in self.times]
        while len(rows) <= m:
            rows.append([0] * self.dimension)
        rows[m][alpha] = rows[m][alpha] + h
        return CurvePoint(tuple(tuple(r) for r in rows))

    def shifted(self, direction: "CurvePoint", h) -> "CurvePoint":
        """tau + h * direction, padding the shorter coupling list with zeros."""
        if direction.dimension != self.dimension:
            raise ValueError("direction dimension mismatch")
        kmax = max(self.kmax, direction.kmax)
        rows = []
        for m in range(kmax + 1):
            rows.append(
                tuple(a + h * b for a, b in zip(self.coupling(m), direction.coupling(m)))
            )
        return CurvePoint(tuple(rows))


def _x_vectors(tau: CurvePoint, unit: int, num) -> list:
    """Coefficients of tau(c) - c: X_m = t_m - delta_{m1} e_unit, converted
    into the working ring by ``num``."""
    out = []
    for m in range(max(tau.kmax, 1) + 1):
        row = [num(x) for x in tau.coupling(m)]
        if m == 1:
            row[unit] = row[unit] - num(1)
        out.append(row)
    return out


def _require_origin(calibration: Calibration):
    # the honest unit brackets behind criticality are normalized at t = 0;
    # a shifted gauge would offset the z^0 coefficient by g * base
    if any(calibration.base):
        raise ValueError("criticality needs the calibration based at the origin")


# -- the critical point ----------------------------------------------------------


def critical_point(
    model: FrobeniusModel,
    calibration: Calibration,
    tau: CurvePoint,
    ctx: FloatContext,
    *,
    tol=None,
    max_iter: int = 60,
) -> tuple:
    """Newton solve of t = t_0 + sum_{m>=1} S_m(t) t_m, seeded at t_0.

    The Jacobian is 1 - (quantum multiplication by sum_m S_{m-1}(t) t_m), so
    each step costs one calibration evaluation and one N x N solve.  With
    all higher couplings zero the seed is already exact."""
    n = model.dimension
    _require_origin(calibration)
    if tau.dimension != n:
        raise ValueError("curve-space point dimension mismatch")
    kmax = tau.kmax
    if kmax > calibration.order:
        raise ValueError(
            f"calibration order {calibration.order} too small for couplings up to c^{kmax}"
        )
    with ctx.guard():
        if tol is None:
            tol = mpmath.mpf(2) ** (40 - ctx.prec_bits)
        else:
            tol = ctx.num(tol)
        t0 = [ctx.num(x) for x in tau.coupling(0)]
        couplings = [[ctx.num(x) for x in tau.coupling(m)] for m in range(kmax + 1)]
        live = [m for m in range(1, kmax + 1) if any(x != 0 for x in couplings[m])]
        t = list(t0)
        rmax = None
        for _ in range(max_iter):
            svals = calibration.s_values(t, ctx, order=kmax) if live else None
            res = list(t)
            for a in range(n):
                res[a] = res[a] - t0[a]
            for m in live:
                sm = svals[m]
                for a in range(n):
                    acc = res[a]
                    for b in range(n):
                        acc = acc - sm[a][b] * couplings[m][b]
                    res[a] = acc
            rmax = ctx.max_abs(res)
            if rmax <= tol:
                return tuple(t)
            w = [ctx.num(0)] * n
            for m in live:
                sm = svals[m - 1]
                for a in range(n):
                    acc = w[a]
                    for b in range(n):
                        acc = acc + sm[a][b] * couplings[m][b]
                    w[a] = acc
            cmats = model.structure_constants(t, ctx)
            jac = [
                [
                    (1 if i == j else 0) - sum(w[mu] * cmats[mu][i][j] for mu in range(n))
                    for j in range(n)
                ]
                for i in range(n)
            ]
            step = mat_vec(mat_inv_float(jac, ctx), res)
            t = [t[a] - step[a] for a in range(n)]
        raise ArithmeticError(
            f"critical point Newton stalled after {max_iter} iterations; "
            f"residual {mpmath.nstr(rmax, 8)}"
        )


# -- genus 0 ----------------------------------------------------------------------


def _two_point_tables(svals, gmat, kmax: int) -> Dict[Tuple[int, int], list]:
    """W_{ml} = sum_{i<=l} (-1)^i N_{m+1+i, l-i}, N_{ab} = S_a^T g S_b.

    Ring-generic: entries may be floats or truncated series."""
    nmats = {}
    for a in range(1, 2 * kmax + 2):
        for b in range(0, min(kmax, 2 * kmax + 1 - a) + 1):
            nmats[(a, b)] = mat_mul(transpose(svals[a]), mat_mul(gmat, svals[b]))
    tables = {}
    for m in range(kmax + 1):
        for l in range(kmax + 1):
            acc = None
            for i in range(l + 1):
                term = nmats[(m + 1 + i, l - i)]
                if i % 2:
                    term = [[-x for x in row] for row in term]
                acc = term if acc is None else [
                    [x + y for x, y in zip(ra, rb)] for ra, rb in zip(acc, term)
                ]
            tables[(m, l)] = acc
    return tables


def _genus0_assembly(tables, xvecs, kmax: int, half):
    """(value, one-point list) from the two-point tables; ``half`` is 1/2 in
    the working ring."""
    n = len(xvecs[0])
    one_point = []
    for m in range(kmax + 1):
        comp = []
        for alpha in range(n):
            acc = None
            for l in range(kmax + 1):
                row = tables[(m, l)][alpha]
                for beta in range(n):
                    term = row[beta] * xvecs[l][beta]
                    acc = term if acc is None else acc + term
            comp.append(acc)
        one_point.append(comp)
    value = None
    for m in range(kmax + 1):
        for alpha in range(n):
            term = xvecs[m][alpha] * one_point[m][alpha]
            value = term if value is None else value + term
    return value * half, one_point


@dataclass
class Genus0Descendents:
    """F0 with its derivative tables at the critical point.

    ``one_point[m][alpha]`` is dF0/dt_m^alpha and ``two_point[(m, l)]`` the
    matrix of second derivatives; per the two-point reconstruction both
    depend on tau only through the critical point."""

    critical: tuple
    value: object
    one_point: List[list]
    two_point: Dict[Tuple[int, int], list]


def genus0_descendents(
    model: FrobeniusModel,
    calibration: Calibration,
    tau: CurvePoint,
    ctx: FloatContext,
    *,
    critical=None,
    tol=None,
) -> Genus0Descendents:
    """Genus-0 descendent potential and correlator tables at t(tau).

    Needs the calibration through order 2 max(Kmax, 1) + 1: the two-point
    expansion pairs z- and w-coefficients across the full coupling window,
    and the -c of tau(c) - c occupies level 1 even with no couplings."""
    _require_origin(calibration)
    kk = max(tau.kmax, 1)
    if calibration.order < 2 * kk + 1:
        raise ValueError(
            f"two-point tables need calibration order {2 * kk + 1}, have {calibration.order}"
        )
    if critical is None:
        critical = critical_point(model, calibration, tau, ctx, tol=tol)
    with ctx.guard():
        svals = calibration.s_values(critical, ctx, order=2 * kk + 1)
        gmat = [[ctx.num(x) for x in row] for row in model.metric]
        xvecs = _x_vectors(tau, model.unit_index, ctx.num)
        tables = _two_point_tables(svals, gmat, kk)
        value, one_point = _genus0_assembly(tables, xvecs, kk, ctx.num(Fraction(1, 2)))
    return Genus0Descendents(
        critical=tuple(critical), value=value, one_point=one_point, two_point=tables
    )


# -- the formal regime ------------------------------------------------------------


def _formal_caps(order: int) -> Caps:
    return Caps.total((_EPS,), order)


def _entry_series(jets, devs, caps: Caps) -> TruncatedSeries:
    """Compose a cached t-jet with deviation series of positive valuation."""
    out = TruncatedSeries.zero(caps)
    powers = [{0: TruncatedSeries.const(caps, Fraction(1))} for _ in devs]

    def power(a, k):
        if k not in powers[a]:
            powers[a][k] = power(a, k - 1) * devs[a]
        return powers[a][k]

    for key, coeff in jets.items():
        term = TruncatedSeries.const(caps, coeff)
        for a, k in enumerate(key):
            if k:
                term = term * power(a, k)
        out = out + term
    return out


class _FormalEvaluator:
    """Evaluates calibration matrices at a series-valued point by composing
    exact t-jets taken at the rational center."""

    def __init__(self, calibration: Calibration, center, order: int):
        self.n = calibration.dimension
        self.center = tuple(Fraction(x) for x in center)
        self.order = order
        self.caps = _formal_caps(order)
        self.calibration = calibration
        self._jets: Dict[Tuple[int, int, int], Dict] = {}

    def _jet(self, k: int, i: int, j: int) -> Dict:
        key = (k, i, j)
        if key not in self._jets:
            series = self.calibration.s[k - 1][i][j].jet(self.center, self.order, None)
            self._jets[key] = dict(series.c)
        return self._jets[key]

    def matrices(self, point_series, order: int) -> list:
        devs = [p - TruncatedSeries.const(self.caps, c) for p, c in zip(point_series, self.center)]
        one = TruncatedSeries.const(self.caps, Fraction(1))
        zero = TruncatedSeries.zero(self.caps)
        out = [identity(self.n, one, zero)]
        for k in range(1, order + 1):
            out.append(
                [
                    [_entry_series(self._jet(k, i, j), devs, self.caps) for j in range(self.n)]
                    for i in range(self.n)
                ]
            )
        return out


def critical_point_formal(
    model: FrobeniusModel, calibration: Calibration, tau: CurvePoint, order: int
) -> tuple:
    """Critical point with couplings t_m (m >= 1) graded by a nilpotent
    bookkeeping variable, as a tuple of truncated series.

    The fixed-point map gains one order of valuation per pass, so ``order``
    iterations land on the exact solution in the truncated ring.  Exact
    arithmetic throughout; restricted to polynomial potentials with rational
    data (a transcendental jet raises)."""
    n = model.dimension
    _require_origin(calibration)
    kmax = tau.kmax
    if kmax > calibration.order:
        raise ValueError(
            f"calibration order {calibration.order} too small for couplings up to c^{kmax}"
        )
    caps = _formal_caps(order)
    t0 = tuple(Fraction(x) for x in tau.coupling(0))
    eps = TruncatedSeries.var(caps, _EPS)
    couplings = [
        [TruncatedSeries.const(caps, Fraction(x)) * eps for x in tau.coupling(m)]
        for m in range(kmax + 1)
    ]
    live = [m for m in range(1, kmax + 1) if any(tau.coupling(m))]
    evaluator = _FormalEvaluator(calibration, t0, order)
    t = [TruncatedSeries.const(caps, c) for c in t0]
    for _ in range(order):
        svals = evaluator.matrices(t, kmax) if live else None
        nxt = [TruncatedSeries.const(caps, c) for c in t0]
        for m in live:
            sm = svals[m]
            for a in range(n):
                for b in range(n):
                    nxt[a] = nxt[a] + sm[a][b] * couplings[m][b]
        t = nxt
    if live:
        svals = evaluator.matrices(t, kmax)
        for a in range(n):
            check = TruncatedSeries.const(caps, t0[a]) - t[a]
            for m in live:
                for b in range(n):
                    check = check + svals[m][a][b] * couplings[m][b]
            if check.c:
                raise ArithmeticError("formal fixed point failed to stabilize")
    return tuple(t)


def genus0_formal(
    model: FrobeniusModel, calibration: Calibration, tau: CurvePoint, order: int
) -> Genus0Descendents:
    """Exact epsilon-graded genus-0 descendents; same assembly as the
    numeric path, run over the truncated series ring."""
    kk = max(tau.kmax, 1)
    if calibration.order < 2 * kk + 1:
        raise ValueError(
            f"two-point tables need calibration order {2 * kk + 1}, have {calibration.order}"
        )
    critical = critical_point_formal(model, calibration, tau, order)
    caps = _formal_caps(order)
    eps = TruncatedSeries.var(caps, _EPS)
    evaluator = _FormalEvaluator(calibration, tau.coupling(0), order)
    svals = evaluator.matrices(list(critical), 2 * kk + 1)
    gmat = [
        [TruncatedSeries.const(caps, Fraction(x)) for x in row] for row in model.metric
    ]
    one = TruncatedSeries.const(caps, Fraction(1))
    xvecs = []
    for m in range(kk + 1):
        row = [TruncatedSeries.const(caps, Fraction(x)) for x in tau.coupling(m)]
        if m >= 1:
            row = [x * eps for x in row]
        if m == 1:
            row[model.unit_index] = row[model.unit_index] - one
        xvecs.append(row)
    tables = _two_point_tables(svals, gmat, kk)
    value, one_point = _genus0_assembly(tables, xvecs, kk, Fraction(1, 2))
    return Genus0Descendents(
        critical=critical, value=value, one_point=one_point, two_point=tables
    )


# -- bold quantities ---------------------------------------------------------------


def _brackets(model, calibration, t_star, tau, ctx) -> list:
    """b_p = sum_{m>=p} S_{m-p}(t*) X_m; the unit brackets are g b_p."""
    n = model.dimension
    kmax = max(tau.kmax, 1)
    svals = calibration.s_values(t_star, ctx, order=min(kmax, calibration.order))
    xvecs = _x_vectors(tau, model.unit_index, ctx.num)
    out = []
    for p in range(kmax + 1):
        vec = [ctx.num(0)] * n
        for m in range(p, kmax + 1):
            sm = svals[m - p]
            for a in range(n):
                acc = vec[a]
                for b in range(n):
                    acc = acc + sm[a][b] * xvecs[m][b]
                vec[a] = acc
        out.append(vec)
    return out


@dataclass
class DescendentFrame:
    """Bold edge and tail data at the critical point of a curve-space point.

    Shaped to drop into the stable-graph sum exactly where the primary
    (Delta, T, V) data goes; ``sqrt_d`` follows the square-root branches of
    the underlying frame, and flipping one flips the matching V rows, so the
    graph sum is branch-invariant."""

    critical: tuple
    d: list
    sqrt_d: list
    tails: List[Dict[int, object]]
    v: Dict
    v_cutoff: int
    t_cutoff: int
    criticality_residual: object
    residuals: dict = field(default_factory=dict)
    frame: Optional[CanonicalFrame] = None

    @property
    def dimension(self) -> int:
        return len(self.d)

    def edge_data(self) -> EdgeTailData:
        return EdgeTailData(
            dimension=self.dimension,
            delta=list(self.d),
            sqrt_delta=list(self.sqrt_d),
            v=self.v,
            t=self.tails,
            v_cutoff=self.v_cutoff,
            t_cutoff=self.t_cutoff,
            residuals=dict(self.residuals),
        )


def bold_quantities(
    model: FrobeniusModel,
    calibration: Calibration,
    frame: CanonicalFrame,
    r: RSeries,
    tau: CurvePoint,
    *,
    criticality_tol=None,
) -> DescendentFrame:
    """Extract (D, T, V) from the z-expansion of the one-point correlator.

    ``frame`` and ``r`` must live at the critical point of ``tau``.  With
    G_k the z^k coefficient of sum (-z)^p R_q Psi b_p: G_0 is the
    criticality residual (raised if above tolerance), G_1 = D^{-1/2}, and
    T_k = (-1)^k G_k / G_1 for k >= 2.  V is evaluated at the critical
    point, which is definition (not extraction): the two-point functions
    factor through it."""
    ctx = frame.ctx
    n = frame.dimension
    _require_origin(calibration)
    if tau.kmax > calibration.order:
        raise ValueError(
            f"calibration order {calibration.order} too small for couplings up to c^{tau.kmax}"
        )
    with ctx.guard():
        t_star = frame.point
        bvecs = _brackets(model, calibration, t_star, tau, ctx)
        psi = frame.psi_values()
        cvecs = [mat_vec(psi, b) for b in bvecs]
        consts = r.all_constants()
        t_cutoff = r.order + 1
        gvals = []
        for k in range(t_cutoff + 1):
            vec = [ctx.num(0)] * n
            for p in range(min(k, len(cvecs) - 1) + 1):
                q = k - p
                if q > r.order:
                    continue
                sign = -1 if p % 2 else 1
                rq = consts[q]
                for i in range(n):
                    acc = vec[i]
                    for j in range(n):
                        acc = acc + sign * rq[i][j] * cvecs[p][j]
                    vec[i] = acc
            gvals.append(vec)
        crit = ctx.max_abs(gvals[0])
        tol = ctx.tol if criticality_tol is None else ctx.num(criticality_tol)
        if crit > tol:
            raise ArithmeticError(
                f"criticality residual {mpmath.nstr(crit, 8)} exceeds {mpmath.nstr(tol, 8)}"
            )
        sqrt_d = [1 / gvals[1][i] for i in range(n)]
        d = [x * x for x in sqrt_d]
        tails: List[Dict[int, object]] = [dict() for _ in range(n)]
        for k in range(2, t_cutoff + 1):
            sign = 1 if k % 2 == 0 else -1
            for i in range(n):
                tails[i][k] = sign * gvals[k][i] * sqrt_d[i]
        v, vres = compute_V(r)
        residuals = dict(vres)
        residuals["cross_direction"] = r.cross_residual
        residuals["unitarity"] = unitarity_residual(r)
        residuals["criticality"] = crit
    return DescendentFrame(
        critical=tuple(t_star),
        d=d,
        sqrt_d=sqrt_d,
        tails=tails,
        v=v,
        v_cutoff=r.order - 1,
        t_cutoff=t_cutoff,
        criticality_residual=crit,
        residuals=residuals,
        frame=frame,
    )


def descendent_frame(
    model: FrobeniusModel,
    calibration: Calibration,
    tau: CurvePoint,
    ctx: FloatContext,
    *,
    order: int,
    mode: Optional[str] = None,
    gauge=None,
    permutation=None,
    sign_flips=None,
    tol=None,
    criticality_tol=None,
) -> DescendentFrame:
    """Critical point, canonical frame, R-matrix, and bold extraction in one
    call; the R gauge options match the primary genus pipeline."""
    t_star = critical_point(model, calibration, tau, ctx, tol=tol)
    frame = canonical_frame(
        model, t_star, ctx, order=order, permutation=permutation, sign_flips=sign_flips
    )
    r = compute_R(frame, order, mode=mode)
    if gauge is not None:
        r = twist_R(r, gauge)
    return bold_quantities(
        model, calibration, frame, r, tau, criticality_tol=criticality_tol
    )


def descendent_potential(
    model: FrobeniusModel,
    calibration: Calibration,
    tau: CurvePoint,
    g: int,
    ctx: FloatContext,
    *,
    order: Optional[int] = None,
    mode: Optional[str] = None,
    gauge=None,
    table: Optional[IntersectionTable] = None,
    permutation=None,
    sign_flips=None,
    frame_data: Optional[DescendentFrame] = None,
) -> GenusReport:
    """F^g(tau) by the stable-graph sum over the bold data.

    Same combinatorics and default orders as the primary potential; at
    t_1 = t_2 = ... = 0 the bold data degenerates to the primary data and
    this reproduces F^g(t_0) through the identical code path."""
    if g < 2:
        raise ValueError("the graph sum starts at genus 2; genus 1 is a one-form")
    if order is None:
        order = 3 * g - 3
    if frame_data is None:
        frame_data = descendent_frame(
            model,
            calibration,
            tau,
            ctx,
            order=order,
            mode=mode,
            gauge=gauge,
            permutation=permutation,
            sign_flips=sign_flips,
        )
    data = frame_data.edge_data()
    graph_list = enumerate_graphs(g, model.dimension)
    with ctx.guard():
        total = ctx.num(0)
        contributions = []
        for graph in graph_list:
            val = evaluate_graph(graph, data, table)
            contributions.append((graph, val))
            total = total + val
    return GenusReport(
        genus=g, value=total, contributions=contributions, data=data, frame=frame_data.frame
    )


# -- genus 1 -----------------------------------------------------------------------


def critical_inverse_jacobian(
    model: FrobeniusModel,
    calibration: Calibration,
    tau: CurvePoint,
    ctx: FloatContext,
    *,
    critical=None,
) -> list:
    """[dt/dt_0]^{-1} at the critical point.

    Differentiating the criticality condition shows this is quantum
    multiplication by -b_1, so its eigenvalues in the idempotent frame are
    sqrt(Delta_i / D_i) and its determinant is their product."""
    n = model.dimension
    if critical is None:
        critical = critical_point(model, calibration, tau, ctx)
    with ctx.guard():
        b1 = _brackets(model, calibration, critical, tau, ctx)[1]
        cmats = model.structure_constants(critical, ctx)
        return [
            [-sum(b1[mu] * cmats[mu][i][j] for mu in range(n)) for j in range(n)]
            for i in range(n)
        ]


def _det(mat):
    n = len(mat)
    if n == 1:
        return mat[0][0]
    total = None
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in mat[1:]]
        term = mat[0][j] * _det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


_STENCIL = ((1, Fraction(45)), (-1, Fraction(-45)), (2, Fraction(-9)),
            (-2, Fraction(9)), (3, Fraction(1)), (-3, Fraction(-1)))


@dataclass
class Genus1Routes:
    """The two faces of dF^1 on the curve space, as directional derivatives.

    ``curve`` sums V^{ii}_{00}/2 du^i + dD_i/(48 D_i) over the idempotent
    directions; ``pullback`` differentiates F^1(t(tau)) + (1/24) ln det
    [dt/dt_0] through the critical point.  Agreement is the genus-1 content
    of the descendent proposal."""

    curve: object
    pullback: object

    @property
    def difference(self):
        return self.curve - self.pullback


def genus1_descendent_routes(
    model: FrobeniusModel,
    calibration: Calibration,
    tau: CurvePoint,
    direction: CurvePoint,
    ctx: FloatContext,
    *,
    step: Fraction = Fraction(1, 10**6),
) -> Genus1Routes:
    """Both genus-1 differentials along ``direction``, by sixth-order
    central differences in the curve-space parameter.

    Rational tau, direction, and step keep every sample's inputs exact; the
    stencil error is O(step^6) against values computed at working
    precision."""
    n = model.dimension

    def frame_at(curve: CurvePoint):
        t_star = critical_point(model, calibration, curve, ctx)
        frame = canonical_frame(model, t_star, ctx, order=1)
        r = compute_R(frame, 1)
        return bold_quantities(model, calibration, frame, r, curve)

    center = frame_at(tau)
    with ctx.guard():
        denom = 60 * ctx.num(step)
        samples = {}
        for shift, _ in _STENCIL:
            data = frame_at(tau.shifted(direction, shift * step))
            det = _det(
                critical_inverse_jacobian(
                    model, calibration, tau.shifted(direction, shift * step), ctx,
                    critical=data.critical,
                )
            )
            samples[shift] = (
                data.frame.u_values(),
                data.d,
                mpmath.log(det),
                data.critical,
            )

        def fd(pick):
            acc = ctx.num(0)
            for shift, coeff in _STENCIL:
                acc = acc + ctx.num(coeff) * pick(samples[shift])
            return acc / denom

        curve_form = ctx.num(0)
        for i in range(n):
            du_i = fd(lambda s, i=i: s[0][i])
            dd_i = fd(lambda s, i=i: s[1][i])
            v00 = center.v.get((i, i, 0, 0), ctx.num(0))
            curve_form = curve_form + v00 * du_i / 2 + dd_i / (48 * center.d[i])

        one_form = genus1_differential(center.frame, center.edge_data())
        pullback = ctx.num(0)
        for a in range(n):
            dt_a = fd(lambda s, a=a: s[3][a])
            pullback = pullback + one_form[a] * dt_a
        # ln det[dt/dt_0] = -ln det of the inverse Jacobian
        pullback = pullback - fd(lambda s: s[2]) / 24
    return Genus1Routes(curve=curve_form, pullback=pullback)


# -- one-dimensional reference ------------------------------------------------------


def point_descendent_reference(
    tau: CurvePoint,
    g: int,
    ctx: FloatContext | None,
    *,
    table: Optional[IntersectionTable] = None,
    max_points: Optional[int] = None,
):
    """F^g(tau) for the one-dimensional model summed straight from the
    intersection table: sum over n of (1/n!) <tau_{k_1}...tau_{k_n}>_g
    prod t_{k_i}.

    With t_0 = t_1 = 0 the dimension constraint caps n at 3g - 3 and the
    sum is finite and exact (``ctx=None`` keeps rationals).  Otherwise pass
    ``max_points``; the tail decays geometrically for small couplings."""
    if tau.dimension != 1:
        raise ValueError("the direct sum is for the one-dimensional model")
    if g < 2:
        raise ValueError("the direct reference starts at genus 2")
    times = [row[0] for row in tau.times]
    if max_points is None:
        if len(times) > 0 and times[0] != 0 or len(times) > 1 and times[1] != 0:
            raise ValueError(
                "nonzero t_0 or t_1 makes the sum infinite; pass max_points"
            )
        max_points = 3 * g - 3
    if ctx is None:
        times = [Fraction(x) for x in times]
        one = Fraction(1)
    else:
        times = [ctx.num(x) for x in times]
        one = ctx.num(1)
    total = one * 0
    live = [k for k, x in enumerate(times) if x != 0]
    if not live:
        return total
    top = max(live)
    ks: list = []

    def descend(pos, remaining, minimum, weight):
        nonlocal total
        if pos == 0:
            if remaining == 0:
                total = total + weight * psi_intersection(g, tuple(ks), table=table)
            return
        for k in live:
            if k < minimum or k > remaining or remaining - k > (pos - 1) * top:
                continue
            ks.append(k)
            descend(pos - 1, remaining - k, k, weight * times[k] / ks.count(k))
            ks.pop()

    def run():
        for n in range(1, max_points + 1):
            descend(n, 3 * g - 3 + n, 0, one)

    if ctx is None:
        run()
    else:
        with ctx.guard():
            run()
    return total
