"""Higher-genus potentials as stable-graph sums over edge/tail data.

F^g at a semisimple point is assembled from the canonical-frame data of the
point: every connected stable decorated graph contributes

    1/|Aut| * prod_edges  V^{i_v i_w}_{k l} sqrt(Delta_{i_v}) sqrt(Delta_{i_w})
            * prod_vertices  vertex_correlator(g_v, ks_v, T^{i_v}, Delta_{i_v})

summed over half-edge psi-powers (k, l).  The per-vertex power budget
3 g_v - 3 + valence bounds every sum, so the whole expression is a finite
rational combination of the V/T/Delta tables.

``wick_oracle`` evaluates the same quantity without enumerating graphs: it
truncates each vertex generating function log tau(hbar Delta_i; Q^i) around
Q = T, applies the exponential of the propagator

    P = (hbar/2) sum V^{ij}_{kl} sqrt(Delta_i Delta_j) d/dq^i_k d/dq^j_l,

sets q = 0 and reads the hbar^{g-1} coefficient of the logarithm.  The two
code paths share nothing beyond the input tables, which makes them mutual
oracles; agreement is exact on rational synthetic data.

Truncation bookkeeping for the oracle uses the grading deg(hbar) = 2,
deg(q) = 1: the propagator is neutral, every surviving monomial of the
connected part has degree exactly 2g - 2, and a genus-0 cluster carries
hbar^{-1} q^{>=3}, so the grading cap makes exponentials of the Laurent
series terminate.

Genus 1 is exposed as the one-form

    dF^1 = sum_i [ V^{ii}_{00}/2 du^i + dDelta_i/(48 Delta_i) ]

pulled back to flat coordinates, plus a finite-difference closedness
residual and a quadrature helper for displaying differences F^1(b)-F^1(a).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import List, Optional, Tuple

import mpmath

from .expressions import t_names
from .frame import CanonicalFrame, canonical_frame
from .frobenius import FrobeniusModel
from .graphs import StableGraph, enumerate_graphs
from .intersection import IntersectionTable, _ascending_tuples, vertex_correlator
from .rmatrix import EdgeTailData, RSeries, compute_R, edge_tail_data, twist_R
from .scalars import FloatContext
from .series import Caps, TruncatedSeries


def evaluate_graph(
    graph: StableGraph,
    data: EdgeTailData,
    table: Optional[IntersectionTable] = None,
    ctx: Optional[FloatContext] = None,
):
    """Contribution of one graph: the half-edge power sum divided by |Aut|."""
    if ctx is not None:
        with ctx.guard():
            return _evaluate_graph_impl(graph, data, table)
    return _evaluate_graph_impl(graph, data, table)


def _evaluate_graph_impl(graph, data, table):
    nv = graph.num_vertices()
    edges = []
    for v, w, mult in graph.edge_list():
        edges.extend([(v, w)] * mult)
    budget = [graph.psi_cap(v) for v in range(nv)]
    for v, w in edges:
        # a loop draws both half-edges from one shared budget
        joint = budget[v] if v == w else budget[v] + budget[w]
        if joint > data.v_cutoff:
            raise ValueError(
                f"edge coefficients known to order {data.v_cutoff}, need {joint}"
            )

    sd = data.sqrt_delta
    vertex_cache = {}

    def vertex_value(v, ks):
        key = (v, tuple(sorted(ks)))
        if key not in vertex_cache:
            g_v, i_v = graph.vertices[v]
            vertex_cache[key] = vertex_correlator(
                g_v, key[1], data.t[i_v], data.delta[i_v], table=table
            )
        return vertex_cache[key]

    ks_at: List[List[int]] = [[] for _ in range(nv)]
    total = 0

    def descend(e_idx, weight):
        nonlocal total
        if e_idx == len(edges):
            prod = weight
            for v in range(nv):
                val = vertex_value(v, ks_at[v])
                if val == 0:
                    return
                prod = prod * val
            total = total + prod
            return
        v, w = edges[e_idx]
        i_v, i_w = graph.vertices[v][1], graph.vertices[w][1]
        for k in range(budget[v] + 1):
            budget[v] -= k
            ks_at[v].append(k)
            for l in range(budget[w] + 1):
                vw = data.v_entry(i_v, i_w, k, l)
                if vw == 0:
                    continue
                budget[w] -= l
                ks_at[w].append(l)
                descend(e_idx + 1, weight * vw * sd[i_v] * sd[i_w])
                ks_at[w].pop()
                budget[w] += l
            ks_at[v].pop()
            budget[v] += k
        return

    descend(0, 1)
    return total / graph.aut if total else total


@dataclass
class GenusReport:
    """Graph-sum result with its per-graph breakdown."""

    genus: int
    value: object
    contributions: List[Tuple[StableGraph, object]]
    data: EdgeTailData
    frame: Optional[CanonicalFrame] = None

    def contribution_map(self):
        return {g.describe(): v for g, v in self.contributions}


def genus_potential(
    model: FrobeniusModel,
    point,
    g: int,
    ctx: FloatContext,
    order: Optional[int] = None,
    mode: Optional[str] = None,
    gauge=None,
    table: Optional[IntersectionTable] = None,
    permutation=None,
    sign_flips=None,
) -> GenusReport:
    """F^g(point) by the stable-graph sum.

    ``order`` is the z-order of the R-matrix.  The default 3g - 3 is exactly
    sufficient: tails reach T_{3g-2} (one R order less), and any edge budget
    tops out at k + l = 3g - 4 once a single edge exists.  ``gauge`` applies
    a diagonal twist to R before the edge/tail extraction (only meaningful in
    constants mode: the conformal normalization already fixes R).
    ``permutation`` and ``sign_flips`` select the frame labeling and
    square-root branches; the value of F^g does not depend on them.
    """
    if g < 2:
        raise ValueError("the graph sum starts at genus 2; genus 1 is a one-form")
    if order is None:
        order = 3 * g - 3
    frame = canonical_frame(
        model, point, ctx, order=order, permutation=permutation, sign_flips=sign_flips
    )
    r = compute_R(frame, order, mode=mode)
    if gauge is not None:
        r = twist_R(r, gauge)
    data = edge_tail_data(r)
    graph_list = enumerate_graphs(g, model.dimension)
    with ctx.guard():
        total = ctx.num(0)
        contributions = []
        for graph in graph_list:
            val = _evaluate_graph_impl(graph, data, table)
            contributions.append((graph, val))
            total = total + val
    return GenusReport(genus=g, value=total, contributions=contributions, data=data, frame=frame)


# -- operator-exponential oracle ---------------------------------------------------


def _qname(i: int, k: int) -> str:
    return f"q{i}_{k}"


def wick_oracle(
    data: EdgeTailData,
    g: int,
    table: Optional[IntersectionTable] = None,
    ctx: Optional[FloatContext] = None,
):
    """F^g from the same edge/tail data by expanding the operator exponential
    directly; graph-free, hence an independent check of the graph sum."""
    if g < 2:
        raise ValueError("the expansion is normalized for genus >= 2")
    if ctx is not None:
        with ctx.guard():
            return _wick_impl(data, g, table, ctx)
    return _wick_impl(data, g, table, None)


def _wick_impl(data, g, table, ctx):
    n = data.dimension
    kq = 3 * g - 4  # largest psi-power any vertex can absorb
    names = ("h",) + tuple(_qname(i, k) for i in range(n) for k in range(kq + 1))
    grading = {"h": 2}
    for nm in names[1:]:
        grading[nm] = 1
    caps = Caps.box(
        names,
        mins={"h": -(2 * g - 2)},
        maxs={"h": g - 1},
        weighted=[(grading, 2 * g - 2)],
    )
    qpos = {(i, k): 1 + i * (kq + 1) + k for i in range(n) for k in range(kq + 1)}

    # each vertex generating function, expanded around Q = T
    log_vertices = TruncatedSeries.zero(caps)
    for i in range(n):
        tails = data.t[i]
        delta = data.delta[i]
        for g_v in range(0, g + 1):
            m_cap = 2 * g - 2 - 2 * (g_v - 1)
            for m in range(0, m_cap + 1):
                if g_v == 0 and m < 3:
                    continue
                if g_v == 1 and m == 0:
                    continue
                sum_cap = 3 * g_v - 3 + m
                for s in range(0, sum_cap + 1):
                    for ks in _ascending_tuples(m, s, 0):
                        if ks and ks[-1] > kq:
                            continue
                        coeff = vertex_correlator(g_v, ks, tails, delta, table=table)
                        if coeff == 0:
                            continue
                        mult = Fraction(1)
                        seen = {}
                        for k in ks:
                            seen[k] = seen.get(k, 0) + 1
                        for c in seen.values():
                            mult /= factorial(c)
                        key = [0] * len(names)
                        key[0] = g_v - 1
                        for k in ks:
                            key[qpos[(i, k)]] += 1
                        term = TruncatedSeries(caps, {tuple(key): coeff * mult})
                        log_vertices = log_vertices + term

    state = log_vertices.exp(ctx)

    # propagator weights between variable slots
    weights = {}
    for (i, k), u in qpos.items():
        for (j, l), v in qpos.items():
            if u > v or k + l > data.v_cutoff:
                continue
            w = data.v_entry(i, j, k, l) * data.sqrt_delta[i] * data.sqrt_delta[j]
            if w == 0:
                continue
            weights[(u, v)] = w

    def propagate(series):
        out = {}
        for key, coef in series.c.items():
            positions = [p for p, e in enumerate(key) if p > 0 and e > 0]
            for a_idx, u in enumerate(positions):
                for v in positions[a_idx:]:
                    w = weights.get((u, v))
                    if w is None:
                        continue
                    if u == v:
                        if key[u] < 2:
                            continue
                        factor = Fraction(key[u] * (key[u] - 1), 2)
                    else:
                        factor = key[u] * key[v]
                    nk = list(key)
                    nk[0] += 1
                    nk[u] -= 1
                    nk[v] -= 1
                    nk = tuple(nk)
                    add = coef * factor * w
                    out[nk] = out.get(nk, 0) + add
        return TruncatedSeries(caps, out)

    order = 1
    layer = state
    while True:
        layer = propagate(layer).scale(Fraction(1, order))
        if not layer.c:
            break
        state = state + layer
        order += 1

    collapsed = {}
    for key, coef in state.c.items():
        if any(e != 0 for e in key[1:]):
            continue
        collapsed[(key[0],)] = coef
    hcaps = Caps.box(("h",), mins={"h": -(2 * g - 2)}, maxs={"h": g - 1})
    connected = TruncatedSeries(hcaps, collapsed)

    c0 = connected.constant_term()
    if isinstance(c0, (int, Fraction)):
        logged = connected.scale(Fraction(1, 1) / c0).log()
    else:
        logged = connected.log(ctx)
    return logged.scalar_coeff((g - 1,))


# -- genus 1 ------------------------------------------------------------------------


def genus1_differential(frame: CanonicalFrame, data: EdgeTailData) -> list:
    """Components of dF^1 along the flat coordinates dt^alpha."""
    if frame.order < 1:
        raise ValueError("genus-1 one-form needs frame jets of order >= 1")
    ctx = frame.ctx
    n = frame.dimension
    names = t_names(n)
    with ctx.guard():
        comps = []
        for a in range(n):
            acc = ctx.num(0)
            for i in range(n):
                du_a = frame.du[i][a].constant_term()
                v00 = data.v_entry(i, i, 0, 0)
                delta_const = frame.delta[i].constant_term()
                ddelta_a = frame.delta[i].partial(names[a]).constant_term()
                acc = acc + v00 * du_a / 2 + ddelta_a / (48 * delta_const)
            comps.append(acc)
        return comps


def genus1_one_form(model: FrobeniusModel, point, ctx: FloatContext) -> list:
    """dF^1 at a point, building the minimal frame and R-matrix on the fly."""
    frame = canonical_frame(model, point, ctx, order=1)
    r = compute_R(frame, 1)
    data = edge_tail_data(r, v_cutoff=0)
    return genus1_differential(frame, data)


_STENCIL = ((1, Fraction(45)), (-1, Fraction(-45)), (2, Fraction(-9)),
            (-2, Fraction(9)), (3, Fraction(1)), (-3, Fraction(-1)))


def genus1_closedness_residual(
    model: FrobeniusModel,
    point,
    ctx: FloatContext,
    step: Fraction = Fraction(1, 10 ** 6),
) -> object:
    """Max |d_a (dF^1)_b - d_b (dF^1)_a| by sixth-order central differences.

    Exact rational displacement points keep the frame inputs exact; the
    stencil error is O(step^6)."""
    n = model.dimension
    point = tuple(point)
    forms = {}

    def form(pt):
        if pt not in forms:
            forms[pt] = genus1_one_form(model, pt, ctx)
        return forms[pt]

    with ctx.guard():
        worst = ctx.num(0)
        denom = 60 * step
        for a in range(n):
            for b in range(a + 1, n):
                curl = ctx.num(0)
                for shift, coeff in _STENCIL:
                    pa = list(point)
                    pa[a] = pa[a] + shift * step
                    da = form(tuple(pa))[b]
                    pb = list(point)
                    pb[b] = pb[b] + shift * step
                    db = form(tuple(pb))[a]
                    curl = curl + ctx.num(coeff) * (da - db)
                worst = max(worst, mpmath.fabs(curl / ctx.num(denom)))
        return worst


def genus1_difference_quadrature(
    model: FrobeniusModel,
    start,
    end,
    ctx: FloatContext,
) -> object:
    """F^1(end) - F^1(start) by numerical quadrature of dF^1 along the
    straight segment.  Display helper: accuracy is whatever mpmath.quad
    delivers on the sampled one-form, not the library's exact pipeline."""
    n = model.dimension
    with ctx.guard():
        s0 = [ctx.num(x) for x in start]
        s1 = [ctx.num(x) for x in end]
        direction = [b - a for a, b in zip(s0, s1)]

        def integrand(s):
            pt = tuple(a + s * d for a, d in zip(s0, direction))
            comps = genus1_one_form(model, pt, ctx)
            total = ctx.num(0)
            for c, d in zip(comps, direction):
                total = total + c * d
            return total

        return mpmath.quad(integrand, [0, 1])


# -- reference values ----------------------------------------------------------------


def two_primary_genus2_reference(frame: CanonicalFrame):
    """Closed form for F^2 on the two-primary conformal family:

        d(3d-1)(d-1)^2(3d-5)(d-2)/2880 * Delta_0 / (u_1 - u_0)^3,

    invariant under branch relabeling (both factors flip sign together)."""
    if frame.model.euler is None:
        raise ValueError("the closed form needs the conformal dimension")
    d = Fraction(frame.model.euler.conformal_dimension)
    poly = d * (3 * d - 1) * (d - 1) ** 2 * (3 * d - 5) * (d - 2)
    ctx = frame.ctx
    with ctx.guard():
        u = frame.u_values()
        delta = frame.delta_values()
        return ctx.num(poly / 2880) * delta[0] / (u[1] - u[0]) ** 3
