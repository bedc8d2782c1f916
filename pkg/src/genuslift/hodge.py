"""Hodge-bundle deformation of the Witten-Kontsevich tau function.

``tau_series`` assembles the logarithm of the tau function over the
descendent couplings Q_0, Q_1, ...:

    log tau = sum_{g,n} hbar^{g-1}/n! <tau_{k_1}..tau_{k_n}>_g Q_{k_1}..Q_{k_n},

a finite sum inside any truncation window because the correlator
vanishes unless sum k_i = 3g-3+n.  Inserting the exponential of the odd
Chern characters of the Hodge bundle, one coupling s_m per character,
deforms tau to a family lambda(hbar; Q; s) obeying the pairwise
commuting flows

    d lambda / d s_m = B_{2m}/(2m)! (hbar D_m + L_m) lambda,
    D_m = (1/2) sum_{k+l=2m-2} (-1)^k d_{Q_k} d_{Q_l},
    L_m = d_{Q_{2m}} - sum_{k>=0} Q_k d_{Q_{k+2m-1}},

with B_{2m} the Bernoulli numbers and lambda|_{s=0} = tau.
``hodge_lambda`` applies the truncated exponential of the flows to the
tau series and returns log lambda.

The same flows integrate in closed form.  Writing a_k = B_{2k} s_k/(2k)!
and Q(z) = sum Q_k z^k, define a symmetric propagator v and a triangular
change of couplings Q -> Qtilde by

    1/(z+w) + sum v_kl (-z)^k (-w)^l
        = exp{sum a_k (z^{2k-1} + w^{2k-1})} / (z+w),
    z + Qtilde(-z) = [z + Q(-z)] exp{sum a_k z^{2k-1}}.

Then with P = (1/2) sum v_kl d_{Q_k} d_{Q_l},

    lambda(hbar; Q; s) = [exp(hbar P) tau](Qtilde).

``lemma_components`` computes (v, Qtilde) for numeric a, and
``hodge_lemma_residual`` checks the identity coefficient by coefficient
as an equality of truncated series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .intersection import IntersectionTable, _ascending_tuples, psi_intersection
from .rmatrix import bernoulli_numbers
from .series import Caps, TruncatedSeries, singular_quotient

__all__ = [
    "HodgeParameters",
    "HodgeTruncation",
    "LinearForm",
    "tau_series",
    "hodge_lambda",
    "lemma_components",
    "hodge_lemma_residual",
]

_TOO_SMALL = "truncation too small to represent a requested coefficient"


@dataclass(frozen=True)
class HodgeParameters:
    """Retained degrees of the deformation couplings s_1 .. s_M.

    ``degrees[m-1]`` caps the power of s_m kept in the output.  A
    coupling of degree zero is carried as a variable but never flowed.
    """

    degrees: Tuple[int, ...]

    def __post_init__(self) -> None:
        if any(d < 0 for d in self.degrees):
            raise ValueError("coupling degrees must be nonnegative")

    @property
    def count(self) -> int:
        return len(self.degrees)

    @property
    def total(self) -> int:
        return sum(self.degrees)

    @property
    def index_shift(self) -> int:
        # largest upward coupling-index shift the flows can perform:
        # each power of s_m moves an index by 2m-1
        return sum(d * (2 * m - 1) for m, d in enumerate(self.degrees, start=1))


@dataclass(frozen=True)
class HodgeTruncation:
    """Output window: maximal genus, total Q-degree, largest index.

    Genus g terms carry hbar^{g-1}.  ``q_index`` bounds the couplings
    Q_0 .. Q_{q_index}; left unset it defaults to the dimension bound
    3*genus_max - 3 + q_degree, past which every correlator in the
    window vanishes.
    """

    genus_max: int
    q_degree: int
    q_index: Optional[int] = None

    def __post_init__(self) -> None:
        if self.genus_max < 0 or self.q_degree < 0:
            raise ValueError("truncation orders must be nonnegative")
        if self.q_index is not None and self.q_index < 0:
            raise ValueError("truncation orders must be nonnegative")

    @property
    def resolved_index(self) -> int:
        if self.q_index is not None:
            return self.q_index
        return max(3 * self.genus_max - 3 + self.q_degree, 0)


@dataclass(frozen=True)
class LinearForm:
    """constant + sum_j coeffs[j] * Q_j."""

    constant: object
    coeffs: Tuple[object, ...]


# -- rings ------------------------------------------------------------------


def _q_names(q_index: int) -> Tuple[str, ...]:
    return tuple(f"Q{k}" for k in range(q_index + 1))


def _s_names(count: int) -> Tuple[str, ...]:
    return tuple(f"s{m}" for m in range(1, count + 1))


def _ring(genus_max: int, q_degree: int, q_index: int,
          s_degrees: Sequence[int], h_floor: int = -1) -> Caps:
    qn = _q_names(q_index)
    sn = _s_names(len(s_degrees))
    maxs: Dict[str, Optional[int]] = {"h": genus_max - 1}
    maxs.update({nm: d for nm, d in zip(sn, s_degrees)})
    return Caps.box(
        ("h",) + qn + sn,
        maxs=maxs,
        mins={"h": h_floor},
        weighted=[({nm: 1 for nm in qn}, q_degree)],
    )


def _coupling_factors(count: int) -> List[Fraction]:
    """a_m / s_m = B_{2m}/(2m)! for m = 1 .. count."""
    bern = bernoulli_numbers(2 * count)
    return [bern[2 * m] / Fraction(math.factorial(2 * m)) for m in range(1, count + 1)]


# -- tau --------------------------------------------------------------------


def _log_tau(caps: Caps, genus_max: int, q_degree: int, q_index: int,
             table: Optional[IntersectionTable]) -> TruncatedSeries:
    n_s = len(caps.names) - q_index - 2
    coeffs: Dict[Tuple[int, ...], Fraction] = {}
    for g in range(genus_max + 1):
        for n in range(1, q_degree + 1):
            total = 3 * g - 3 + n
            if total < 0:
                continue
            for ks in _ascending_tuples(n, total, 0):
                if ks[-1] > q_index:
                    continue
                val = psi_intersection(g, ks, table)
                if not val:
                    continue
                # an ascending tuple stands for n!/prod(mult!) orderings
                run = 1
                for i in range(1, n):
                    run = run + 1 if ks[i] == ks[i - 1] else 1
                    val /= run
                exps = [0] * (q_index + 1)
                for k in ks:
                    exps[k] += 1
                key = (g - 1,) + tuple(exps) + (0,) * n_s
                coeffs[key] = coeffs.get(key, Fraction(0)) + val
    return TruncatedSeries(caps, coeffs)


def tau_series(truncation: HodgeTruncation,
               table: Optional[IntersectionTable] = None) -> TruncatedSeries:
    """log tau over the variables ("h", "Q0", .., "QK").

    Genus g enters as h^(g-1); the genus-zero part is the h^(-1) band.
    """
    caps = _ring(truncation.genus_max, truncation.q_degree, truncation.resolved_index, ())
    return _log_tau(caps, truncation.genus_max, truncation.q_degree,
                    truncation.resolved_index, table)


# -- the flows ---------------------------------------------------------------


def _flow(series: TruncatedSeries, m: int) -> TruncatedSeries:
    """(hbar D_m + L_m) applied over the ring of ``series``."""
    caps = series.caps
    q_index = sum(1 for nm in caps.names if nm[0] == "Q") - 1
    if 2 * m > q_index:
        raise ValueError(_TOO_SMALL)
    hvar = TruncatedSeries.var(caps, "h")
    out = TruncatedSeries.zero(caps)
    for k in range(2 * m - 1):
        l = 2 * m - 2 - k
        if l > q_index or k > q_index:
            continue
        term = series.partial(f"Q{k}").partial(f"Q{l}")
        if term:
            out = out + (hvar * term).scale(Fraction(1 if k % 2 == 0 else -1, 2))
    out = out + series.partial(f"Q{2 * m}")
    for k in range(q_index - 2 * m + 2):
        term = series.partial(f"Q{k + 2 * m - 1}")
        if term:
            out = out - TruncatedSeries.var(caps, f"Q{k}") * term
    return out


def _fold_flows(tau: TruncatedSeries, s: HodgeParameters,
                flow_order: Optional[Sequence[int]]) -> TruncatedSeries:
    order = tuple(flow_order) if flow_order is not None else tuple(range(1, s.count + 1))
    if sorted(order) != list(range(1, s.count + 1)):
        raise ValueError("flow_order must be a permutation of 1..M")
    factors = _coupling_factors(s.count)
    lam = tau
    for m in order:
        svar = TruncatedSeries.var(tau.caps, f"s{m}", coeff=factors[m - 1])
        term = lam
        for j in range(1, s.degrees[m - 1] + 1):
            term = (svar * _flow(term, m)).scale(Fraction(1, j))
            if not term:
                break
            lam = lam + term
    return lam


def _internal_truncation(s: HodgeParameters, truncation: HodgeTruncation) -> HodgeTruncation:
    # each flow application lowers Q-degree by at most two and reads
    # indices at most 2m-1 above the window, so enlarging by the total
    # coupling budget makes every window coefficient exact
    idx = max(truncation.resolved_index + s.index_shift, 2 * s.count)
    return HodgeTruncation(truncation.genus_max, truncation.q_degree + 2 * s.total, idx)


def _window(series: TruncatedSeries, s: HodgeParameters,
            truncation: HodgeTruncation) -> TruncatedSeries:
    caps = _ring(truncation.genus_max, truncation.q_degree, truncation.resolved_index,
                 s.degrees)
    pos = {nm: i for i, nm in enumerate(series.caps.names)}
    sel = [pos[nm] for nm in caps.names]
    drop = [i for i, nm in enumerate(series.caps.names) if nm not in set(caps.names)]
    kept = {}
    for key, v in series.c.items():
        if any(key[i] for i in drop):
            continue
        kept[tuple(key[i] for i in sel)] = v
    return TruncatedSeries(caps, kept)


def _lambda_window(s: HodgeParameters, truncation: HodgeTruncation,
                   table: Optional[IntersectionTable],
                   internal: Optional[HodgeTruncation],
                   flow_order: Optional[Sequence[int]]) -> TruncatedSeries:
    need = _internal_truncation(s, truncation)
    if internal is None:
        internal = need
    elif (internal.genus_max < need.genus_max
          or internal.q_degree < need.q_degree
          or internal.resolved_index < need.resolved_index):
        raise ValueError(_TOO_SMALL)
    caps = _ring(internal.genus_max, internal.q_degree, internal.resolved_index,
                 s.degrees, h_floor=-1 - s.total)
    tau = _log_tau(caps, internal.genus_max, internal.q_degree,
                   internal.resolved_index, table).exp()
    return _window(_fold_flows(tau, s, flow_order), s, truncation)


def hodge_lambda(s: HodgeParameters, truncation: HodgeTruncation,
                 table: Optional[IntersectionTable] = None, *,
                 internal: Optional[HodgeTruncation] = None,
                 flow_order: Optional[Sequence[int]] = None) -> TruncatedSeries:
    """log lambda over ("h", "Q0", .., "QK", "s1", .., "sM").

    The flows are integrated at an internally enlarged truncation so
    that every coefficient inside the requested window is exact; pass
    ``internal`` to override the enlargement (it must dominate the
    derived minimum).  ``flow_order`` reorders the per-coupling
    exponentials; the result is order-independent because the flow
    operators commute.
    """
    return _lambda_window(s, truncation, table, internal, flow_order).log()


# -- closed form -------------------------------------------------------------


def _propagator_pieces(exponent_z: TruncatedSeries, exponent_w: TruncatedSeries,
                       zname: str, wname: str):
    """Quotient series behind v and the coupling-change coefficients.

    Returns (quotient, e) with quotient = (E(z)E(w) - 1)/(z + w) and
    e the expansion of E(z) = exp(exponent_z).
    """
    e_z = exponent_z.exp()
    e_w = exponent_w.exp()
    quotient, _ = singular_quotient(e_z * e_w - 1, zname, wname)
    return quotient, e_z


def lemma_components(a: Sequence, *, q_index: int, v_total: int):
    """Propagator table v_kl and coupling forms Qtilde_k for numeric a.

    ``a`` lists a_1, a_2, ..; entry a_k multiplies z^(2k-1) in the
    exponent.  Returns (v, forms): ``v`` maps (k, l) with k + l <=
    v_total to the nonzero v_kl, and ``forms[k]`` is the linear form
    Qtilde_k = constant + sum_j coeffs[j] Q_j for k <= q_index.  The
    (z, w) expansion is carried one order past ``v_total`` so every
    returned entry is exact.
    """
    if q_index < 0 or v_total < 0:
        raise ValueError("truncation orders must be nonnegative")
    zcap = max(v_total + 1, q_index)
    ring = Caps.box(("z", "w"), maxs={"z": zcap, "w": zcap})

    def exponent(name: str) -> TruncatedSeries:
        out = TruncatedSeries.zero(ring)
        for k, ak in enumerate(a, start=1):
            if 2 * k - 1 <= zcap and (ak or ak != 0):
                out = out + TruncatedSeries.var(ring, name, exponent=2 * k - 1, coeff=ak)
        return out

    quotient, e_z = _propagator_pieces(exponent("z"), exponent("w"), "z", "w")
    zi, wi = ring.index("z"), ring.index("w")
    v = {}
    for key, val in quotient.c.items():
        k, l = key[zi], key[wi]
        if k + l <= v_total:
            v[(k, l)] = val if (k + l) % 2 == 0 else -val

    e = [e_z.c.get(tuple(m if i == zi else 0 for i in range(2)), Fraction(0))
         for m in range(q_index + 1)]
    forms = []
    for k in range(q_index + 1):
        sk = 1 if k % 2 == 0 else -1
        const = sk * ((e[k - 1] if k >= 1 else Fraction(0)) - (1 if k == 1 else 0))
        coeffs = tuple(sk * (1 if j % 2 == 0 else -1) * e[k - j] for j in range(k + 1))
        forms.append(LinearForm(const, coeffs))
    return v, tuple(forms)


def _symbolic_pieces(s: HodgeParameters, q_index: int):
    """v and Qtilde with the couplings a_k = B_{2k} s_k/(2k)! kept symbolic.

    Inside the multilinear s-window the exponential E(z) is an exact
    polynomial, so the propagator quotient divides with zero remainder.
    Entries come back as dicts over s-exponent keys.
    """
    zcap = s.index_shift
    sn = _s_names(s.count)
    ring = Caps.box(("z", "w") + sn,
                    maxs={"z": zcap, "w": zcap, **{nm: d for nm, d in zip(sn, s.degrees)}})
    factors = _coupling_factors(s.count)

    def exponent(name: str) -> TruncatedSeries:
        out = TruncatedSeries.zero(ring)
        for m in range(1, s.count + 1):
            if 2 * m - 1 > zcap:
                continue
            key = tuple(2 * m - 1 if nm == name else (1 if nm == f"s{m}" else 0)
                        for nm in ring.names)
            out = out + TruncatedSeries(ring, {key: factors[m - 1]})
        return out

    quotient, e_z = _propagator_pieces(exponent("z"), exponent("w"), "z", "w")
    zi, wi = ring.index("z"), ring.index("w")

    v: Dict[Tuple[int, int], Dict[Tuple[int, ...], Fraction]] = {}
    for key, val in quotient.c.items():
        k, l = key[zi], key[wi]
        skey = key[2:]
        v.setdefault((k, l), {})[skey] = val if (k + l) % 2 == 0 else -val

    e: List[Dict[Tuple[int, ...], Fraction]] = [dict() for _ in range(zcap + 1)]
    for key, val in e_z.c.items():
        e[key[zi]][key[2:]] = val

    consts: List[Dict[Tuple[int, ...], Fraction]] = []
    matrix: List[List[Dict[Tuple[int, ...], Fraction]]] = []
    zero_s = (0,) * s.count
    for k in range(q_index + 1):
        sk = 1 if k % 2 == 0 else -1
        const = {}
        if 1 <= k <= zcap + 1:
            const = {sq: sk * val for sq, val in e[k - 1].items()}
        if k == 1:
            base = const.get(zero_s, Fraction(0)) - sk
            const = dict(const)
            if base:
                const[zero_s] = base
            else:
                const.pop(zero_s, None)
        row = []
        for j in range(k + 1):
            sj = sk * (1 if j % 2 == 0 else -1)
            row.append({sq: sj * val for sq, val in e[k - j].items()} if k - j <= zcap else {})
        consts.append(const)
        matrix.append(row)
    return v, consts, matrix


def _lift(caps: Caps, sdict: Dict[Tuple[int, ...], Fraction],
          n_q: int, extra_q: Optional[int] = None) -> TruncatedSeries:
    """Embed an s-exponent dict into the big ring, optionally times Q_k."""
    coeffs = {}
    for skey, val in sdict.items():
        q_part = [0] * n_q
        if extra_q is not None:
            q_part[extra_q] = 1
        coeffs[(0,) + tuple(q_part) + skey] = val
    return TruncatedSeries(caps, coeffs)


def _product_side(tau: TruncatedSeries, s: HodgeParameters, q_index: int) -> TruncatedSeries:
    """[exp(hbar P) tau](Qtilde) over the ring of ``tau``."""
    caps = tau.caps
    n_q = q_index + 1
    v, consts, matrix = _symbolic_pieces(s, q_index)
    hvar = TruncatedSeries.var(caps, "h")
    acc = tau
    layer = tau
    j = 0
    while layer:
        j += 1
        nxt = TruncatedSeries.zero(caps)
        for (k, l), sdict in v.items():
            if k > q_index or l > q_index:
                continue
            term = layer.partial(f"Q{k}").partial(f"Q{l}")
            if term:
                nxt = nxt + term * _lift(caps, sdict, n_q)
        layer = (hvar * nxt).scale(Fraction(1, 2 * j))
        acc = acc + layer
    forms = []
    for k in range(n_q):
        form = _lift(caps, consts[k], n_q)
        for jq in range(k + 1):
            form = form + _lift(caps, matrix[k][jq], n_q, extra_q=jq)
        forms.append(form)
    return _substitute_q(acc, forms, n_q)


def _substitute_q(series: TruncatedSeries, forms: List[TruncatedSeries],
                  n_q: int) -> TruncatedSeries:
    """Replace Q_k -> forms[k]; the h and s exponents ride along.

    The generic substitution would invert h on the negative powers of
    the genus grading, so the carried variables are handled as monomial
    prefactors instead.
    """
    caps = series.caps
    cache: List[Dict[int, TruncatedSeries]] = [dict() for _ in range(n_q)]

    def power(k: int, j: int) -> TruncatedSeries:
        got = cache[k].get(j)
        if got is None:
            got = forms[k] ** j
            cache[k][j] = got
        return got

    out: Dict[Tuple[int, ...], object] = {}

    def add(key, val):
        if caps.keep(key):
            w = out.get(key, 0) + val
            if w or w != 0:
                out[key] = w
            elif key in out:
                del out[key]

    for key, val in series.c.items():
        prefix = (key[0],) + (0,) * n_q + key[1 + n_q:]
        prod = None
        for k in range(n_q):
            e = key[1 + k]
            if e:
                p = power(k, e)
                prod = p if prod is None else prod * p
        if prod is None:
            add(prefix, val)
            continue
        for pkey, pval in prod.c.items():
            add(tuple(a + b for a, b in zip(prefix, pkey)), val * pval)
    return TruncatedSeries(caps, out)


def hodge_lemma_residual(s: HodgeParameters, truncation: HodgeTruncation,
                         table: Optional[IntersectionTable] = None) -> TruncatedSeries:
    """Flowed lambda minus its closed-form reconstruction, on the window.

    Identically zero: both sides solve the same flow equations with the
    same initial condition.  Computed with exact rational arithmetic, so
    the residual series has an empty coefficient dict when the identity
    holds.
    """
    internal = _internal_truncation(s, truncation)
    caps = _ring(internal.genus_max, internal.q_degree, internal.resolved_index,
                 s.degrees, h_floor=-1 - s.total)
    tau = _log_tau(caps, internal.genus_max, internal.q_degree,
                   internal.resolved_index, table).exp()
    lhs = _window(_fold_flows(tau, s, None), s, truncation)
    rhs = _window(_product_side(tau, s, internal.resolved_index), s, truncation)
    return lhs - rhs
