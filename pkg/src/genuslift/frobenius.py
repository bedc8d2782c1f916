"""Frobenius manifold models: metric, potential, multiplication, axioms.

A model is a constant flat metric ``g`` plus a potential ``F`` whose third
partial derivatives are the structure constants of a commutative associative
multiplication,

    (C_a)^c_b = F_{abm} g^{mc},

with the unit coordinate direction acting as identity.  Optionally the model
carries an affine Euler field ``E = (a t + b) d/dt`` and a conformal
dimension ``D``; conformal models get their canonical coordinates anchored
by eigenvalues of the Euler multiplication instead of by integration
constants.

All axioms (WDVV, unit, Euler homogeneity) are checked pointwise through
residual functions rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from .expressions import Expression, t_names
from .linalg import mat_inv_exact, mat_mul, mat_sub, max_abs_entry, transpose
from .scalars import FloatContext, Rational, format_rational, parse_rational
from .series import Caps, TruncatedSeries


@dataclass
class EulerData:
    """E^a = sum_b matrix[a][b] t^b + shift[a], with conformal dimension D."""

    matrix: List[List[Fraction]]
    shift: List[Fraction]
    conformal_dimension: Fraction

    def components(self, point: Sequence, ctx: FloatContext | None) -> list:
        n = len(self.shift)
        if ctx is None:
            pt = [Fraction(x) for x in point]
            return [
                sum((self.matrix[a][b] * pt[b] for b in range(n)), Fraction(0)) + self.shift[a]
                for a in range(n)
            ]
        with ctx.guard():
            pt = [ctx.num(x) for x in point]
            out = []
            for a in range(n):
                s = ctx.num(self.shift[a])
                for b in range(n):
                    if self.matrix[a][b]:
                        s = s + ctx.num(self.matrix[a][b]) * pt[b]
                out.append(s)
            return out


@dataclass
class FrobeniusModel:
    dimension: int
    metric: List[List[Fraction]]
    potential: Expression
    unit_index: int = 0
    euler: Optional[EulerData] = None
    parameters: Dict[str, Fraction] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        n = self.dimension
        self.metric = [[Fraction(x) for x in row] for row in self.metric]
        if len(self.metric) != n or any(len(r) != n for r in self.metric):
            raise ValueError("metric shape mismatch")
        for i in range(n):
            for j in range(i):
                if self.metric[i][j] != self.metric[j][i]:
                    raise ValueError("metric is not symmetric")
        self.metric_inverse = mat_inv_exact(self.metric)
        self._bound = self.potential.bind(self.parameters) if self.potential.parameters() else self.potential

    # -- jets of third derivatives ---------------------------------------

    def potential_jet(self, point: Sequence, order: int, ctx: FloatContext | None) -> TruncatedSeries:
        return self._bound.jet(point, order, ctx)

    def third_derivative_jets(self, point: Sequence, order: int, ctx: FloatContext | None):
        """F_{abc} as jets of order ``order``; returns nested dict [a][b][c]
        with a <= b <= c (symmetric in all indices)."""
        jet = self._bound.jet(point, order + 3, ctx)
        names = t_names(self.dimension)
        honest = Caps.total(names, order)
        out = {}
        for a in range(self.dimension):
            ja = jet.partial(names[a])
            for b in range(a, self.dimension):
                jab = ja.partial(names[b])
                for c in range(b, self.dimension):
                    # differentiating an order+3 jet three times leaves content
                    # valid exactly to ``order``; prune the stale tail keys
                    out[(a, b, c)] = jab.partial(names[c]).repruned(honest)
        return out

    def third_derivative(self, triple, jets):
        a, b, c = sorted(triple)
        return jets[(a, b, c)]

    # -- multiplication ----------------------------------------------------

    def structure_constant_jets(self, point: Sequence, order: int, ctx: FloatContext | None):
        """List of N matrices of jets: (C_a)[i][j] = F_{a j m} g^{m i}."""
        jets = self.third_derivative_jets(point, order, ctx)
        n = self.dimension
        ginv = self.metric_inverse
        out = []
        for a in range(n):
            mat = []
            for i in range(n):
                row = []
                for j in range(n):
                    acc = None
                    for m in range(n):
                        gmi = ginv[m][i]
                        if gmi == 0:
                            continue
                        term = self.third_derivative((a, j, m), jets).scale(gmi)
                        acc = term if acc is None else acc + term
                    row.append(acc)
                mat.append(row)
            out.append(mat)
        return out

    def structure_constants(self, point: Sequence, ctx: FloatContext | None):
        """Scalar matrices C_a at the point."""
        cjets = self.structure_constant_jets(point, 0, ctx)
        return [[[e.constant_term() for e in row] for row in mat] for mat in cjets]

    # -- axiom residuals -----------------------------------------------------

    def unit_residual(self, point: Sequence, ctx: FloatContext | None):
        jets = self.third_derivative_jets(point, 0, ctx)
        n = self.dimension
        u = self.unit_index
        worst = Fraction(0) if ctx is None else ctx.num(0)
        for b in range(n):
            for c in range(n):
                v = self.third_derivative((u, b, c), jets).constant_term() - self.metric[b][c]
                worst = max(worst, abs(v) if ctx is None else ctx.abs(v))
        return worst

    def wdvv_residual(self, point: Sequence, ctx: FloatContext | None):
        """Max deviation of C_a C_b - C_b C_a over all pairs (equivalent to
        the four-index associativity identity given commutativity of the
        algebra and symmetry of F_{abc})."""
        cs = self.structure_constants(point, ctx)
        worst = Fraction(0) if ctx is None else ctx.num(0)
        for a in range(self.dimension):
            for b in range(a + 1, self.dimension):
                comm = mat_sub(mat_mul(cs[a], cs[b]), mat_mul(cs[b], cs[a]))
                worst = max(worst, max_abs_entry(comm, ctx))
        return worst

    def euler_residual(self, point: Sequence, ctx: FloatContext | None):
        """Pointwise residual of the three Euler axioms: homogeneity of the
        third derivatives, metric scaling, and unit scaling."""
        if self.euler is None:
            raise ValueError("model has no Euler data")
        e = self.euler
        n = self.dimension
        d3 = self.third_derivative_jets(point, 1, ctx)
        evec = e.components(point, ctx)
        factor = Fraction(3) - e.conformal_dimension
        names = t_names(n)
        worst = Fraction(0) if ctx is None else ctx.num(0)

        def absval(x):
            return abs(x) if ctx is None else ctx.abs(x)

        for a in range(n):
            for b in range(n):
                for c in range(n):
                    jet = self.third_derivative((a, b, c), d3)
                    acc = jet.constant_term() * (-factor)
                    for m in range(n):
                        acc = acc + evec[m] * jet.partial(names[m]).constant_term()
                        acc = acc + e.matrix[m][a] * self.third_derivative((m, b, c), d3).constant_term()
                        acc = acc + e.matrix[m][b] * self.third_derivative((a, m, c), d3).constant_term()
                        acc = acc + e.matrix[m][c] * self.third_derivative((a, b, m), d3).constant_term()
                    worst = max(worst, absval(acc))
        # L_E g = (2 - D) g
        for a in range(n):
            for b in range(n):
                acc = -(Fraction(2) - e.conformal_dimension) * self.metric[a][b]
                for m in range(n):
                    acc = acc + e.matrix[m][a] * self.metric[m][b] + e.matrix[m][b] * self.metric[a][m]
                worst = max(worst, absval(acc))
        # unit direction is an eigenvector of weight 1: a^m_unit = delta
        for m in range(n):
            expect = Fraction(1) if m == self.unit_index else Fraction(0)
            worst = max(worst, absval(e.matrix[m][self.unit_index] - expect))
        return worst

    def euler_multiplication(self, point: Sequence, ctx: FloatContext | None):
        """Matrix of multiplication by the Euler field, E dot."""
        cs = self.structure_constants(point, ctx)
        evec = self.euler.components(point, ctx)
        n = self.dimension
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = evec[0] * cs[0][i][j]
                for a in range(1, n):
                    acc = acc + evec[a] * cs[a][i][j]
                out[i][j] = acc
        return out

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        doc = {
            "dimension": self.dimension,
            "metric": [[format_rational(x) for x in row] for row in self.metric],
            "potential": self.potential.to_json(),
            "unit_index": self.unit_index,
        }
        if self.euler is not None:
            doc["euler"] = {
                "matrix": [[format_rational(x) for x in row] for row in self.euler.matrix],
                "shift": [format_rational(x) for x in self.euler.shift],
                "conformal_dimension": format_rational(self.euler.conformal_dimension),
            }
        if self.parameters:
            doc["parameters"] = {k: format_rational(v) for k, v in self.parameters.items()}
        if self.name:
            doc["name"] = self.name
        return doc

    @staticmethod
    def from_json(doc: dict) -> "FrobeniusModel":
        n = int(doc["dimension"])
        metric = [[parse_rational(str(x)) for x in row] for row in doc["metric"]]
        potential = Expression.from_json(doc["potential"], nvars=n)
        euler = None
        if doc.get("euler"):
            ed = doc["euler"]
            euler = EulerData(
                [[parse_rational(str(x)) for x in row] for row in ed["matrix"]],
                [parse_rational(str(x)) for x in ed["shift"]],
                parse_rational(str(ed["conformal_dimension"])),
            )
        params = {k: parse_rational(str(v)) for k, v in doc.get("parameters", {}).items()}
        return FrobeniusModel(
            dimension=n,
            metric=metric,
            potential=potential,
            unit_index=int(doc.get("unit_index", 0)),
            euler=euler,
            parameters=params,
            name=doc.get("name", ""),
        )


# -- built-in models ------------------------------------------------------------


def point_model() -> FrobeniusModel:
    """One-dimensional model: F = t^3/6, g = (1)."""
    return FrobeniusModel(
        dimension=1,
        metric=[[Fraction(1)]],
        potential=Expression.term(1, Fraction(1, 6), mono=(3,)),
        euler=EulerData([[Fraction(1)]], [Fraction(0)], Fraction(0)),
        name="point",
    )


def two_primary_model(d, coefficient=Fraction(1)) -> FrobeniusModel:
    """The conformal family with two flat coordinates and antidiagonal metric.

    For conformal dimension d != 1 the potential is

        F = t0^2 t1 / 2 + c * t1^k,   k = (3 - d) / (1 - d),

    which requires k to be an integer (negative values give Laurent
    potentials, defined away from t1 = 0).  At d = 1 the power degenerates
    to an exponential: F = t0^2 t1 / 2 + c * e^{t1}.
    """
    d = Fraction(d)
    c = Fraction(coefficient)
    if c == 0:
        raise ValueError("coefficient must be nonzero")
    metric = [[Fraction(0), Fraction(1)], [Fraction(1), Fraction(0)]]
    lead = Expression.term(2, Fraction(1, 2), mono=(2, 1))
    if d == 1:
        pot = lead + Expression.term(2, c, expo=(0, 1))
        euler = EulerData(
            [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(0)]],
            [Fraction(0), Fraction(2)],
            Fraction(1),
        )
    else:
        k = (3 - d) / (1 - d)
        if k.denominator != 1:
            raise ValueError(f"dimension d={d} gives non-integer exponent {k}")
        k = int(k)
        if k in (0, 1, 2):
            raise ValueError(f"exponent k={k} gives a degenerate cubic term")
        pot = lead + Expression.term(2, c, mono=(0, k))
        euler = EulerData(
            [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1) - d]],
            [Fraction(0), Fraction(0)],
            d,
        )
    return FrobeniusModel(
        dimension=2,
        metric=metric,
        potential=pot,
        euler=euler,
        name=f"two-primary d={d}",
    )


def threefold_cusp_model() -> FrobeniusModel:
    """Three-dimensional conformal model (unfolding of a fourfold critical
    point): F = t0^2 t2 / 2 + t0 t1^2 / 2 + t1^2 t2^2 / 4 + t2^5 / 60.

    Semisimple away from the discriminant; at the origin the multiplication
    is nilpotent, which makes this the standard error-path fixture.
    """
    pot = (
        Expression.term(3, Fraction(1, 2), mono=(2, 0, 1))
        + Expression.term(3, Fraction(1, 2), mono=(1, 2, 0))
        + Expression.term(3, Fraction(1, 4), mono=(0, 2, 2))
        + Expression.term(3, Fraction(1, 60), mono=(0, 0, 5))
    )
    metric = [
        [Fraction(0), Fraction(0), Fraction(1)],
        [Fraction(0), Fraction(1), Fraction(0)],
        [Fraction(1), Fraction(0), Fraction(0)],
    ]
    euler = EulerData(
        [
            [Fraction(1), Fraction(0), Fraction(0)],
            [Fraction(0), Fraction(3, 4), Fraction(0)],
            [Fraction(0), Fraction(0), Fraction(1, 2)],
        ],
        [Fraction(0)] * 3,
        Fraction(1, 2),
    )
    return FrobeniusModel(
        dimension=3, metric=metric, potential=pot, euler=euler, name="threefold-cusp"
    )
