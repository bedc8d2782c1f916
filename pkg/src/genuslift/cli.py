"""Command-line front end.

Subcommands mirror the pipeline stages: ``validate`` checks a model
document, ``frame`` dumps canonical coordinates and frames, ``rmatrix`` and
``edges`` expose the R-matrix and its edge/tail tables, ``genus`` runs the
stable-graph sum against the operator-exponential oracle, ``genus1-diff``
evaluates the genus-1 one-form, ``descendent`` evaluates a higher-genus
descendent potential at a curve-space point, ``wk`` queries psi-class
intersection numbers, ``hodge-lemma`` verifies the flow/closed-form
identity, and ``selftest`` runs a fixed battery of cross-checks.

Exit codes: 0 on success, 1 on validation failure (bad flags, malformed
documents, out-of-domain requests), 2 on numerical failure (non-convergence
or an internal residual above tolerance).  Reports are byte-stable at fixed
configuration: every table is emitted with sorted keys and floats are
printed at the configured precision.

The default precision (in bits) can be set through the environment
variable ``GENUSLIFT_PRECISION``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .descendent import (
    compute_calibration,
    descendent_frame,
    descendent_potential,
    point_descendent_reference,
)
from .frame import canonical_frame
from .frobenius import FrobeniusModel, point_model, threefold_cusp_model, two_primary_model
from .genus import genus1_closedness_residual, genus1_one_form, genus_potential, wick_oracle
from .hodge import HodgeParameters, HodgeTruncation, hodge_lemma_residual
from .intersection import IntersectionTable, psi_intersection
from .io import (
    RunConfig,
    SchemaError,
    edge_data_to_json,
    frame_to_json,
    format_value,
    parse_model,
    parse_tau,
    precision_annotation,
    render_report,
    rseries_to_json,
)
from .rmatrix import compute_R, edge_tail_data, twist_R, unitarity_residual
from .scalars import FloatContext, Rational, format_rational

PRECISION_ENV = "GENUSLIFT_PRECISION"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of calling sys.exit, so usage mistakes
    map onto the validation exit code."""

    def error(self, message):
        raise _UsageError(message)


# -- argument parsing helpers ---------------------------------------------------


def _parse_rationals(text: str, what: str) -> tuple:
    try:
        return tuple(Fraction(part.strip()) for part in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise SchemaError(f"{what} must be a comma-separated list of rationals: {text!r}")


def _parse_ints(text: str, what: str) -> tuple:
    try:
        return tuple(int(part.strip()) for part in text.split(","))
    except ValueError:
        raise SchemaError(f"{what} must be a comma-separated list of integers: {text!r}")


def _parse_gauge(text: str) -> tuple:
    try:
        rows = json.loads(text)
        return tuple(tuple(Fraction(str(a)) for a in row) for row in rows)
    except (ValueError, TypeError, ZeroDivisionError):
        raise SchemaError(f"gauge must be a JSON array of arrays of rationals: {text!r}")


def _load_model(spec: str, tolerance: Rational) -> FrobeniusModel:
    """A built-in name ("point", "two-primary:d=1/3[:c=1]", "threefold-cusp")
    or a path to a model document."""
    if spec == "point":
        return point_model()
    if spec == "threefold-cusp":
        return threefold_cusp_model()
    if spec.startswith("two-primary"):
        d, c = None, Fraction(1)
        for part in spec.split(":")[1:]:
            key, _, value = part.partition("=")
            if key == "d":
                d = Fraction(value)
            elif key == "c":
                c = Fraction(value)
            else:
                raise SchemaError(f"unknown two-primary option {key!r}")
        if d is None:
            raise SchemaError("two-primary needs d, e.g. two-primary:d=1/3")
        try:
            return two_primary_model(d, c)
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
    path = Path(spec)
    if not path.exists():
        raise SchemaError(f"model {spec!r} is neither a built-in name nor a file")
    return parse_model(path.read_text(), tolerance=tolerance)


def _load_tau(spec: str):
    if spec.lstrip().startswith("{"):
        return parse_tau(spec)
    path = Path(spec)
    if not path.exists():
        raise SchemaError(f"curve point {spec!r} is neither inline JSON nor a file")
    return parse_tau(path.read_text())


def _point(args, model: FrobeniusModel) -> tuple:
    pt = _parse_rationals(args.point, "point")
    if len(pt) != model.dimension:
        raise SchemaError(
            f"point has {len(pt)} coordinates, model has dimension {model.dimension}"
        )
    return pt


def _config(args, genus: Optional[int] = None) -> RunConfig:
    precision = args.precision
    if precision is None:
        env = os.environ.get(PRECISION_ENV)
        try:
            precision = int(env) if env else 256
        except ValueError:
            raise SchemaError(f"{PRECISION_ENV} must be an integer, not {env!r}")
    try:
        tolerance = Fraction(args.tolerance)
    except (ValueError, ZeroDivisionError):
        raise SchemaError(f"tolerance must be rational or decimal: {args.tolerance!r}")
    try:
        return RunConfig(
            precision_bits=precision,
            tolerance=tolerance,
            truncation=getattr(args, "truncation", None),
            genus=genus,
            gauge=_parse_gauge(args.gauge) if getattr(args, "gauge", None) else None,
            anchors=_parse_rationals(args.anchors, "anchors")
            if getattr(args, "anchors", None)
            else None,
            output=args.format,
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def _breach(ctx: FloatContext, *residuals) -> bool:
    with ctx.guard():
        for r in residuals:
            if r is not None and ctx.abs(r) > ctx.tol:
                return True
    return False


# -- subcommand handlers ----------------------------------------------------------
# each returns (exit code, report text)


def _cmd_validate(args):
    config = _config(args)
    model = _load_model(args.model, config.tolerance)
    origin = (Fraction(0),) * model.dimension
    try:
        residual = format_rational(model.unit_residual(origin, None))
    except (ArithmeticError, ValueError):
        residual = "skipped: origin outside the domain"
    doc = {
        "name": model.name,
        "dimension": model.dimension,
        "unit_index": model.unit_index,
        "conformal": model.euler is not None,
        "parameters": {k: format_rational(v) for k, v in sorted(model.parameters.items())},
        "unit_residual": residual,
    }
    return EXIT_OK, render_report(doc, config.output)


def _cmd_frame(args):
    config = _config(args)
    ctx = config.context()
    model = _load_model(args.model, config.tolerance)
    frame = canonical_frame(
        model,
        _point(args, model),
        ctx,
        order=args.order,
        permutation=_parse_ints(args.permutation, "permutation") if args.permutation else None,
        sign_flips=_parse_ints(args.sign_flips, "sign flips") if args.sign_flips else None,
        anchors=config.anchors,
    )
    return EXIT_OK, render_report(frame_to_json(frame), config.output)


def _r_series(args, config, ctx):
    model = _load_model(args.model, config.tolerance)
    order = (config.truncation or 4) - 1
    frame = canonical_frame(model, _point(args, model), ctx, order=order)
    r = compute_R(frame, order, mode=args.mode)
    if config.gauge is not None:
        r = twist_R(r, config.gauge)
    return r


def _cmd_rmatrix(args):
    config = _config(args)
    ctx = config.context()
    r = _r_series(args, config, ctx)
    unitarity = unitarity_residual(r)
    doc = rseries_to_json(r, ctx)
    doc["unitarity_residual"] = format_value(unitarity, ctx)
    code = EXIT_NUMERICAL if _breach(ctx, unitarity, r.cross_residual) else EXIT_OK
    return code, render_report(doc, config.output)


def _cmd_edges(args):
    config = _config(args)
    ctx = config.context()
    r = _r_series(args, config, ctx)
    data = edge_tail_data(r)
    doc = edge_data_to_json(data, ctx)
    code = EXIT_NUMERICAL if _breach(ctx, *data.residuals.values()) else EXIT_OK
    return code, render_report(doc, config.output)


def _cmd_genus(args):
    config = _config(args, genus=args.g)
    if args.g < 2:
        raise SchemaError("the graph sum starts at genus 2; use genus1-diff below that")
    ctx = config.context()
    model = _load_model(args.model, config.tolerance)
    point = _point(args, model)
    table = IntersectionTable()
    report = genus_potential(
        model, point, args.g, ctx, order=config.r_order, mode=args.mode, gauge=config.gauge
    )
    oracle = wick_oracle(report.data, args.g, table, ctx)
    with ctx.guard():
        residual = ctx.abs(report.value - oracle)
    doc = {
        "precision": precision_annotation(ctx),
        "genus": args.g,
        "point": [format_rational(x) for x in point],
        "F_g": format_value(ctx.chop(report.value), ctx),
        "graphs": {
            k: format_value(ctx.chop(v), ctx)
            for k, v in sorted(report.contribution_map().items())
        },
        "oracle": format_value(ctx.chop(oracle), ctx),
        "residual": format_value(residual, ctx),
    }
    code = EXIT_NUMERICAL if _breach(ctx, residual) else EXIT_OK
    return code, render_report(doc, config.output)


def _cmd_genus1_diff(args):
    config = _config(args)
    ctx = config.context()
    model = _load_model(args.model, config.tolerance)
    point = _point(args, model)
    components = genus1_one_form(model, point, ctx)
    doc = {
        "precision": precision_annotation(ctx),
        "point": [format_rational(x) for x in point],
        "components": [format_value(c, ctx) for c in components],
    }
    code = EXIT_OK
    if args.closedness:
        residual = genus1_closedness_residual(model, point, ctx, step=Fraction(args.step))
        doc["closedness_residual"] = format_value(residual, ctx)
        doc["closedness_step"] = format_rational(Fraction(args.step))
        if args.closedness_tol is not None and _breach_value(ctx, residual, args.closedness_tol):
            code = EXIT_NUMERICAL
    return code, render_report(doc, config.output)


def _breach_value(ctx: FloatContext, residual, tol_text: str) -> bool:
    tol = Fraction(tol_text)
    with ctx.guard():
        return ctx.abs(residual) > ctx.num(tol)


def _cmd_descendent(args):
    config = _config(args, genus=args.g)
    if args.g < 2:
        raise SchemaError("the descendent graph sum starts at genus 2")
    ctx = config.context()
    model = _load_model(args.model, config.tolerance)
    tau = _load_tau(args.tau)
    if tau.dimension != model.dimension:
        raise SchemaError(
            f"curve point has dimension {tau.dimension}, model has {model.dimension}"
        )
    cal_order = args.calibration_order or 2 * max(tau.kmax, 1) + 1
    calibration = compute_calibration(model, order=cal_order)
    frame_data = descendent_frame(
        model, calibration, tau, ctx, order=config.r_order, gauge=config.gauge
    )
    report = descendent_potential(
        model, calibration, tau, args.g, ctx, order=config.r_order, frame_data=frame_data
    )
    doc = {
        "precision": precision_annotation(ctx),
        "genus": args.g,
        "Kmax": tau.kmax,
        "critical_point": [format_value(ctx.chop(x), ctx) for x in frame_data.critical],
        "criticality_residual": format_value(frame_data.criticality_residual, ctx),
        "F_g": format_value(ctx.chop(report.value), ctx),
        "graphs": {
            k: format_value(ctx.chop(v), ctx)
            for k, v in sorted(report.contribution_map().items())
        },
        "residuals": {
            k: format_value(v, ctx) for k, v in sorted(frame_data.residuals.items())
        },
    }
    breach = _breach(ctx, frame_data.criticality_residual, *frame_data.residuals.values())
    if model.dimension == 1:
        oracle = point_descendent_reference(tau, args.g, ctx, max_points=args.oracle_points)
        with ctx.guard():
            residual = ctx.abs(report.value - oracle)
        doc["oracle"] = format_value(oracle, ctx)
        doc["residual"] = format_value(residual, ctx)
    return (EXIT_NUMERICAL if breach else EXIT_OK), render_report(doc, config.output)


def _ascending(count: int, total: int, minimum: int = 0):
    if count == 0:
        if total == 0:
            yield ()
        return
    for first in range(minimum, total + 1):
        if first * count > total:
            break
        for rest in _ascending(count - 1, total - first, first):
            yield (first,) + rest


def _cmd_wk(args):
    config = _config(args)
    table = IntersectionTable()
    if args.indices is not None:
        ks = _parse_ints(args.indices, "indices")
        if any(k < 0 for k in ks):
            raise SchemaError("psi exponents must be nonnegative")
        value = psi_intersection(args.g, ks, table)
        if config.output == "text":
            return EXIT_OK, format_rational(value) + "\n"
        doc = {
            "genus": args.g,
            "indices": list(ks),
            "value": format_rational(value),
        }
        return EXIT_OK, render_report(doc, "json")
    if args.n is None:
        raise SchemaError("wk needs --indices for one correlator or --n for a table slice")
    if args.n < 1:
        raise SchemaError("a table slice needs at least one insertion")
    total = 3 * args.g - 3 + args.n
    if total < 0:
        raise SchemaError(f"genus {args.g} with {args.n} insertions has no stable moduli")
    values = {}
    for ks in _ascending(args.n, total):
        if sum(ks) == total:
            values[",".join(str(k) for k in ks)] = format_rational(
                psi_intersection(args.g, ks, table)
            )
    doc = {"genus": args.g, "insertions": args.n, "dimension": total, "values": values}
    return EXIT_OK, render_report(doc, config.output)


def _cmd_hodge_lemma(args):
    config = _config(args)
    degrees = _parse_ints(args.degrees, "degrees")
    s = HodgeParameters(degrees)
    truncation = HodgeTruncation(args.genus_max, args.q_degree, args.q_index)
    residual = hodge_lemma_residual(s, truncation)
    worst = max((abs(v) for v in residual.c.values()), default=Fraction(0))
    doc = {
        "degrees": list(degrees),
        "genus_max": args.genus_max,
        "q_degree": args.q_degree,
        "q_index": truncation.resolved_index,
        "residual_terms": len(residual.c),
        "residual_max": format_rational(worst),
    }
    code = EXIT_NUMERICAL if residual.c else EXIT_OK
    return code, render_report(doc, config.output)


# -- selftest ----------------------------------------------------------------------


def _selftest_checks(ctx: FloatContext):
    """Fixed cross-check battery; yields (name, residual-or-None, detail).

    A check passes when its residual is at most ctx.tol (None means the
    check is exact and already verified)."""
    table = IntersectionTable()

    value = psi_intersection(1, (1,), table)
    yield (
        "psi-intersection-anchor",
        None if value == Fraction(1, 24) else Fraction(1),
        f"<tau_1>_1 = {format_rational(value)}",
    )

    psi_intersection(3, (1, 1, 7), table)  # populate through genus 3
    failures = table.identity_failures()
    yield (
        "string-dilaton-identities",
        None if not failures else Fraction(1),
        f"{len(failures)} failures over {len(table)} entries",
    )

    model = two_primary_model(Fraction(1, 3))
    point = (Fraction(0), Fraction(1))
    report = genus_potential(model, point, 2, ctx)
    with ctx.guard():
        yield ("genus2-vanishing-d-one-third", ctx.abs(report.value), "F^2 on the d=1/3 model")
        oracle = wick_oracle(report.data, 2, table, ctx)
        yield (
            "graph-sum-vs-operator-oracle",
            ctx.abs(report.value - oracle),
            "genus 2, two-primary d=1/3",
        )
        unit = unitarity_residual(compute_R(canonical_frame(model, point, ctx, order=5), 5))
    yield ("r-matrix-unitarity", unit, "two-primary d=1/3, order 5")

    from .descendent import CurvePoint  # local import keeps module load light

    tau = CurvePoint(((Fraction(0),), (Fraction(0),), (Fraction(1, 8),)))
    calibration = compute_calibration(point_model(), order=7)
    direct = point_descendent_reference(tau, 2, ctx)
    dreport = descendent_potential(point_model(), calibration, tau, 2, ctx)
    with ctx.guard():
        yield (
            "descendent-vs-direct-sum",
            ctx.abs(dreport.value - direct),
            "one-dimensional model, genus 2",
        )

    residual = hodge_lemma_residual(HodgeParameters((1,)), HodgeTruncation(2, 1))
    yield (
        "hodge-lemma-window",
        None if not residual.c else Fraction(1),
        f"{len(residual.c)} residual terms",
    )


def _cmd_selftest(args):
    config = _config(args)
    ctx = config.context()
    lines = []
    checks = {}
    failed = 0
    for name, residual, detail in _selftest_checks(ctx):
        if residual is None:
            ok = True
            shown = "exact"
        else:
            with ctx.guard():
                ok = ctx.abs(residual) <= ctx.tol
            shown = format_value(residual, ctx)
        checks[name] = {"passed": ok, "residual": shown, "detail": detail}
        failed += 0 if ok else 1
        lines.append(f"{'ok' if ok else 'FAIL'} {name} ({shown}) {detail}")
    code = EXIT_OK if failed == 0 else EXIT_NUMERICAL
    if config.output == "json":
        doc = {"checks": checks, "passed": failed == 0}
        return code, render_report(doc, "json")
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    return code, "\n".join(lines) + "\n"


# -- parser -------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="genuslift", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=None,
                        help=f"mantissa bits (default: ${PRECISION_ENV} or 256)")
    common.add_argument("--tolerance", default="1e-30",
                        help="residual tolerance, rational or decimal")
    common.add_argument("--format", choices=("json", "text"), default="text",
                        help="report format")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, parents=(common,)):
        p = sub.add_parser(name, parents=list(parents), help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = add("validate", _cmd_validate, "validate a model document")
    p.add_argument("--model", required=True)

    p = add("frame", _cmd_frame, "canonical coordinates and frame at a point")
    p.add_argument("--model", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--order", type=int, default=0, help="jet order")
    p.add_argument("--permutation", default=None, help="branch relabeling, e.g. 1,0")
    p.add_argument("--sign-flips", dest="sign_flips", default=None,
                   help="sqrt(Delta) branch signs, e.g. -1,1")
    p.add_argument("--anchors", default=None,
                   help="integration constants for u on non-conformal models")

    for name, handler, help_text in (
        ("rmatrix", _cmd_rmatrix, "R-matrix constants at a point"),
        ("edges", _cmd_edges, "edge coefficients V and tail values T"),
    ):
        p = add(name, handler, help_text)
        p.add_argument("--model", required=True)
        p.add_argument("--point", required=True)
        p.add_argument("--truncation", type=int, default=None,
                       help="deepest tail index K; R is solved through z^(K-1)")
        p.add_argument("--mode", choices=("conformal", "constants"), default=None)
        p.add_argument("--gauge", default=None, help="JSON rows of odd twist exponents")

    p = add("genus", _cmd_genus, "higher-genus potential by the stable-graph sum")
    p.add_argument("--model", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--truncation", type=int, default=None)
    p.add_argument("--mode", choices=("conformal", "constants"), default=None)
    p.add_argument("--gauge", default=None)

    p = add("genus1-diff", _cmd_genus1_diff, "genus-1 one-form dF^1 at a point")
    p.add_argument("--model", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--closedness", action="store_true",
                   help="also estimate the curl by central differences")
    p.add_argument("--step", default="1/1000000", help="finite-difference step")
    p.add_argument("--closedness-tol", dest="closedness_tol", default=None,
                   help="fail (exit 2) when the curl exceeds this bound")

    p = add("descendent", _cmd_descendent, "descendent potential at a curve-space point")
    p.add_argument("--model", required=True)
    p.add_argument("--tau", required=True, help="curve point document (file or inline JSON)")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--truncation", type=int, default=None)
    p.add_argument("--gauge", default=None)
    p.add_argument("--calibration-order", dest="calibration_order", type=int, default=None)
    p.add_argument("--oracle-points", dest="oracle_points", type=int, default=12,
                   help="insertion cutoff for the one-dimensional reference sum")

    p = add("wk", _cmd_wk, "psi-class intersection numbers")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--indices", default=None, help="psi exponents, e.g. 0,0,1")
    p.add_argument("--n", type=int, default=None,
                   help="dump the full n-insertion slice on the dimension constraint")

    p = add("hodge-lemma", _cmd_hodge_lemma, "flow vs closed-form residual window")
    p.add_argument("--degrees", required=True, help="retained coupling degrees, e.g. 1,1")
    p.add_argument("--genus-max", dest="genus_max", type=int, required=True)
    p.add_argument("--q-degree", dest="q_degree", type=int, required=True)
    p.add_argument("--q-index", dest="q_index", type=int, default=None)

    add("selftest", _cmd_selftest, "run the built-in cross-check battery")
    return parser


def run_command(argv: Sequence[str]) -> tuple:
    """Parse and execute one command; returns (exit code, report text)."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except _UsageError as exc:
        return EXIT_VALIDATION, f"error: {exc}\n"
    try:
        return args.handler(args)
    except (SchemaError, OSError) as exc:
        return EXIT_VALIDATION, f"error: {exc}\n"
    except ValueError as exc:
        return EXIT_VALIDATION, f"error: {exc}\n"
    except ArithmeticError as exc:
        return EXIT_NUMERICAL, f"numerical failure: {exc}\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        code, text = run_command(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    stream = sys.stdout if code == EXIT_OK else sys.stderr
    stream.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
