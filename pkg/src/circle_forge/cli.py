"""Command-line interface.

Every subcommand prints JSON lines to stdout (and appends them to ``--out``).
Exit status: 0 on success, 1 on invalid input, 2 when a work cap refuses a job.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from typing import Callable, Sequence

from . import _caps
from .circle import (build_arcs, classify, gauss_sum, local_density, local_exp_sum, major_arc_approx,
                     moment_count, moment_count_naive, t_sum, tail_terms, truncated_singular_series,
                     weyl_product, weyl_sum)
from .counting import (CountingInstance, PSI_VARIANTS, count_I, count_N, count_psi, count_psi_naive,
                       count_U, xi_sum)
from .experiments import (VARIANCE_CSV_HEADER, check_local_solubility, dumps, load_config,
                          run_threshold_census, run_variance_experiment)
from .lattice import IntegerLattice, LatticeError, count_points_in_box, invariants, orthogonal_lattice
from .monomial import ExperimentParams, ParameterError, build_basis, coeffs, hypothesis_gate
from .quadrature import singular_integral_star, singular_integral_w, singular_integral_w_grid


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if text.startswith("["):
        return [int(v) for v in json.loads(text)]
    return [int(v) for v in text.split(",") if v.strip()]


def _rational(text: str) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = Parser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="JSON config; supplies any option not given on the command line")
    g.add_argument("--seed", type=int, help="64-bit seed")
    g.add_argument("--threads", type=int, default=1, help="worker threads")
    g.add_argument("--cap", type=int, help="refuse jobs estimated above this many iterations")
    g.add_argument("--out", help="append JSON lines here")
    g.add_argument("--csv", help="write a CSV projection here")
    return p


class Emitter:
    def __init__(self, args):
        self.lines: list[str] = []
        self.out = args.out

    def emit(self, obj) -> None:
        self.lines.append(dumps(obj))

    def flush(self) -> None:
        text = "".join(line + "\n" for line in self.lines)
        sys.stdout.write(text)
        if self.out:
            with open(self.out, "a") as fh:
                fh.write(text)


def _timed(args, em: Emitter, instance: dict, algorithm: str, fn: Callable[[], object]) -> object:
    t0 = time.perf_counter()
    value = fn()
    elapsed = (time.perf_counter() - t0) * 1000.0
    if hasattr(value, "to_dict"):
        value = value.to_dict()
    em.emit({"instance": instance, "value": value, "algorithm": algorithm, "elapsed_ms": round(elapsed, 3)})
    if args.csv:
        row = dict(instance)
        if isinstance(value, dict):
            row.update(value)
        else:
            row["value"] = value
        row["algorithm"] = algorithm
        _write_rows(args.csv, list(row), [[json.dumps(v) if isinstance(v, (list, dict)) else v
                                          for v in row.values()]])
    return value


def _write_rows(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _need(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _coeffs(args):
    _need(args, "n", "d", "a")
    return coeffs(args.n, args.d, _int_list(args.a) if isinstance(args.a, str) else args.a)


def _params(args, k_default: int = 1) -> ExperimentParams:
    _need(args, "n", "d", "A", "X")
    return ExperimentParams(args.n, args.d, getattr(args, "k", None) or k_default, args.A, args.X)


def _as_int(v: Fraction, name: str) -> int:
    if v.denominator != 1:
        raise UsageError(f"{name} must be an integer here")
    return int(v)


# -- handlers ---------------------------------------------------------------


def cmd_basis(args, em):
    _need(args, "n", "d")
    b = build_basis(args.n, args.d)
    _timed(args, em, {"n": args.n, "d": args.d}, "lex",
           lambda: {"N": b.N, "exponents": [list(e) for e in b.exponents],
                    "pure_positions": list(b.pure_positions)})


def cmd_count_i(args, em):
    a = _coeffs(args)
    _need(args, "X")
    X = _as_int(args.X, "X")
    _timed(args, em, {"n": args.n, "d": args.d, "a": list(a.entries), "X": X}, args.method,
           lambda: count_I(a, X, args.method))


def _instance(args) -> CountingInstance:
    _need(args, "s", "d", "A", "X")
    return CountingInstance(args.s, args.d, _as_int(args.A, "A"), _as_int(args.X, "X"))


def cmd_count_u(args, em):
    inst = _instance(args)
    _timed(args, em, inst.to_dict(), args.method, lambda: count_U(inst, args.method, args.a_inclusive))


def cmd_count_n(args, em):
    inst = _instance(args)
    _timed(args, em, inst.to_dict(), args.method,
           lambda: count_N(inst, args.method, not args.a_strict, workers=args.threads))


def cmd_psi(args, em):
    _need(args, "s", "X", "D", "d", "anchor")
    anchor = _int_list(args.anchor)
    X = _as_int(args.X, "X")
    fn = count_psi_naive if args.method == "naive" else count_psi
    _timed(args, em, {"s": args.s, "X": X, "D": args.D, "d": args.d, "anchor": anchor,
                      "variant": args.variant}, args.method,
           lambda: fn(args.s, X, args.D, args.d, anchor, args.variant))


def cmd_xi(args, em):
    _need(args, "X", "d")
    X = _as_int(args.X, "X")
    algo = "float" if args.float else "exact"

    def run():
        v = xi_sum(X, args.d, exact=not args.float)
        return v if args.float else {"num": str(v.numerator), "den": str(v.denominator)}

    _timed(args, em, {"X": X, "d": args.d}, algo, run)


def cmd_lattice(args, em):
    _need(args, "basis")
    L = IntegerLattice(tuple(tuple(int(v) for v in row) for row in json.loads(args.basis)))

    def run():
        inv = invariants(L)
        perp = orthogonal_lattice(L)
        out = {"rank": L.rank, "n": L.ambient_dim, "det_squared": inv.det_squared,
               "minor_gcd": inv.minor_gcd,
               "perp_basis": [list(r) for r in perp.basis] if perp else None}
        if args.A is not None:
            out["box_count"] = count_points_in_box(L, _as_int(args.A, "A"))
        return out

    _timed(args, em, {"basis": [list(r) for r in L.basis]}, "bareiss+hnf", run)


def cmd_arcs(args, em):
    _need(args, "B", "A", "X", "d")
    arcs = build_arcs(args.B, args.A, args.X, args.d)

    def run():
        out = {"arcs": len(arcs.arcs), "half_width": str(arcs.half_width), "measure": str(arcs.measure()),
               "phi_measure": str(arcs.phi_measure()), "disjoint": arcs.disjoint()}
        if args.alpha is not None:
            hit = classify(_rational(args.alpha), arcs)
            out["classify"] = {"major": list(hit)} if hit else "minor"
        if args.list:
            out["decomposition"] = json.loads(arcs.to_json())
        return out

    _timed(args, em, {"B": str(args.B), "A": str(args.A), "X": str(args.X), "d": args.d}, "exact", run)


def _complex(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def cmd_sums(args, em):
    _need(args, "d")
    kind = args.kind
    if kind == "gauss":
        _need(args, "q", "a_int")
        _timed(args, em, {"q": args.q, "a": args.a_int, "d": args.d}, "direct",
               lambda: _complex(gauss_sum(args.q, args.a_int, args.d)))
        return
    _need(args, "alpha", "X")
    alpha = _rational(args.alpha)
    X = _as_int(args.X, "X")
    inst = {"alpha": str(alpha), "X": X, "d": args.d}
    if kind == "weyl":
        _timed(args, em, inst, "direct", lambda: _complex(weyl_sum(alpha, X, args.d)))
    elif kind == "t":
        _need(args, "A")
        A = _as_int(args.A, "A")
        _timed(args, em, {**inst, "A": A}, "direct", lambda: t_sum(alpha, A, X, args.d))
    elif kind == "product":
        _need(args, "A", "alpha2")
        A = _as_int(args.A, "A")
        alpha2 = _rational(args.alpha2)
        _timed(args, em, {**inst, "alpha2": str(alpha2), "A": A}, "direct",
               lambda: weyl_product(alpha, alpha2, A, X, args.d))
    else:
        _need(args, "q", "a_int", "b")
        res = lambda: (lambda r: {"approx": _complex(r.approx), "direct": _complex(r.direct),  # noqa: E731
                                  "error": r.error})(major_arc_approx(args.b, alpha, args.q, args.a_int, X, args.d))
        _timed(args, em, {**inst, "q": args.q, "a": args.a_int, "b": args.b}, "quad", res)


def cmd_moment(args, em):
    _need(args, "s", "A", "X", "d")
    A, X = _as_int(args.A, "A"), _as_int(args.X, "X")
    inst = {"s": args.s, "A": A, "X": X, "d": args.d}
    if args.method == "naive":
        _timed(args, em, inst, "naive", lambda: moment_count_naive(args.s, A, X, args.d))
    else:
        _timed(args, em, inst, "representation", lambda: moment_count(args.s, A, X, args.d, workers=args.threads))


def cmd_sigma(args, em):
    a = _coeffs(args)
    _need(args, "L")

    def run():
        sig = local_density(a, args.L, args.method)
        return {"sigma": f"{sig.numerator}/{sig.denominator}", "S": _complex(local_exp_sum(a, args.L))}

    _timed(args, em, {"a": list(a.entries), "L": args.L}, args.method, run)


def cmd_series(args, em):
    a = _coeffs(args)
    _need(args, "X")
    params = ExperimentParams(args.n, args.d, 1, args.A or 1, args.X)

    def run():
        s = truncated_singular_series(a, params)
        t = tail_terms(a, params)
        return {"w": params.w, "W": params.W, "S_star": f"{s.numerator}/{s.denominator}",
                "Q_set": list(t.Q_set), "E": _complex(t.E_value), "identity_residual": t.residual}

    _timed(args, em, {"a": list(a.entries), "X": str(args.X)}, "crt", run)


def cmd_jstar(args, em):
    a = _coeffs(args)
    params = _params(args)
    _timed(args, em, {"a": list(a.entries), "A": str(args.A), "X": str(args.X)}, "sobol",
           lambda: singular_integral_star(a, params, args.samples, seed=args.seed or 0))


def cmd_jw(args, em):
    a = _coeffs(args)
    params = _params(args)
    if args.grid:
        _timed(args, em, {"a": list(a.entries), "A": str(args.A), "X": str(args.X)}, "tensor-grid",
               lambda: singular_integral_w_grid(a, params, args.w))
    else:
        _timed(args, em, {"a": list(a.entries), "A": str(args.A), "X": str(args.X)}, "sobol",
               lambda: singular_integral_w(a, params, args.samples, args.w, seed=args.seed or 0))


def cmd_local(args, em):
    a = _coeffs(args)
    _timed(args, em, {"a": list(a.entries), "p_max": args.p_max, "lift_depth": args.lift_depth}, "hensel",
           lambda: check_local_solubility(a, args.p_max, args.lift_depth))


def cmd_gate(args, em):
    params = _params(args)
    _timed(args, em, {"n": args.n, "d": args.d, "k": params.k, "A": str(args.A), "X": str(args.X)}, "exact",
           lambda: hypothesis_gate(params))


def _experiment_config(args):
    if not args.config:
        raise UsageError("--config is required")
    cfg = load_config(args.config)
    return cfg.with_seed(args.seed) if args.seed is not None else cfg


def cmd_variance(args, em):
    cfg = _experiment_config(args)
    report = run_variance_experiment(cfg, workers=args.threads)
    for r in report.records:
        em.emit(r.to_dict())
    em.emit({"summary": report.summary})
    if args.csv:
        _write_rows(args.csv, VARIANCE_CSV_HEADER, [r.csv_row() for r in report.records])


def cmd_census(args, em):
    cfg = _experiment_config(args)
    report = run_threshold_census(cfg, workers=args.threads)
    for e in report.entries:
        em.emit(e.to_dict())
    em.emit({"summary": report.summary})
    if args.csv:
        _write_rows(args.csv, ["a", "overall", "I", "predictor"],
                    [[";".join(map(str, e.a.entries)), e.verdict.overall, e.I_value, repr(e.predictor)]
                     for e in report.entries])


def cmd_probe(args, em):
    from .probes import run_all

    for res in run_all(args.out_dir):
        em.emit({"probe": res.name, "summary": res.summary, "csv": res.csv_path, "png": res.png_path})


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = Parser(prog="circle-forge", description="Circle-method toolkit for random diophantine equations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def add(name: str, handler, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(handler=handler)
        return p

    def form(p, X=True):
        p.add_argument("--n", type=int)
        p.add_argument("--d", type=int)
        p.add_argument("--a", help="coefficients in basis order, comma separated or JSON")
        if X:
            p.add_argument("--X", type=_rational)

    p = add("basis", cmd_basis, "list the monomial basis")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)

    p = add("count-i", cmd_count_i, "count zeros of f_a in [1, X]^n")
    form(p)
    p.add_argument("--method", choices=["auto", "naive", "mitm", "roots"], default="auto")

    for name, handler, methods in (("count-u", cmd_count_u, ["hash", "naive"]),
                                   ("count-n", cmd_count_n, ["hash", "naive"])):
        p = add(name, handler, f"{name[6:].upper()}-count over coefficient and shell boxes")
        p.add_argument("--s", type=int)
        p.add_argument("--d", type=int)
        p.add_argument("--A", type=_rational)
        p.add_argument("--X", type=_rational)
        p.add_argument("--method", choices=methods, default="hash")
        if name == "count-u":
            p.add_argument("--a-inclusive", action="store_true", help="use |a| <= A instead of |a| < A")
        else:
            p.add_argument("--a-strict", action="store_true", help="use |a| < A instead of |a| <= A")

    p = add("psi", cmd_psi, "anchored minor-count congruence")
    p.add_argument("--s", type=int)
    p.add_argument("--X", type=_rational)
    p.add_argument("--D", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--anchor", help="eight comma-separated integers x1,x2,y1,y2,z1,z2,w1,w2")
    p.add_argument("--variant", choices=PSI_VARIANTS, default="full")
    p.add_argument("--method", choices=["grouped", "naive"], default="grouped")

    p = add("xi", cmd_xi, "reciprocal determinant sum")
    p.add_argument("--X", type=_rational)
    p.add_argument("--d", type=int)
    p.add_argument("--float", action="store_true", help="correctly rounded float instead of a rational")

    p = add("lattice", cmd_lattice, "lattice invariants, orthogonal lattice and box counts")
    p.add_argument("--basis", help='JSON rows, e.g. "[[2,4]]"')
    p.add_argument("--A", type=_rational)

    p = add("arcs", cmd_arcs, "major-arc decomposition and classification")
    p.add_argument("--B", type=_rational)
    p.add_argument("--A", type=_rational)
    p.add_argument("--X", type=_rational)
    p.add_argument("--d", type=int)
    p.add_argument("--alpha", help='"p/q" or decimal')
    p.add_argument("--list", action="store_true", help="include every arc")

    p = add("sums", cmd_sums, "Gauss, Weyl, T and W sums, and the major-arc approximation")
    p.add_argument("--kind", choices=["gauss", "weyl", "t", "product", "major"], default="gauss")
    p.add_argument("--q", type=int)
    p.add_argument("--a", dest="a_int", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--alpha")
    p.add_argument("--alpha2")
    p.add_argument("--A", type=_rational)
    p.add_argument("--X", type=_rational)

    p = add("moment", cmd_moment, "exact mean value of W^s")
    p.add_argument("--s", type=int)
    p.add_argument("--A", type=_rational)
    p.add_argument("--X", type=_rational)
    p.add_argument("--d", type=int)
    p.add_argument("--method", choices=["representation", "naive"], default="representation")

    p = add("sigma", cmd_sigma, "local density and local exponential sum modulo L")
    form(p, X=False)
    p.add_argument("--L", type=int)
    p.add_argument("--method", choices=["crt", "direct"], default="crt")

    p = add("series", cmd_series, "truncated singular series and tail terms")
    form(p)
    p.add_argument("--A", type=_rational)

    for name, handler in (("jstar", cmd_jstar), ("jw", cmd_jw)):
        p = add(name, handler, "singular integral" + (" (smoothed)" if name == "jstar" else " (truncated)"))
        form(p)
        p.add_argument("--k", type=int)
        p.add_argument("--A", type=_rational)
        p.add_argument("--samples", type=int, default=2**16)
        if name == "jw":
            p.add_argument("--w", type=float, help="truncation; defaults to log X")
            p.add_argument("--grid", action="store_true", help="tensor-grid route (n <= 2)")

    p = add("local", cmd_local, "real and p-adic solubility verdicts with certificates")
    form(p, X=False)
    p.add_argument("--p-max", type=int, default=7)
    p.add_argument("--lift-depth", type=int, default=3)

    p = add("gate", cmd_gate, "check the theorem hypotheses")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--A", type=_rational)
    p.add_argument("--X", type=_rational)

    add("variance", cmd_variance, "variance statistic over the thin set")
    add("census", cmd_census, "threshold census over the thin set")

    p = add("probe", cmd_probe, "empirical exponent probes (CSV and PNG)")
    p.add_argument("--out-dir", default="probe_output")
    return parser


_CONFIG_TYPES = {"A": _rational, "X": _rational}


def _apply_config(args) -> None:
    """Fill options left unset on the command line from the JSON config."""
    if not args.config or args.command in ("variance", "census"):
        return
    with open(args.config) as fh:
        obj = json.load(fh)
    for key, value in obj.items():
        if hasattr(args, key) and getattr(args, key) is None:
            conv = _CONFIG_TYPES.get(key)
            if key == "a" and isinstance(value, list):
                value = ",".join(str(v) for v in value)
            setattr(args, key, conv(str(value)) if conv else value)
    if args.seed is None and "seed" in obj:
        args.seed = int(obj["seed"])


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    em = Emitter(args)
    try:
        if args.cap is not None:
            _caps.set_cap(args.cap)
        _apply_config(args)
        args.handler(args, em)
    except _caps.CapExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ParameterError, LatticeError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if args.cap is not None:
            _caps.set_cap(_caps.DEFAULT_CAP)
    em.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
