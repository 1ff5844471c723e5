"""Empirical exponent probes.

Each probe writes a CSV curve and a PNG figure and returns the rows.  Nothing
here asserts a constant or an exponent; the fitted values are reported only.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .circle import build_arcs, classify, major_arc_approx, weyl_product_grid
from .counting import xi_sum
from .plotting import loglog_curves


@dataclass
class ProbeResult:
    name: str
    rows: list[dict]
    summary: dict
    csv_path: str
    png_path: str


def _write_csv(path: str, rows: list[dict]) -> str:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    return path


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def xi_probe(out_dir: str, degrees: Sequence[int] = (2, 3), X_values: Sequence[int] = range(2, 13),
             fit_from: int = 4) -> ProbeResult:
    """Growth of the reciprocal-determinant sum against the exponent ``8 - 2d``."""
    rows, series, refs, slopes = [], {}, {}, {}
    for d in degrees:
        xs, ys = [], []
        for X in X_values:
            v = float(xi_sum(X, d, exact=False))
            rows.append({"d": d, "X": X, "xi": repr(v), "claimed_exponent": 8 - 2 * d})
            xs.append(X)
            ys.append(v)
        fit = [(x, y) for x, y in zip(xs, ys) if x >= fit_from and y > 0]
        slope = loglog_slope([x for x, _ in fit], [y for _, y in fit])
        slopes[d] = {"fitted_slope": slope, "claimed": 8 - 2 * d}
        series[f"d={d}"] = (xs, ys)
        refs[f"X^{8 - 2 * d}"] = (xs, [ys[-1] * (x / xs[-1]) ** (8 - 2 * d) for x in xs])
    csv_path = _write_csv(os.path.join(out_dir, "xi_probe.csv"), rows)
    png_path = loglog_curves(os.path.join(out_dir, "xi_probe.png"), series,
                             "reciprocal determinant sum", "X", "Xi_d(X)", refs)
    return ProbeResult("xi", rows, {"slopes": slopes, "fit_from": fit_from}, csv_path, png_path)


def minor_arc_sup(A: int, X: int, d: int, grid: int, B: float) -> tuple[float | None, int]:
    """Largest ``W`` over grid pairs with both coordinates on the minor arcs ``m(B)``."""
    arcs = build_arcs(Fraction(B).limit_denominator(10**6), A, X, d)
    minor = np.array([classify(Fraction(k, grid), arcs) is None for k in range(grid)])
    if not minor.any():
        return None, 0
    Wg = weyl_product_grid(grid, A, X, d)
    return float(Wg[np.ix_(minor, minor)].max()), int(minor.sum())


def minor_arc_probe(out_dir: str, d: int = 3, A_values: Sequence[int] = (1, 2, 3, 4),
                    X_values: Sequence[int] = (4, 5, 6, 7, 8), grid: int = 128,
                    B_exponent: float = 0.5) -> ProbeResult:
    """Sup of the Weyl product over minor-arc grid pairs against the shape ``A X^{4 - eta}``."""
    rows, series = [], {}
    for A in A_values:
        xs, ys = [], []
        for X in X_values:
            B = max(1.0, X**B_exponent)
            sup, n_minor = minor_arc_sup(A, X, d, grid, B)
            trivial = (4 * A + 1) * X**4
            eta = 4 - math.log(sup / A) / math.log(X) if sup else None
            rows.append({"d": d, "A": A, "X": X, "B": repr(B), "grid": grid, "minor_points": n_minor,
                         "sup_W": repr(sup), "A_X4": A * X**4, "trivial_bound": trivial,
                         "eta_hat": repr(eta)})
            if sup:
                xs.append(X)
                ys.append(sup / A)
        if xs:
            series[f"A={A}"] = (xs, ys)
    Xs = list(X_values)
    refs = {"X^4": (Xs, [float(x**4) for x in Xs])}
    csv_path = _write_csv(os.path.join(out_dir, "minor_arc_probe.csv"), rows)
    png_path = loglog_curves(os.path.join(out_dir, "minor_arc_probe.png"), series,
                             f"minor-arc sup of W, d={d}", "X", "sup W / A", refs)
    etas = [float(r["eta_hat"]) for r in rows if r["eta_hat"] != "None"]
    summary = {"min_eta_hat": min(etas) if etas else None, "B_exponent": B_exponent}
    return ProbeResult("minor_arc", rows, summary, csv_path, png_path)


def _spread(values: list[int], k: int) -> list[int]:
    if len(values) <= k:
        return values
    step = len(values) / k
    return [values[int(i * step)] for i in range(k)]


def major_arc_probe(out_dir: str, d: int = 2, X: int = 100, Q_values: Sequence[int] = (1, 2, 4, 8, 16),
                    residues_per_q: int = 3, b: int = 1) -> ProbeResult:
    """Largest major-arc approximation error over dyadic shells ``Q <= q < 2Q`` against ``(2Q)^2``."""
    rows, xs, ys = [], [], []
    for Q in Q_values:
        worst = 0.0
        for q in range(Q, 2 * Q):
            for a in _spread([a for a in range(q) if math.gcd(a, q) == 1], residues_per_q):
                for beta in (Fraction(0), Fraction(1, 4 * X**d)):
                    res = major_arc_approx(b, Fraction(a, q) + beta, q, a, X, d)
                    worst = max(worst, res.error)
        rows.append({"d": d, "X": X, "Q": Q, "max_error": repr(worst), "scale_2Q_sq": (2 * Q) ** 2,
                     "ratio": repr(worst / (2 * Q) ** 2)})
        xs.append(2 * Q)
        ys.append(max(worst, 1e-16))
    csv_path = _write_csv(os.path.join(out_dir, "major_arc_probe.csv"), rows)
    png_path = loglog_curves(os.path.join(out_dir, "major_arc_probe.png"), {"max error": (xs, ys)},
                             f"major-arc approximation error, d={d}, X={X}", "2Q", "error",
                             {"(2Q)^2": (xs, [float(x * x) for x in xs])})
    summary = {"max_ratio": max(float(r["ratio"]) for r in rows)}
    return ProbeResult("major_arc", rows, summary, csv_path, png_path)


def run_all(out_dir: str) -> list[ProbeResult]:
    os.makedirs(out_dir, exist_ok=True)
    return [xi_probe(out_dir), minor_arc_probe(out_dir), major_arc_probe(out_dir)]
