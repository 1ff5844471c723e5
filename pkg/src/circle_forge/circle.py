"""Exponential sums, local densities, arcs and the moment identity.

Phases ``e(t) = exp(2 pi i t)`` are reduced modulo 1 exactly whenever the
frequency is rational, so complete sums carry no phase drift.  Floating sums
are accumulated with ``math.fsum`` on real and imaginary parts, which makes
them independent of evaluation order.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy import integrate

from . import _caps
from .counting import _convolve, _power_diffs
from .monomial import CoeffVector, ExperimentParams, ParameterError, evaluate_form, prime_power_factors

TWO_PI = 2.0 * math.pi

Alpha = Fraction | float | int


def parse_alpha(text: str) -> Fraction:
    """Accept ``"p/q"`` or a decimal string; both become exact rationals."""
    return Fraction(text.strip())


def _csum(values: Iterable[complex]) -> complex:
    vals = list(values)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


def e_rational(num: int, den: int) -> complex:
    r = num % den
    return cmath.exp(1j * TWO_PI * r / den)


def factorize(m: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= m:
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
        p += 1 if p == 2 else 2
    if m > 1:
        out[m] = out.get(m, 0) + 1
    return out


def divisors(m: int) -> list[int]:
    divs = [1]
    for p, r in factorize(m).items():
        divs = [dv * p**k for dv in divs for k in range(r + 1)]
    return sorted(divs)


def euler_phi(m: int) -> int:
    out = m
    for p in factorize(m):
        out -= out // p
    return out


def mobius(m: int) -> int:
    f = factorize(m)
    if any(r > 1 for r in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def ramanujan_sum(q: int, t: int) -> int:
    """``sum_{(b,q)=1} e(bt/q)``, an integer."""
    g = math.gcd(q, t)
    return sum(mobius(q // dv) * dv for dv in divisors(g))


# -- complete sums ----------------------------------------------------------


def gauss_sum(q: int, a: int, d: int) -> complex:
    """``S(q, a) = sum_{m=1}^q e(a m^d / q)``."""
    if q < 1:
        raise ParameterError("q must be positive")
    return _csum(e_rational(a * pow(m, d, q), q) for m in range(1, q + 1))


def residue_counts(a: CoeffVector, q: int, cap: int | None = None) -> np.ndarray:
    """``counts[t] = #{r in [0, q)^n : f_a(r) = t mod q}``."""
    n = a.n
    _caps.check("residue_counts", q**n, cap)
    grids = np.meshgrid(*([np.arange(q, dtype=np.int64)] * n), indexing="ij")
    flat = [g.ravel() for g in grids]
    size = flat[0].size if flat else 1
    total = np.zeros(size, dtype=np.int64)
    for exps, c in a.terms():
        term = np.full(size, c % q, dtype=np.int64)
        for j, e in enumerate(exps):
            if e:
                term = (term * ((flat[j] ** 1) % q if e == 1 else _powmod(flat[j], e, q))) % q
        total = (total + term) % q
    return np.bincount(total, minlength=q)


def _powmod(x: np.ndarray, e: int, q: int) -> np.ndarray:
    out = np.ones_like(x) % q
    base = x % q
    while e:
        if e & 1:
            out = (out * base) % q
        base = (base * base) % q
        e >>= 1
    return out


_counts_cache: dict[tuple, np.ndarray] = {}


def _cached_counts(a: CoeffVector, q: int, cap: int | None) -> np.ndarray:
    key = (a.n, a.d, a.entries, q)
    hit = _counts_cache.get(key)
    if hit is None:
        if len(_counts_cache) > 4096:
            _counts_cache.clear()
        hit = residue_counts(a, q, cap)
        _counts_cache[key] = hit
    return hit


def local_exp_sum(a: CoeffVector, q: int, cap: int | None = None) -> complex:
    """``S_a(q) = q^{-n} sum_{(b,q)=1} sum_{r mod q} e(b f_a(r) / q)`` by exponential summation."""
    if q == 1:
        return 1 + 0j
    counts = _cached_counts(a, q, cap)
    t = np.nonzero(counts)[0]
    w = counts[t].astype(float)
    parts = []
    for b in range(1, q + 1):
        if math.gcd(b, q) != 1:
            continue
        ph = TWO_PI * ((b * t) % q) / q
        parts.append(complex(math.fsum(w * np.cos(ph)), math.fsum(w * np.sin(ph))))
    return _csum(parts) / q**a.n


def local_exp_sum_exact(a: CoeffVector, q: int, cap: int | None = None) -> Fraction:
    """The same sum through Ramanujan sums, as an exact rational."""
    if q == 1:
        return Fraction(1)
    counts = _cached_counts(a, q, cap)
    total = sum(int(c) * ramanujan_sum(q, t) for t, c in enumerate(counts) if c)
    return Fraction(total, q**a.n)


def local_density(a: CoeffVector, L: int, method: str = "crt", cap: int | None = None) -> Fraction:
    """``sigma(a; L) = L^{-(n-1)} #{g in [1, L]^n : f_a(g) = 0 mod L}``.

    ``method="crt"`` multiplies the prime-power factors; ``"direct"`` counts
    modulo ``L`` in one go.
    """
    if L < 1:
        raise ParameterError("L must be positive")
    if method == "direct":
        zeros = int(_cached_counts(a, L, cap)[0]) if L > 1 else 1
        return Fraction(zeros, L ** (a.n - 1))
    if method != "crt":
        raise ParameterError(f"unknown method {method!r}")
    out = Fraction(1)
    for p, r in factorize(L).items():
        out *= local_density(a, p**r, "direct", cap)
    return out


def truncated_singular_series(a: CoeffVector, params: ExperimentParams, cap: int | None = None) -> Fraction:
    """``sigma(a; W)`` as the product over the prime powers exactly dividing ``W``."""
    out = Fraction(1)
    for p, r in prime_power_factors(params.w).items():
        out *= local_density(a, p**r, "direct", cap)
    return out


def singular_series_product(a: CoeffVector, params: ExperimentParams, cap: int | None = None) -> complex:
    """``prod_{p <= w} sum_{0 <= h <= log_p w} S_a(p^h)``, the floating cross-check."""
    out = 1 + 0j
    for p, r in prime_power_factors(params.w).items():
        out *= _csum(local_exp_sum(a, p**h, cap) for h in range(r + 1))
    return out


@dataclass(frozen=True)
class LocalData:
    a: CoeffVector
    q: int
    S_value: complex
    sigma_value: Fraction


def local_data(a: CoeffVector, q: int, cap: int | None = None) -> LocalData:
    return LocalData(a, q, local_exp_sum(a, q, cap), local_density(a, q, "crt", cap))


@dataclass(frozen=True)
class TailTerms:
    Q_set: tuple[int, ...]
    E_value: complex
    head_sum: complex
    series: Fraction
    residual: float


def tail_moduli(w: float, W: int) -> list[int]:
    """``q in (w, W]`` whose exact prime-power divisors all stay below ``w``."""
    return [q for q in range(1, W + 1) if q > w and all(p**r <= w for p, r in factorize(q).items())]


def tail_terms(a: CoeffVector, params: ExperimentParams, tol: float = 1e-8,
               cap: int | None = None) -> TailTerms:
    w, W = params.w, params.W
    Q = tail_moduli(w, W)
    E = _csum(local_exp_sum(a, q, cap) for q in Q)
    head = _csum(local_exp_sum(a, q, cap) for q in range(1, math.floor(w) + 1))
    series = truncated_singular_series(a, params, cap)
    residual = abs(head - (float(series) - E))
    if residual > tol:
        raise ArithmeticError(f"head sum differs from series minus tail by {residual:.3g}")
    return TailTerms(tuple(Q), E, head, series, residual)


# -- arcs -------------------------------------------------------------------


@dataclass(frozen=True)
class Arc:
    q: int
    a: int
    lo: Fraction
    hi: Fraction

    def contains(self, alpha: Fraction) -> bool:
        return self.lo <= alpha <= self.hi and alpha < 1

    def to_dict(self) -> dict:
        return {"q": self.q, "a": self.a,
                "lo": [str(self.lo.numerator), str(self.lo.denominator)],
                "hi": [str(self.hi.numerator), str(self.hi.denominator)]}


@dataclass(frozen=True)
class ArcDecomposition:
    """Major arcs ``|alpha - a/q| <= B / (A X^d)`` for ``0 <= a <= q <= B``, clipped to ``[0, 1)``.

    Both boundary pieces of the ``q = 1`` arcs are kept: ``[0, r]`` around
    ``0/1`` and ``[1 - r, 1)`` around ``1/1``.
    """

    B: Fraction
    A: Fraction
    X: Fraction
    d: int
    arcs: tuple[Arc, ...] = field(repr=False)

    @property
    def half_width(self) -> Fraction:
        return self.B / (self.A * self.X**self.d)

    @property
    def max_q(self) -> int:
        return math.floor(self.B)

    def disjoint(self) -> bool:
        ordered = sorted(self.arcs, key=lambda arc: arc.lo)
        return all(nxt.lo > cur.hi for cur, nxt in zip(ordered, ordered[1:]))

    def measure(self) -> Fraction:
        """Lebesgue measure of the union, by merging exact intervals."""
        total = Fraction(0)
        cur_lo = cur_hi = None
        for arc in sorted(self.arcs, key=lambda x: x.lo):
            if cur_hi is None or arc.lo > cur_hi:
                if cur_hi is not None:
                    total += cur_hi - cur_lo
                cur_lo, cur_hi = arc.lo, arc.hi
            else:
                cur_hi = max(cur_hi, arc.hi)
        if cur_hi is not None:
            total += cur_hi - cur_lo
        return total

    def phi_measure(self) -> Fraction:
        """``2 r sum_{q <= B} phi(q)``: the measure when arcs neither overlap nor get clipped."""
        return 2 * self.half_width * sum(euler_phi(q) for q in range(1, self.max_q + 1))

    def to_json(self) -> str:
        return json.dumps({"B": str(self.B), "A": str(self.A), "X": str(self.X), "d": self.d,
                           "arcs": [arc.to_dict() for arc in self.arcs]})


def build_arcs(B, A, X, d: int) -> ArcDecomposition:
    B, A, X = Fraction(B), Fraction(A), Fraction(X)
    if B < 1:
        raise ParameterError("B must be at least 1")
    r = B / (A * X**d)
    arcs = []
    for q in range(1, math.floor(B) + 1):
        for a in range(0, q + 1):
            if math.gcd(q, a) != 1:
                continue
            c = Fraction(a, q)
            lo, hi = max(c - r, Fraction(0)), min(c + r, Fraction(1))
            if lo >= 1:
                continue
            arcs.append(Arc(q, a, lo, hi))
    return ArcDecomposition(B, A, X, d, tuple(arcs))


def _unit(alpha: Alpha) -> Fraction:
    x = Fraction(alpha)
    return x - math.floor(x)


def classify(alpha: Alpha, arcs: ArcDecomposition) -> tuple[int, int] | None:
    """``(q, a)`` of the major arc holding ``alpha`` (nearest centre), or ``None`` on the minor arcs.

    The nearest fraction with denominator at most ``B`` comes from
    continued-fraction convergents and semiconvergents.
    """
    x = _unit(alpha)
    best = x.limit_denominator(arcs.max_q)
    if abs(x - best) > arcs.half_width:
        return None
    q, a = best.denominator, best.numerator
    return q, a


def classify_scan(alpha: Alpha, arcs: ArcDecomposition) -> tuple[int, int] | None:
    x = _unit(alpha)
    hits = [arc for arc in arcs.arcs if arc.contains(x)]
    if not hits:
        return None
    arc = min(hits, key=lambda h: (abs(x - Fraction(h.a, h.q)), h.q))
    return arc.q, arc.a


@dataclass(frozen=True)
class Region:
    """A finite union of closed intervals in ``[0, 1)``, optionally complemented."""

    intervals: tuple[tuple[Fraction, Fraction], ...]
    complement: bool = False

    def __post_init__(self):
        clean = []
        for lo, hi in self.intervals:
            lo, hi = Fraction(lo), Fraction(hi)
            if lo < 0 or hi > 1 or lo > hi:
                raise ParameterError(f"interval [{lo}, {hi}] is not inside [0, 1)")
            clean.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(clean))

    @classmethod
    def full(cls) -> "Region":
        return cls((), complement=True)

    @classmethod
    def empty(cls) -> "Region":
        return cls(())

    @classmethod
    def from_arcs(cls, arcs: ArcDecomposition) -> "Region":
        return cls(tuple((arc.lo, arc.hi) for arc in arcs.arcs))

    def inverted(self) -> "Region":
        return Region(self.intervals, not self.complement)

    def contains(self, t: Fraction) -> bool:
        inside = any(lo <= t <= hi for lo, hi in self.intervals) and t < 1
        return inside != self.complement


# -- Weyl sums --------------------------------------------------------------


def weyl_sum(alpha: Alpha, X: int, d: int) -> complex:
    """``sum_{1 <= x <= X} e(alpha x^d)``."""
    if isinstance(alpha, (Fraction, int)):
        a = Fraction(alpha)
        p, q = a.numerator, a.denominator
        return _csum(e_rational(p * pow(x, d, q), q) for x in range(1, X + 1))
    xs = np.arange(1, X + 1, dtype=float)
    theta = np.mod(float(alpha) * xs**d, 1.0)
    return complex(math.fsum(np.cos(TWO_PI * theta)), math.fsum(np.sin(TWO_PI * theta)))


def _scaled(alpha: Alpha, l: int) -> Alpha:
    if isinstance(alpha, (Fraction, int)):
        return Fraction(alpha) * l
    return float(alpha) * l


def weyl_product(alpha1: Alpha, alpha2: Alpha, A: int, X: int, d: int, cap: int | None = None) -> float:
    """``W(a1, a2) = sum_{|l| <= 2A} |S(a1 l)|^2 |S(a2 l)|^2``."""
    _caps.check("weyl_product", (4 * A + 1) * X * 2, cap)
    terms = []
    for l in range(-2 * A, 2 * A + 1):
        s1 = weyl_sum(_scaled(alpha1, l), X, d)
        s2 = weyl_sum(_scaled(alpha2, l), X, d)
        terms.append(abs(s1) ** 2 * abs(s2) ** 2)
    return math.fsum(terms)


def t_sum(alpha: Alpha, A: int, X: int, d: int, cap: int | None = None) -> float:
    """``T(alpha) = sum_{|b| <= A} |sum_{x <= X} e(b alpha x^d)|^2``."""
    _caps.check("t_sum", (2 * A + 1) * X, cap)
    return math.fsum(abs(weyl_sum(_scaled(alpha, b), X, d)) ** 2 for b in range(-A, A + 1))


def moment_count(s: int, A: int, X: int, d: int, cap: int | None = None, workers: int = 1) -> int:
    """Exact ``int_{[0,1)^2} W^s`` as ``sum_l c(l)^2`` over ``l in [-2A, 2A]^s``.

    ``c(l)`` counts ``(x, z) in [1, X]^{2s}`` with ``sum l_i (x_i^d - z_i^d) = 0``.
    """
    from ._parallel import ordered_map

    diffs = _power_diffs(range(1, X + 1), d)
    L = range(-2 * A, 2 * A + 1)
    _caps.check("moment_count", len(L) ** s * len(diffs) ** max(1, (s + 1) // 2), cap)

    def c_of(l: tuple[int, ...]) -> int:
        blocks = []
        for li in l:
            blk: Counter = Counter()
            for u, m in diffs.items():
                blk[li * u] += m
            blocks.append(blk)
        h = s // 2
        left = _convolve(blocks[:h])
        right = _convolve(blocks[h:])
        return sum(m * right.get(-v, 0) for v, m in left.items())

    counts = ordered_map(c_of, list(itertools.product(L, repeat=s)), workers)
    return sum(c * c for c in counts)


def moment_count_naive(s: int, A: int, X: int, d: int, cap: int | None = None) -> int:
    """Direct expansion: every ``(l, x, y, z, w)`` solving both equations."""
    L = range(-2 * A, 2 * A + 1)
    _caps.check("moment_count naive", len(L) ** s * X ** (4 * s), cap)
    pw = np.arange(1, X + 1, dtype=np.int64) ** d
    grids = np.meshgrid(*([pw] * (4 * s)), indexing="ij")
    cols = [g.ravel() for g in grids]
    x, y, z, w = cols[:s], cols[s:2 * s], cols[2 * s:3 * s], cols[3 * s:]
    total = 0
    for l in itertools.product(L, repeat=s):
        e1 = sum(l[i] * (x[i] - z[i]) for i in range(s))
        e2 = sum(l[i] * (y[i] - w[i]) for i in range(s))
        total += int(np.count_nonzero((e1 == 0) & (e2 == 0)))
    return total


# -- major arc approximation -------------------------------------------------


def v_integral(beta: float, X: float, d: int) -> complex:
    """``v(beta) = int_0^X e(beta g^d) dg`` by adaptive quadrature."""
    if beta == 0:
        return complex(X)
    opts = dict(limit=2000, epsabs=1e-10, epsrel=1e-10)
    re = integrate.quad(lambda g: math.cos(TWO_PI * beta * g**d), 0.0, X, **opts)[0]
    im = integrate.quad(lambda g: math.sin(TWO_PI * beta * g**d), 0.0, X, **opts)[0]
    return complex(re, im)


@dataclass(frozen=True)
class MajorArcApprox:
    approx: complex
    direct: complex
    error: float
    q_reduced: int
    beta: float


def major_arc_approx(b: int, alpha: Alpha, q: int, a: int, X: int, d: int) -> MajorArcApprox:
    """Compare ``sum e(b alpha x^d)`` with ``q~^{-1} S(q~, a b~) v(beta)``."""
    if math.gcd(q, a) != 1:
        raise ParameterError("need gcd(q, a) = 1")
    g = math.gcd(q, b)
    qt, bt = q // g, b // g
    exact = isinstance(alpha, (Fraction, int))
    if exact:
        beta_exact = Fraction(alpha) * b - Fraction(a * bt, qt)
        beta = float(beta_exact)
    else:
        beta = float(alpha) * b - a * bt / qt
    direct = weyl_sum(_scaled(alpha, b), X, d)
    approx = gauss_sum(qt, a * bt, d) / qt * v_integral(beta, X, d)
    return MajorArcApprox(approx, direct, abs(direct - approx), qt, beta)


# -- arc-restricted count ------------------------------------------------------


def value_distribution(a: CoeffVector, X: int, cap: int | None = None) -> Counter:
    _caps.check("value_distribution", X**a.n, cap)
    return Counter(evaluate_form(a, x) for x in itertools.product(range(1, X + 1), repeat=a.n))


def arc_restricted_count(a: CoeffVector, X: int, region: Region, M: int | None = None,
                         cap: int | None = None) -> float:
    """Riemann sum of ``int_region sum_x e(alpha f_a(x)) d alpha`` on the grid ``k/M``.

    Over the whole circle with ``M > 2 max |f_a|`` the sum equals the number of
    zeros of ``f_a`` in the box.  Regions symmetric under ``alpha -> 1 - alpha``
    (major and minor arcs are) give a real value; the real part is returned.
    """
    dist = value_distribution(a, X, cap)
    if M is None:
        M = 2 * max(abs(v) for v in dist) + 2
    _caps.check("arc_restricted_count", M * len(dist), cap)
    ks = np.array([k for k in range(M) if region.contains(Fraction(k, M))], dtype=np.int64)
    if ks.size == 0:
        return 0.0
    vals = np.array([v % M for v in dist], dtype=np.int64)
    mult = np.array(list(dist.values()), dtype=float)
    total = []
    for k in ks:
        ph = TWO_PI * ((int(k) * vals) % M) / M
        total.append(math.fsum(mult * np.cos(ph)))
    return math.fsum(total) / M


def weyl_power_table(G: int, A: int, X: int, d: int) -> np.ndarray:
    """``|sum_x e(k l x^d / G)|^2`` for ``k in [0, G)`` (rows) and ``|l| <= 2A`` (columns).

    Phases are reduced modulo ``G`` in integers before the exponential.
    """
    ks = np.arange(G, dtype=np.int64)
    ls = np.arange(-2 * A, 2 * A + 1, dtype=np.int64)
    pw = np.array([pow(x, d, G) for x in range(1, X + 1)], dtype=np.int64)
    out = np.empty((G, ls.size))
    for j, l in enumerate(ls):
        r = (ks[:, None] * ((int(l) % G) * pw[None, :] % G)) % G
        ph = TWO_PI * r / G
        out[:, j] = np.cos(ph).sum(axis=1) ** 2 + np.sin(ph).sum(axis=1) ** 2
    return out


def weyl_product_grid(G: int, A: int, X: int, d: int, cap: int | None = None) -> np.ndarray:
    """``W(k1/G, k2/G)`` for every grid pair, as a ``G x G`` matrix."""
    _caps.check("weyl_product_grid", G * G * (4 * A + 1) + G * (4 * A + 1) * X, cap)
    P = weyl_power_table(G, A, X, d)
    return P @ P.T
