"""Exact counters for the diophantine quantities behind the variance argument.

Every counter has a plain enumeration and an independent faster route
(hash join / meet in the middle / residue grouping); tests hold them equal.

Range conventions:

* the dyadic shell ``X/2 <= |x| <= X`` means ``ceil(X/2) <= |x| <= X`` over
  non-zero integers of both signs;
* ``count_U`` takes ``0 < |a_i| < A`` and ``count_N`` takes ``0 < |a_i| <= A``
  by default; both accept ``a_inclusive`` to switch.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import _caps
from .monomial import CoeffVector, ParameterError, build_basis, evaluate_form


def shell(X: int) -> list[int]:
    lo = max(1, -(-X // 2))
    pos = list(range(lo, X + 1))
    return sorted([-v for v in pos] + pos)


def positive_shell(X: int) -> list[int]:
    """``N  cap [X/2, X]``."""
    return list(range(max(1, -(-X // 2)), X + 1))


def coefficient_range(A: int, inclusive: bool) -> list[int]:
    top = A if inclusive else A - 1
    return [v for v in range(-top, top + 1) if v]


@dataclass(frozen=True)
class CountingInstance:
    s: int
    d: int
    A: int
    X: int

    def __post_init__(self):
        if min(self.s, self.d, self.A, self.X) < 1:
            raise ParameterError("s, d, A, X must all be >= 1")

    def to_dict(self) -> dict:
        return {"s": self.s, "d": self.d, "A": self.A, "X": self.X}


# -- I_a(X) -----------------------------------------------------------------


def count_I_naive(a: CoeffVector, X: int, cap: int | None = None) -> int:
    n = a.n
    _caps.check("count_I naive", X**n, cap)
    rng = range(1, X + 1)
    return sum(1 for x in itertools.product(rng, repeat=n) if evaluate_form(a, x) == 0)


def separable_split(a: CoeffVector) -> int | None:
    """Largest ``k`` in ``1..n-1`` with no monomial touching both halves, else ``None``."""
    n = a.n
    terms = a.terms()
    best = None
    for k in range(1, n):
        if all(not (any(e[:k]) and any(e[k:])) for e, _ in terms):
            if best is None or abs(2 * k - n) < abs(2 * best - n):
                best = k
    return best


def _half_values(terms, vars_, X: int) -> Counter:
    rng = range(1, X + 1)
    out: Counter = Counter()
    for xs in itertools.product(rng, repeat=len(vars_)):
        v = 0
        for e, c in terms:
            t = c
            for j, xj in zip(vars_, xs):
                if e[j]:
                    t *= xj ** e[j]
            v += t
        out[v] += 1
    return out


def count_I_mitm(a: CoeffVector, X: int, cap: int | None = None) -> int:
    """Hash join over a split of the variables with no cross monomials."""
    k = separable_split(a)
    if k is None:
        raise ParameterError("form has cross monomials between every split; use method='roots'")
    n = a.n
    _caps.check("count_I mitm", X**k + X ** (n - k), cap)
    left_terms = [(e, c) for e, c in a.terms() if any(e[:k])]
    right_terms = [(e, c) for e, c in a.terms() if not any(e[:k])]
    left = _half_values(left_terms, range(k), X)
    right = _half_values(right_terms, range(k, n), X)
    return sum(m * right.get(-v, 0) for v, m in left.items())


def count_I_roots(a: CoeffVector, X: int, cap: int | None = None) -> int:
    """Fix all but the last variable and count integer roots of the univariate remainder."""
    n, d = a.n, a.d
    _caps.check("count_I roots", X ** (n - 1) * (d + 1), cap)
    terms = a.terms()
    total = 0
    for prefix in itertools.product(range(1, X + 1), repeat=n - 1):
        poly = [0] * (d + 1)
        for e, c in terms:
            t = c
            for j, xj in enumerate(prefix):
                if e[j]:
                    t *= xj ** e[j]
            poly[e[n - 1]] += t
        if not any(poly):
            total += X
            continue
        low = next(i for i, v in enumerate(poly) if v)
        # roots t >= 1 divide the lowest non-zero coefficient
        c0 = abs(poly[low])
        for t in range(1, min(X, c0) + 1):
            if c0 % t == 0 and sum(cf * t**i for i, cf in enumerate(poly)) == 0:
                total += 1
    return total


def count_I(a: CoeffVector, X: int, method: str = "auto", cap: int | None = None) -> int:
    """Number of ``x in [1, X]^n`` with ``f_a(x) = 0``."""
    if X < 1:
        return 0
    if a.is_zero():
        return X**a.n
    if method == "auto":
        method = "mitm" if a.n >= 2 and separable_split(a) is not None else "roots"
    if method == "naive":
        return count_I_naive(a, X, cap)
    if method == "mitm":
        return count_I_mitm(a, X, cap)
    if method == "roots":
        return count_I_roots(a, X, cap)
    raise ParameterError(f"unknown method {method!r}")


# -- U_s(A, X) --------------------------------------------------------------


def count_U_naive(inst: CountingInstance, a_inclusive: bool = False, cap: int | None = None) -> int:
    s, d = inst.s, inst.d
    avals = coefficient_range(inst.A, a_inclusive)
    xr = range(-inst.X, inst.X + 1)
    _caps.check("count_U naive", len(avals) ** s * len(xr) ** (2 * s), cap)
    total = 0
    for a in itertools.product(avals, repeat=s):
        for xz in itertools.product(xr, repeat=2 * s):
            if sum(a[i] * (xz[i] ** d - xz[s + i] ** d) for i in range(s)) == 0:
                total += 1
    return total


def _power_diffs(values: Sequence[int], d: int) -> Counter:
    """Multiset of ``x^d - z^d`` over ``x, z in values``."""
    pw = [v**d for v in values]
    return Counter(p - q for p in pw for q in pw)


def _convolve(dists: Sequence[Counter]) -> Counter:
    acc: Counter = Counter({0: 1})
    for dist in dists:
        nxt: Counter = Counter()
        for u, m in acc.items():
            for v, k in dist.items():
                nxt[u + v] += m * k
        acc = nxt
    return acc


def count_U_hash(inst: CountingInstance, a_inclusive: bool = False, cap: int | None = None) -> int:
    s = inst.s
    avals = coefficient_range(inst.A, a_inclusive)
    diffs = _power_diffs(range(-inst.X, inst.X + 1), inst.d)
    _caps.check("count_U hash", len(avals) * len(diffs) * (len(avals) * len(diffs)) ** (s // 2), cap)
    # distribution of a_i (x_i^d - z_i^d) for one block, a_i ranging too
    block: Counter = Counter()
    for av in avals:
        for u, m in diffs.items():
            block[av * u] += m
    half = s // 2
    left = _convolve([block] * half)
    right = _convolve([block] * (s - half))
    return sum(m * right.get(-v, 0) for v, m in left.items())


def count_U(inst: CountingInstance, method: str = "hash", a_inclusive: bool = False,
            cap: int | None = None) -> int:
    """Solutions of ``sum a_i (x_i^d - z_i^d) = 0`` with ``|x_i|, |z_i| <= X``."""
    if method == "naive":
        return count_U_naive(inst, a_inclusive, cap)
    if method == "hash":
        return count_U_hash(inst, a_inclusive, cap)
    raise ParameterError(f"unknown method {method!r}")


# -- N(A, X) and its dependent/independent split ---------------------------


@dataclass(frozen=True)
class ShellTuple:
    x: tuple[int, ...]
    y: tuple[int, ...]
    z: tuple[int, ...]
    w: tuple[int, ...]
    a: tuple[int, ...] = ()

    def columns(self, d: int) -> tuple[list[int], list[int]]:
        u = [xi**d - zi**d for xi, zi in zip(self.x, self.z)]
        v = [yi**d - wi**d for yi, wi in zip(self.y, self.w)]
        return u, v

    def classify(self, d: int) -> str:
        s = len(self.x)
        pairs = itertools.combinations(range(s), 2)
        if any(delta_minor(i, j, self, d) for i, j in pairs):
            return "independent"
        return "dependent"


def delta_minor(i: int, j: int, t: ShellTuple, d: int) -> int:
    """The 2x2 determinant built from rows ``i`` and ``j`` (0-based) of the two difference columns."""
    return ((t.x[i] ** d - t.z[i] ** d) * (t.y[j] ** d - t.w[j] ** d)
            - (t.x[j] ** d - t.z[j] ** d) * (t.y[i] ** d - t.w[i] ** d))


@dataclass(frozen=True)
class NCount:
    total: int
    dependent: int
    independent: int

    def to_dict(self) -> dict:
        return {"N": self.total, "N1": self.dependent, "N2": self.independent}


def _solutions_for(a: Sequence[int], sh: Sequence[int], d: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    s = len(a)
    out = []
    for xz in itertools.product(sh, repeat=2 * s):
        x, z = xz[:s], xz[s:]
        if sum(a[i] * (x[i] ** d - z[i] ** d) for i in range(s)) == 0:
            out.append((x, z))
    return out


def count_N_naive(inst: CountingInstance, a_inclusive: bool = True, cap: int | None = None) -> NCount:
    """Enumerate every solution tuple and classify it through its 2x2 minors."""
    s, d = inst.s, inst.d
    sh = shell(inst.X)
    avals = coefficient_range(inst.A, a_inclusive)
    _caps.check("count_N naive", len(avals) ** s * len(sh) ** (2 * s), cap)
    dep = ind = 0
    for a in itertools.product(avals, repeat=s):
        sols = _solutions_for(a, sh, d)
        for (x, z), (y, w) in itertools.product(sols, repeat=2):
            if ShellTuple(x, y, z, w, a).classify(d) == "dependent":
                dep += 1
            else:
                ind += 1
    return NCount(dep + ind, dep, ind)


def _direction(u: tuple[int, ...]) -> tuple[int, ...]:
    g = 0
    for v in u:
        g = math.gcd(g, v)
    first = next(v for v in u if v)
    if first < 0:
        g = -g
    return tuple(v // g for v in u)


def _difference_vectors(a: Sequence[int], blocks: Sequence[Counter]) -> Counter:
    """Multiset of ``u = (x_i^d - z_i^d)_i`` with ``sum a_i u_i = 0``."""
    s = len(a)
    out: Counter = Counter()
    last = blocks[s - 1]
    for head in itertools.product(*(blocks[i].items() for i in range(s - 1))):
        partial = sum(a[i] * head[i][0] for i in range(s - 1))
        if partial % a[s - 1]:
            continue
        tail = -partial // a[s - 1]
        m_tail = last.get(tail, 0)
        if not m_tail:
            continue
        mult = m_tail
        for _, m in head:
            mult *= m
        out[tuple(h[0] for h in head) + (tail,)] += mult
    return out


def count_for_a(a: Sequence[int], X: int, d: int) -> tuple[int, int]:
    """``(c(a), N1(a))``: solutions of one equation, and dependent pairs of solutions."""
    block = _power_diffs(shell(X), d)
    vecs = _difference_vectors(a, [block] * len(a))
    c = sum(vecs.values())
    zero = vecs.get(tuple([0] * len(a)), 0)
    by_dir: Counter = Counter()
    for u, m in vecs.items():
        if any(u):
            by_dir[_direction(u)] += m
    # a zero column is dependent with anything; otherwise parallel columns only
    dependent = zero * c + (c - zero) * zero + sum(m * m for m in by_dir.values())
    return c, dependent


def count_N_hash(inst: CountingInstance, a_inclusive: bool = True, cap: int | None = None,
                 workers: int = 1) -> NCount:
    """``N = sum_a c(a)^2`` with ``N1`` from grouping difference vectors by direction."""
    s = inst.s
    avals = coefficient_range(inst.A, a_inclusive)
    distinct = len(_power_diffs(shell(inst.X), inst.d))
    _caps.check("count_N hash", len(avals) ** s * distinct ** max(s - 1, 1), cap)
    from ._parallel import ordered_map

    alist = list(itertools.product(avals, repeat=s))
    parts = ordered_map(lambda a: count_for_a(a, inst.X, inst.d), alist, workers)
    total = sum(c * c for c, _ in parts)
    dep = sum(dp for _, dp in parts)
    return NCount(total, dep, total - dep)


def count_N(inst: CountingInstance, method: str = "hash", a_inclusive: bool = True,
            cap: int | None = None, workers: int = 1) -> NCount:
    if method == "naive":
        return count_N_naive(inst, a_inclusive, cap)
    if method == "hash":
        return count_N_hash(inst, a_inclusive, cap, workers)
    raise ParameterError(f"unknown method {method!r}")


# -- psi_s(X, D; anchors) and m(x, y, z, w) --------------------------------

PSI_VARIANTS = ("full", "free", "relaxed")


def _psi_pairs(s: int, variant: str) -> list[tuple[int, int]]:
    if variant == "full":
        return list(itertools.combinations(range(s), 2))
    if variant == "free":
        return [(i, j) for i, j in itertools.combinations(range(s), 2) if j >= 2]
    if variant == "relaxed":
        return [(min(2, j), max(2, j)) for j in range(s) if j != 2]
    raise ParameterError(f"unknown psi variant {variant!r}; expected one of {PSI_VARIANTS}")


def _anchor_columns(anchor: Sequence[int], d: int) -> tuple[list[int], list[int]]:
    if len(anchor) != 8:
        raise ParameterError("anchor must be (x1, x2, y1, y2, z1, z2, w1, w2)")
    x1, x2, y1, y2, z1, z2, w1, w2 = anchor
    return [x1**d - z1**d, x2**d - z2**d], [y1**d - w1**d, y2**d - w2**d]


def count_psi_naive(s: int, X: int, D: int, d: int, anchor: Sequence[int],
                    variant: str = "full", cap: int | None = None) -> int:
    if s < 3 or D < 1:
        raise ParameterError("need s >= 3 and D >= 1")
    rng = positive_shell(X)
    free = s - 2
    _caps.check("count_psi naive", len(rng) ** (4 * free), cap)
    u0, v0 = _anchor_columns(anchor, d)
    pairs = _psi_pairs(s, variant)
    total = 0
    for t in itertools.product(rng, repeat=4 * free):
        x, y, z, w = t[:free], t[free:2 * free], t[2 * free:3 * free], t[3 * free:]
        u = u0 + [xi**d - zi**d for xi, zi in zip(x, z)]
        v = v0 + [yi**d - wi**d for yi, wi in zip(y, w)]
        if all((u[i] * v[j] - u[j] * v[i]) % D == 0 for i, j in pairs):
            total += 1
    return total


def count_psi(s: int, X: int, D: int, d: int, anchor: Sequence[int],
              variant: str = "full", cap: int | None = None) -> int:
    """Tuples ``(x_i, y_i, z_i, w_i)_{3<=i<=s}`` in ``N cap [X/2, X]`` satisfying the congruences.

    Only the residues ``(x^d - z^d, y^d - w^d) mod D`` of each free index
    matter, so quadruples are grouped into residue classes first.
    """
    if s < 3 or D < 1:
        raise ParameterError("need s >= 3 and D >= 1")
    rng = positive_shell(X)
    u0, v0 = _anchor_columns(anchor, d)
    pairs = _psi_pairs(s, variant)
    du = Counter((x**d - z**d) % D for x in rng for z in rng)
    classes: Counter = Counter()
    for u, mu in du.items():
        for v, mv in du.items():
            classes[(u, v)] += mu * mv
    items = list(classes.items())
    free = s - 2
    _caps.check("count_psi", len(items) ** free, cap)
    u_fixed = [c % D for c in u0]
    v_fixed = [c % D for c in v0]
    total = 0
    for combo in itertools.product(items, repeat=free):
        u = u_fixed + [c[0][0] for c in combo]
        v = v_fixed + [c[0][1] for c in combo]
        if all((u[i] * v[j] - u[j] * v[i]) % D == 0 for i, j in pairs):
            mult = 1
            for _, m in combo:
                mult *= m
            total += mult
    return total


def gcd_with_modulus(D: int, diffs: Sequence[int]) -> int:
    """``min gcd(D, diff)`` over the given differences, with ``gcd(D, 0) = D``."""
    if not diffs:
        raise ParameterError("need at least one difference")
    return min(math.gcd(D, v) if v else D for v in diffs)


def m_value(D: int, t: ShellTuple, d: int) -> int:
    u, v = t.columns(d)
    return gcd_with_modulus(D, u + v)


# -- Xi_d(X) ---------------------------------------------------------------


def _product_distribution(X: int, d: int) -> Counter:
    """Multiset of ``(x^d - z^d)(y^d - w^d)`` over the shell."""
    diffs = _power_diffs(shell(X), d)
    out: Counter = Counter()
    for p, mp in diffs.items():
        for q, mq in diffs.items():
            out[p * q] += mp * mq
    return out


def xi_lag_counts(X: int, d: int) -> dict[int, int]:
    """``{g: #shell tuples with Delta_{1,2} = g}`` for ``g >= 1``.

    ``Delta = P - Q`` with ``P = u1 v2`` and ``Q = u2 v1`` independent and
    identically distributed, so the counts are the positive-lag
    autocorrelation of the product distribution.
    """
    prod = _product_distribution(X, d)
    keys = np.array(sorted(prod), dtype=np.int64)
    mult = np.array([prod[k] for k in keys], dtype=np.int64)
    lags: Counter = Counter()
    chunk = max(1, 2_000_000 // max(len(keys), 1))
    for start in range(0, len(keys), chunk):
        kp = keys[start:start + chunk]
        mp = mult[start:start + chunk]
        g = kp[:, None] - keys[None, :]
        wgt = mp[:, None] * mult[None, :]
        mask = g >= 1
        gv, wv = g[mask], wgt[mask]
        uniq, inv = np.unique(gv, return_inverse=True)
        acc = np.zeros(len(uniq), dtype=np.int64)
        np.add.at(acc, inv, wv)
        for gg, cc in zip(uniq.tolist(), acc.tolist()):
            lags[gg] += cc
    return dict(lags)


def xi_sum(X: int, d: int, exact: bool = True, cap: int | None = None) -> Fraction | float:
    """``sum 1/Delta_{1,2}`` over shell tuples with ``Delta_{1,2} >= 1``.

    ``exact=False`` returns a correctly rounded float of the same sum, which is
    the practical route once the lcm of the lags gets large.
    """
    n_prod = len(_product_distribution(X, d))
    _caps.check("xi_sum", n_prod * n_prod, cap)
    lags = xi_lag_counts(X, d)
    if exact:
        return sum((Fraction(c, g) for g, c in sorted(lags.items())), Fraction(0))
    return math.fsum(c / g for g, c in lags.items())


def xi_sum_naive(X: int, d: int, cap: int | None = None) -> Fraction:
    sh = shell(X)
    _caps.check("xi_sum naive", len(sh) ** 8, cap)
    total = Fraction(0)
    pw = {v: v**d for v in sh}
    for x1, x2, y1, y2, z1, z2, w1, w2 in itertools.product(sh, repeat=8):
        delta = (pw[x1] - pw[z1]) * (pw[y2] - pw[w2]) - (pw[x2] - pw[z2]) * (pw[y1] - pw[w1])
        if delta >= 1:
            total += Fraction(1, delta)
    return total


# -- thin sets --------------------------------------------------------------


@dataclass(frozen=True)
class ThinSetSpec:
    """A homogeneous integer polynomial ``P`` in ``N`` variables."""

    terms: tuple[tuple[tuple[int, ...], int], ...]
    k: int
    diagonal_flag: bool

    @property
    def N(self) -> int:
        return len(self.terms[0][0])

    def evaluate(self, a: Sequence[int]) -> int:
        total = 0
        for e, c in self.terms:
            t = c
            for ai, ei in zip(a, e):
                if ei:
                    t *= ai**ei
            total += t
        return total

    def diagonal_coefficients(self) -> list[int]:
        coef = [0] * self.N
        for e, c in self.terms:
            coef[next(i for i, v in enumerate(e) if v)] += c
        return coef

    def to_json_obj(self) -> dict:
        return {"terms": [{"exps": list(e), "coef": str(c)} for e, c in self.terms]}


def thin_set_spec(terms: Sequence[tuple[Sequence[int], int]]) -> ThinSetSpec:
    """Validate ``P`` and detect whether it is diagonal ``sum c_i a_i^k``."""
    merged: dict[tuple[int, ...], int] = defaultdict(int)
    for e, c in terms:
        merged[tuple(int(v) for v in e)] += int(c)
    clean = tuple((e, c) for e, c in sorted(merged.items(), reverse=True) if c)
    if not clean:
        raise ParameterError("P must have at least one non-zero term")
    widths = {len(e) for e, _ in clean}
    if len(widths) != 1:
        raise ParameterError("P terms have inconsistent variable counts")
    degrees = {sum(e) for e, _ in clean}
    if len(degrees) != 1:
        raise ParameterError(f"P is not homogeneous (degrees {sorted(degrees)})")
    k = degrees.pop()
    N = widths.pop()
    diagonal = all(sum(1 for v in e if v) == 1 for e, _ in clean)
    if diagonal and len({next(i for i, v in enumerate(e) if v) for e, _ in clean}) != len(clean):
        diagonal = False
    # a diagonal P needs every coordinate present with a non-zero coefficient
    diagonal = diagonal and len(clean) == N
    return ThinSetSpec(clean, k, diagonal)


def thin_set_from_json(obj: dict) -> ThinSetSpec:
    return thin_set_spec([(t["exps"], int(t["coef"])) for t in obj["terms"]])


def _thin_naive(spec: ThinSetSpec, A: int, cap: int | None) -> Iterator[tuple[int, ...]]:
    _caps.check("enumerate_thin_set naive", (2 * A + 1) ** spec.N, cap)
    for a in itertools.product(range(-A, A + 1), repeat=spec.N):
        if spec.evaluate(a) == 0:
            yield a


def _thin_diagonal(spec: ThinSetSpec, A: int, cap: int | None) -> Iterator[tuple[int, ...]]:
    coef = spec.diagonal_coefficients()
    N, k = spec.N, spec.k
    h = N // 2
    rng = range(-A, A + 1)
    _caps.check("enumerate_thin_set diagonal", (2 * A + 1) ** h + (2 * A + 1) ** (N - h), cap)
    right: dict[int, list[tuple[int, ...]]] = defaultdict(list)
    for t in itertools.product(rng, repeat=N - h):
        right[sum(c * v**k for c, v in zip(coef[h:], t))].append(t)
    for t in itertools.product(rng, repeat=h):
        val = sum(c * v**k for c, v in zip(coef[:h], t))
        for r in right.get(-val, ()):
            yield t + r


def enumerate_thin_set(spec: ThinSetSpec, A: int, method: str = "auto",
                       cap: int | None = None) -> Iterator[tuple[int, ...]]:
    """Integer points with ``P(a) = 0`` and ``|a|_inf <= A``, lexicographically, each once."""
    if method == "auto":
        method = "diagonal" if spec.diagonal_flag and spec.N >= 2 else "naive"
    if method == "naive":
        return _thin_naive(spec, A, cap)
    if method == "diagonal":
        if not spec.diagonal_flag:
            raise ParameterError("diagonal path needs a diagonal P")
        return _thin_diagonal(spec, A, cap)
    raise ParameterError(f"unknown method {method!r}")


def thin_set_vectors(spec: ThinSetSpec, A: int, n: int, d: int, **kw) -> Iterator[CoeffVector]:
    basis = build_basis(n, d)
    if basis.N != spec.N:
        raise ParameterError(f"P has {spec.N} variables but the (n, d) basis has {basis.N}")
    for a in enumerate_thin_set(spec, A, **kw):
        yield CoeffVector(basis, a)
